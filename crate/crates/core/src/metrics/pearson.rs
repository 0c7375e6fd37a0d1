//! Pearson correlation between columns of paired representation sets.

use crate::ndmath::{matmul_at_b, Matrix};
use crate::{Error, Result};

/// Variance floor below which a column counts as dead and correlates to 0.
const VARIANCE_GUARD: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct CorrelationMatrix {
    /// `d_a x d_b` of (absolute) Pearson correlations.
    pub values: Matrix,
    pub absolute: bool,
}

/// Pearson correlation of two equally long slices; 0 when either side has
/// (population) variance below the guard.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::ShapeMismatch("correlation of unequal lengths".into()));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut vx = 0.0;
    let mut vy = 0.0;
    for (&a, &b) in x.iter().zip(y) {
        let da = a - mx;
        let db = b - my;
        cov += da * db;
        vx += da * da;
        vy += db * db;
    }
    if vx / n < VARIANCE_GUARD || vy / n < VARIANCE_GUARD {
        return Ok(0.0);
    }
    Ok(cov / (vx * vy).sqrt())
}

/// Column-by-column correlation table: entry `(i, j)` is the Pearson
/// correlation between column `i` of `a` and column `j` of `b`.
pub fn pearson_corr_matrix(a: &Matrix, b: &Matrix, absolute: bool) -> Result<CorrelationMatrix> {
    if a.rows() != b.rows() {
        return Err(Error::ShapeMismatch(format!(
            "correlation needs equal row counts, got {} and {}",
            a.rows(),
            b.rows()
        )));
    }
    if a.rows() < 3 {
        return Err(Error::InsufficientData(
            "correlation needs at least 3 rows".into(),
        ));
    }
    let n = a.rows() as f64;
    let centered = |m: &Matrix| {
        let means = m.col_means();
        Matrix::from_fn(m.rows(), m.cols(), |i, j| m.at(i, j) - means[j])
    };
    let ca = centered(a);
    let cb = centered(b);
    let col_ss = |m: &Matrix| -> Vec<f64> {
        let mut ss = vec![0.0; m.cols()];
        for i in 0..m.rows() {
            for (s, &v) in ss.iter_mut().zip(m.row(i)) {
                *s += v * v;
            }
        }
        ss
    };
    let ssa = col_ss(&ca);
    let ssb = col_ss(&cb);
    let cross = matmul_at_b(&ca, &cb)?;
    let values = Matrix::from_fn(a.cols(), b.cols(), |i, j| {
        if ssa[i] / n < VARIANCE_GUARD || ssb[j] / n < VARIANCE_GUARD {
            0.0
        } else {
            let r = cross.at(i, j) / (ssa[i] * ssb[j]).sqrt();
            if absolute {
                r.abs()
            } else {
                r
            }
        }
    });
    Ok(CorrelationMatrix { values, absolute })
}

/// Pearson correlation between per-restart ELBOs and per-restart MCCs.
pub fn elbo_mcc_correlation(elbos: &[f64], mccs: &[f64]) -> Result<f64> {
    if elbos.len() != mccs.len() {
        return Err(Error::ShapeMismatch("paired vectors of unequal length".into()));
    }
    if elbos.len() < 3 {
        return Err(Error::InsufficientData(
            "correlation needs at least 3 pairs".into(),
        ));
    }
    let n = elbos.len() as f64;
    let var = |v: &[f64]| {
        let m = v.iter().sum::<f64>() / n;
        v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / n
    };
    if var(elbos) < VARIANCE_GUARD || var(mccs) < VARIANCE_GUARD {
        return Err(Error::DegenerateInput(
            "zero variance in correlation input".into(),
        ));
    }
    pearson(elbos, mccs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ndmath::{sample_gaussian, RngStream};

    #[test]
    fn self_correlation_is_identity_diagonal() {
        let mut rng = RngStream::new(1, 0);
        let a = sample_gaussian(&mut rng, 50, 4, 0.0, 1.0).unwrap();
        let c = pearson_corr_matrix(&a, &a, false).unwrap();
        for i in 0..4 {
            assert!((c.values.at(i, i) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn negation_with_absolute_flag() {
        let mut rng = RngStream::new(2, 0);
        let a = sample_gaussian(&mut rng, 40, 3, 0.0, 1.0).unwrap();
        let b = a.scale(-1.0);
        let c = pearson_corr_matrix(&a, &b, true).unwrap();
        for i in 0..3 {
            assert!((c.values.at(i, i) - 1.0).abs() < 1e-12);
        }
        let signed = pearson_corr_matrix(&a, &b, false).unwrap();
        for i in 0..3 {
            assert!((signed.values.at(i, i) + 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn matches_direct_covariance_formula() {
        let mut rng = RngStream::new(3, 0);
        let a = sample_gaussian(&mut rng, 100, 3, 1.0, 2.0).unwrap();
        let b = sample_gaussian(&mut rng, 100, 3, -1.0, 0.5).unwrap();
        let c = pearson_corr_matrix(&a, &b, false).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let direct = pearson(&a.col(i), &b.col(j)).unwrap();
                assert!((c.values.at(i, j) - direct).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn row_mismatch_and_short_input_error() {
        let a = Matrix::zeros(5, 2);
        let b = Matrix::zeros(6, 2);
        assert!(pearson_corr_matrix(&a, &b, false).is_err());
        assert!(pearson_corr_matrix(&Matrix::zeros(2, 2), &Matrix::zeros(2, 2), false).is_err());
    }

    #[test]
    fn dead_columns_correlate_to_zero() {
        let mut rng = RngStream::new(4, 0);
        let a = sample_gaussian(&mut rng, 30, 2, 0.0, 1.0).unwrap();
        let mut b = sample_gaussian(&mut rng, 30, 2, 0.0, 1.0).unwrap();
        for i in 0..30 {
            b.set(i, 1, 42.0);
        }
        let c = pearson_corr_matrix(&a, &b, false).unwrap();
        assert_eq!(c.values.at(0, 1), 0.0);
        assert_eq!(c.values.at(1, 1), 0.0);
    }

    #[test]
    fn elbo_mcc_cases() {
        let e = vec![-3.0, -2.0, -1.0, 0.0];
        let affine: Vec<f64> = e.iter().map(|v| 0.25 * v + 1.0).collect();
        assert!((elbo_mcc_correlation(&e, &affine).unwrap() - 1.0).abs() < 1e-12);
        let reversed: Vec<f64> = e.iter().map(|v| -0.5 * v).collect();
        assert!((elbo_mcc_correlation(&e, &reversed).unwrap() + 1.0).abs() < 1e-12);
        assert!(elbo_mcc_correlation(&e, &[1.0, 1.0, 1.0, 1.0]).is_err());
        assert!(elbo_mcc_correlation(&e[..2], &[1.0, 2.0]).is_err());
    }
}
