//! Strong identifiability score: mean absolute correlation of
//! permutation-aligned latent dimensions.

use serde::{Deserialize, Serialize};

use crate::metrics::hungarian::hungarian;
use crate::metrics::pearson::{pearson, pearson_corr_matrix};
use crate::ndmath::Matrix;
use crate::{Error, Result};

/// Matched per-dimension correlations (sorted descending), their running
/// means, and the final score (mean over all matched dimensions — the last
/// cumulative value).
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct MccReport {
    pub matched_corrs: Vec<f64>,
    pub cumulative_means: Vec<f64>,
    pub final_mcc: f64,
    pub in_sample: bool,
}

impl MccReport {
    pub fn from_matched(mut matched: Vec<f64>, in_sample: bool) -> Result<Self> {
        if matched.is_empty() {
            return Err(Error::InsufficientData("no matched dimensions".into()));
        }
        matched.sort_by(|a, b| b.partial_cmp(a).unwrap());
        let mut cumulative_means = Vec::with_capacity(matched.len());
        let mut running = 0.0;
        for (i, &v) in matched.iter().enumerate() {
            running += v;
            cumulative_means.push(running / (i + 1) as f64);
        }
        let final_mcc = *cumulative_means.last().unwrap();
        Ok(MccReport {
            matched_corrs: matched,
            cumulative_means,
            final_mcc,
            in_sample,
        })
    }
}

/// Optimal permutation alignment of the two representation sets: Hungarian
/// assignment on cost `1 - |corr|`, then matched absolute correlations.
pub fn strong_mcc(ra: &Matrix, rb: &Matrix) -> Result<MccReport> {
    ensure_same_shape(ra, rb)?;
    let corr = pearson_corr_matrix(ra, rb, true)?;
    let cost = corr.values.map(|v| 1.0 - v);
    let assignment = hungarian(&cost)?;
    let matched: Vec<f64> = assignment
        .mapping
        .iter()
        .enumerate()
        .map(|(i, &j)| corr.values.at(i, j))
        .collect();
    MccReport::from_matched(matched, true)
}

/// The half/half protocol for strong identifiability: the permutation is
/// fitted on `fit_rows` only, and the matched dimension pairs are then scored
/// separately on both row subsets (`in_sample` on the fitting half,
/// `out_of_sample` on the held-out half).
pub fn strong_mcc_split(
    ra: &Matrix,
    rb: &Matrix,
    fit_rows: &[usize],
    eval_rows: &[usize],
) -> Result<(MccReport, MccReport)> {
    ensure_same_shape(ra, rb)?;
    let fa = ra.select_rows(fit_rows);
    let fb = rb.select_rows(fit_rows);
    let corr_fit = pearson_corr_matrix(&fa, &fb, true)?;
    let cost = corr_fit.values.map(|v| 1.0 - v);
    let assignment = hungarian(&cost)?;

    let in_matched: Vec<f64> = assignment
        .mapping
        .iter()
        .enumerate()
        .map(|(i, &j)| corr_fit.values.at(i, j))
        .collect();
    let in_report = MccReport::from_matched(in_matched, true)?;

    let ea = ra.select_rows(eval_rows);
    let eb = rb.select_rows(eval_rows);
    let mut out_matched = Vec::with_capacity(assignment.mapping.len());
    for (i, &j) in assignment.mapping.iter().enumerate() {
        out_matched.push(pearson(&ea.col(i), &eb.col(j))?.abs());
    }
    let out_report = MccReport::from_matched(out_matched, false)?;
    Ok((in_report, out_report))
}

fn ensure_same_shape(ra: &Matrix, rb: &Matrix) -> Result<()> {
    if ra.shape() != rb.shape() {
        return Err(Error::ShapeMismatch(format!(
            "strong MCC needs congruent representations, got {:?} vs {:?}",
            ra.shape(),
            rb.shape()
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ndmath::{sample_gaussian, RngStream};

    fn permute_and_scale(r: &Matrix, perm: &[usize], scales: &[f64]) -> Matrix {
        Matrix::from_fn(r.rows(), r.cols(), |i, j| r.at(i, perm[j]) * scales[j])
    }

    #[test]
    fn recovers_permutation_and_sign_flips() {
        let mut rng = RngStream::new(1, 0);
        let r = sample_gaussian(&mut rng, 500, 5, 0.0, 1.0).unwrap();
        let transformed = permute_and_scale(&r, &[3, 0, 4, 2, 1], &[1.0, -2.0, 0.5, -0.25, 3.0]);
        let report = strong_mcc(&r, &transformed).unwrap();
        assert!((report.final_mcc - 1.0).abs() < 1e-9);
        assert!(report.matched_corrs.iter().all(|&v| (v - 1.0).abs() < 1e-9));
    }

    #[test]
    fn identical_inputs_give_all_ones() {
        let mut rng = RngStream::new(2, 0);
        let r = sample_gaussian(&mut rng, 100, 4, 0.0, 1.0).unwrap();
        let report = strong_mcc(&r, &r).unwrap();
        assert!(report.matched_corrs.iter().all(|&v| (v - 1.0).abs() < 1e-12));
        assert_eq!(report.final_mcc, *report.cumulative_means.last().unwrap());
    }

    #[test]
    fn independent_noise_scores_low() {
        let mut rng = RngStream::new(3, 0);
        let a = sample_gaussian(&mut rng, 5000, 5, 0.0, 1.0).unwrap();
        let b = sample_gaussian(&mut rng, 5000, 5, 0.0, 1.0).unwrap();
        let report = strong_mcc(&a, &b).unwrap();
        assert!(report.final_mcc < 0.15, "mcc {}", report.final_mcc);
    }

    #[test]
    fn symmetry_of_final_score() {
        let mut rng = RngStream::new(4, 0);
        let a = sample_gaussian(&mut rng, 300, 4, 0.0, 1.0).unwrap();
        let b = sample_gaussian(&mut rng, 300, 4, 0.0, 1.0).unwrap();
        let ab = strong_mcc(&a, &b).unwrap();
        let ba = strong_mcc(&b, &a).unwrap();
        assert!((ab.final_mcc - ba.final_mcc).abs() < 1e-9);
    }

    #[test]
    fn cumulative_means_non_increasing() {
        let mut rng = RngStream::new(5, 0);
        let a = sample_gaussian(&mut rng, 200, 6, 0.0, 1.0).unwrap();
        let b = sample_gaussian(&mut rng, 200, 6, 0.0, 1.0).unwrap();
        let report = strong_mcc(&a, &b).unwrap();
        for w in report.cumulative_means.windows(2) {
            assert!(w[0] >= w[1] - 1e-15);
        }
    }

    #[test]
    fn split_protocol_separates_in_and_out() {
        let mut rng = RngStream::new(6, 0);
        let a = sample_gaussian(&mut rng, 400, 4, 0.0, 1.0).unwrap();
        let b = permute_and_scale(&a, &[1, 0, 3, 2], &[1.0, 1.0, -1.0, 1.0]);
        let fit: Vec<usize> = (0..200).collect();
        let eval: Vec<usize> = (200..400).collect();
        let (inr, outr) = strong_mcc_split(&a, &b, &fit, &eval).unwrap();
        assert!(inr.in_sample);
        assert!(!outr.in_sample);
        assert!((inr.final_mcc - 1.0).abs() < 1e-9);
        assert!((outr.final_mcc - 1.0).abs() < 1e-9);
        // Same halves for fit and eval collapse to identical reports.
        let (i2, o2) = strong_mcc_split(&a, &b, &fit, &fit).unwrap();
        assert_eq!(i2.matched_corrs, o2.matched_corrs);
    }
}
