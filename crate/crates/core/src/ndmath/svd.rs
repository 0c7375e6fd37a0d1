//! Thin singular value decomposition via one-sided Jacobi rotations.
//!
//! Chosen for numerical robustness at the small/medium sizes used in this
//! crate (everything is well under 512 columns); speed is secondary.

use crate::ndmath::Matrix;
use crate::{Error, Result};

/// Thin SVD: `m = u * diag(s) * v^T`, with `s` non-negative and descending
/// and `u`, `v` having orthonormal columns (`k = min(rows, cols)` of them).
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: Matrix,
    pub s: Vec<f64>,
    pub v: Matrix,
}

const MAX_SWEEPS: usize = 64;
const ORTHO_TOL: f64 = 1e-14;

pub fn svd(m: &Matrix) -> Result<Svd> {
    if !m.is_finite() {
        return Err(Error::InvalidArgument("svd input has non-finite entries".into()));
    }
    if m.rows() >= m.cols() {
        jacobi_tall(m)
    } else {
        let t = jacobi_tall(&m.transpose())?;
        Ok(Svd {
            u: t.v,
            s: t.s,
            v: t.u,
        })
    }
}

/// One-sided Jacobi on a tall (rows >= cols) matrix: orthogonalize column
/// pairs of a working copy until all pairwise inner products vanish; the
/// column norms are then the singular values.
fn jacobi_tall(m: &Matrix) -> Result<Svd> {
    let (rows, cols) = m.shape();
    // Column-major working copy for cheap column access.
    let mut a: Vec<Vec<f64>> = (0..cols).map(|j| m.col(j)).collect();
    let mut v: Vec<Vec<f64>> = (0..cols)
        .map(|j| {
            let mut e = vec![0.0; cols];
            e[j] = 1.0;
            e
        })
        .collect();

    let mut converged = false;
    let mut sweeps = 0;
    while !converged {
        if sweeps == MAX_SWEEPS {
            return Err(Error::SvdNoConvergence { sweeps });
        }
        sweeps += 1;
        converged = true;
        for p in 0..cols {
            for q in (p + 1)..cols {
                let mut alpha = 0.0;
                let mut beta = 0.0;
                let mut gamma = 0.0;
                for i in 0..rows {
                    alpha += a[p][i] * a[p][i];
                    beta += a[q][i] * a[q][i];
                    gamma += a[p][i] * a[q][i];
                }
                if gamma.abs() <= ORTHO_TOL * (alpha * beta).sqrt() || gamma == 0.0 {
                    continue;
                }
                converged = false;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for i in 0..rows {
                    let ap = a[p][i];
                    let aq = a[q][i];
                    a[p][i] = c * ap - s * aq;
                    a[q][i] = s * ap + c * aq;
                }
                for i in 0..cols {
                    let vp = v[p][i];
                    let vq = v[q][i];
                    v[p][i] = c * vp - s * vq;
                    v[q][i] = s * vp + c * vq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..cols).collect();
    let norms: Vec<f64> = a
        .iter()
        .map(|col| col.iter().map(|x| x * x).sum::<f64>().sqrt())
        .collect();
    order.sort_by(|&i, &j| norms[j].partial_cmp(&norms[i]).unwrap());

    let s: Vec<f64> = order.iter().map(|&j| norms[j]).collect();
    let mut u_cols: Vec<Vec<f64>> = Vec::with_capacity(cols);
    for (rank, &j) in order.iter().enumerate() {
        if s[rank] > 1e-300 {
            u_cols.push(a[j].iter().map(|x| x / s[rank]).collect());
        } else {
            // Zero singular value: complete U with any unit vector orthogonal
            // to the columns already placed.
            u_cols.push(orthonormal_completion(&u_cols, rows));
        }
    }

    let u = Matrix::from_fn(rows, cols, |i, j| u_cols[j][i]);
    let v_sorted = Matrix::from_fn(cols, cols, |i, j| v[order[j]][i]);
    Ok(Svd { u, s, v: v_sorted })
}

fn orthonormal_completion(existing: &[Vec<f64>], dim: usize) -> Vec<f64> {
    for basis in 0..dim {
        let mut cand = vec![0.0; dim];
        cand[basis] = 1.0;
        for col in existing {
            let dot: f64 = cand.iter().zip(col).map(|(a, b)| a * b).sum();
            for (c, &u) in cand.iter_mut().zip(col) {
                *c -= dot * u;
            }
        }
        let norm: f64 = cand.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-6 {
            for c in &mut cand {
                *c /= norm;
            }
            return cand;
        }
    }
    // Unreachable for k <= dim columns; keep a defined value regardless.
    let mut e = vec![0.0; dim];
    e[0] = 1.0;
    e
}

/// Ratio of largest to smallest singular value of a square matrix.
/// Returns `f64::INFINITY` when the matrix is numerically singular.
pub fn condition_number(m: &Matrix) -> Result<f64> {
    if m.rows() != m.cols() {
        return Err(Error::ShapeMismatch(format!(
            "condition number requires a square matrix, got {}x{}",
            m.rows(),
            m.cols()
        )));
    }
    let decomp = svd(m)?;
    let smax = decomp.s.first().copied().unwrap_or(0.0);
    let smin = decomp.s.last().copied().unwrap_or(0.0);
    if smin < 1e-300 {
        return Ok(f64::INFINITY);
    }
    Ok(smax / smin)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ndmath::{matmul, sample_gaussian, RngStream};

    fn reconstruct(d: &Svd) -> Matrix {
        let k = d.s.len();
        let us = Matrix::from_fn(d.u.rows(), k, |i, j| d.u.at(i, j) * d.s[j]);
        matmul(&us, &d.v.transpose()).unwrap()
    }

    #[test]
    fn diagonal_case() {
        let m = Matrix::from_rows(&[vec![3.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let d = svd(&m).unwrap();
        assert!((d.s[0] - 3.0).abs() < 1e-12);
        assert!((d.s[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn identity_all_ones() {
        let d = svd(&Matrix::identity(4)).unwrap();
        assert!(d.s.iter().all(|s| (s - 1.0).abs() < 1e-12));
    }

    #[test]
    fn random_reconstruction_and_orthonormality() {
        let mut rng = RngStream::new(31, 0);
        for &(r, c) in &[(6usize, 4usize), (4, 6), (5, 5)] {
            let m = sample_gaussian(&mut rng, r, c, 0.0, 1.0).unwrap();
            let d = svd(&m).unwrap();
            let rec = reconstruct(&d);
            let rel = rec.sub(&m).unwrap().frobenius_norm() / m.frobenius_norm();
            assert!(rel < 1e-8, "reconstruction error {rel}");

            let utu = crate::ndmath::matmul_at_b(&d.u, &d.u).unwrap();
            let vtv = crate::ndmath::matmul_at_b(&d.v, &d.v).unwrap();
            let k = d.s.len();
            let eye = Matrix::identity(k);
            assert!(utu.sub(&eye).unwrap().frobenius_norm() < 1e-8);
            assert!(vtv.sub(&eye).unwrap().frobenius_norm() < 1e-8);
            // Descending, non-negative.
            for w in d.s.windows(2) {
                assert!(w[0] >= w[1] && w[1] >= 0.0);
            }
        }
    }

    #[test]
    fn singular_values_match_transpose() {
        let mut rng = RngStream::new(37, 0);
        let m = sample_gaussian(&mut rng, 7, 4, 0.0, 2.0).unwrap();
        let s1 = svd(&m).unwrap().s;
        let s2 = svd(&m.transpose()).unwrap().s;
        for (a, b) in s1.iter().zip(&s2) {
            assert!((a - b).abs() < 1e-9 * a.max(1.0));
        }
    }

    #[test]
    fn condition_number_cases() {
        assert!((condition_number(&Matrix::identity(3)).unwrap() - 1.0).abs() < 1e-12);
        let d = Matrix::from_rows(&[vec![2.0, 0.0], vec![0.0, 1.0]]).unwrap();
        assert!((condition_number(&d).unwrap() - 2.0).abs() < 1e-12);
        let rank_deficient = Matrix::from_rows(&[vec![1.0, 1.0], vec![1.0, 1.0]]).unwrap();
        assert!(condition_number(&rank_deficient).unwrap().is_infinite());
        assert!(condition_number(&Matrix::zeros(2, 3)).is_err());
    }

    #[test]
    fn condition_number_scale_invariance() {
        let mut rng = RngStream::new(41, 0);
        let m = sample_gaussian(&mut rng, 5, 5, 0.0, 1.0).unwrap();
        let base = condition_number(&m).unwrap();
        for &c in &[0.5, 3.0, 1e4] {
            let scaled = condition_number(&m.scale(c)).unwrap();
            assert!((scaled - base).abs() < 1e-9 * base);
        }
    }
}
