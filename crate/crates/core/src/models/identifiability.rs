//! The invertibility condition on the natural-parameter difference matrix,
//! its condition-number diagnostics, and the noise-injection repair used when
//! a prior collapses to degenerate components during optimization.

use crate::models::prior::{natural_params, Prior};
use crate::ndmath::{condition_number, Matrix, RngStream};
use crate::{Error, Result};

/// Outcome of checking the `2 d_z x 2 d_z` matrix of natural-parameter
/// differences across the chosen `u` values.
#[derive(Debug, Clone)]
pub struct IdentifiabilityCheck {
    pub l_matrix: Matrix,
    pub condition_number: f64,
    /// `2 d_z + 1` distinct u values are needed to build the matrix at all.
    pub required_u_count: usize,
    pub satisfied: bool,
    /// The u values the check was built from (`u_indices[0]` is the base).
    pub u_indices: Vec<usize>,
}

/// Build the difference matrix with columns
/// `lambda(u_j) - lambda(u_0), j = 1 .. 2 d_z` and attach its condition
/// number. Requires exactly `2 d_z + 1` distinct, valid u indices.
pub fn build_l_matrix(prior: &Prior, u_indices: &[usize]) -> Result<IdentifiabilityCheck> {
    let d_z = prior.d_z();
    let required = 2 * d_z + 1;
    if u_indices.len() != required {
        return Err(Error::InvalidArgument(format!(
            "L matrix needs exactly {required} u values, got {}",
            u_indices.len()
        )));
    }
    let mut seen = std::collections::BTreeSet::new();
    for &u in u_indices {
        if !seen.insert(u) {
            return Err(Error::InvalidArgument(format!("duplicate u value {u}")));
        }
    }

    let base = natural_params(prior, u_indices[0])?;
    let side = 2 * d_z;
    let mut l = Matrix::zeros(side, side);
    for (col, &u) in u_indices[1..].iter().enumerate() {
        let lambda = natural_params(prior, u)?;
        for row in 0..side {
            l.set(row, col, lambda[row] - base[row]);
        }
    }
    let cn = condition_number(&l)?;
    let satisfied = cn.is_finite() && prior.component_count() >= required;
    Ok(IdentifiabilityCheck {
        l_matrix: l,
        condition_number: cn,
        required_u_count: required,
        satisfied,
        u_indices: u_indices.to_vec(),
    })
}

/// If the check is satisfied the prior comes back unchanged. Otherwise
/// Gaussian noise of scale `noise_scale` is added to the component means and
/// log variances and the check recomputed, up to 10 times.
pub fn enforce_identifiability(
    prior: Prior,
    check: &IdentifiabilityCheck,
    noise_scale: f64,
    rng: &mut RngStream,
) -> Result<(Prior, IdentifiabilityCheck)> {
    if check.satisfied {
        return Ok((prior, check.clone()));
    }
    let mut current = prior;
    for _attempt in 0..10 {
        current = perturb(current, noise_scale, rng)?;
        let recheck = build_l_matrix(&current, &check.u_indices)?;
        if recheck.satisfied {
            return Ok((current, recheck));
        }
    }
    Err(Error::RepairFailed { attempts: 10 })
}

fn add_noise(m: &mut Matrix, noise_scale: f64, rng: &mut RngStream) {
    for v in m.data_mut() {
        *v += noise_scale * rng.next_gaussian();
    }
}

fn perturb(prior: Prior, noise_scale: f64, rng: &mut RngStream) -> Result<Prior> {
    match prior {
        Prior::StandardNormal { .. } => Err(Error::InvalidArgument(
            "standard-normal prior has no parameters to perturb".into(),
        )),
        Prior::Conditional(mut p) => {
            add_noise(&mut p.means, noise_scale, rng);
            add_noise(&mut p.log_vars, noise_scale, rng);
            Ok(Prior::Conditional(p))
        }
        Prior::Mixture(mut p) => {
            add_noise(&mut p.means, noise_scale, rng);
            add_noise(&mut p.log_vars, noise_scale, rng);
            Ok(Prior::Mixture(p))
        }
    }
}

/// Soft-constraint objective: the ELBO penalized by the condition number.
/// An infinite condition number propagates to negative infinity; a zero
/// penalty weight leaves the ELBO untouched regardless.
pub fn penalized_objective(elbo: f64, check: &IdentifiabilityCheck, alpha: f64) -> f64 {
    if alpha == 0.0 {
        return elbo;
    }
    if check.condition_number.is_infinite() {
        return f64::NEG_INFINITY;
    }
    elbo - alpha * check.condition_number
}
