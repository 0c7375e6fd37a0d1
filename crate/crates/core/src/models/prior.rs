//! Latent prior structures: fixed standard normal, a conditional Gaussian
//! lookup table indexed by the side-information value, and a learnable
//! Gaussian mixture. All covariances are diagonal, so each component is an
//! exponential family with sufficient statistics (z, z^2) and natural
//! parameters (mu/var, -1/(2 var)) per dimension.

use crate::ndmath::{Matrix, RngStream};
use crate::{Error, Result};

/// Conditional Gaussian prior: one diagonal Gaussian per side-information
/// value, stored as K x d_z tables of means and log variances.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalGaussianPrior {
    pub means: Matrix,
    pub log_vars: Matrix,
}

impl ConditionalGaussianPrior {
    pub fn new(means: Matrix, log_vars: Matrix) -> Result<Self> {
        if means.shape() != log_vars.shape() || means.rows() == 0 {
            return Err(Error::ShapeMismatch(
                "conditional prior tables must be congruent and non-empty".into(),
            ));
        }
        if !means.is_finite() || !log_vars.is_finite() {
            return Err(Error::InvalidArgument("non-finite prior parameters".into()));
        }
        Ok(ConditionalGaussianPrior { means, log_vars })
    }

    /// Standard normal rows: every component N(0, I).
    pub fn standard(k: usize, d_z: usize) -> Self {
        ConditionalGaussianPrior {
            means: Matrix::zeros(k, d_z),
            log_vars: Matrix::zeros(k, d_z),
        }
    }

    /// Xavier-uniform means and log variances, treating the K x d_z table as
    /// a K -> d_z layer.
    pub fn xavier(k: usize, d_z: usize, rng: &mut RngStream) -> Self {
        let bound = (6.0 / (k + d_z) as f64).sqrt();
        ConditionalGaussianPrior {
            means: Matrix::from_fn(k, d_z, |_, _| rng.next_uniform(-bound, bound)),
            log_vars: Matrix::from_fn(k, d_z, |_, _| rng.next_uniform(-bound, bound)),
        }
    }

    pub fn k(&self) -> usize {
        self.means.rows()
    }

    pub fn d_z(&self) -> usize {
        self.means.cols()
    }

    pub fn component(&self, u: usize) -> Result<(&[f64], &[f64])> {
        if u >= self.k() {
            return Err(Error::LabelOutOfRange {
                label: u,
                count: self.k(),
            });
        }
        Ok((self.means.row(u), self.log_vars.row(u)))
    }
}

/// Gaussian mixture prior with learnable mixing logits.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianMixturePrior {
    pub logits: Vec<f64>,
    pub means: Matrix,
    pub log_vars: Matrix,
}

impl GaussianMixturePrior {
    pub fn new(logits: Vec<f64>, means: Matrix, log_vars: Matrix) -> Result<Self> {
        if means.shape() != log_vars.shape() || logits.len() != means.rows() || logits.is_empty() {
            return Err(Error::ShapeMismatch(
                "mixture prior tables must be congruent with the logits".into(),
            ));
        }
        if !means.is_finite() || !log_vars.is_finite() || !logits.iter().all(|l| l.is_finite()) {
            return Err(Error::InvalidArgument("non-finite prior parameters".into()));
        }
        Ok(GaussianMixturePrior {
            logits,
            means,
            log_vars,
        })
    }

    /// Xavier-uniform component tables, uniform mixing weights.
    pub fn xavier(k: usize, d_z: usize, rng: &mut RngStream) -> Self {
        let table = ConditionalGaussianPrior::xavier(k, d_z, rng);
        GaussianMixturePrior {
            logits: vec![0.0; k],
            means: table.means,
            log_vars: table.log_vars,
        }
    }

    /// Single standard-normal component (degenerate mixture).
    pub fn standard(k: usize, d_z: usize) -> Self {
        GaussianMixturePrior {
            logits: vec![0.0; k],
            means: Matrix::zeros(k, d_z),
            log_vars: Matrix::zeros(k, d_z),
        }
    }

    pub fn k(&self) -> usize {
        self.logits.len()
    }

    pub fn d_z(&self) -> usize {
        self.means.cols()
    }

    pub fn component(&self, u: usize) -> Result<(&[f64], &[f64])> {
        if u >= self.k() {
            return Err(Error::LabelOutOfRange {
                label: u,
                count: self.k(),
            });
        }
        Ok((self.means.row(u), self.log_vars.row(u)))
    }

    /// Log mixing weights via log-softmax.
    pub fn log_weights(&self) -> Vec<f64> {
        let lse = log_sum_exp(&self.logits);
        self.logits.iter().map(|l| l - lse).collect()
    }

    pub fn weights(&self) -> Vec<f64> {
        self.log_weights().iter().map(|lw| lw.exp()).collect()
    }
}

/// Numerically stable log(sum(exp(terms))).
pub fn log_sum_exp(terms: &[f64]) -> f64 {
    let m = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m.is_infinite() {
        return m;
    }
    let sum: f64 = terms.iter().map(|t| (t - m).exp()).sum();
    m + sum.ln()
}

/// The prior side of a generative model.
#[derive(Debug, Clone, PartialEq)]
pub enum Prior {
    StandardNormal { d_z: usize },
    Conditional(ConditionalGaussianPrior),
    Mixture(GaussianMixturePrior),
}

impl Prior {
    pub fn d_z(&self) -> usize {
        match self {
            Prior::StandardNormal { d_z } => *d_z,
            Prior::Conditional(p) => p.d_z(),
            Prior::Mixture(p) => p.d_z(),
        }
    }

    /// Number of u-indexed components; 1 for the standard normal.
    pub fn component_count(&self) -> usize {
        match self {
            Prior::StandardNormal { .. } => 1,
            Prior::Conditional(p) => p.k(),
            Prior::Mixture(p) => p.k(),
        }
    }

    pub fn component(&self, u: usize) -> Result<(&[f64], &[f64])> {
        match self {
            Prior::StandardNormal { .. } => Err(Error::InvalidArgument(
                "standard-normal prior has no u-indexed components".into(),
            )),
            Prior::Conditional(p) => p.component(u),
            Prior::Mixture(p) => p.component(u),
        }
    }
}

/// Natural parameters of component `u`: per dimension `i` the pair
/// `(mu_i / var_i, -1 / (2 var_i))`, laid out first-order block then
/// second-order block, total length `2 d_z`.
pub fn natural_params(prior: &Prior, u: usize) -> Result<Vec<f64>> {
    let (means, log_vars) = prior.component(u)?;
    let d = means.len();
    let mut lambda = Vec::with_capacity(2 * d);
    for i in 0..d {
        lambda.push(means[i] / log_vars[i].exp());
    }
    for i in 0..d {
        lambda.push(-0.5 / log_vars[i].exp());
    }
    Ok(lambda)
}

/// Inverse of [`natural_params`]: recover `(mean, variance)` pairs.
pub fn natural_params_to_moments(lambda: &[f64]) -> Result<Vec<(f64, f64)>> {
    if lambda.len() % 2 != 0 {
        return Err(Error::InvalidArgument("odd natural parameter vector".into()));
    }
    let d = lambda.len() / 2;
    let mut out = Vec::with_capacity(d);
    for i in 0..d {
        let eta1 = lambda[i];
        let eta2 = lambda[d + i];
        if !(eta2 < 0.0) {
            return Err(Error::InvalidArgument(
                "second-order natural parameter must be negative".into(),
            ));
        }
        let var = -0.5 / eta2;
        out.push((eta1 * var, var));
    }
    Ok(out)
}
