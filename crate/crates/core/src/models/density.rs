//! Encoders, the reparameterization trick, and the Gaussian densities shared
//! by every ELBO variant.

use crate::models::prior::{log_sum_exp, Prior};
use crate::models::{GenerativeModel, ModelKind};
use crate::ndmath::{Matrix, RngStream};
use crate::nn::{forward, Tape};
use crate::{Error, Result};

const LN_2PI: f64 = 1.8378770664093453;

/// Per-point diagonal Gaussian posterior parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct EncoderOutput {
    pub mu: Matrix,
    pub log_var: Matrix,
}

impl EncoderOutput {
    pub fn d_z(&self) -> usize {
        self.mu.cols()
    }

    pub fn batch(&self) -> usize {
        self.mu.rows()
    }
}

/// Build the encoder input: the observations themselves, with a one-hot
/// encoding of `u` appended for conditional (iVAE) encoders.
pub(crate) fn encoder_input(
    model: &GenerativeModel,
    x: &Matrix,
    u: Option<&[usize]>,
) -> Result<Matrix> {
    match (model.kind, u) {
        (ModelKind::Ivae, Some(labels)) => {
            let k = model.prior.component_count();
            if labels.len() != x.rows() {
                return Err(Error::ShapeMismatch(
                    "label count does not match batch size".into(),
                ));
            }
            let mut out = Matrix::zeros(x.rows(), x.cols() + k);
            for (i, &label) in labels.iter().enumerate() {
                if label >= k {
                    return Err(Error::LabelOutOfRange { label, count: k });
                }
                let row = out.row_mut(i);
                row[..x.cols()].copy_from_slice(x.row(i));
                row[x.cols() + label] = 1.0;
            }
            Ok(out)
        }
        (ModelKind::Ivae, None) => Err(Error::InvalidArgument(
            "iVAE encoding requires side-information labels".into(),
        )),
        (_, Some(_)) => Err(Error::InvalidArgument(
            "labels supplied to an unconditional encoder".into(),
        )),
        (_, None) => Ok(x.clone()),
    }
}

/// Encoder pass that keeps the tape for backpropagation.
pub(crate) fn encode_traced(
    model: &GenerativeModel,
    x: &Matrix,
    u: Option<&[usize]>,
    train_mode: bool,
    rng: &mut RngStream,
) -> Result<(EncoderOutput, Tape, Matrix)> {
    let enc_in = encoder_input(model, x, u)?;
    let (out, tape) = forward(&model.encoder, &model.encoder_spec, &enc_in, train_mode, rng)?;
    let d_z = model.d_z();
    let mu = Matrix::from_fn(out.rows(), d_z, |i, j| out.at(i, j));
    let log_var = Matrix::from_fn(out.rows(), d_z, |i, j| out.at(i, d_z + j));
    if !mu.is_finite() || !log_var.is_finite() {
        return Err(Error::InvalidArgument("encoder produced non-finite output".into()));
    }
    Ok((EncoderOutput { mu, log_var }, tape, enc_in))
}

/// Posterior parameters for a batch; the encoder MLP emits `[mu, log_var]`
/// concatenated, split here. Dropout is active only in train mode.
pub fn encode(
    model: &GenerativeModel,
    x: &Matrix,
    u: Option<&[usize]>,
    train_mode: bool,
    rng: &mut RngStream,
) -> Result<EncoderOutput> {
    let (enc, _, _) = encode_traced(model, x, u, train_mode, rng)?;
    Ok(enc)
}

/// One reparameterized sample: `z = mu + exp(log_var / 2) * eta`,
/// `eta ~ N(0, I)`, drawn row-major.
pub fn reparameterize(enc: &EncoderOutput, rng: &mut RngStream) -> Result<Matrix> {
    if enc.mu.shape() != enc.log_var.shape() {
        return Err(Error::ShapeMismatch("encoder output shapes differ".into()));
    }
    Ok(Matrix::from_fn(enc.batch(), enc.d_z(), |i, j| {
        enc.mu.at(i, j) + (0.5 * enc.log_var.at(i, j)).exp() * rng.next_gaussian()
    }))
}

/// Mean over the batch of the isotropic Gaussian log likelihood
/// `sum_j [-1/2 log(2 pi var) - (x_j - x_hat_j)^2 / (2 var)]` with
/// `var = exp(decoder_log_var)`.
pub fn gaussian_log_likelihood(x: &Matrix, x_hat: &Matrix, decoder_log_var: f64) -> Result<f64> {
    if x.shape() != x_hat.shape() {
        return Err(Error::ShapeMismatch(format!(
            "log likelihood on {:?} vs {:?}",
            x.shape(),
            x_hat.shape()
        )));
    }
    let var = decoder_log_var.exp();
    let norm = -0.5 * (LN_2PI + decoder_log_var);
    let inv_2var = 0.5 / var;
    let mut total = 0.0;
    for i in 0..x.rows() {
        let mut row = 0.0;
        for (&a, &b) in x.row(i).iter().zip(x_hat.row(i)) {
            let r = a - b;
            row += norm - r * r * inv_2var;
        }
        total += row;
    }
    Ok(total / x.rows() as f64)
}

/// Closed-form KL between diagonal Gaussians, summed over dimensions and
/// averaged over the batch. All four arguments are `batch x d` matrices.
pub fn kl_diag_gaussians(
    q_mu: &Matrix,
    q_log_var: &Matrix,
    p_mu: &Matrix,
    p_log_var: &Matrix,
) -> Result<f64> {
    let shape = q_mu.shape();
    if q_log_var.shape() != shape || p_mu.shape() != shape || p_log_var.shape() != shape {
        return Err(Error::ShapeMismatch("KL argument shapes differ".into()));
    }
    let mut total = 0.0;
    for i in 0..q_mu.rows() {
        let mut row = 0.0;
        for j in 0..q_mu.cols() {
            let q_lv = q_log_var.at(i, j);
            let p_lv = p_log_var.at(i, j);
            let diff = q_mu.at(i, j) - p_mu.at(i, j);
            row += 0.5 * (p_lv - q_lv + (q_lv.exp() + diff * diff) / p_lv.exp() - 1.0);
        }
        total += row;
    }
    Ok(total / q_mu.rows() as f64)
}

/// Log density of a diagonal Gaussian at one point.
pub(crate) fn diag_gaussian_logpdf(z: &[f64], mean: &[f64], log_var: &[f64]) -> f64 {
    let mut acc = 0.0;
    for ((&zv, &m), &lv) in z.iter().zip(mean).zip(log_var) {
        let r = zv - m;
        acc += -0.5 * (LN_2PI + lv) - r * r / (2.0 * lv.exp());
    }
    acc
}

/// Log density of the mixture prior at one latent point.
pub(crate) fn gmm_log_density_row(
    log_weights: &[f64],
    means: &Matrix,
    log_vars: &Matrix,
    z: &[f64],
) -> f64 {
    let terms: Vec<f64> = (0..log_weights.len())
        .map(|k| log_weights[k] + diag_gaussian_logpdf(z, means.row(k), log_vars.row(k)))
        .collect();
    log_sum_exp(&terms)
}

/// Cluster responsibilities of the mixture prior: row `r`, component `k`
/// proportional to `pi_k N(z_r; mu_k, Sigma_k)`, normalized in log space.
pub fn responsibilities(model: &GenerativeModel, z: &Matrix) -> Result<Matrix> {
    let mixture = match &model.prior {
        Prior::Mixture(m) if model.kind == ModelKind::Vade => m,
        _ => {
            return Err(Error::InvalidArgument(
                "responsibilities are defined for mixture-prior (VaDE) models".into(),
            ))
        }
    };
    if z.cols() != mixture.d_z() {
        return Err(Error::ShapeMismatch("latent dimension mismatch".into()));
    }
    let log_w = mixture.log_weights();
    let k = mixture.k();
    let mut out = Matrix::zeros(z.rows(), k);
    for i in 0..z.rows() {
        let terms: Vec<f64> = (0..k)
            .map(|c| {
                log_w[c]
                    + diag_gaussian_logpdf(z.row(i), mixture.means.row(c), mixture.log_vars.row(c))
            })
            .collect();
        let lse = log_sum_exp(&terms);
        for (c, t) in terms.iter().enumerate() {
            out.set(i, c, (t - lse).exp());
        }
    }
    Ok(out)
}
