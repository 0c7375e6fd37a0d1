//! The three ELBO variants behind a common strategy trait.
//!
//! Every variant draws one reparameterized latent sample per data point:
//!
//! - VAE: closed-form KL against the fixed standard normal.
//! - iVAE: closed-form KL against the conditional prior row selected by `u`.
//! - VaDE: the KL term is estimated at the sample as
//!   `log q(z|x) - log p_gmm(z)`; the cluster-posterior KL term of the full
//!   objective is exactly zero under the Bayes-optimal construction with a
//!   single sample and is therefore never computed.
//!
//! Gradients are reverse-mode through the actual computation (sample held
//! fixed), so they match central finite differences of the returned total.

use crate::models::density::{
    diag_gaussian_logpdf, encode_traced, gaussian_log_likelihood, gmm_log_density_row,
    kl_diag_gaussians, reparameterize, EncoderOutput,
};
use crate::models::prior::{log_sum_exp, Prior};
use crate::models::{GenerativeModel, ModelKind};
use crate::ndmath::{Matrix, RngStream};
use crate::nn::{backward, forward, Gradients, Tape};
use crate::{Error, Result};

/// Reconstruction and KL terms of one ELBO evaluation (batch means).
/// `total` is always `recon - kl`, computed literally.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElboBreakdown {
    pub recon: f64,
    pub kl: f64,
    pub total: f64,
}

impl ElboBreakdown {
    fn new(recon: f64, kl: f64) -> Self {
        ElboBreakdown {
            recon,
            kl,
            total: recon - kl,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.recon.is_finite() && self.kl.is_finite() && self.total.is_finite()
    }
}

/// Gradients of the ELBO (ascent direction) for every trainable tensor.
#[derive(Debug, Clone)]
pub struct ModelGrads {
    pub encoder: Gradients,
    pub decoder: Gradients,
    pub prior: PriorGrads,
}

#[derive(Debug, Clone)]
pub enum PriorGrads {
    None,
    Conditional { means: Matrix, log_vars: Matrix },
    Mixture {
        logits: Vec<f64>,
        means: Matrix,
        log_vars: Matrix,
    },
}

impl ModelGrads {
    /// Flat tensor views in the order of [`GenerativeModel::tensor_lens`].
    pub fn slices(&self) -> Vec<&[f64]> {
        let mut out = self.encoder.slices();
        out.extend(self.decoder.slices());
        match &self.prior {
            PriorGrads::None => {}
            PriorGrads::Conditional { means, log_vars } => {
                out.push(means.data());
                out.push(log_vars.data());
            }
            PriorGrads::Mixture {
                logits,
                means,
                log_vars,
            } => {
                out.push(logits.as_slice());
                out.push(means.data());
                out.push(log_vars.data());
            }
        }
        out
    }

    pub fn scale_in_place(&mut self, c: f64) {
        self.encoder.scale_in_place(c);
        self.decoder.scale_in_place(c);
        match &mut self.prior {
            PriorGrads::None => {}
            PriorGrads::Conditional { means, log_vars } => {
                for v in means.data_mut() {
                    *v *= c;
                }
                for v in log_vars.data_mut() {
                    *v *= c;
                }
            }
            PriorGrads::Mixture {
                logits,
                means,
                log_vars,
            } => {
                for v in logits.iter_mut() {
                    *v *= c;
                }
                for v in means.data_mut() {
                    *v *= c;
                }
                for v in log_vars.data_mut() {
                    *v *= c;
                }
            }
        }
    }
}

/// One ELBO variant, selectable at runtime by name.
pub trait ElboStrategy: Send + Sync {
    fn name(&self) -> &'static str;
    fn kind(&self) -> ModelKind;

    /// Single-sample ELBO estimate. `u` is required exactly for iVAE.
    fn elbo(
        &self,
        model: &GenerativeModel,
        x: &Matrix,
        u: Option<&[usize]>,
        train_mode: bool,
        rng: &mut RngStream,
    ) -> Result<ElboBreakdown>;

    /// ELBO together with its gradients for all trainable tensors.
    fn elbo_with_grads(
        &self,
        model: &GenerativeModel,
        x: &Matrix,
        u: Option<&[usize]>,
        train_mode: bool,
        rng: &mut RngStream,
    ) -> Result<(ElboBreakdown, ModelGrads)>;
}

static VAE_STRATEGY: VaeElbo = VaeElbo;
static IVAE_STRATEGY: IvaeElbo = IvaeElbo;
static VADE_STRATEGY: VadeElbo = VadeElbo;

/// All registered ELBO strategies.
pub fn registry() -> [&'static dyn ElboStrategy; 3] {
    [&VAE_STRATEGY, &IVAE_STRATEGY, &VADE_STRATEGY]
}

pub fn strategy_for(kind: ModelKind) -> &'static dyn ElboStrategy {
    match kind {
        ModelKind::Vae => &VAE_STRATEGY,
        ModelKind::Ivae => &IVAE_STRATEGY,
        ModelKind::Vade => &VADE_STRATEGY,
    }
}

pub fn strategy_by_name(name: &str) -> Result<&'static dyn ElboStrategy> {
    registry()
        .into_iter()
        .find(|s| s.name() == name)
        .ok_or_else(|| Error::UnknownModelKind(name.to_string()))
}

// ---------------------------------------------------------------------------
// Shared plumbing
// ---------------------------------------------------------------------------

struct Pass {
    enc: EncoderOutput,
    enc_tape: Tape,
    z: Matrix,
    x_hat: Matrix,
    dec_tape: Tape,
}

/// Encoder forward, one reparameterized sample, decoder forward. RNG
/// consumption order: encoder dropout, latent noise, decoder dropout.
fn single_sample_pass(
    model: &GenerativeModel,
    x: &Matrix,
    u: Option<&[usize]>,
    train_mode: bool,
    rng: &mut RngStream,
) -> Result<Pass> {
    if x.cols() != model.d_x() {
        return Err(Error::ShapeMismatch(format!(
            "batch has {} columns, model d_x is {}",
            x.cols(),
            model.d_x()
        )));
    }
    let (enc, enc_tape, _) = encode_traced(model, x, u, train_mode, rng)?;
    let z = reparameterize(&enc, rng)?;
    let (x_hat, dec_tape) = forward(&model.decoder, &model.decoder_spec, &z, train_mode, rng)?;
    Ok(Pass {
        enc,
        enc_tape,
        z,
        x_hat,
        dec_tape,
    })
}

fn ensure_kind(model: &GenerativeModel, kind: ModelKind) -> Result<()> {
    if model.kind != kind {
        return Err(Error::ConfigMismatch(format!(
            "{} ELBO called on a {} model",
            kind.name(),
            model.kind.name()
        )));
    }
    model.validate()
}

/// Decoder backward from the reconstruction term:
/// `d recon / d x_hat = (x - x_hat) / (var * batch)`.
fn recon_backward(
    model: &GenerativeModel,
    x: &Matrix,
    pass: &Pass,
) -> Result<(Gradients, Matrix)> {
    let var = model.decoder_log_var.exp();
    let scale = 1.0 / (var * x.rows() as f64);
    let grad_xhat = x.sub(&pass.x_hat)?.scale(scale);
    backward(&model.decoder, &pass.dec_tape, &grad_xhat)
}

/// Encoder backward from the assembled `[d mu | d log_var]` gradient.
fn encoder_backward(model: &GenerativeModel, pass: &Pass, dmu: &Matrix, dlv: &Matrix) -> Result<Gradients> {
    let batch = dmu.rows();
    let d_z = dmu.cols();
    let grad_out = Matrix::from_fn(batch, 2 * d_z, |i, j| {
        if j < d_z {
            dmu.at(i, j)
        } else {
            dlv.at(i, j - d_z)
        }
    });
    let (grads, _) = backward(&model.encoder, &pass.enc_tape, &grad_out)?;
    Ok(grads)
}

/// Closed-form KL gradients of the ELBO (note the KL enters negated).
/// Returns `(d mu, d log_var)` for the posterior side and
/// `(d p_mu, d p_log_var)` for the prior side, all including the reparam
/// chain through `dz_recon` and the `1/batch` averaging.
#[allow(clippy::too_many_arguments)]
fn closed_form_kl_grads(
    enc: &EncoderOutput,
    z: &Matrix,
    dz_recon: &Matrix,
    p_mu: &Matrix,
    p_lv: &Matrix,
) -> (Matrix, Matrix, Matrix, Matrix) {
    let batch = enc.batch();
    let d_z = enc.d_z();
    let inv_b = 1.0 / batch as f64;
    let mut dmu = Matrix::zeros(batch, d_z);
    let mut dlv = Matrix::zeros(batch, d_z);
    let mut d_pmu = Matrix::zeros(batch, d_z);
    let mut d_plv = Matrix::zeros(batch, d_z);
    for i in 0..batch {
        for j in 0..d_z {
            let var_q = enc.log_var.at(i, j).exp();
            let var_p = p_lv.at(i, j).exp();
            let diff = enc.mu.at(i, j) - p_mu.at(i, j);
            let dz = dz_recon.at(i, j);
            dmu.set(i, j, dz - diff / var_p * inv_b);
            dlv.set(
                i,
                j,
                dz * 0.5 * (z.at(i, j) - enc.mu.at(i, j)) - 0.5 * (var_q / var_p - 1.0) * inv_b,
            );
            d_pmu.set(i, j, diff / var_p * inv_b);
            d_plv.set(
                i,
                j,
                0.5 * ((var_q + diff * diff) / var_p - 1.0) * inv_b,
            );
        }
    }
    (dmu, dlv, d_pmu, d_plv)
}

// ---------------------------------------------------------------------------
// VAE
// ---------------------------------------------------------------------------

pub struct VaeElbo;

impl ElboStrategy for VaeElbo {
    fn name(&self) -> &'static str {
        "vae"
    }

    fn kind(&self) -> ModelKind {
        ModelKind::Vae
    }

    fn elbo(
        &self,
        model: &GenerativeModel,
        x: &Matrix,
        u: Option<&[usize]>,
        train_mode: bool,
        rng: &mut RngStream,
    ) -> Result<ElboBreakdown> {
        ensure_kind(model, ModelKind::Vae)?;
        let pass = single_sample_pass(model, x, u, train_mode, rng)?;
        let recon = gaussian_log_likelihood(x, &pass.x_hat, model.decoder_log_var)?;
        let zeros = Matrix::zeros(pass.enc.batch(), pass.enc.d_z());
        let kl = kl_diag_gaussians(&pass.enc.mu, &pass.enc.log_var, &zeros, &zeros)?;
        Ok(ElboBreakdown::new(recon, kl))
    }

    fn elbo_with_grads(
        &self,
        model: &GenerativeModel,
        x: &Matrix,
        u: Option<&[usize]>,
        train_mode: bool,
        rng: &mut RngStream,
    ) -> Result<(ElboBreakdown, ModelGrads)> {
        ensure_kind(model, ModelKind::Vae)?;
        let pass = single_sample_pass(model, x, u, train_mode, rng)?;
        let recon = gaussian_log_likelihood(x, &pass.x_hat, model.decoder_log_var)?;
        let zeros = Matrix::zeros(pass.enc.batch(), pass.enc.d_z());
        let kl = kl_diag_gaussians(&pass.enc.mu, &pass.enc.log_var, &zeros, &zeros)?;

        let (dec_grads, dz_recon) = recon_backward(model, x, &pass)?;
        let (dmu, dlv, _, _) = closed_form_kl_grads(&pass.enc, &pass.z, &dz_recon, &zeros, &zeros);
        let enc_grads = encoder_backward(model, &pass, &dmu, &dlv)?;

        Ok((
            ElboBreakdown::new(recon, kl),
            ModelGrads {
                encoder: enc_grads,
                decoder: dec_grads,
                prior: PriorGrads::None,
            },
        ))
    }
}

// ---------------------------------------------------------------------------
// iVAE
// ---------------------------------------------------------------------------

pub struct IvaeElbo;

fn gather_prior_rows(model: &GenerativeModel, u: &[usize]) -> Result<(Matrix, Matrix)> {
    let prior = match &model.prior {
        Prior::Conditional(p) => p,
        _ => return Err(Error::ConfigMismatch("iVAE requires a conditional prior".into())),
    };
    let d_z = prior.d_z();
    let mut p_mu = Matrix::zeros(u.len(), d_z);
    let mut p_lv = Matrix::zeros(u.len(), d_z);
    for (i, &label) in u.iter().enumerate() {
        let (means, log_vars) = prior.component(label)?;
        p_mu.row_mut(i).copy_from_slice(means);
        p_lv.row_mut(i).copy_from_slice(log_vars);
    }
    Ok((p_mu, p_lv))
}

impl ElboStrategy for IvaeElbo {
    fn name(&self) -> &'static str {
        "ivae"
    }

    fn kind(&self) -> ModelKind {
        ModelKind::Ivae
    }

    fn elbo(
        &self,
        model: &GenerativeModel,
        x: &Matrix,
        u: Option<&[usize]>,
        train_mode: bool,
        rng: &mut RngStream,
    ) -> Result<ElboBreakdown> {
        ensure_kind(model, ModelKind::Ivae)?;
        let labels = u.ok_or_else(|| {
            Error::InvalidArgument("iVAE ELBO requires side-information labels".into())
        })?;
        let (p_mu, p_lv) = gather_prior_rows(model, labels)?;
        let pass = single_sample_pass(model, x, u, train_mode, rng)?;
        let recon = gaussian_log_likelihood(x, &pass.x_hat, model.decoder_log_var)?;
        let kl = kl_diag_gaussians(&pass.enc.mu, &pass.enc.log_var, &p_mu, &p_lv)?;
        Ok(ElboBreakdown::new(recon, kl))
    }

    fn elbo_with_grads(
        &self,
        model: &GenerativeModel,
        x: &Matrix,
        u: Option<&[usize]>,
        train_mode: bool,
        rng: &mut RngStream,
    ) -> Result<(ElboBreakdown, ModelGrads)> {
        ensure_kind(model, ModelKind::Ivae)?;
        let labels = u.ok_or_else(|| {
            Error::InvalidArgument("iVAE ELBO requires side-information labels".into())
        })?;
        let (p_mu, p_lv) = gather_prior_rows(model, labels)?;
        let pass = single_sample_pass(model, x, u, train_mode, rng)?;
        let recon = gaussian_log_likelihood(x, &pass.x_hat, model.decoder_log_var)?;
        let kl = kl_diag_gaussians(&pass.enc.mu, &pass.enc.log_var, &p_mu, &p_lv)?;

        let (dec_grads, dz_recon) = recon_backward(model, x, &pass)?;
        let (dmu, dlv, d_pmu, d_plv) =
            closed_form_kl_grads(&pass.enc, &pass.z, &dz_recon, &p_mu, &p_lv);
        let enc_grads = encoder_backward(model, &pass, &dmu, &dlv)?;

        // Scatter per-row prior gradients back into the K x d_z tables.
        let k = model.prior.component_count();
        let d_z = model.d_z();
        let mut means_grad = Matrix::zeros(k, d_z);
        let mut log_vars_grad = Matrix::zeros(k, d_z);
        for (i, &label) in labels.iter().enumerate() {
            for j in 0..d_z {
                means_grad.set(label, j, means_grad.at(label, j) + d_pmu.at(i, j));
                log_vars_grad.set(label, j, log_vars_grad.at(label, j) + d_plv.at(i, j));
            }
        }

        Ok((
            ElboBreakdown::new(recon, kl),
            ModelGrads {
                encoder: enc_grads,
                decoder: dec_grads,
                prior: PriorGrads::Conditional {
                    means: means_grad,
                    log_vars: log_vars_grad,
                },
            },
        ))
    }
}

// ---------------------------------------------------------------------------
// VaDE
// ---------------------------------------------------------------------------

pub struct VadeElbo;

impl ElboStrategy for VadeElbo {
    fn name(&self) -> &'static str {
        "vade"
    }

    fn kind(&self) -> ModelKind {
        ModelKind::Vade
    }

    fn elbo(
        &self,
        model: &GenerativeModel,
        x: &Matrix,
        u: Option<&[usize]>,
        train_mode: bool,
        rng: &mut RngStream,
    ) -> Result<ElboBreakdown> {
        ensure_kind(model, ModelKind::Vade)?;
        let mixture = match &model.prior {
            Prior::Mixture(m) => m,
            _ => unreachable!("validated above"),
        };
        let pass = single_sample_pass(model, x, u, train_mode, rng)?;
        let recon = gaussian_log_likelihood(x, &pass.x_hat, model.decoder_log_var)?;
        let log_w = mixture.log_weights();
        let mut kl_sum = 0.0;
        for i in 0..pass.z.rows() {
            let log_q = diag_gaussian_logpdf(
                pass.z.row(i),
                pass.enc.mu.row(i),
                pass.enc.log_var.row(i),
            );
            let log_p =
                gmm_log_density_row(&log_w, &mixture.means, &mixture.log_vars, pass.z.row(i));
            kl_sum += log_q - log_p;
        }
        let kl = kl_sum / pass.z.rows() as f64;
        Ok(ElboBreakdown::new(recon, kl))
    }

    fn elbo_with_grads(
        &self,
        model: &GenerativeModel,
        x: &Matrix,
        u: Option<&[usize]>,
        train_mode: bool,
        rng: &mut RngStream,
    ) -> Result<(ElboBreakdown, ModelGrads)> {
        ensure_kind(model, ModelKind::Vade)?;
        let mixture = match &model.prior {
            Prior::Mixture(m) => m,
            _ => unreachable!("validated above"),
        };
        let pass = single_sample_pass(model, x, u, train_mode, rng)?;
        let recon = gaussian_log_likelihood(x, &pass.x_hat, model.decoder_log_var)?;

        let batch = pass.z.rows();
        let d_z = pass.z.cols();
        let k = mixture.k();
        let inv_b = 1.0 / batch as f64;
        let log_w = mixture.log_weights();
        let weights: Vec<f64> = log_w.iter().map(|lw| lw.exp()).collect();

        let (dec_grads, dz_recon) = recon_backward(model, x, &pass)?;

        let mut kl_sum = 0.0;
        // d ELBO / d z from the +log p_gmm(z) term (responsibilities-weighted
        // pull toward component means), assembled per row.
        let mut dz_prior = Matrix::zeros(batch, d_z);
        let mut logits_grad = vec![0.0; k];
        let mut means_grad = Matrix::zeros(k, d_z);
        let mut log_vars_grad = Matrix::zeros(k, d_z);

        for i in 0..batch {
            let z_row = pass.z.row(i);
            let log_q =
                diag_gaussian_logpdf(z_row, pass.enc.mu.row(i), pass.enc.log_var.row(i));
            let terms: Vec<f64> = (0..k)
                .map(|c| {
                    log_w[c]
                        + diag_gaussian_logpdf(
                            z_row,
                            mixture.means.row(c),
                            mixture.log_vars.row(c),
                        )
                })
                .collect();
            let lse = log_sum_exp(&terms);
            kl_sum += log_q - lse;

            for c in 0..k {
                let r = (terms[c] - lse).exp();
                logits_grad[c] += (r - weights[c]) * inv_b;
                let m_row = mixture.means.row(c);
                let lv_row = mixture.log_vars.row(c);
                for j in 0..d_z {
                    let var = lv_row[j].exp();
                    let centered = z_row[j] - m_row[j];
                    let pull = r * centered / var;
                    dz_prior.set(i, j, dz_prior.at(i, j) - pull);
                    means_grad.set(c, j, means_grad.at(c, j) + pull * inv_b);
                    log_vars_grad.set(
                        c,
                        j,
                        log_vars_grad.at(c, j)
                            + r * (-0.5 + centered * centered / (2.0 * var)) * inv_b,
                    );
                }
            }
        }
        let kl = kl_sum / batch as f64;

        // Reparameterization chain. The pathwise total derivative of
        // log q(z|x) w.r.t. mu vanishes and w.r.t. log_var is exactly -1/2,
        // so -log q contributes only the +1/2 log_var term below.
        let mut dmu = Matrix::zeros(batch, d_z);
        let mut dlv = Matrix::zeros(batch, d_z);
        for i in 0..batch {
            for j in 0..d_z {
                let dz_total = dz_recon.at(i, j) + dz_prior.at(i, j) * inv_b;
                dmu.set(i, j, dz_total);
                dlv.set(
                    i,
                    j,
                    dz_total * 0.5 * (pass.z.at(i, j) - pass.enc.mu.at(i, j)) + 0.5 * inv_b,
                );
            }
        }
        let enc_grads = encoder_backward(model, &pass, &dmu, &dlv)?;

        Ok((
            ElboBreakdown::new(recon, kl),
            ModelGrads {
                encoder: enc_grads,
                decoder: dec_grads,
                prior: PriorGrads::Mixture {
                    logits: logits_grad,
                    means: means_grad,
                    log_vars: log_vars_grad,
                },
            },
        ))
    }
}

// ---------------------------------------------------------------------------
// Named operations
// ---------------------------------------------------------------------------

pub fn elbo_vae(
    model: &GenerativeModel,
    x: &Matrix,
    train_mode: bool,
    rng: &mut RngStream,
) -> Result<ElboBreakdown> {
    VAE_STRATEGY.elbo(model, x, None, train_mode, rng)
}

pub fn elbo_ivae(
    model: &GenerativeModel,
    x: &Matrix,
    u: &[usize],
    train_mode: bool,
    rng: &mut RngStream,
) -> Result<ElboBreakdown> {
    IVAE_STRATEGY.elbo(model, x, Some(u), train_mode, rng)
}

pub fn elbo_vade_mc(
    model: &GenerativeModel,
    x: &Matrix,
    train_mode: bool,
    rng: &mut RngStream,
) -> Result<ElboBreakdown> {
    VADE_STRATEGY.elbo(model, x, None, train_mode, rng)
}

/// Single-sample estimator of the VAE ELBO with the KL term evaluated at the
/// sample (`log q(z|x) - log N(z; 0, I)`) instead of in closed form. This is
/// the one-component collapse target of the VaDE estimator; it is not used
/// for training.
pub fn elbo_vae_mc(
    model: &GenerativeModel,
    x: &Matrix,
    train_mode: bool,
    rng: &mut RngStream,
) -> Result<ElboBreakdown> {
    ensure_kind(model, ModelKind::Vae)?;
    let pass = single_sample_pass(model, x, None, train_mode, rng)?;
    let recon = gaussian_log_likelihood(x, &pass.x_hat, model.decoder_log_var)?;
    let d_z = pass.z.cols();
    let zeros = vec![0.0; d_z];
    let mut kl_sum = 0.0;
    for i in 0..pass.z.rows() {
        let log_q =
            diag_gaussian_logpdf(pass.z.row(i), pass.enc.mu.row(i), pass.enc.log_var.row(i));
        let log_p = diag_gaussian_logpdf(pass.z.row(i), &zeros, &zeros);
        kl_sum += log_q - log_p;
    }
    let kl = kl_sum / pass.z.rows() as f64;
    Ok(ElboBreakdown::new(recon, kl))
}
