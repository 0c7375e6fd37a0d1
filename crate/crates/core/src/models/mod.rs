//! Generative model family: VAE, iVAE, and VaDE share the same encoder /
//! decoder machinery and differ only in the latent prior and the KL term of
//! their ELBOs. The three ELBO variants live behind [`elbo::ElboStrategy`]
//! and are selected at runtime by name or by [`ModelKind`].

pub mod density;
pub mod elbo;
pub mod identifiability;
pub mod io;
pub mod prior;
pub mod rademacher;


pub use density::{
    encode, gaussian_log_likelihood, kl_diag_gaussians, reparameterize, responsibilities,
    EncoderOutput,
};
pub use elbo::{
    elbo_ivae, elbo_vade_mc, elbo_vae, elbo_vae_mc, registry, strategy_by_name, strategy_for,
    ElboBreakdown, ElboStrategy, ModelGrads, PriorGrads,
};
pub use identifiability::{
    build_l_matrix, enforce_identifiability, penalized_objective, IdentifiabilityCheck,
};
pub use io::{load_model, save_model, ModelManifest};
pub use prior::{
    natural_params, natural_params_to_moments, ConditionalGaussianPrior, GaussianMixturePrior,
    Prior,
};
pub use rademacher::{build_rademacher_hasher, hash_u, RademacherHasher};

use serde::{Deserialize, Serialize};

use crate::ndmath::RngStream;
use crate::nn::{init_xavier_uniform, MlpParams, MlpSpec};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Vae,
    Ivae,
    Vade,
}

impl ModelKind {
    pub fn name(&self) -> &'static str {
        match self {
            ModelKind::Vae => "vae",
            ModelKind::Ivae => "ivae",
            ModelKind::Vade => "vade",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        match name {
            "vae" => Ok(ModelKind::Vae),
            "ivae" => Ok(ModelKind::Ivae),
            "vade" => Ok(ModelKind::Vade),
            other => Err(Error::UnknownModelKind(other.to_string())),
        }
    }
}

/// Encoder/decoder MLPs plus a prior structure and fixed isotropic
/// observation noise `exp(decoder_log_var)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GenerativeModel {
    pub kind: ModelKind,
    pub encoder_spec: MlpSpec,
    pub encoder: MlpParams,
    pub decoder_spec: MlpSpec,
    pub decoder: MlpParams,
    pub prior: Prior,
    pub decoder_log_var: f64,
}

impl GenerativeModel {
    /// Xavier-initialize encoder and decoder around the given prior.
    pub fn new_xavier(
        kind: ModelKind,
        encoder_spec: MlpSpec,
        decoder_spec: MlpSpec,
        prior: Prior,
        decoder_log_var: f64,
        rng: &mut RngStream,
    ) -> Result<Self> {
        let encoder = init_xavier_uniform(&encoder_spec, rng)?;
        let decoder = init_xavier_uniform(&decoder_spec, rng)?;
        let model = GenerativeModel {
            kind,
            encoder_spec,
            encoder,
            decoder_spec,
            decoder,
            prior,
            decoder_log_var,
        };
        model.validate()?;
        Ok(model)
    }

    pub fn d_z(&self) -> usize {
        self.encoder_spec.output_width() / 2
    }

    pub fn d_x(&self) -> usize {
        self.decoder_spec.output_width()
    }

    pub fn validate(&self) -> Result<()> {
        self.encoder_spec.validate()?;
        self.decoder_spec.validate()?;
        if !self.encoder.matches_spec(&self.encoder_spec)
            || !self.decoder.matches_spec(&self.decoder_spec)
        {
            return Err(Error::ShapeMismatch(
                "network parameters do not match specs".into(),
            ));
        }
        if self.encoder_spec.output_width() % 2 != 0 {
            return Err(Error::ShapeMismatch(
                "encoder must emit concatenated [mu, log_var] (even width)".into(),
            ));
        }
        let d_z = self.d_z();
        if self.prior.d_z() != d_z {
            return Err(Error::ShapeMismatch(format!(
                "prior dimension {} does not match encoder d_z {}",
                self.prior.d_z(),
                d_z
            )));
        }
        if self.decoder_spec.input_width() != d_z {
            return Err(Error::ShapeMismatch(
                "decoder input width must equal d_z".into(),
            ));
        }
        let d_x = self.d_x();
        let expected_enc_in = match self.kind {
            ModelKind::Ivae => d_x + self.prior.component_count(),
            _ => d_x,
        };
        if self.encoder_spec.input_width() != expected_enc_in {
            return Err(Error::ShapeMismatch(format!(
                "encoder input width {} but {} expected for a {} model",
                self.encoder_spec.input_width(),
                expected_enc_in,
                self.kind.name()
            )));
        }
        let prior_ok = matches!(
            (self.kind, &self.prior),
            (ModelKind::Vae, Prior::StandardNormal { .. })
                | (ModelKind::Ivae, Prior::Conditional(_))
                | (ModelKind::Vade, Prior::Mixture(_))
        );
        if !prior_ok {
            return Err(Error::ConfigMismatch(format!(
                "prior structure does not match model kind {}",
                self.kind.name()
            )));
        }
        if !self.decoder_log_var.is_finite() {
            return Err(Error::InvalidArgument(
                "decoder log variance must be finite".into(),
            ));
        }
        Ok(())
    }

    /// Lengths of every trainable tensor, in the fixed traversal order used
    /// by [`GenerativeModel::param_slices_mut`] and [`ModelGrads::slices`]:
    /// encoder layers (weight then bias), decoder layers, then prior tables.
    pub fn tensor_lens(&self) -> Vec<usize> {
        let mut lens = Vec::new();
        for layer in &self.encoder.layers {
            lens.push(layer.weight.data().len());
            lens.push(layer.bias.len());
        }
        for layer in &self.decoder.layers {
            lens.push(layer.weight.data().len());
            lens.push(layer.bias.len());
        }
        match &self.prior {
            Prior::StandardNormal { .. } => {}
            Prior::Conditional(p) => {
                lens.push(p.means.data().len());
                lens.push(p.log_vars.data().len());
            }
            Prior::Mixture(p) => {
                lens.push(p.logits.len());
                lens.push(p.means.data().len());
                lens.push(p.log_vars.data().len());
            }
        }
        lens
    }

    pub fn param_slices_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out = Vec::new();
        for layer in &mut self.encoder.layers {
            out.push(layer.weight.data_mut());
            out.push(layer.bias.as_mut_slice());
        }
        for layer in &mut self.decoder.layers {
            out.push(layer.weight.data_mut());
            out.push(layer.bias.as_mut_slice());
        }
        match &mut self.prior {
            Prior::StandardNormal { .. } => {}
            Prior::Conditional(p) => {
                out.push(p.means.data_mut());
                out.push(p.log_vars.data_mut());
            }
            Prior::Mixture(p) => {
                out.push(p.logits.as_mut_slice());
                out.push(p.means.data_mut());
                out.push(p.log_vars.data_mut());
            }
        }
        out
    }

    pub fn is_finite(&self) -> bool {
        let prior_finite = match &self.prior {
            Prior::StandardNormal { .. } => true,
            Prior::Conditional(p) => p.means.is_finite() && p.log_vars.is_finite(),
            Prior::Mixture(p) => {
                p.means.is_finite()
                    && p.log_vars.is_finite()
                    && p.logits.iter().all(|l| l.is_finite())
            }
        };
        self.encoder.is_finite() && self.decoder.is_finite() && prior_finite
    }
}
