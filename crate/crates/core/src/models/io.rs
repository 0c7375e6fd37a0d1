//! Model persistence: `encoder/` and `decoder/` MLP directories, a
//! `prior.json` referencing CSV tables, and a top-level `manifest.json`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::models::prior::{ConditionalGaussianPrior, GaussianMixturePrior, Prior};
use crate::models::{GenerativeModel, ModelKind};
use crate::ndmath::{read_matrix_csv, write_matrix_csv, Matrix};
use crate::nn::{load_mlp, save_mlp};
use crate::{Error, Result};

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ModelManifest {
    pub kind: ModelKind,
    pub d_z: usize,
    pub decoder_log_var: f64,
    pub seed: u64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum PriorManifest {
    StandardNormal {
        d_z: usize,
    },
    Conditional {
        k: usize,
        means_csv: String,
        log_vars_csv: String,
    },
    Mixture {
        k: usize,
        logits_csv: String,
        means_csv: String,
        log_vars_csv: String,
    },
}

pub fn save_model(dir: &Path, model: &GenerativeModel, seed: u64) -> Result<()> {
    model.validate()?;
    std::fs::create_dir_all(dir)?;
    save_mlp(&dir.join("encoder"), &model.encoder_spec, &model.encoder)?;
    save_mlp(&dir.join("decoder"), &model.decoder_spec, &model.decoder)?;

    let prior_manifest = match &model.prior {
        Prior::StandardNormal { d_z } => PriorManifest::StandardNormal { d_z: *d_z },
        Prior::Conditional(p) => {
            write_matrix_csv(&dir.join("prior_means.csv"), &p.means)?;
            write_matrix_csv(&dir.join("prior_log_vars.csv"), &p.log_vars)?;
            PriorManifest::Conditional {
                k: p.k(),
                means_csv: "prior_means.csv".into(),
                log_vars_csv: "prior_log_vars.csv".into(),
            }
        }
        Prior::Mixture(p) => {
            write_matrix_csv(&dir.join("prior_means.csv"), &p.means)?;
            write_matrix_csv(&dir.join("prior_log_vars.csv"), &p.log_vars)?;
            let logits = Matrix::from_vec(1, p.logits.len(), p.logits.clone())?;
            write_matrix_csv(&dir.join("prior_logits.csv"), &logits)?;
            PriorManifest::Mixture {
                k: p.k(),
                logits_csv: "prior_logits.csv".into(),
                means_csv: "prior_means.csv".into(),
                log_vars_csv: "prior_log_vars.csv".into(),
            }
        }
    };
    std::fs::write(
        dir.join("prior.json"),
        serde_json::to_string_pretty(&prior_manifest)?,
    )?;

    let manifest = ModelManifest {
        kind: model.kind,
        d_z: model.d_z(),
        decoder_log_var: model.decoder_log_var,
        seed,
    };
    std::fs::write(
        dir.join("manifest.json"),
        serde_json::to_string_pretty(&manifest)?,
    )?;
    Ok(())
}

pub fn load_model(dir: &Path) -> Result<(GenerativeModel, ModelManifest)> {
    let manifest: ModelManifest =
        serde_json::from_str(&std::fs::read_to_string(dir.join("manifest.json"))?)?;
    let (encoder_spec, encoder) = load_mlp(&dir.join("encoder"))?;
    let (decoder_spec, decoder) = load_mlp(&dir.join("decoder"))?;

    let prior_manifest: PriorManifest =
        serde_json::from_str(&std::fs::read_to_string(dir.join("prior.json"))?)?;
    let prior = match prior_manifest {
        PriorManifest::StandardNormal { d_z } => Prior::StandardNormal { d_z },
        PriorManifest::Conditional {
            k,
            means_csv,
            log_vars_csv,
        } => {
            let means = read_matrix_csv(&dir.join(means_csv))?;
            let log_vars = read_matrix_csv(&dir.join(log_vars_csv))?;
            if means.rows() != k {
                return Err(Error::ShapeMismatch("prior table rows disagree with k".into()));
            }
            Prior::Conditional(ConditionalGaussianPrior::new(means, log_vars)?)
        }
        PriorManifest::Mixture {
            k,
            logits_csv,
            means_csv,
            log_vars_csv,
        } => {
            let logits = read_matrix_csv(&dir.join(logits_csv))?.data().to_vec();
            let means = read_matrix_csv(&dir.join(means_csv))?;
            let log_vars = read_matrix_csv(&dir.join(log_vars_csv))?;
            if means.rows() != k || logits.len() != k {
                return Err(Error::ShapeMismatch("prior table rows disagree with k".into()));
            }
            Prior::Mixture(GaussianMixturePrior::new(logits, means, log_vars)?)
        }
    };

    let model = GenerativeModel {
        kind: manifest.kind,
        encoder_spec,
        encoder,
        decoder_spec,
        decoder,
        prior,
        decoder_log_var: manifest.decoder_log_var,
    };
    model.validate()?;
    Ok((model, manifest))
}
