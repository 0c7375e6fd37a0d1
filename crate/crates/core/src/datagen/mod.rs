//! Segmented synthetic source data with known ground truth, nonlinearly mixed
//! by a random full-rank MLP (Time-Contrastive-Learning style).
//!
//! Each segment draws per-dimension Gaussian parameters (means and standard
//! deviations uniform over configurable ranges), samples i.i.d. points, and
//! the stacked sources are pushed through a square LeakyReLU MLP whose weight
//! matrices are rejection-sampled to keep a minimum singular value.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::ndmath::{read_matrix_csv, svd, write_matrix_csv, Matrix, RngStream};
use crate::nn::{forward, Layer, MlpParams, MlpSpec};
use crate::{Error, Result};

/// Streams derived from `TclConfig::seed`.
const STREAM_SOURCES: u64 = 0x5;
const STREAM_MIXING: u64 = 0x6;

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct TclConfig {
    /// Source and observation dimension (d_x = d_z).
    pub d: usize,
    pub n_segments: usize,
    pub samples_per_segment: usize,
    /// Number of mixing weight layers (L).
    pub n_mixing_layers: usize,
    #[serde(default = "default_mean_range")]
    pub mean_range: (f64, f64),
    #[serde(default = "default_std_range")]
    pub std_range: (f64, f64),
    #[serde(default = "default_min_singular_value")]
    pub min_singular_value: f64,
    #[serde(default = "default_mixing_slope")]
    pub mixing_slope: f64,
    pub seed: u64,
}

fn default_mean_range() -> (f64, f64) {
    (-3.0, 3.0)
}
fn default_std_range() -> (f64, f64) {
    (0.01, 3.0)
}
fn default_min_singular_value() -> f64 {
    0.1
}
fn default_mixing_slope() -> f64 {
    0.1
}

impl TclConfig {
    pub fn new(
        d: usize,
        n_segments: usize,
        samples_per_segment: usize,
        layers: usize,
        seed: u64,
    ) -> Self {
        TclConfig {
            d,
            n_segments,
            samples_per_segment,
            n_mixing_layers: layers,
            mean_range: default_mean_range(),
            std_range: default_std_range(),
            min_singular_value: default_min_singular_value(),
            mixing_slope: default_mixing_slope(),
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.d < 1
            || self.n_segments < 2
            || self.samples_per_segment < 1
            || self.n_mixing_layers < 1
        {
            return Err(Error::InvalidArgument(
                "TCL config requires d >= 1, n_segments >= 2, samples_per_segment >= 1, layers >= 1"
                    .into(),
            ));
        }
        if !(self.mean_range.0 < self.mean_range.1) || !(self.std_range.0 < self.std_range.1) {
            return Err(Error::InvalidArgument("empty parameter range".into()));
        }
        if !(self.std_range.0 > 0.0) {
            return Err(Error::InvalidArgument("std range must be positive".into()));
        }
        Ok(())
    }

    pub fn n_samples(&self) -> usize {
        self.n_segments * self.samples_per_segment
    }

    /// Spec of the mixing network: square layers, LeakyReLU between them,
    /// final layer linear, no biases (biases stay zero).
    pub fn mixing_spec(&self) -> MlpSpec {
        MlpSpec {
            layer_widths: vec![self.d; self.n_mixing_layers + 1],
            activation_slope: self.mixing_slope,
            dropout_rate: 0.0,
            final_linear: true,
        }
    }
}

/// Per-segment Gaussian parameters of the source distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct SegmentParams {
    /// `n_segments x d`.
    pub means: Matrix,
    /// `n_segments x d`, strictly positive.
    pub stds: Matrix,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    /// Observations, `n x d_x`.
    pub x: Matrix,
    /// Segment label per row, each in `[0, n_segments)`.
    pub u: Vec<usize>,
    /// Ground-truth sources when the data is synthetic.
    pub s: Option<Matrix>,
    pub n_segments: usize,
}

impl LabeledDataset {
    pub fn validate(&self) -> Result<()> {
        if self.x.rows() != self.u.len() {
            return Err(Error::ShapeMismatch("X rows and label count differ".into()));
        }
        if let Some(s) = &self.s {
            if s.rows() != self.x.rows() {
                return Err(Error::ShapeMismatch("source rows and X rows differ".into()));
            }
        }
        let mut counts = vec![0usize; self.n_segments];
        for &label in &self.u {
            if label >= self.n_segments {
                return Err(Error::LabelOutOfRange {
                    label,
                    count: self.n_segments,
                });
            }
            counts[label] += 1;
        }
        if counts.iter().any(|&c| c == 0) {
            return Err(Error::DegenerateInput("empty segment".into()));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.x.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn select(&self, indices: &[usize]) -> LabeledDataset {
        LabeledDataset {
            x: self.x.select_rows(indices),
            u: indices.iter().map(|&i| self.u[i]).collect(),
            s: self.s.as_ref().map(|s| s.select_rows(indices)),
            n_segments: self.n_segments,
        }
    }
}

/// Draw segment parameters and sources: per segment, per-dimension means and
/// stds uniform over the configured ranges, then i.i.d. Gaussian points.
/// Rows are grouped by segment, labels in step.
pub fn generate_sources(
    cfg: &TclConfig,
    rng: &mut RngStream,
) -> Result<(Matrix, Vec<usize>, SegmentParams)> {
    cfg.validate()?;
    let mut means = Matrix::zeros(cfg.n_segments, cfg.d);
    let mut stds = Matrix::zeros(cfg.n_segments, cfg.d);
    for seg in 0..cfg.n_segments {
        for dim in 0..cfg.d {
            means.set(seg, dim, rng.next_uniform(cfg.mean_range.0, cfg.mean_range.1));
            stds.set(seg, dim, rng.next_uniform(cfg.std_range.0, cfg.std_range.1));
        }
    }

    let n = cfg.n_samples();
    let mut sources = Matrix::zeros(n, cfg.d);
    let mut labels = Vec::with_capacity(n);
    for seg in 0..cfg.n_segments {
        for k in 0..cfg.samples_per_segment {
            let row = seg * cfg.samples_per_segment + k;
            for dim in 0..cfg.d {
                let v = means.at(seg, dim) + stds.at(seg, dim) * rng.next_gaussian();
                sources.set(row, dim, v);
            }
            labels.push(seg);
        }
    }
    Ok((sources, labels, SegmentParams { means, stds }))
}

/// Sample the mixing network: square Xavier-uniform weight matrices, each
/// resampled until its smallest singular value reaches the configured floor;
/// biases stay zero. Errors after 100 consecutive rejections.
pub fn sample_mixing_mlp(cfg: &TclConfig, rng: &mut RngStream) -> Result<MlpParams> {
    cfg.validate()?;
    let bound = (6.0 / (2 * cfg.d) as f64).sqrt();
    let mut layers = Vec::with_capacity(cfg.n_mixing_layers);
    for _ in 0..cfg.n_mixing_layers {
        let mut attempts = 0usize;
        let weight = loop {
            let candidate = Matrix::from_fn(cfg.d, cfg.d, |_, _| rng.next_uniform(-bound, bound));
            let smin = svd(&candidate)?.s.last().copied().unwrap_or(0.0);
            if smin >= cfg.min_singular_value {
                break candidate;
            }
            attempts += 1;
            if attempts >= 100 {
                return Err(Error::RejectionFailed {
                    attempts,
                    context: format!(
                        "mixing layer with min singular value >= {}",
                        cfg.min_singular_value
                    ),
                });
            }
        };
        layers.push(Layer {
            weight,
            bias: vec![0.0; cfg.d],
        });
    }
    Ok(MlpParams { layers })
}

/// Push sources through the mixing network (pure eval pass).
pub fn mix_sources(cfg: &TclConfig, mixing: &MlpParams, sources: &Matrix) -> Result<Matrix> {
    let spec = cfg.mixing_spec();
    let mut unused = RngStream::new(0, 0);
    let (x, _) = forward(mixing, &spec, sources, false, &mut unused)?;
    Ok(x)
}

/// Full dataset generation, deterministic in `cfg.seed`.
pub fn generate_tcl_dataset(cfg: &TclConfig) -> Result<LabeledDataset> {
    let mut mix_rng = RngStream::new(cfg.seed, STREAM_MIXING);
    let mixing = sample_mixing_mlp(cfg, &mut mix_rng)?;
    generate_tcl_dataset_with_mixing(cfg, &mixing)
}

/// Dataset generation with a caller-supplied mixing network (test hook and
/// building block of [`generate_tcl_dataset`]).
pub fn generate_tcl_dataset_with_mixing(
    cfg: &TclConfig,
    mixing: &MlpParams,
) -> Result<LabeledDataset> {
    let mut src_rng = RngStream::new(cfg.seed, STREAM_SOURCES);
    let (sources, labels, _params) = generate_sources(cfg, &mut src_rng)?;
    let x = mix_sources(cfg, mixing, &sources)?;
    let ds = LabeledDataset {
        x,
        u: labels,
        s: Some(sources),
        n_segments: cfg.n_segments,
    };
    ds.validate()?;
    Ok(ds)
}

/// Split row indices stratified by label: every segment contributes
/// `round(fraction * segment_size)` rows (at least one on each side) to the
/// first set. Both index lists come back sorted ascending.
pub fn stratified_split_indices(
    labels: &[usize],
    n_segments: usize,
    fraction: f64,
    rng: &mut RngStream,
) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "split fraction must lie strictly between 0 and 1, got {fraction}"
        )));
    }
    let mut by_segment: Vec<Vec<usize>> = vec![Vec::new(); n_segments];
    for (i, &label) in labels.iter().enumerate() {
        if label >= n_segments {
            return Err(Error::LabelOutOfRange {
                label,
                count: n_segments,
            });
        }
        by_segment[label].push(i);
    }
    let mut first = Vec::new();
    let mut second = Vec::new();
    for (seg, mut indices) in by_segment.into_iter().enumerate() {
        if indices.len() < 2 {
            return Err(Error::InsufficientData(format!(
                "segment {seg} has {} point(s); need at least 2 to split",
                indices.len()
            )));
        }
        rng.shuffle(&mut indices);
        let take =
            ((fraction * indices.len() as f64).round() as usize).clamp(1, indices.len() - 1);
        first.extend_from_slice(&indices[..take]);
        second.extend_from_slice(&indices[take..]);
    }
    first.sort_unstable();
    second.sort_unstable();
    Ok((first, second))
}

/// Stratified dataset split; the two halves are disjoint and their union is
/// the input.
pub fn split_dataset(
    ds: &LabeledDataset,
    fraction: f64,
    rng: &mut RngStream,
) -> Result<(LabeledDataset, LabeledDataset)> {
    let (first, second) = stratified_split_indices(&ds.u, ds.n_segments, fraction, rng)?;
    Ok((ds.select(&first), ds.select(&second)))
}

/// Write `X.csv`, `U.csv`, optional `S.csv`, and optional `config.json`.
pub fn save_dataset(dir: &Path, ds: &LabeledDataset, cfg: Option<&TclConfig>) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    write_matrix_csv(&dir.join("X.csv"), &ds.x)?;
    let labels: Vec<String> = ds.u.iter().map(|u| u.to_string()).collect();
    std::fs::write(dir.join("U.csv"), labels.join("\n") + "\n")?;
    if let Some(s) = &ds.s {
        write_matrix_csv(&dir.join("S.csv"), s)?;
    }
    if let Some(cfg) = cfg {
        std::fs::write(dir.join("config.json"), serde_json::to_string_pretty(cfg)?)?;
    }
    Ok(())
}

pub fn load_dataset(dir: &Path) -> Result<LabeledDataset> {
    let x = read_matrix_csv(&dir.join("X.csv"))?;
    let u = read_labels(&dir.join("U.csv"))?;
    let s_path = dir.join("S.csv");
    let s = if s_path.exists() {
        Some(read_matrix_csv(&s_path)?)
    } else {
        None
    };
    let n_segments = u.iter().copied().max().map_or(0, |m| m + 1);
    let ds = LabeledDataset {
        x,
        u,
        s,
        n_segments,
    };
    ds.validate()?;
    Ok(ds)
}

/// One integer label per line.
pub fn read_labels(path: &Path) -> Result<Vec<usize>> {
    let text = std::fs::read_to_string(path)?;
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            l.trim()
                .parse::<usize>()
                .map_err(|_| Error::Parse(format!("{}: bad label {l:?}", path.display())))
        })
        .collect()
}

#[cfg(test)]
mod tests;
