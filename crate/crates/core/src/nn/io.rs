//! MLP persistence: a directory holding one weight/bias CSV pair per layer
//! plus a JSON manifest of the spec.

use std::path::Path;

use crate::ndmath::{read_matrix_csv, write_matrix_csv, Matrix};
use crate::nn::{Layer, MlpParams, MlpSpec};
use crate::{Error, Result};

pub fn save_mlp(dir: &Path, spec: &MlpSpec, params: &MlpParams) -> Result<()> {
    if !params.matches_spec(spec) {
        return Err(Error::ShapeMismatch("MLP parameters do not match spec".into()));
    }
    std::fs::create_dir_all(dir)?;
    let manifest = serde_json::to_string_pretty(spec)?;
    std::fs::write(dir.join("spec.json"), manifest)?;
    for (i, layer) in params.layers.iter().enumerate() {
        write_matrix_csv(&dir.join(format!("layer_{i:02}_weight.csv")), &layer.weight)?;
        let bias = Matrix::from_vec(1, layer.bias.len(), layer.bias.clone())?;
        write_matrix_csv(&dir.join(format!("layer_{i:02}_bias.csv")), &bias)?;
    }
    Ok(())
}

pub fn load_mlp(dir: &Path) -> Result<(MlpSpec, MlpParams)> {
    let manifest = std::fs::read_to_string(dir.join("spec.json"))?;
    let spec: MlpSpec = serde_json::from_str(&manifest)?;
    spec.validate()?;
    let mut layers = Vec::with_capacity(spec.n_layers());
    for i in 0..spec.n_layers() {
        let weight = read_matrix_csv(&dir.join(format!("layer_{i:02}_weight.csv")))?;
        let bias = read_matrix_csv(&dir.join(format!("layer_{i:02}_bias.csv")))?;
        layers.push(Layer {
            weight,
            bias: bias.data().to_vec(),
        });
    }
    let params = MlpParams { layers };
    if !params.matches_spec(&spec) {
        return Err(Error::ShapeMismatch(format!(
            "{}: stored layers do not match spec",
            dir.display()
        )));
    }
    Ok((spec, params))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ndmath::RngStream;
    use crate::nn::init_xavier_uniform;

    #[test]
    fn round_trip_preserves_bits() {
        let dir = tempfile::tempdir().unwrap();
        let spec = MlpSpec {
            layer_widths: vec![4, 7, 3],
            activation_slope: 0.1,
            dropout_rate: 0.1,
            final_linear: true,
        };
        let mut rng = RngStream::new(8, 1);
        let params = init_xavier_uniform(&spec, &mut rng).unwrap();
        save_mlp(dir.path(), &spec, &params).unwrap();
        let (spec2, params2) = load_mlp(dir.path()).unwrap();
        assert_eq!(spec, spec2);
        assert_eq!(params, params2);
    }
}
