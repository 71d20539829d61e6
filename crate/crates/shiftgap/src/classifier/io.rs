//! Model files: a small versioned JSON format.
//!
//! Floats are written with the shortest representation that parses back to
//! the same bits, so save/load reproduces predictions bitwise. The
//! `format_version` field guards against silently reading a future layout,
//! and the declared dimensions are cross-checked against the actual layer
//! shapes on load.

use std::path::Path;

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::{Classifier, Kind, Layer};

const FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format_version: u32,
    kind: Kind,
    input_dim: usize,
    num_classes: usize,
    layers: Vec<LayerFile>,
}

#[derive(Serialize, Deserialize)]
struct LayerFile {
    weights: Vec<Vec<f64>>,
    biases: Vec<f64>,
}

/// Renders a classifier to the model-file JSON.
pub fn model_to_json(h: &Classifier) -> String {
    let file = ModelFile {
        format_version: FORMAT_VERSION,
        kind: h.kind(),
        input_dim: h.input_dim(),
        num_classes: h.num_classes(),
        layers: h
            .layers()
            .iter()
            .map(|l| LayerFile {
                weights: l.w.rows().into_iter().map(|r| r.to_vec()).collect(),
                biases: l.b.to_vec(),
            })
            .collect(),
    };
    let mut text = serde_json::to_string(&file).expect("model file always serializes");
    text.push('\n');
    text
}

/// Parses and validates a model file.
pub fn model_from_json(text: &str) -> Result<Classifier> {
    let file: ModelFile = serde_json::from_str(text)?;
    if file.format_version != FORMAT_VERSION {
        return Err(Error::InvalidModel(format!(
            "unsupported format_version {}; this build reads version {FORMAT_VERSION}",
            file.format_version
        )));
    }
    let mut layers = Vec::with_capacity(file.layers.len());
    for (i, lf) in file.layers.iter().enumerate() {
        let rows = lf.weights.len();
        let cols = lf.weights.first().map_or(0, Vec::len);
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidModel(format!("layer {i} has empty weights")));
        }
        if let Some(bad) = lf.weights.iter().position(|r| r.len() != cols) {
            return Err(Error::InvalidModel(format!(
                "layer {i} weights are ragged: row {bad} has {} values, expected {cols}",
                lf.weights[bad].len()
            )));
        }
        let flat: Vec<f64> = lf.weights.iter().flatten().copied().collect();
        layers.push(Layer {
            w: Array2::from_shape_vec((rows, cols), flat).expect("checked rectangular"),
            b: Array1::from_vec(lf.biases.clone()),
        });
    }
    let model = Classifier::from_layers(file.kind, layers)?;
    if model.input_dim() != file.input_dim {
        return Err(Error::InvalidModel(format!(
            "declared input_dim {} but layers expect {}",
            file.input_dim,
            model.input_dim()
        )));
    }
    if model.num_classes() != file.num_classes {
        return Err(Error::InvalidModel(format!(
            "declared num_classes {} but layers produce {}",
            file.num_classes,
            model.num_classes()
        )));
    }
    Ok(model)
}

/// Writes the model file for `h`.
pub fn save_model(h: &Classifier, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, model_to_json(h))?;
    Ok(())
}

/// Reads a model file.
pub fn load_model(path: impl AsRef<Path>) -> Result<Classifier> {
    model_from_json(&std::fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifier::train::init_model;
    use ndarray::Array2;

    #[test]
    fn round_trip_preserves_predictions_bitwise() {
        for (kind, hidden) in [(Kind::Linear, 0), (Kind::Fcn, 16)] {
            let model = init_model(kind, 3, 4, hidden.max(1), 21).unwrap();
            let back = model_from_json(&model_to_json(&model)).unwrap();
            assert_eq!(model, back);
            let xs = Array2::from_shape_fn((10, 3), |(i, j)| (i as f64 - 4.5) * (j as f64 + 0.5));
            let a = model.scores_batch(xs.view()).unwrap();
            let b = back.scores_batch(xs.view()).unwrap();
            for (x, y) in a.iter().zip(b.iter()) {
                assert_eq!(x.to_bits(), y.to_bits());
            }
        }
    }

    #[test]
    fn version_and_shape_guards() {
        let model = init_model(Kind::Linear, 2, 2, 1, 3).unwrap();
        let good = model_to_json(&model);

        let future = good.replace("\"format_version\":1", "\"format_version\":2");
        assert!(matches!(
            model_from_json(&future).unwrap_err(),
            Error::InvalidModel(_)
        ));

        let wrong_dim = good.replace("\"input_dim\":2", "\"input_dim\":5");
        assert!(model_from_json(&wrong_dim).is_err());

        let ragged = r#"{"format_version":1,"kind":"linear","input_dim":2,"num_classes":2,
            "layers":[{"weights":[[1.0,2.0],[3.0]],"biases":[0.0,0.0]}]}"#;
        assert!(model_from_json(ragged).is_err());

        let nan = r#"{"format_version":1,"kind":"linear","input_dim":2,"num_classes":2,
            "layers":[{"weights":[[NaN,2.0],[3.0,4.0]],"biases":[0.0,0.0]}]}"#;
        assert!(model_from_json(nan).is_err());

        assert!(model_from_json("{").is_err());
        assert!(model_from_json("").is_err());
    }

    #[test]
    fn save_and_load_through_a_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.json");
        let model = init_model(Kind::Fcn, 2, 3, 8, 77).unwrap();
        save_model(&model, &path).unwrap();
        assert_eq!(load_model(&path).unwrap(), model);
        assert!(load_model(dir.path().join("nope.json")).is_err());
    }
}
