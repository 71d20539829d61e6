//! Linear (multinomial logistic) and one-hidden-layer ReLU classifiers, the
//! seeded SGD trainer that fits them, and the evaluation primitives built on
//! their predictions: empirical risk and pairwise disagreement.

mod io;
mod train;

pub use io::{load_model, model_from_json, model_to_json, save_model};
pub use train::{init_model, nll_gradient, nll_loss, train, DEFAULT_HIDDEN_WIDTH};

use std::fmt;
use std::str::FromStr;

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::dataset::LabeledDataset;
use crate::error::{Error, Result};

/// Which hypothesis class a classifier belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    /// Softmax regression: one affine map from features to class logits.
    Linear,
    /// One hidden ReLU layer of [`DEFAULT_HIDDEN_WIDTH`] units, then an
    /// affine map to class logits.
    Fcn,
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Kind::Linear => "linear",
            Kind::Fcn => "fcn",
        })
    }
}

impl FromStr for Kind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linear" => Ok(Kind::Linear),
            "fcn" => Ok(Kind::Fcn),
            other => Err(Error::InvalidConfig(format!(
                "unknown classifier kind {other:?}; expected \"linear\" or \"fcn\""
            ))),
        }
    }
}

/// One SGD phase: a constant learning rate held for a number of epochs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Phase {
    pub learning_rate: f64,
    pub epochs: usize,
}

/// Training hyperparameters.
///
/// The defaults are the recipe used throughout: momentum 0.9, batches of
/// 250, 100 epochs at 1e-2 then 50 at 1e-3, early stop once the 0-1
/// training error drops below 5e-4.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub momentum: f64,
    pub batch_size: usize,
    pub phase1: Phase,
    pub phase2: Phase,
    pub early_stop_error: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            momentum: 0.9,
            batch_size: 250,
            phase1: Phase {
                learning_rate: 1e-2,
                epochs: 100,
            },
            phase2: Phase {
                learning_rate: 1e-3,
                epochs: 50,
            },
            early_stop_error: 5e-4,
            seed: 0,
        }
    }
}

impl TrainConfig {
    /// A default-recipe config under the given seed.
    pub fn with_seed(seed: u64) -> Self {
        Self {
            seed,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.momentum >= 0.0 && self.momentum < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "momentum must be in [0, 1), got {}",
                self.momentum
            )));
        }
        if self.batch_size == 0 {
            return Err(Error::InvalidConfig("batch_size must be positive".into()));
        }
        for (name, phase) in [("phase1", self.phase1), ("phase2", self.phase2)] {
            if !(phase.learning_rate > 0.0 && phase.learning_rate.is_finite()) {
                return Err(Error::InvalidConfig(format!(
                    "{name} learning rate must be positive and finite, got {}",
                    phase.learning_rate
                )));
            }
        }
        if !(self.early_stop_error >= 0.0) {
            return Err(Error::InvalidConfig(format!(
                "early_stop_error must be non-negative, got {}",
                self.early_stop_error
            )));
        }
        Ok(())
    }
}

/// One affine layer; `w` is out×in.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Layer {
    pub(crate) w: Array2<f64>,
    pub(crate) b: Array1<f64>,
}

/// A trained classifier. Immutable after construction, so it can be shared
/// and evaluated from many threads at once.
#[derive(Debug, Clone, PartialEq)]
pub struct Classifier {
    kind: Kind,
    layers: Vec<Layer>,
}

impl Classifier {
    pub(crate) fn from_layers(kind: Kind, layers: Vec<Layer>) -> Result<Self> {
        let expected_layers = match kind {
            Kind::Linear => 1,
            Kind::Fcn => 2,
        };
        if layers.len() != expected_layers {
            return Err(Error::InvalidModel(format!(
                "{kind} classifier needs {expected_layers} layer(s), got {}",
                layers.len()
            )));
        }
        for (i, layer) in layers.iter().enumerate() {
            if layer.b.len() != layer.w.nrows() {
                return Err(Error::InvalidModel(format!(
                    "layer {i}: bias length {} does not match {} output rows",
                    layer.b.len(),
                    layer.w.nrows()
                )));
            }
            if layer.w.iter().chain(layer.b.iter()).any(|v| !v.is_finite()) {
                return Err(Error::InvalidModel(format!(
                    "layer {i} contains non-finite parameters"
                )));
            }
        }
        for pair in layers.windows(2) {
            if pair[1].w.ncols() != pair[0].w.nrows() {
                return Err(Error::InvalidModel(format!(
                    "layer shapes do not chain: {} outputs feed {} inputs",
                    pair[0].w.nrows(),
                    pair[1].w.ncols()
                )));
            }
        }
        let k = layers.last().expect("at least one layer").w.nrows();
        if k < 2 {
            return Err(Error::InvalidModel(format!(
                "classifier must have at least 2 classes, got {k}"
            )));
        }
        if layers[0].w.ncols() == 0 {
            return Err(Error::InvalidModel("input dimension must be positive".into()));
        }
        Ok(Self { kind, layers })
    }

    pub fn kind(&self) -> Kind {
        self.kind
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].w.ncols()
    }

    pub fn num_classes(&self) -> usize {
        self.layers.last().expect("at least one layer").w.nrows()
    }

    /// Width of the hidden layer, for kinds that have one.
    pub fn hidden_width(&self) -> Option<usize> {
        match self.kind {
            Kind::Linear => None,
            Kind::Fcn => Some(self.layers[0].w.nrows()),
        }
    }

    pub(crate) fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub(crate) fn layers_mut(&mut self) -> &mut [Layer] {
        &mut self.layers
    }

    fn check_dim(&self, d: usize) -> Result<()> {
        if d != self.input_dim() {
            return Err(Error::ShapeMismatch(format!(
                "classifier expects {} features, got {d}",
                self.input_dim()
            )));
        }
        Ok(())
    }

    /// Class logits for a batch of rows.
    pub(crate) fn logits(&self, xs: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        self.check_dim(xs.ncols())?;
        let mut a = xs.dot(&self.layers[0].w.t()) + &self.layers[0].b;
        for layer in &self.layers[1..] {
            a.mapv_inplace(|v| v.max(0.0));
            a = a.dot(&layer.w.t()) + &layer.b;
        }
        Ok(a)
    }

    /// Softmax class probabilities for one feature vector, computed with the
    /// log-sum-exp stabilization so huge logits cannot overflow.
    pub fn scores(&self, x: ArrayView1<'_, f64>) -> Result<Array1<f64>> {
        let batch = self.scores_batch(x.insert_axis(Axis(0)))?;
        Ok(batch.index_axis_move(Axis(0), 0))
    }

    /// Row-wise softmax probabilities for a batch.
    pub fn scores_batch(&self, xs: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        let mut logits = self.logits(xs)?;
        for mut row in logits.rows_mut() {
            softmax_in_place(&mut row);
        }
        Ok(logits)
    }

    /// Predicted class for one feature vector: argmax of the scores, ties
    /// broken toward the lowest index.
    pub fn predict(&self, x: ArrayView1<'_, f64>) -> Result<usize> {
        let logits = self.logits(x.insert_axis(Axis(0)))?;
        Ok(argmax_tie_low(logits.row(0)))
    }

    /// Predicted classes for a batch of rows.
    pub fn predict_batch(&self, xs: ArrayView2<'_, f64>) -> Result<Vec<usize>> {
        let logits = self.logits(xs)?;
        Ok(logits.rows().into_iter().map(argmax_tie_low).collect())
    }
}

/// Softmax is monotone, so the argmax of logits has the same winner and the
/// same ties as the argmax of scores.
pub(crate) fn argmax_tie_low(row: ArrayView1<'_, f64>) -> usize {
    let mut best = 0;
    let mut best_v = row[0];
    for (i, &v) in row.iter().enumerate().skip(1) {
        if v > best_v {
            best = i;
            best_v = v;
        }
    }
    best
}

fn softmax_in_place(row: &mut ndarray::ArrayViewMut1<'_, f64>) {
    let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for v in row.iter_mut() {
        *v = (*v - max).exp();
        sum += *v;
    }
    for v in row.iter_mut() {
        *v /= sum;
    }
}

/// Fraction of rows of `ds` the classifier gets wrong: the plug-in estimate
/// of the 0-1 risk.
pub fn empirical_risk(h: &Classifier, ds: &LabeledDataset) -> Result<f64> {
    let predictions = h.predict_batch(ds.features())?;
    let wrong = predictions
        .iter()
        .zip(ds.labels())
        .filter(|(p, y)| p != y)
        .count();
    Ok(wrong as f64 / ds.n() as f64)
}

/// Fraction of rows where two classifiers predict different classes.
pub fn disagreement(
    h: &Classifier,
    g: &Classifier,
    xs: ArrayView2<'_, f64>,
) -> Result<f64> {
    if xs.nrows() == 0 {
        return Err(Error::InvalidDataset(
            "disagreement needs at least one row".into(),
        ));
    }
    let ph = h.predict_batch(xs)?;
    let pg = g.predict_batch(xs)?;
    let differ = ph.iter().zip(&pg).filter(|(a, b)| a != b).count();
    Ok(differ as f64 / xs.nrows() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    /// Hand-built linear model: logits = w·x + b.
    fn linear(w: Array2<f64>, b: Array1<f64>) -> Classifier {
        Classifier::from_layers(Kind::Linear, vec![Layer { w, b }]).unwrap()
    }

    #[test]
    fn scores_are_a_probability_vector() {
        let h = linear(array![[1.0, -2.0], [0.5, 0.25], [0.0, 3.0]], array![0.1, -0.2, 0.0]);
        let s = h.scores(array![0.3, -1.7].view()).unwrap();
        assert_eq!(s.len(), 3);
        assert!(s.iter().all(|&p| (0.0..=1.0).contains(&p)));
        assert!((s.sum() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn softmax_matches_closed_forms() {
        // identity on logits: w = I, b = 0
        let h = linear(array![[1.0, 0.0], [0.0, 1.0]], array![0.0, 0.0]);
        let s = h.scores(array![0.0, 0.0].view()).unwrap();
        assert!((s[0] - 0.5).abs() < 1e-15);
        assert!((s[1] - 0.5).abs() < 1e-15);

        let s = h.scores(array![2.0f64.ln(), 0.0].view()).unwrap();
        assert!((s[0] - 2.0 / 3.0).abs() < 1e-12, "{}", s[0]);
        assert!((s[1] - 1.0 / 3.0).abs() < 1e-12, "{}", s[1]);

        // huge logits must not overflow
        let s = h.scores(array![1000.0, 0.0].view()).unwrap();
        assert!(s.iter().all(|p| p.is_finite()));
        assert!((s[0] - 1.0).abs() < 1e-9);
        assert!(s[1] < 1e-9);
    }

    #[test]
    fn predict_breaks_ties_toward_lowest_index() {
        let h = linear(array![[1.0, 0.0], [0.0, 1.0], [0.5, 0.5]], array![0.0, 0.0, 0.0]);
        assert_eq!(h.predict(array![0.0, 1.0].view()).unwrap(), 1);
        // logits (1, 1, 1): three-way tie
        assert_eq!(h.predict(array![1.0, 1.0].view()).unwrap(), 0);

        let zero = linear(Array2::zeros((2, 3)), Array1::zeros(2));
        assert_eq!(zero.predict(array![4.0, -7.0, 0.1].view()).unwrap(), 0);
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let h = linear(array![[1.0, 0.0], [0.0, 1.0]], array![0.0, 0.0]);
        assert!(h.predict(array![1.0].view()).is_err());
        assert!(h.scores(array![1.0, 2.0, 3.0].view()).is_err());
    }

    #[test]
    fn risk_counts_misclassified_rows() {
        let ds = LabeledDataset::new(
            array![
                [1.0, 0.0],
                [2.0, 0.0],
                [-1.0, 0.0],
                [-2.0, 0.0],
                [3.0, 0.0],
                [-3.0, 0.0],
                [4.0, 0.0],
                [-4.0, 0.0],
                [5.0, 0.0],
                [-5.0, 0.0]
            ],
            vec![1, 1, 0, 0, 1, 0, 1, 0, 0, 0],
            2,
            "risk",
        )
        .unwrap();
        // sign classifier (class 1 iff x0 > 0) disagrees with the labels only
        // on row 8 (x0 = 5 labeled 0)
        let h = linear(array![[0.0, 0.0], [1.0, 0.0]], array![0.0, 0.0]);
        let r = empirical_risk(&h, &ds).unwrap();
        assert!((r - 0.1).abs() < 1e-15);

        // perfect predictor
        let labels: Vec<usize> = ds
            .features()
            .outer_iter()
            .map(|row| usize::from(row[0] >= 0.0))
            .collect();
        let perfect =
            LabeledDataset::new(ds.features().to_owned(), labels.clone(), 2, "p").unwrap();
        assert_eq!(empirical_risk(&h, &perfect).unwrap(), 0.0);

        // flip every label of the binary problem
        let flipped: Vec<usize> = labels.iter().map(|&l| 1 - l).collect();
        let worst = LabeledDataset::new(ds.features().to_owned(), flipped, 2, "w").unwrap();
        assert_eq!(empirical_risk(&h, &worst).unwrap(), 1.0);
    }

    #[test]
    fn three_of_ten_wrong_gives_point_three() {
        let features = Array2::from_shape_fn((10, 1), |(i, _)| i as f64 - 4.5);
        // sign rule gets rows 0..5 as class 0; flip three labels
        let mut labels: Vec<usize> = features
            .outer_iter()
            .map(|r| usize::from(r[0] >= 0.0))
            .collect();
        labels[0] = 1 - labels[0];
        labels[3] = 1 - labels[3];
        labels[7] = 1 - labels[7];
        let ds = LabeledDataset::new(features, labels, 2, "three").unwrap();
        let h = linear(array![[0.0], [1.0]], array![0.0, 0.0]);
        assert!((empirical_risk(&h, &ds).unwrap() - 0.3).abs() < 1e-15);
    }

    #[test]
    fn disagreement_identity_complement_symmetry() {
        let xs = Array2::from_shape_fn((40, 2), |(i, j)| ((i * 7 + j * 3) % 11) as f64 - 5.0);
        let h = linear(array![[1.0, 0.5], [-0.25, 2.0]], array![0.0, 0.1]);
        // complement of a binary classifier: swap the two logit rows
        let g = linear(array![[-0.25, 2.0], [1.0, 0.5]], array![0.1, 0.0]);

        assert_eq!(disagreement(&h, &h, xs.view()).unwrap(), 0.0);
        let d_hg = disagreement(&h, &g, xs.view()).unwrap();
        let d_gh = disagreement(&g, &h, xs.view()).unwrap();
        assert_eq!(d_hg, d_gh);
        // ties go to class 0 for both, everything else swaps, so rows with
        // distinct logits always disagree
        assert!(d_hg > 0.9, "complement disagreement {d_hg}");
    }

    #[test]
    fn disagreement_obeys_the_triangle_inequality() {
        let xs = Array2::from_shape_fn((60, 2), |(i, j)| ((i * 5 + j * 13) % 17) as f64 - 8.0);
        let models: Vec<Classifier> = (0..4)
            .map(|s| {
                let v = s as f64;
                linear(
                    array![[1.0 - v, 0.3 * v], [v - 2.0, 1.0 + v]],
                    array![0.1 * v, -0.2],
                )
            })
            .collect();
        for a in &models {
            for b in &models {
                for c in &models {
                    let ab = disagreement(a, b, xs.view()).unwrap();
                    let bc = disagreement(b, c, xs.view()).unwrap();
                    let ac = disagreement(a, c, xs.view()).unwrap();
                    assert!(ac <= ab + bc + 1e-15);
                }
            }
        }
    }

    #[test]
    fn kind_round_trips_through_strings() {
        assert_eq!("linear".parse::<Kind>().unwrap(), Kind::Linear);
        assert_eq!("fcn".parse::<Kind>().unwrap(), Kind::Fcn);
        assert!("mlp".parse::<Kind>().is_err());
        assert_eq!(Kind::Fcn.to_string(), "fcn");
    }

    #[test]
    fn from_layers_rejects_malformed_models() {
        // bias length mismatch
        assert!(Classifier::from_layers(
            Kind::Linear,
            vec![Layer {
                w: array![[1.0, 0.0], [0.0, 1.0]],
                b: array![0.0],
            }]
        )
        .is_err());
        // single class
        assert!(Classifier::from_layers(
            Kind::Linear,
            vec![Layer {
                w: array![[1.0, 0.0]],
                b: array![0.0],
            }]
        )
        .is_err());
        // non-finite parameter
        assert!(Classifier::from_layers(
            Kind::Linear,
            vec![Layer {
                w: array![[f64::NAN, 0.0], [0.0, 1.0]],
                b: array![0.0, 0.0],
            }]
        )
        .is_err());
        // wrong layer count for the kind
        assert!(Classifier::from_layers(
            Kind::Fcn,
            vec![Layer {
                w: array![[1.0, 0.0], [0.0, 1.0]],
                b: array![0.0, 0.0],
            }]
        )
        .is_err());
        // layers that do not chain
        assert!(Classifier::from_layers(
            Kind::Fcn,
            vec![
                Layer {
                    w: Array2::zeros((3, 2)),
                    b: Array1::zeros(3),
                },
                Layer {
                    w: Array2::zeros((2, 4)),
                    b: Array1::zeros(2),
                },
            ]
        )
        .is_err());
    }
}
