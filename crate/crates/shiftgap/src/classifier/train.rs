//! Seeded mini-batch SGD with momentum for the negative log-likelihood.
//!
//! The schedule is two constant-rate phases with one early-stop rule: after
//! every epoch the 0-1 error on the full training set is measured, and
//! training stops as soon as it drops below `early_stop_error`. All
//! randomness (initialization, per-epoch batch order) comes from one ChaCha8
//! stream, so a (dataset, kind, config) triple always yields bitwise
//! identical weights.

use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand::Rng;

use crate::dataset::LabeledDataset;
use crate::error::{Error, Result};
use crate::rng::rng_from;

use super::{argmax_tie_low, Classifier, Kind, Layer, TrainConfig};

/// Hidden width of freshly trained `fcn` classifiers.
pub const DEFAULT_HIDDEN_WIDTH: usize = 256;

/// Builds the SGD starting point: every layer's weights and biases drawn
/// uniformly from [-1/sqrt(fan_in), +1/sqrt(fan_in)).
///
/// `hidden_width` only applies to [`Kind::Fcn`]. The draw order (per layer:
/// weights row-major, then biases) is fixed, so a seed pins the exact model.
pub fn init_model(
    kind: Kind,
    input_dim: usize,
    num_classes: usize,
    hidden_width: usize,
    seed: u64,
) -> Result<Classifier> {
    if input_dim == 0 {
        return Err(Error::InvalidConfig("input_dim must be positive".into()));
    }
    if num_classes < 2 {
        return Err(Error::InvalidConfig(format!(
            "num_classes must be at least 2, got {num_classes}"
        )));
    }
    let mut rng = rng_from(seed);
    let layers = match kind {
        Kind::Linear => vec![init_layer(&mut rng, num_classes, input_dim)],
        Kind::Fcn => {
            if hidden_width == 0 {
                return Err(Error::InvalidConfig("hidden_width must be positive".into()));
            }
            vec![
                init_layer(&mut rng, hidden_width, input_dim),
                init_layer(&mut rng, num_classes, hidden_width),
            ]
        }
    };
    Classifier::from_layers(kind, layers)
}

fn init_layer(rng: &mut impl Rng, out_dim: usize, in_dim: usize) -> Layer {
    let bound = 1.0 / (in_dim as f64).sqrt();
    let wv: Vec<f64> = (0..out_dim * in_dim)
        .map(|_| rng.gen_range(-bound..bound))
        .collect();
    let bv: Vec<f64> = (0..out_dim).map(|_| rng.gen_range(-bound..bound)).collect();
    Layer {
        w: Array2::from_shape_vec((out_dim, in_dim), wv).expect("length matches shape"),
        b: Array1::from_vec(bv),
    }
}

/// Trains a fresh classifier of the given kind on `ds`.
///
/// Batches larger than the dataset are clamped to one full-batch step per
/// epoch; the final short batch of an epoch is kept, not dropped.
pub fn train(ds: &LabeledDataset, kind: Kind, cfg: &TrainConfig) -> Result<Classifier> {
    cfg.validate()?;
    let mut rng = rng_from(cfg.seed);
    let mut model = {
        // keep the init draws on the same stream as the batch order
        let init_seed = rng.gen::<u64>();
        init_model(kind, ds.dim(), ds.num_classes(), DEFAULT_HIDDEN_WIDTH, init_seed)?
    };

    let n = ds.n();
    let batch = cfg.batch_size.min(n);
    let mut velocity: Vec<Layer> = model
        .layers()
        .iter()
        .map(|l| Layer {
            w: Array2::zeros(l.w.dim()),
            b: Array1::zeros(l.b.len()),
        })
        .collect();
    let mut order: Vec<usize> = (0..n).collect();

    for (phase_no, phase) in [cfg.phase1, cfg.phase2].into_iter().enumerate() {
        for epoch in 0..phase.epochs {
            order.shuffle(&mut rng);
            for (batch_no, chunk) in order.chunks(batch).enumerate() {
                let xs = ds.features().select(Axis(0), chunk);
                let ys: Vec<usize> = chunk.iter().map(|&i| ds.labels()[i]).collect();
                let (loss, grads) = loss_and_gradients(&model, xs.view(), &ys)?;
                if !loss.is_finite() {
                    return Err(Error::Numeric(format!(
                        "non-finite loss {loss} at phase {}, epoch {}, batch {}",
                        phase_no + 1,
                        epoch + 1,
                        batch_no + 1
                    )));
                }
                for ((layer, v), g) in
                    model.layers_mut().iter_mut().zip(&mut velocity).zip(&grads)
                {
                    v.w.zip_mut_with(&g.w, |v, &g| *v = cfg.momentum * *v + g);
                    v.b.zip_mut_with(&g.b, |v, &g| *v = cfg.momentum * *v + g);
                    layer.w.scaled_add(-phase.learning_rate, &v.w);
                    layer.b.scaled_add(-phase.learning_rate, &v.b);
                }
            }
            if training_error(&model, ds)? < cfg.early_stop_error {
                return Ok(model);
            }
        }
    }
    Ok(model)
}

fn training_error(model: &Classifier, ds: &LabeledDataset) -> Result<f64> {
    let logits = model.logits(ds.features())?;
    let wrong = logits
        .rows()
        .into_iter()
        .zip(ds.labels())
        .filter(|(row, &y)| argmax_tie_low(*row) != y)
        .count();
    Ok(wrong as f64 / ds.n() as f64)
}

/// Mean negative log-likelihood of `ys` under the model's scores.
pub fn nll_loss(model: &Classifier, xs: ArrayView2<'_, f64>, ys: &[usize]) -> Result<f64> {
    let (loss, _) = loss_and_gradients(model, xs, ys)?;
    Ok(loss)
}

/// Gradient of [`nll_loss`] with respect to the flat parameter vector
/// ([`Classifier::params`] order).
pub fn nll_gradient(
    model: &Classifier,
    xs: ArrayView2<'_, f64>,
    ys: &[usize],
) -> Result<Vec<f64>> {
    let (_, grads) = loss_and_gradients(model, xs, ys)?;
    let mut flat = Vec::new();
    for g in &grads {
        flat.extend(g.w.iter().copied());
        flat.extend(g.b.iter().copied());
    }
    Ok(flat)
}

/// Forward and backward pass in one sweep. Gradients have the same shapes as
/// the model's layers.
fn loss_and_gradients(
    model: &Classifier,
    xs: ArrayView2<'_, f64>,
    ys: &[usize],
) -> Result<(f64, Vec<Layer>)> {
    let n = xs.nrows();
    if n == 0 {
        return Err(Error::InvalidDataset("empty batch".into()));
    }
    if ys.len() != n {
        return Err(Error::ShapeMismatch(format!(
            "{n} rows but {} labels",
            ys.len()
        )));
    }
    let k = model.num_classes();
    if let Some(&bad) = ys.iter().find(|&&y| y >= k) {
        return Err(Error::InvalidDataset(format!(
            "label {bad} out of range for {k} classes"
        )));
    }
    if xs.ncols() != model.input_dim() {
        return Err(Error::ShapeMismatch(format!(
            "classifier expects {} features, got {}",
            model.input_dim(),
            xs.ncols()
        )));
    }

    let layers = model.layers();
    // inputs[i] is what layer i consumed; pre[i] its affine output
    let mut inputs: Vec<Array2<f64>> = Vec::with_capacity(layers.len());
    let mut current = xs.to_owned();
    let mut pre: Vec<Array2<f64>> = Vec::with_capacity(layers.len());
    for (i, layer) in layers.iter().enumerate() {
        inputs.push(current.clone());
        let z = current.dot(&layer.w.t()) + &layer.b;
        pre.push(z.clone());
        current = z;
        if i + 1 < layers.len() {
            current.mapv_inplace(|v| v.max(0.0));
        }
    }
    let logits = current;

    let inv_n = 1.0 / n as f64;
    let mut loss = 0.0;
    let mut delta = Array2::zeros((n, k));
    for (i, (row, &y)) in logits.rows().into_iter().zip(ys).enumerate() {
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let sum_exp: f64 = row.iter().map(|&v| (v - max).exp()).sum();
        let lse = max + sum_exp.ln();
        loss += (lse - row[y]) * inv_n;
        for (j, &v) in row.iter().enumerate() {
            let p = (v - max).exp() / sum_exp;
            let target = if j == y { 1.0 } else { 0.0 };
            delta[[i, j]] = (p - target) * inv_n;
        }
    }

    let mut grads: Vec<Layer> = Vec::with_capacity(layers.len());
    let mut upstream = delta;
    for (i, layer) in layers.iter().enumerate().rev() {
        let gw = upstream.t().dot(&inputs[i]);
        let gb = upstream.sum_axis(Axis(0));
        if i > 0 {
            let mut back = upstream.dot(&layer.w);
            back.zip_mut_with(&pre[i - 1], |d, &z| {
                if z <= 0.0 {
                    *d = 0.0;
                }
            });
            upstream = back;
        }
        grads.push(Layer { w: gw, b: gb });
    }
    grads.reverse();
    Ok((loss, grads))
}

impl Classifier {
    /// Flat view of all parameters: layers in order, each layer's weights
    /// row-major followed by its biases. Matches [`nll_gradient`].
    pub fn params(&self) -> Vec<f64> {
        let mut flat = Vec::new();
        for l in self.layers() {
            flat.extend(l.w.iter().copied());
            flat.extend(l.b.iter().copied());
        }
        flat
    }

    /// A copy of this classifier with its parameters replaced from a flat
    /// vector in [`Classifier::params`] order.
    pub fn with_params(&self, params: &[f64]) -> Result<Classifier> {
        let expected: usize = self
            .layers()
            .iter()
            .map(|l| l.w.len() + l.b.len())
            .sum();
        if params.len() != expected {
            return Err(Error::ShapeMismatch(format!(
                "expected {expected} parameters, got {}",
                params.len()
            )));
        }
        let mut clone = self.clone();
        let mut offset = 0;
        for layer in clone.layers_mut() {
            for w in layer.w.iter_mut() {
                *w = params[offset];
                offset += 1;
            }
            for b in layer.b.iter_mut() {
                *b = params[offset];
                offset += 1;
            }
        }
        Classifier::from_layers(clone.kind, clone.layers)
    }
}
