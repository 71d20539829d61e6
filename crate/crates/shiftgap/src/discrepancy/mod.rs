//! Classifier-aware divergence between two samples.
//!
//! The quantities here all measure how a distribution shift interacts with a
//! fixed classifier `h` instead of looking at raw features alone:
//!
//! * [`error_gap`] is the absolute difference between `h`'s empirical risk on
//!   the source sample and on the target sample.
//! * [`hdiscrepancy`] is the largest gap an adversary classifier `g` can open
//!   between disagreeing with `h` on one sample versus the other, found by
//!   training `g` on proxy labels; [`hdiscrepancy_exact`] is the same maximum
//!   taken exactly over an explicit finite hypothesis list.
//! * [`adaptability`] asks whether any single classifier fits both labeled
//!   samples at once, as the sum of its two risks; [`adaptability_exact`] is
//!   the exact minimum over a finite list.
//! * [`certify_bound`] combines the exact forms into a deterministic sandwich
//!   certificate: the error gap never exceeds adaptability plus discrepancy.

use ndarray::{Axis, ArrayView1, ArrayView2};

use crate::classifier::{disagreement, empirical_risk, train, Classifier, Kind, TrainConfig};
use crate::dataset::{self, LabeledDataset};
use crate::error::{Error, Result};

/// Anything that assigns a class index to a feature row.
///
/// Exact oracles take heterogeneous lists of these, so hand-built rules and
/// trained [`Classifier`]s can sit in one hypothesis list.
pub trait Hypothesis {
    /// Predicted class for one feature row.
    fn predict_row(&self, x: ArrayView1<'_, f64>) -> Result<usize>;

    /// Predicted classes for a batch of rows.
    ///
    /// Implementations backed by a batch evaluator should override this so
    /// that oracle counts match their batch path bit for bit.
    fn predict_rows(&self, xs: ArrayView2<'_, f64>) -> Result<Vec<usize>> {
        xs.rows().into_iter().map(|r| self.predict_row(r)).collect()
    }
}

impl Hypothesis for Classifier {
    fn predict_row(&self, x: ArrayView1<'_, f64>) -> Result<usize> {
        self.predict(x)
    }

    fn predict_rows(&self, xs: ArrayView2<'_, f64>) -> Result<Vec<usize>> {
        self.predict_batch(xs)
    }
}

/// Binary decision stump: class `above` where `x[coord] >= cut`, the other
/// class elsewhere.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdRule {
    coord: usize,
    cut: f64,
    above: usize,
}

impl ThresholdRule {
    pub fn new(coord: usize, cut: f64, above: usize) -> Result<Self> {
        if above > 1 {
            return Err(Error::InvalidConfig(format!(
                "threshold rules are binary, class {above} is out of range"
            )));
        }
        if !cut.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "threshold cut must be finite, got {cut}"
            )));
        }
        Ok(Self { coord, cut, above })
    }

    pub fn coord(&self) -> usize {
        self.coord
    }

    pub fn cut(&self) -> f64 {
        self.cut
    }

    pub fn above(&self) -> usize {
        self.above
    }
}

impl Hypothesis for ThresholdRule {
    fn predict_row(&self, x: ArrayView1<'_, f64>) -> Result<usize> {
        let Some(&v) = x.get(self.coord) else {
            return Err(Error::ShapeMismatch(format!(
                "threshold on coordinate {} but the row has {} features",
                self.coord,
                x.len()
            )));
        };
        Ok(if v >= self.cut { self.above } else { 1 - self.above })
    }
}

/// Every decision stump the sample can distinguish: for each coordinate, one
/// cut per sorted unique value, in both polarities.
///
/// The lowest cut on each coordinate yields the two constant classifiers, so
/// the family always contains them.
pub fn threshold_family(xs: ArrayView2<'_, f64>) -> Result<Vec<ThresholdRule>> {
    if xs.nrows() == 0 || xs.ncols() == 0 {
        return Err(Error::InvalidDataset(
            "threshold family needs at least one row and one column".into(),
        ));
    }
    let mut rules = Vec::new();
    for j in 0..xs.ncols() {
        let mut cuts: Vec<f64> = xs.column(j).iter().copied().collect();
        if let Some(&bad) = cuts.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidDataset(format!(
                "non-finite value {bad} in column {j}"
            )));
        }
        cuts.sort_unstable_by(f64::total_cmp);
        cuts.dedup();
        for cut in cuts {
            rules.push(ThresholdRule::new(j, cut, 0)?);
            rules.push(ThresholdRule::new(j, cut, 1)?);
        }
    }
    Ok(rules)
}

/// Outcome of the trained adversary search in both directions.
#[derive(Debug, Clone)]
pub struct DiscrepancyResult {
    /// `max(forward, backward)`, the reported discrepancy.
    pub value: f64,
    /// Gap when the adversary agrees on the source and disagrees on the target.
    pub forward: f64,
    /// Gap with the roles of the samples swapped.
    pub backward: f64,
    pub g_forward: Classifier,
    pub g_backward: Classifier,
}

/// Deterministic sandwich certificate from the exact finite-list oracles.
///
/// `slack = (adaptability + discrepancy) - error_gap` is guaranteed above
/// `-1e-12`: the chain holds exactly in rational arithmetic, and only the
/// final roundings can push it below zero.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct BoundCertificate {
    pub error_gap: f64,
    pub adaptability: f64,
    pub discrepancy: f64,
    pub slack: f64,
}

fn check_same_shape(s: &LabeledDataset, t: &LabeledDataset) -> Result<()> {
    if s.dim() != t.dim() {
        return Err(Error::ShapeMismatch(format!(
            "samples have {} and {} features",
            s.dim(),
            t.dim()
        )));
    }
    if s.num_classes() != t.num_classes() {
        return Err(Error::ShapeMismatch(format!(
            "samples have {} and {} classes",
            s.num_classes(),
            t.num_classes()
        )));
    }
    Ok(())
}

fn check_model_fits(h: &Classifier, s: &LabeledDataset) -> Result<()> {
    if h.input_dim() != s.dim() || h.num_classes() != s.num_classes() {
        return Err(Error::ShapeMismatch(format!(
            "classifier is {}x{} but the sample is {}x{}",
            h.input_dim(),
            h.num_classes(),
            s.dim(),
            s.num_classes()
        )));
    }
    Ok(())
}

/// Absolute difference of the classifier's empirical risks on the two
/// samples.
pub fn error_gap(h: &Classifier, s: &LabeledDataset, t: &LabeledDataset) -> Result<f64> {
    check_same_shape(s, t)?;
    check_model_fits(h, s)?;
    Ok((empirical_risk(h, s)? - empirical_risk(h, t)?).abs())
}

/// For each row, the class with the second-highest score; ties resolve to
/// the lowest index, consistent with prediction.
///
/// The result never equals the prediction on any row, so it is the natural
/// "disagree with `h` as plausibly as possible" proxy label.
pub fn next_best_labels(h: &Classifier, xs: ArrayView2<'_, f64>) -> Result<Vec<usize>> {
    let logits = h.logits(xs)?;
    Ok(logits.rows().into_iter().map(second_argmax).collect())
}

/// Runner-up index under the ranking (value descending, index ascending).
/// Softmax is monotone, so ranking logits and ranking scores agree.
fn second_argmax(row: ArrayView1<'_, f64>) -> usize {
    let mut best = 0usize;
    let mut second: Option<usize> = None;
    for i in 1..row.len() {
        if row[i] > row[best] {
            second = Some(best);
            best = i;
        } else if second.map_or(true, |s| row[i] > row[s]) {
            second = Some(i);
        }
    }
    second.expect("a classifier always has at least two classes")
}

/// Trained estimate of the discrepancy between two unlabeled samples as seen
/// by `h`.
///
/// One direction builds a proxy-labeled training set that rewards agreeing
/// with `h` on the first sample and picking `h`'s next-best label on the
/// second, trains a fresh adversary `g` of the given `kind` on it, and scores
/// `|disagreement(h, g, first) - disagreement(h, g, second)|`. The other
/// direction swaps the samples. Both directions train from the same
/// `cfg.seed`, which makes the reported `value` symmetric in the two samples:
/// swapping them swaps `forward` and `backward` bit for bit.
///
/// The two directions are independent and run in parallel.
pub fn hdiscrepancy(
    h: &Classifier,
    sx: ArrayView2<'_, f64>,
    tx: ArrayView2<'_, f64>,
    kind: Kind,
    cfg: &TrainConfig,
) -> Result<DiscrepancyResult> {
    if sx.nrows() == 0 || tx.nrows() == 0 {
        return Err(Error::InvalidDataset(
            "discrepancy needs two non-empty samples".into(),
        ));
    }
    if sx.ncols() != h.input_dim() || tx.ncols() != h.input_dim() {
        return Err(Error::ShapeMismatch(format!(
            "classifier expects {} features, samples have {} and {}",
            h.input_dim(),
            sx.ncols(),
            tx.ncols()
        )));
    }
    let (fwd, bwd) = rayon::join(
        || adversary_direction(h, sx, tx, kind, cfg),
        || adversary_direction(h, tx, sx, kind, cfg),
    );
    let (forward, g_forward) = fwd?;
    let (backward, g_backward) = bwd?;
    Ok(DiscrepancyResult {
        value: forward.max(backward),
        forward,
        backward,
        g_forward,
        g_backward,
    })
}

/// Train one adversary: agree with `h` on `agree_x`, disagree via next-best
/// labels on `disagree_x`, then measure the disagreement gap it opens.
fn adversary_direction(
    h: &Classifier,
    agree_x: ArrayView2<'_, f64>,
    disagree_x: ArrayView2<'_, f64>,
    kind: Kind,
    cfg: &TrainConfig,
) -> Result<(f64, Classifier)> {
    let agree_labels = h.predict_batch(agree_x)?;
    let disagree_labels = next_best_labels(h, disagree_x)?;
    let features = ndarray::concatenate(Axis(0), &[agree_x.view(), disagree_x.view()])
        .map_err(|e| Error::ShapeMismatch(e.to_string()))?;
    let labels = agree_labels.into_iter().chain(disagree_labels).collect();
    let proxy = LabeledDataset::new(features, labels, h.num_classes(), "adversary")?;
    let g = train(&proxy, kind, cfg)?;
    let gap = (disagreement(h, &g, agree_x)? - disagreement(h, &g, disagree_x)?).abs();
    Ok((gap, g))
}

/// Exact maximum over the hypothesis list of the disagreement gap with `h`
/// between the two samples.
///
/// Swapping the samples only flips the sign inside the absolute value, so a
/// single pass over the list covers both directions.
pub fn hdiscrepancy_exact(
    h: &Classifier,
    sx: ArrayView2<'_, f64>,
    tx: ArrayView2<'_, f64>,
    hypotheses: &[&dyn Hypothesis],
) -> Result<f64> {
    if hypotheses.is_empty() {
        return Err(Error::InvalidConfig("empty hypothesis list".into()));
    }
    if sx.nrows() == 0 || tx.nrows() == 0 {
        return Err(Error::InvalidDataset(
            "discrepancy needs two non-empty samples".into(),
        ));
    }
    let hp_s = h.predict_batch(sx)?;
    let hp_t = h.predict_batch(tx)?;
    let mut best = 0.0f64;
    for g in hypotheses {
        let on_s = mismatch_rate(*g, sx, &hp_s)?;
        let on_t = mismatch_rate(*g, tx, &hp_t)?;
        best = best.max((on_s - on_t).abs());
    }
    Ok(best)
}

/// Fraction of rows where the hypothesis differs from the reference labels.
fn mismatch_rate(
    g: &dyn Hypothesis,
    xs: ArrayView2<'_, f64>,
    reference: &[usize],
) -> Result<f64> {
    let predicted = g.predict_rows(xs)?;
    let differ = predicted
        .iter()
        .zip(reference)
        .filter(|(p, r)| p != r)
        .count();
    Ok(differ as f64 / xs.nrows() as f64)
}

/// Trained upper estimate of the adaptability of a pair of labeled samples:
/// the summed risks of one classifier fit to their concatenation.
///
/// Any single trained classifier upper-bounds the minimum over its class, so
/// reports should label this `adaptability_upper`.
pub fn adaptability(
    s: &LabeledDataset,
    t: &LabeledDataset,
    kind: Kind,
    cfg: &TrainConfig,
) -> Result<f64> {
    check_same_shape(s, t)?;
    let pooled = dataset::vstack(
        &[s, t],
        s.num_classes(),
        format!("pooled({}+{})", s.domain_tag(), t.domain_tag()),
    )?;
    let h = train(&pooled, kind, cfg)?;
    Ok(empirical_risk(&h, s)? + empirical_risk(&h, t)?)
}

/// Exact minimum over the hypothesis list of the summed risks on the two
/// labeled samples.
pub fn adaptability_exact(
    s: &LabeledDataset,
    t: &LabeledDataset,
    hypotheses: &[&dyn Hypothesis],
) -> Result<f64> {
    if hypotheses.is_empty() {
        return Err(Error::InvalidConfig("empty hypothesis list".into()));
    }
    check_same_shape(s, t)?;
    let mut best = f64::INFINITY;
    for g in hypotheses {
        let summed = mismatch_rate(*g, s.features(), s.labels())?
            + mismatch_rate(*g, t.features(), t.labels())?;
        best = best.min(summed);
    }
    Ok(best)
}

/// Exact sandwich certificate over a finite hypothesis list.
///
/// `h` is appended to the list, so the adaptability minimum and the
/// discrepancy maximum both see it. The chain
/// `error_gap <= adaptability + discrepancy` holds exactly in rational
/// arithmetic for every list member, hence for the optimizers; the computed
/// `slack` can only dip below zero by final rounding, never below `-1e-12`.
pub fn certify_bound(
    h: &Classifier,
    s: &LabeledDataset,
    t: &LabeledDataset,
    hypotheses: &[&dyn Hypothesis],
) -> Result<BoundCertificate> {
    if hypotheses.is_empty() {
        return Err(Error::InvalidConfig("empty hypothesis list".into()));
    }
    let gap = error_gap(h, s, t)?;
    let mut all: Vec<&dyn Hypothesis> = hypotheses.to_vec();
    all.push(h);
    let lambda = adaptability_exact(s, t, &all)?;
    let disc = hdiscrepancy_exact(h, s.features(), t.features(), &all)?;
    let slack = (lambda + disc) - gap;
    debug_assert!(slack >= -1e-12, "sandwich violated: slack {slack}");
    Ok(BoundCertificate {
        error_gap: gap,
        adaptability: lambda,
        discrepancy: disc,
        slack,
    })
}
