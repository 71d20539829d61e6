//! Labeled feature-vector datasets and the seeded splits that turn them into
//! source/target experiment pairs.

mod csv;
mod synth;

pub use csv::{
    dataset_to_csv, load_dataset, load_features, parse_dataset_csv, parse_features_csv,
    save_dataset,
};
pub use synth::{synth_scenario, ScenarioKind};

use ndarray::{Array2, ArrayView2, Axis};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{rng_from, stage_seed};

/// A labeled sample: an n×d matrix of finite feature values plus one class
/// index per row.
///
/// Construction validates every invariant, and fields are immutable
/// afterwards, so holding a `LabeledDataset` is proof the data is well formed.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    features: Array2<f64>,
    labels: Vec<usize>,
    num_classes: usize,
    domain_tag: String,
}

impl LabeledDataset {
    /// Validates and wraps the parts of a dataset.
    ///
    /// Requires n ≥ 1, d ≥ 1, `num_classes` ≥ 2, every feature finite, and
    /// every label < `num_classes`.
    pub fn new(
        features: Array2<f64>,
        labels: Vec<usize>,
        num_classes: usize,
        domain_tag: impl Into<String>,
    ) -> Result<Self> {
        let (n, d) = features.dim();
        if n == 0 || d == 0 {
            return Err(Error::InvalidDataset(format!(
                "need at least one row and one feature, got {n}x{d}"
            )));
        }
        if labels.len() != n {
            return Err(Error::ShapeMismatch(format!(
                "{n} feature rows but {} labels",
                labels.len()
            )));
        }
        if num_classes < 2 {
            return Err(Error::InvalidDataset(format!(
                "num_classes must be at least 2, got {num_classes}"
            )));
        }
        for ((i, j), &v) in features.indexed_iter() {
            if !v.is_finite() {
                return Err(Error::InvalidDataset(format!(
                    "non-finite feature value {v} at row {i}, column {j}"
                )));
            }
        }
        if let Some((i, &l)) = labels
            .iter()
            .enumerate()
            .find(|(_, &l)| l >= num_classes)
        {
            return Err(Error::InvalidDataset(format!(
                "label {l} at row {i} is out of range for {num_classes} classes"
            )));
        }
        Ok(Self {
            features,
            labels,
            num_classes,
            domain_tag: domain_tag.into(),
        })
    }

    /// Number of rows.
    pub fn n(&self) -> usize {
        self.features.nrows()
    }

    /// Feature dimension.
    pub fn dim(&self) -> usize {
        self.features.ncols()
    }

    pub fn features(&self) -> ArrayView2<'_, f64> {
        self.features.view()
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn domain_tag(&self) -> &str {
        &self.domain_tag
    }

    /// Same data under a new tag.
    pub fn retagged(mut self, domain_tag: impl Into<String>) -> Self {
        self.domain_tag = domain_tag.into();
        self
    }

    fn select_rows(&self, rows: &[usize], domain_tag: String) -> Self {
        let features = self.features.select(Axis(0), rows);
        let labels = rows.iter().map(|&i| self.labels[i]).collect();
        // invariants are inherited from self, so no re-validation
        Self {
            features,
            labels,
            num_classes: self.num_classes,
            domain_tag,
        }
    }
}

/// Which experimental setup produced a [`SplitPair`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Setup {
    SingleSource,
    MultiSource,
    Synthetic,
}

/// One experiment's (source, target) pair plus the seed that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitPair {
    pub source: LabeledDataset,
    pub target: LabeledDataset,
    pub seed: u64,
    pub setup: Setup,
}

impl SplitPair {
    /// Requires source and target to share the feature dimension and label
    /// space.
    pub fn new(
        source: LabeledDataset,
        target: LabeledDataset,
        seed: u64,
        setup: Setup,
    ) -> Result<Self> {
        if source.dim() != target.dim() {
            return Err(Error::ShapeMismatch(format!(
                "source dimension {} != target dimension {}",
                source.dim(),
                target.dim()
            )));
        }
        if source.num_classes() != target.num_classes() {
            return Err(Error::ShapeMismatch(format!(
                "source has {} classes, target has {}",
                source.num_classes(),
                target.num_classes()
            )));
        }
        Ok(Self {
            source,
            target,
            seed,
            setup,
        })
    }
}

/// Shuffles `ds` with a seeded Fisher-Yates pass and splits at ⌊n/2⌋, smaller
/// half first. The halves are disjoint, their rows union to the input, and
/// the result is a pure function of (ds, seed).
pub fn split_half(ds: &LabeledDataset, seed: u64) -> Result<(LabeledDataset, LabeledDataset)> {
    if ds.n() < 2 {
        return Err(Error::InvalidDataset(format!(
            "cannot split a dataset with {} row(s)",
            ds.n()
        )));
    }
    let mut order: Vec<usize> = (0..ds.n()).collect();
    order.shuffle(&mut rng_from(seed));
    let cut = ds.n() / 2;
    let first = ds.select_rows(&order[..cut], format!("{}#a", ds.domain_tag));
    let second = ds.select_rows(&order[cut..], format!("{}#b", ds.domain_tag));
    Ok((first, second))
}

/// Builds a leave-one-domain-out pair: the target is the first half-split of
/// `domains[held_out]` and the source concatenates the first half-splits of
/// every other domain, in the order given.
///
/// Only first halves are used anywhere, so no row of the held-out domain's
/// evaluation data can leak into the source. Each domain is split under a
/// seed derived from `seed` and the domain's position, so adding a domain
/// does not change the others' splits.
pub fn make_multisource(
    domains: &[LabeledDataset],
    held_out: usize,
    seed: u64,
) -> Result<SplitPair> {
    if domains.len() < 2 {
        return Err(Error::InvalidConfig(format!(
            "multi-source needs at least 2 domains, got {}",
            domains.len()
        )));
    }
    if held_out >= domains.len() {
        return Err(Error::InvalidConfig(format!(
            "held_out index {held_out} out of range for {} domains",
            domains.len()
        )));
    }
    let d = domains[0].dim();
    let k = domains[0].num_classes();
    for ds in domains {
        if ds.dim() != d {
            return Err(Error::ShapeMismatch(format!(
                "domain {:?} has dimension {}, expected {d}",
                ds.domain_tag(),
                ds.dim()
            )));
        }
        if ds.num_classes() != k {
            return Err(Error::ShapeMismatch(format!(
                "domain {:?} has {} classes, expected {k}",
                ds.domain_tag(),
                ds.num_classes()
            )));
        }
    }

    let mut halves = Vec::with_capacity(domains.len());
    for (i, ds) in domains.iter().enumerate() {
        let (first, _) = split_half(ds, stage_seed(seed, &format!("domain:{i}")))?;
        halves.push(first);
    }

    let target = halves[held_out].clone();
    let source_parts: Vec<&LabeledDataset> = halves
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != held_out)
        .map(|(_, h)| h)
        .collect();
    let tag = format!(
        "multi({})",
        source_parts
            .iter()
            .map(|p| p.domain_tag())
            .collect::<Vec<_>>()
            .join("+")
    );
    let source = vstack(&source_parts, k, tag)?;
    SplitPair::new(source, target, seed, Setup::MultiSource)
}

pub(crate) fn vstack(
    parts: &[&LabeledDataset],
    num_classes: usize,
    tag: String,
) -> Result<LabeledDataset> {
    let views: Vec<ArrayView2<'_, f64>> = parts.iter().map(|p| p.features()).collect();
    let features = ndarray::concatenate(Axis(0), &views)
        .map_err(|e| Error::ShapeMismatch(e.to_string()))?;
    let labels = parts
        .iter()
        .flat_map(|p| p.labels().iter().copied())
        .collect();
    LabeledDataset::new(features, labels, num_classes, tag)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use std::collections::BTreeSet;

    fn toy(n: usize, tag: &str) -> LabeledDataset {
        let features =
            Array2::from_shape_fn((n, 3), |(i, j)| (i * 3 + j) as f64 * 0.5 - 1.0);
        let labels = (0..n).map(|i| i % 2).collect();
        LabeledDataset::new(features, labels, 2, tag).unwrap()
    }

    fn row_keys(ds: &LabeledDataset) -> Vec<(Vec<u64>, usize)> {
        ds.features()
            .outer_iter()
            .zip(ds.labels())
            .map(|(row, &l)| (row.iter().map(|v| v.to_bits()).collect(), l))
            .collect()
    }

    #[test]
    fn new_rejects_bad_parts() {
        let f = array![[0.0, 1.0], [2.0, 3.0]];
        assert!(LabeledDataset::new(f.clone(), vec![0, 1], 2, "t").is_ok());
        assert!(LabeledDataset::new(f.clone(), vec![0], 2, "t").is_err());
        assert!(LabeledDataset::new(f.clone(), vec![0, 2], 2, "t").is_err());
        assert!(LabeledDataset::new(f.clone(), vec![0, 1], 1, "t").is_err());
        assert!(LabeledDataset::new(Array2::zeros((0, 2)), vec![], 2, "t").is_err());
        let nan = array![[0.0, f64::NAN]];
        assert!(LabeledDataset::new(nan, vec![0], 2, "t").is_err());
        let inf = array![[0.0, f64::INFINITY]];
        assert!(LabeledDataset::new(inf, vec![0], 2, "t").is_err());
    }

    #[test]
    fn split_sizes_follow_floor_rule() {
        let (a, b) = split_half(&toy(10, "even"), 1).unwrap();
        assert_eq!((a.n(), b.n()), (5, 5));
        let (a, b) = split_half(&toy(11, "odd"), 1).unwrap();
        assert_eq!((a.n(), b.n()), (5, 6));
        assert!(split_half(&toy(1, "tiny"), 1).is_err());
    }

    #[test]
    fn split_is_deterministic_and_partitions() {
        let ds = toy(31, "p");
        for seed in [0u64, 7, 991] {
            let (a1, b1) = split_half(&ds, seed).unwrap();
            let (a2, b2) = split_half(&ds, seed).unwrap();
            assert_eq!(a1, a2);
            assert_eq!(b1, b2);

            let mut merged = row_keys(&a1);
            merged.extend(row_keys(&b1));
            merged.sort();
            let mut original = row_keys(&ds);
            original.sort();
            assert_eq!(merged, original);
        }
    }

    #[test]
    fn distinct_seeds_give_distinct_halves() {
        // rows must be unique for set comparison to be meaningful
        let features = Array2::from_shape_fn((100, 2), |(i, j)| (i * 2 + j) as f64);
        let ds = LabeledDataset::new(features, vec![0; 100], 2, "u").unwrap();
        let sets: BTreeSet<Vec<(Vec<u64>, usize)>> = (0..10)
            .map(|seed| {
                let (a, _) = split_half(&ds, seed).unwrap();
                let mut keys = row_keys(&a);
                keys.sort();
                keys
            })
            .collect();
        assert_eq!(sets.len(), 10);
    }

    #[test]
    fn multisource_holds_out_one_domain() {
        let domains: Vec<LabeledDataset> =
            (0..8).map(|i| toy(20, &format!("dom{i}"))).collect();
        let pair = make_multisource(&domains, 3, 5).unwrap();
        assert_eq!(pair.setup, Setup::MultiSource);
        // 7 domains contribute 10 rows each; the held-out half has 10
        assert_eq!(pair.source.n(), 70);
        assert_eq!(pair.target.n(), 10);
        assert_eq!(pair.target.domain_tag(), "dom3#a");
        assert!(!pair.source.domain_tag().contains("dom3"));
        assert!(pair.source.domain_tag().contains("dom4#a"));

        assert!(make_multisource(&domains, 8, 5).is_err());
        assert!(make_multisource(&domains[..1], 0, 5).is_err());
    }

    #[test]
    fn multisource_rejects_mismatched_domains() {
        let a = toy(10, "a");
        let wide = LabeledDataset::new(Array2::zeros((10, 4)), vec![0; 10], 2, "w").unwrap();
        assert!(make_multisource(&[a.clone(), wide], 0, 1).is_err());
        let k3 = LabeledDataset::new(Array2::zeros((10, 3)), vec![2; 10], 3, "k").unwrap();
        assert!(make_multisource(&[a, k3], 0, 1).is_err());
    }

    #[test]
    fn pair_constructor_checks_compatibility() {
        let a = toy(4, "a");
        let wide = LabeledDataset::new(Array2::zeros((4, 4)), vec![0; 4], 2, "w").unwrap();
        assert!(SplitPair::new(a.clone(), a.clone(), 0, Setup::SingleSource).is_ok());
        assert!(SplitPair::new(a, wide, 0, Setup::SingleSource).is_err());
    }
}
