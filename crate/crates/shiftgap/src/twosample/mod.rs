//! Feature-space two-sample statistics: Friedman-Rafsky (FRS), energy
//! distance, Gaussian-kernel MMD, and BBSD (MMD over classifier scores).
//!
//! These measure how different two samples look while staying blind to any
//! labeling function, which is exactly why they can miss shifts that matter
//! to a classifier.

mod mst;

use ndarray::{ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::classifier::Classifier;
use crate::error::{Error, Result};
use crate::rng::rng_from;

pub(crate) use mst::euclid;
use mst::prim_mst;

/// Which statistic a [`StatisticValue`] carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StatName {
    Frs,
    Energy,
    Mmd,
    Bbsd,
}

/// Details of how a statistic was computed, for reports and debugging.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct StatMeta {
    /// RBF bandwidth used (MMD and BBSD).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bandwidth: Option<f64>,
    /// Number of pooled points (FRS).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pooled_size: Option<usize>,
    /// Count of MST edges joining points of the same sample (FRS).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub same_sample_edges: Option<usize>,
}

/// A computed two-sample statistic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StatisticValue {
    pub name: StatName,
    pub value: f64,
    #[serde(default)]
    pub meta: StatMeta,
}

fn check_dims(sx: ArrayView2<'_, f64>, tx: ArrayView2<'_, f64>) -> Result<()> {
    if sx.ncols() != tx.ncols() {
        return Err(Error::ShapeMismatch(format!(
            "samples have dimensions {} and {}",
            sx.ncols(),
            tx.ncols()
        )));
    }
    check_finite(sx)?;
    check_finite(tx)
}

fn check_finite(view: ArrayView2<'_, f64>) -> Result<()> {
    if view.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidDataset(
            "two-sample statistics require finite feature values".into(),
        ));
    }
    Ok(())
}

/// Orders the two samples canonically (by size, then elementwise), so that
/// the floating-point accumulation order, and hence the result, is bitwise
/// identical under argument swap. The statistics below are symmetric
/// formulas, so the swap never changes which normalizer applies to which
/// sample.
fn canonical<'a>(
    a: ArrayView2<'a, f64>,
    b: ArrayView2<'a, f64>,
) -> (ArrayView2<'a, f64>, ArrayView2<'a, f64>) {
    let ord = a.nrows().cmp(&b.nrows()).then_with(|| {
        for (x, y) in a.iter().zip(b.iter()) {
            let c = x.total_cmp(y);
            if c != std::cmp::Ordering::Equal {
                return c;
            }
        }
        std::cmp::Ordering::Equal
    });
    if ord == std::cmp::Ordering::Greater {
        (b, a)
    } else {
        (a, b)
    }
}

/// Friedman-Rafsky statistic: the fraction of minimum-spanning-tree edges of
/// the pooled sample that join two points of the same sample, normalized by
/// n+m-2 so fully separated samples score exactly 1.
///
/// Ties in edge weights are broken toward the lexicographically smaller
/// endpoint pair, which makes the MST (and hence the value) deterministic.
pub fn frs_statistic(sx: ArrayView2<'_, f64>, tx: ArrayView2<'_, f64>) -> Result<StatisticValue> {
    check_dims(sx, tx)?;
    let (n, m) = (sx.nrows(), tx.nrows());
    if n == 0 || m == 0 {
        return Err(Error::InvalidDataset(
            "each sample needs at least one row".into(),
        ));
    }
    if n + m < 3 {
        return Err(Error::InvalidDataset(format!(
            "pooled sample needs at least 3 points, got {}",
            n + m
        )));
    }
    let pooled = ndarray::concatenate(Axis(0), &[sx.view(), tx.view()])
        .map_err(|e| Error::ShapeMismatch(e.to_string()))?;
    let same = prim_mst(pooled.view())
        .into_iter()
        .filter(|&(u, v)| (u < n) == (v < n))
        .count();
    Ok(StatisticValue {
        name: StatName::Frs,
        value: same as f64 / (n + m - 2) as f64,
        meta: StatMeta {
            pooled_size: Some(n + m),
            same_sample_edges: Some(same),
            ..StatMeta::default()
        },
    })
}

/// Energy distance between the samples:
/// 2/(nm)·ΣΣ‖X−X̃‖ − 1/n²·ΣΣ‖X−X′‖ − 1/m²·ΣΣ‖X̃−X̃′‖.
///
/// The within-sample double sums run over all ordered pairs including the
/// zero diagonal, hence the 1/n² and 1/m² normalizers.
pub fn energy_statistic(
    sx: ArrayView2<'_, f64>,
    tx: ArrayView2<'_, f64>,
) -> Result<StatisticValue> {
    check_dims(sx, tx)?;
    if sx.nrows() == 0 || tx.nrows() == 0 {
        return Err(Error::InvalidDataset(
            "each sample needs at least one row".into(),
        ));
    }
    let (sx, tx) = canonical(sx.view(), tx.view());
    let (n, m) = (sx.nrows(), tx.nrows());
    let value = 2.0 * pair_sum(sx, tx) / (n * m) as f64
        - pair_sum(sx, sx) / (n * n) as f64
        - pair_sum(tx, tx) / (m * m) as f64;
    Ok(StatisticValue {
        name: StatName::Energy,
        value,
        meta: StatMeta::default(),
    })
}

/// Sum of distances over the full ordered rectangle of row pairs.
///
/// The within-sample sums reuse this with both arguments equal, so that
/// `energy(x, x)` accumulates the identical values in the identical order in
/// its cross and within terms and cancels to exactly zero.
fn pair_sum(a: ArrayView2<'_, f64>, b: ArrayView2<'_, f64>) -> f64 {
    a.outer_iter()
        .map(|p| b.outer_iter().map(|q| euclid(p, q)).sum::<f64>())
        .sum()
}

/// RBF bandwidth by the median heuristic: the median pairwise distance over
/// a seeded subsample of min(100, N) pooled points (the median of an even
/// pair count averages the two middle order statistics). A zero median falls
/// back to the smallest positive distance in the subsample, and 1.0 if there
/// is none.
pub fn median_bandwidth(pooled: ArrayView2<'_, f64>, seed: u64) -> Result<f64> {
    median_bandwidth_detail(pooled, seed).map(|(sigma, _)| sigma)
}

/// [`median_bandwidth`] plus the subsample size actually used.
pub(crate) fn median_bandwidth_detail(
    pooled: ArrayView2<'_, f64>,
    seed: u64,
) -> Result<(f64, usize)> {
    let n = pooled.nrows();
    if n < 2 {
        return Err(Error::InvalidDataset(
            "median bandwidth needs at least 2 points".into(),
        ));
    }
    if pooled.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidDataset(
            "median bandwidth requires finite feature values".into(),
        ));
    }
    let cap = 100.min(n);
    let chosen: Vec<usize> = if cap == n {
        (0..n).collect()
    } else {
        rand::seq::index::sample(&mut rng_from(seed), n, cap).into_vec()
    };

    let mut dists = Vec::with_capacity(cap * (cap - 1) / 2);
    for (a, &i) in chosen.iter().enumerate() {
        for &j in &chosen[a + 1..] {
            dists.push(euclid(pooled.row(i), pooled.row(j)));
        }
    }
    dists.sort_unstable_by(|a, b| a.partial_cmp(b).expect("distances are never NaN"));
    let mid = dists.len() / 2;
    let median = if dists.len() % 2 == 1 {
        dists[mid]
    } else {
        (dists[mid - 1] + dists[mid]) / 2.0
    };
    let sigma = if median > 0.0 {
        median
    } else {
        dists.iter().copied().find(|&d| d > 0.0).unwrap_or(1.0)
    };
    Ok((sigma, cap))
}

/// Unbiased Gaussian-kernel MMD estimate with bandwidth `sigma`:
/// within-sample kernel means over i≠j pairs plus the full cross term.
///
/// The unbiased form can legitimately go slightly negative; values are not
/// clamped.
pub fn mmd_statistic(
    sx: ArrayView2<'_, f64>,
    tx: ArrayView2<'_, f64>,
    sigma: f64,
) -> Result<StatisticValue> {
    check_dims(sx, tx)?;
    if sx.nrows() < 2 || tx.nrows() < 2 {
        return Err(Error::InvalidDataset(format!(
            "unbiased MMD needs at least 2 points per sample, got {} and {}",
            sx.nrows(),
            tx.nrows()
        )));
    }
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "bandwidth must be positive and finite, got {sigma}"
        )));
    }
    let (sx, tx) = canonical(sx.view(), tx.view());
    let (n, m) = (sx.nrows(), tx.nrows());
    let gamma = 1.0 / (2.0 * sigma * sigma);
    let kernel = |a: ndarray::ArrayView1<'_, f64>, b: ndarray::ArrayView1<'_, f64>| {
        let d = euclid(a, b);
        (-d * d * gamma).exp()
    };

    let mut within_s = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            within_s += kernel(sx.row(i), sx.row(j));
        }
    }
    let mut within_t = 0.0;
    for i in 0..m {
        for j in (i + 1)..m {
            within_t += kernel(tx.row(i), tx.row(j));
        }
    }
    let mut cross = 0.0;
    for i in 0..n {
        for j in 0..m {
            cross += kernel(sx.row(i), tx.row(j));
        }
    }
    let value = 2.0 * within_s / (n * (n - 1)) as f64 + 2.0 * within_t / (m * (m - 1)) as f64
        - 2.0 * cross / (n * m) as f64;
    Ok(StatisticValue {
        name: StatName::Mmd,
        value,
        meta: StatMeta {
            bandwidth: Some(sigma),
            ..StatMeta::default()
        },
    })
}

/// Black-box shift detection: MMD computed on the classifier's softmax score
/// vectors instead of raw features, with its own median-heuristic bandwidth
/// chosen from the pooled scores under `seed`.
pub fn bbsd_statistic(
    h: &Classifier,
    sx: ArrayView2<'_, f64>,
    tx: ArrayView2<'_, f64>,
    seed: u64,
) -> Result<StatisticValue> {
    let ss = h.scores_batch(sx)?;
    let ts = h.scores_batch(tx)?;
    let pooled = ndarray::concatenate(Axis(0), &[ss.view(), ts.view()])
        .map_err(|e| Error::ShapeMismatch(e.to_string()))?;
    let sigma = median_bandwidth(pooled.view(), seed)?;
    let mmd = mmd_statistic(ss.view(), ts.view(), sigma)?;
    Ok(StatisticValue {
        name: StatName::Bbsd,
        value: mmd.value,
        meta: mmd.meta,
    })
}
