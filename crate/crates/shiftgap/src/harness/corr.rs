//! Correlation analysis over experiment records: Pearson and Spearman
//! coefficients between each two-sample statistic and the error gap, and
//! Steiger's test for comparing two dependent correlations sharing a
//! variable.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harness::ExperimentRecord;

/// Pearson correlation coefficient between two equal-length samples.
///
/// Requires at least two points and positive variance on both sides.
/// The denominator is computed as one square root of the product of the
/// centered sums of squares, so rescaling a sample by a power of two
/// cancels exactly instead of drifting in the last bits.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::ShapeMismatch(format!(
            "correlation inputs have lengths {} and {}",
            x.len(),
            y.len()
        )));
    }
    if x.len() < 2 {
        return Err(Error::Numeric(format!(
            "correlation needs at least 2 points, got {}",
            x.len()
        )));
    }
    for (name, v) in [("x", x), ("y", y)] {
        if let Some(bad) = v.iter().find(|t| !t.is_finite()) {
            return Err(Error::Numeric(format!(
                "correlation input {name} contains non-finite value {bad}"
            )));
        }
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (&xi, &yi) in x.iter().zip(y) {
        let dx = xi - mx;
        let dy = yi - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        let side = if sxx == 0.0 { "x" } else { "y" };
        return Err(Error::Numeric(format!(
            "correlation undefined: sample {side} has zero variance"
        )));
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Ranks with ties replaced by the average of the positions they span
/// (1-based, so `[10, 30, 20, 30]` ranks as `[1, 3.5, 2, 3.5]`).
pub fn average_ranks(v: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..v.len()).collect();
    order.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut ranks = vec![0.0; v.len()];
    let mut lo = 0;
    while lo < order.len() {
        let mut hi = lo;
        while hi + 1 < order.len() && v[order[hi + 1]] == v[order[lo]] {
            hi += 1;
        }
        // positions lo..=hi share the average of ranks lo+1 ..= hi+1
        let rank = (lo + hi) as f64 / 2.0 + 1.0;
        for &idx in &order[lo..=hi] {
            ranks[idx] = rank;
        }
        lo = hi + 1;
    }
    ranks
}

/// Spearman rank correlation: Pearson applied to average ranks. Strictly
/// monotone transforms of either sample leave the ranks, and therefore the
/// result, bit-for-bit unchanged.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::ShapeMismatch(format!(
            "correlation inputs have lengths {} and {}",
            x.len(),
            y.len()
        )));
    }
    for (name, v) in [("x", x), ("y", y)] {
        if let Some(bad) = v.iter().find(|t| !t.is_finite()) {
            return Err(Error::Numeric(format!(
                "correlation input {name} contains non-finite value {bad}"
            )));
        }
    }
    pearson(&average_ranks(x), &average_ranks(y))
}

/// Complementary error function via a Chebyshev fit with fractional error
/// below 1.2e-7 for all arguments, so deep-tail values keep relative
/// accuracy instead of collapsing to zero.
fn erfc(x: f64) -> f64 {
    let t = 1.0 / (1.0 + 0.5 * x.abs());
    let poly = -1.26551223
        + t * (1.00002368
            + t * (0.37409196
                + t * (0.09678418
                    + t * (-0.18628806
                        + t * (0.27886807
                            + t * (-1.13520398
                                + t * (1.48851587 + t * (-0.82215223 + t * 0.17087277))))))));
    let ans = t * (-x * x + poly).exp();
    let ans = ans.clamp(0.0, 2.0);
    if x >= 0.0 {
        ans
    } else {
        2.0 - ans
    }
}

/// Standard normal distribution function Phi(x).
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x * std::f64::consts::FRAC_1_SQRT_2)
}

/// Inverse standard normal distribution function (rational minimax
/// approximation, relative error below 1.2e-9). Requires 0 < p < 1.
pub fn normal_quantile(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::Numeric(format!(
            "normal quantile requires a probability strictly inside (0, 1), got {p}"
        )));
    }
    const A: [f64; 6] = [
        -3.969683028665376e+01,
        2.209460984245205e+02,
        -2.759285104469687e+02,
        1.383577518672690e+02,
        -3.066479806614716e+01,
        2.506628277459239e+00,
    ];
    const B: [f64; 5] = [
        -5.447609879822406e+01,
        1.615858368580409e+02,
        -1.556989798598866e+02,
        6.680131188771972e+01,
        -1.328068155288572e+01,
    ];
    const C: [f64; 6] = [
        -7.784894002430293e-03,
        -3.223964580411365e-01,
        -2.400758277161838e+00,
        -2.549732539343734e+00,
        4.374664141464968e+00,
        2.938163982698783e+00,
    ];
    const D: [f64; 4] = [
        7.784695709041462e-03,
        3.224671290700398e-01,
        2.445134137142996e+00,
        3.754408661907416e+00,
    ];
    const P_LOW: f64 = 0.02425;

    let tail = |q: f64| {
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    };
    let x = if p < P_LOW {
        tail((-2.0 * p.ln()).sqrt())
    } else if p > 1.0 - P_LOW {
        -tail((-2.0 * (1.0 - p).ln()).sqrt())
    } else {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    };
    Ok(x)
}

/// Two-sided tail probability of |Z| >= |z| under the standard normal.
fn two_sided_p(z: f64) -> f64 {
    if z == 0.0 {
        return 1.0;
    }
    erfc(z.abs() * std::f64::consts::FRAC_1_SQRT_2).min(1.0)
}

/// Steiger's z-test comparing two dependent correlations that share the
/// variable j: does variable k correlate with j differently than variable h
/// does? Takes the three pairwise correlations and the common sample size;
/// returns `(z, p)` with a two-sided p-value. Equal inputs give exactly
/// `(0.0, 1.0)`, and swapping k with h negates z bit-for-bit.
pub fn steiger_test(r_jk: f64, r_jh: f64, r_kh: f64, n: usize) -> Result<(f64, f64)> {
    if n < 4 {
        return Err(Error::Numeric(format!(
            "comparing dependent correlations needs n >= 4, got {n}"
        )));
    }
    for (name, r) in [("r_jk", r_jk), ("r_jh", r_jh), ("r_kh", r_kh)] {
        if !r.is_finite() || r.abs() >= 1.0 {
            return Err(Error::Numeric(format!(
                "{name} = {r} is outside the open interval (-1, 1)"
            )));
        }
    }
    // the three correlations must form a positive semidefinite 3x3 matrix
    let det = 1.0 + 2.0 * r_jk * r_jh * r_kh - r_jk * r_jk - r_jh * r_jh - r_kh * r_kh;
    if det < -1e-12 {
        return Err(Error::Numeric(format!(
            "correlations ({r_jk}, {r_jh}, {r_kh}) are not jointly realizable"
        )));
    }
    let z_jk = r_jk.atanh();
    let z_jh = r_jh.atanh();
    let rbar = (r_jk + r_jh) / 2.0;
    let rbar2 = rbar * rbar;
    let psi = r_kh * (1.0 - 2.0 * rbar2) - 0.5 * rbar2 * (1.0 - 2.0 * rbar2 - r_kh * r_kh);
    let sbar = psi / ((1.0 - rbar2) * (1.0 - rbar2));
    let denom = 2.0 - 2.0 * sbar;
    if denom <= 0.0 {
        return Err(Error::Numeric(format!(
            "dependent-correlation variance term collapsed (2 - 2*s = {denom})"
        )));
    }
    let z = (z_jk - z_jh) * ((n as f64 - 3.0) / denom).sqrt();
    if !z.is_finite() {
        return Err(Error::Numeric(format!(
            "dependent-correlation statistic is not finite (z = {z})"
        )));
    }
    Ok((z, two_sided_p(z)))
}

/// A named filter over experiment records: `tag: None` keeps every record,
/// otherwise only records whose tag map contains the given key/value pair.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubsetDef {
    pub name: String,
    pub tag: Option<(String, String)>,
}

impl SubsetDef {
    pub fn all() -> Self {
        SubsetDef {
            name: "all".to_string(),
            tag: None,
        }
    }

    pub fn tagged(key: impl Into<String>, value: impl Into<String>) -> Self {
        let (key, value) = (key.into(), value.into());
        SubsetDef {
            name: format!("{key}={value}"),
            tag: Some((key, value)),
        }
    }
}

/// Correlations of one statistic against the error gap within a subset.
/// Degenerate subsets (too small, zero variance) carry the failure text
/// instead of numbers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrCell {
    pub stat: String,
    pub pearson: Option<f64>,
    pub spearman: Option<f64>,
    pub error: Option<String>,
}

/// Steiger comparison of hdisc against one competing statistic: both
/// correlate with the error gap; z > 0 means hdisc correlates more strongly
/// in magnitude-free signed terms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SteigerCell {
    pub versus: String,
    pub z: Option<f64>,
    pub p: Option<f64>,
    pub error: Option<String>,
}

/// All correlation cells for one record subset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubsetResult {
    pub name: String,
    pub count: usize,
    pub cells: Vec<CorrCell>,
    pub steiger_vs_hdisc: Vec<SteigerCell>,
}

/// The full correlation table: one row group per requested subset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationTable {
    pub subsets: Vec<SubsetResult>,
}

fn stat_values(records: &[&ExperimentRecord], stat: &str) -> Vec<f64> {
    records
        .iter()
        .map(|r| r.stats.get(stat).expect("known statistic name"))
        .collect()
}

/// Builds the correlation table for `records` under each subset definition.
///
/// Records are reordered canonically by (source, target, kind, seed) first,
/// so the result is identical no matter how the caller ordered them. Each
/// cell correlates one statistic with the error gap; failures (empty subset,
/// zero variance) are recorded in the cell, never propagated. When
/// `with_steiger` is set, each subset also compares hdisc's correlation
/// against every other statistic's.
pub fn correlate(
    records: &[&ExperimentRecord],
    subsets: &[SubsetDef],
    with_steiger: bool,
) -> CorrelationTable {
    let mut ordered: Vec<&ExperimentRecord> = records.to_vec();
    ordered.sort_by(|a, b| {
        (&a.source, &a.target, a.kind.to_string(), a.seed).cmp(&(
            &b.source,
            &b.target,
            b.kind.to_string(),
            b.seed,
        ))
    });

    let mut out = Vec::with_capacity(subsets.len());
    for subset in subsets {
        let members: Vec<&ExperimentRecord> = ordered
            .iter()
            .filter(|r| match &subset.tag {
                None => true,
                Some((k, v)) => r.tags.get(k) == Some(v),
            })
            .copied()
            .collect();
        let gaps: Vec<f64> = members.iter().map(|r| r.error_gap).collect();

        let mut cells = Vec::with_capacity(super::StatsBlock::NAMES.len());
        for stat in super::StatsBlock::NAMES {
            let xs = stat_values(&members, stat);
            let (mut p_val, mut s_val, mut err) = (None, None, None);
            match pearson(&xs, &gaps) {
                Ok(v) => p_val = Some(v),
                Err(e) => err = Some(e.to_string()),
            }
            match spearman(&xs, &gaps) {
                Ok(v) => s_val = Some(v),
                Err(e) => {
                    err.get_or_insert(e.to_string());
                }
            }
            cells.push(CorrCell {
                stat: stat.to_string(),
                pearson: p_val,
                spearman: s_val,
                error: err,
            });
        }

        let mut steiger_cells = Vec::new();
        if with_steiger {
            let hd = stat_values(&members, "hdisc");
            for stat in super::StatsBlock::NAMES {
                if stat == "hdisc" {
                    continue;
                }
                let xs = stat_values(&members, stat);
                let outcome = pearson(&hd, &gaps)
                    .and_then(|r_jk| Ok((r_jk, pearson(&xs, &gaps)?)))
                    .and_then(|(r_jk, r_jh)| Ok((r_jk, r_jh, pearson(&hd, &xs)?)))
                    .and_then(|(r_jk, r_jh, r_kh)| steiger_test(r_jk, r_jh, r_kh, members.len()));
                steiger_cells.push(match outcome {
                    Ok((z, p)) => SteigerCell {
                        versus: stat.to_string(),
                        z: Some(z),
                        p: Some(p),
                        error: None,
                    },
                    Err(e) => SteigerCell {
                        versus: stat.to_string(),
                        z: None,
                        p: None,
                        error: Some(e.to_string()),
                    },
                });
            }
        }

        out.push(SubsetResult {
            name: subset.name.clone(),
            count: members.len(),
            cells,
            steiger_vs_hdisc: steiger_cells,
        });
    }
    CorrelationTable { subsets: out }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from;
    use rand::Rng;

    #[test]
    fn pearson_perfect_line_is_exactly_one() {
        let x = [1.0, 2.0, 3.0];
        let y = [2.0, 4.0, 6.0];
        assert_eq!(pearson(&x, &y).unwrap(), 1.0);
        let neg = [-2.0, -4.0, -6.0];
        assert_eq!(pearson(&x, &neg).unwrap(), -1.0);
    }

    #[test]
    fn pearson_matches_hand_value() {
        // x = (1,2,3), y = (1,2,4): r = 9 / sqrt(84)
        let r = pearson(&[1.0, 2.0, 3.0], &[1.0, 2.0, 4.0]).unwrap();
        assert!((r - 0.9819805060619657).abs() <= 1e-12);
    }

    #[test]
    fn pearson_power_of_two_affine_map_is_bitwise_invariant() {
        let mut rng = rng_from(31);
        for _ in 0..50 {
            // dyadic grid values keep means and centered products exact
            let x: Vec<f64> = (0..8).map(|_| rng.gen_range(-64i32..=64) as f64 / 16.0).collect();
            let y: Vec<f64> = (0..8).map(|_| rng.gen_range(-64i32..=64) as f64 / 16.0).collect();
            let base = match pearson(&x, &y) {
                Ok(r) => r,
                Err(_) => continue,
            };
            for (a, b) in [(4.0, 3.0), (0.25, -2.5), (1024.0, 0.0)] {
                let mapped: Vec<f64> = x.iter().map(|&v| a * v + b).collect();
                let r = pearson(&mapped, &y).unwrap();
                assert_eq!(r, base, "a={a} b={b}");
            }
        }
    }

    #[test]
    fn pearson_general_affine_map_is_invariant_to_tolerance() {
        let mut rng = rng_from(32);
        let x: Vec<f64> = (0..40).map(|_| rng.gen::<f64>()).collect();
        let y: Vec<f64> = (0..40).map(|_| rng.gen::<f64>()).collect();
        let base = pearson(&x, &y).unwrap();
        let mapped: Vec<f64> = x.iter().map(|&v| 1.7 * v - 0.3).collect();
        assert!((pearson(&mapped, &y).unwrap() - base).abs() < 1e-12);
        let flipped: Vec<f64> = x.iter().map(|&v| -1.7 * v - 0.3).collect();
        assert!((pearson(&flipped, &y).unwrap() + base).abs() < 1e-12);
    }

    #[test]
    fn pearson_rejects_degenerate_inputs() {
        assert!(pearson(&[1.0], &[2.0]).is_err());
        assert!(pearson(&[1.0, 2.0], &[3.0]).is_err());
        assert!(pearson(&[2.0, 2.0, 2.0], &[1.0, 2.0, 3.0]).is_err());
        assert!(pearson(&[1.0, 2.0, 3.0], &[5.0, 5.0, 5.0]).is_err());
        assert!(pearson(&[1.0, f64::NAN, 3.0], &[1.0, 2.0, 3.0]).is_err());
    }

    #[test]
    fn average_ranks_handles_ties() {
        assert_eq!(average_ranks(&[10.0, 30.0, 20.0, 30.0]), vec![1.0, 3.5, 2.0, 3.5]);
        assert_eq!(average_ranks(&[5.0, 5.0, 5.0]), vec![2.0, 2.0, 2.0]);
        assert_eq!(average_ranks(&[3.0, 1.0, 2.0]), vec![3.0, 1.0, 2.0]);
    }

    #[test]
    fn spearman_tied_example_is_exactly_one() {
        let r = spearman(&[1.0, 2.0, 2.0, 3.0], &[10.0, 20.0, 20.0, 40.0]).unwrap();
        assert_eq!(r, 1.0);
    }

    #[test]
    fn spearman_is_bitwise_invariant_under_monotone_transforms() {
        let mut rng = rng_from(33);
        let x: Vec<f64> = (0..30).map(|_| rng.gen::<f64>() * 4.0 - 2.0).collect();
        let y: Vec<f64> = (0..30).map(|_| rng.gen::<f64>() * 4.0 - 2.0).collect();
        let base = spearman(&x, &y).unwrap();
        let cubed: Vec<f64> = x.iter().map(|&v| v * v * v).collect();
        assert_eq!(spearman(&cubed, &y).unwrap(), base);
        let exped: Vec<f64> = y.iter().map(|&v| v.exp()).collect();
        assert_eq!(spearman(&x, &exped).unwrap(), base);
    }

    #[test]
    fn normal_cdf_is_sane() {
        assert!((normal_cdf(0.0) - 0.5).abs() < 1e-7);
        assert!((normal_cdf(1.959963984540054) - 0.975).abs() < 1e-7);
        assert!(normal_cdf(-8.0) < 1e-14);
        assert!(normal_cdf(8.0) > 1.0 - 1e-14);
        // exact complement by construction of the two erfc branches
        for x in [0.3, 1.7, 5.5] {
            assert_eq!(normal_cdf(x) + normal_cdf(-x), 1.0);
        }
    }

    #[test]
    fn normal_quantile_matches_known_points() {
        assert_eq!(normal_quantile(0.5).unwrap(), 0.0);
        assert!((normal_quantile(0.975).unwrap() - 1.959963984540054).abs() < 1e-8);
        assert!((normal_quantile(0.025).unwrap() + 1.959963984540054).abs() < 1e-8);
        assert!((normal_quantile(0.8413447460685429).unwrap() - 1.0).abs() < 1e-8);
        assert!(normal_quantile(0.0).is_err());
        assert!(normal_quantile(1.0).is_err());
        assert!(normal_quantile(f64::NAN).is_err());
    }

    #[test]
    fn normal_quantile_round_trips_through_cdf() {
        for i in 1..100 {
            let p = i as f64 / 100.0;
            let x = normal_quantile(p).unwrap();
            // cdf carries the erfc fit error (~1e-7 fractional)
            assert!((normal_cdf(x) - p).abs() < 1e-6, "p = {p}");
        }
    }

    #[test]
    fn steiger_equal_correlations_give_zero_and_one_exactly() {
        let (z, p) = steiger_test(0.62, 0.62, 0.4, 50).unwrap();
        assert_eq!(z, 0.0);
        assert_eq!(p, 1.0);
    }

    #[test]
    fn steiger_matches_frozen_reference() {
        // r_jk = 0.83, r_jh = 0.54, r_kh = 0.60, n = 1000
        let (z, p) = steiger_test(0.83, 0.54, 0.60, 1000).unwrap();
        assert!((z / 16.554104104411202 - 1.0).abs() < 1e-12, "z = {z}");
        // tail probability agrees with the reference to the accuracy of the
        // erfc fit (fractional error ~1e-7), and clears the decision bound
        assert!((p / 1.4955103187225343e-61 - 1.0).abs() < 1e-5, "p = {p}");
        assert!(p < 0.001);
    }

    #[test]
    fn steiger_is_antisymmetric_bitwise() {
        let (z_ab, p_ab) = steiger_test(0.71, 0.33, 0.25, 120).unwrap();
        let (z_ba, p_ba) = steiger_test(0.33, 0.71, 0.25, 120).unwrap();
        assert_eq!(z_ab, -z_ba);
        assert_eq!(p_ab, p_ba);
        assert!(z_ab > 0.0);
    }

    #[test]
    fn steiger_rejects_invalid_inputs() {
        assert!(steiger_test(0.5, 0.4, 0.3, 3).is_err());
        assert!(steiger_test(1.0, 0.4, 0.3, 100).is_err());
        assert!(steiger_test(0.5, -1.0, 0.3, 100).is_err());
        assert!(steiger_test(0.5, 0.4, f64::NAN, 100).is_err());
        // jointly unrealizable triple: det of the correlation matrix < 0
        assert!(steiger_test(0.9, 0.9, -0.9, 100).is_err());
    }

    #[test]
    fn steiger_p_stays_within_unit_interval() {
        let mut rng = rng_from(34);
        for _ in 0..200 {
            let r_jk = rng.gen_range(-0.95..0.95);
            let r_jh = rng.gen_range(-0.95..0.95);
            let r_kh = rng.gen_range(-0.95..0.95);
            if let Ok((z, p)) = steiger_test(r_jk, r_jh, r_kh, 30) {
                assert!(z.is_finite());
                assert!((0.0..=1.0).contains(&p), "p = {p}");
            }
        }
    }

    fn synthetic_records() -> Vec<ExperimentRecord> {
        // hdisc tracks the gap exactly, energy tracks it inversely,
        // bbsd is constant so its cell must degrade gracefully
        let gaps = [0.05, 0.1, 0.2, 0.3, 0.45, 0.6];
        gaps.iter()
            .enumerate()
            .map(|(i, &gap)| {
                let mut rec = crate::harness::tests::sample_record(i as u64, gap, gap);
                rec.stats.energy = 1.0 - gap;
                rec.stats.frs = 0.8 - gap / 2.0;
                rec.stats.mmd = gap * gap;
                rec.stats.bbsd = 0.25;
                if i % 2 == 0 {
                    rec.tags.insert("dist".to_string(), "wd".to_string());
                }
                rec
            })
            .collect()
    }

    #[test]
    fn correlate_builds_expected_cells() {
        let records = synthetic_records();
        let refs: Vec<&ExperimentRecord> = records.iter().collect();
        let subsets = [SubsetDef::all(), SubsetDef::tagged("dist", "wd")];
        let table = correlate(&refs, &subsets, true);

        assert_eq!(table.subsets.len(), 2);
        let all = &table.subsets[0];
        assert_eq!(all.name, "all");
        assert_eq!(all.count, 6);
        let cell = |name: &str| all.cells.iter().find(|c| c.stat == name).unwrap();
        assert_eq!(cell("hdisc").pearson, Some(1.0));
        assert_eq!(cell("energy").pearson, Some(-1.0));
        assert_eq!(cell("hdisc").spearman, Some(1.0));
        assert_eq!(cell("mmd").spearman, Some(1.0));
        assert!(cell("mmd").pearson.unwrap() < 1.0);
        assert!(cell("bbsd").pearson.is_none());
        assert!(cell("bbsd").error.as_deref().unwrap().contains("zero variance"));

        // perfect |r| = 1 correlations collapse the Steiger variance term,
        // so those comparisons must degrade to errors instead of numbers
        assert_eq!(all.steiger_vs_hdisc.len(), 4);
        for sc in &all.steiger_vs_hdisc {
            assert!(sc.z.is_some() || sc.error.is_some(), "{sc:?}");
        }

        let wd = &table.subsets[1];
        assert_eq!(wd.name, "dist=wd");
        assert_eq!(wd.count, 3);
        assert_eq!(
            wd.cells.iter().find(|c| c.stat == "hdisc").unwrap().pearson,
            Some(1.0)
        );
    }

    #[test]
    fn correlate_is_order_invariant() {
        let records = synthetic_records();
        let forward: Vec<&ExperimentRecord> = records.iter().collect();
        let mut reversed = forward.clone();
        reversed.reverse();
        let subsets = [SubsetDef::all()];
        let a = correlate(&forward, &subsets, true);
        let b = correlate(&reversed, &subsets, true);
        assert_eq!(a, b);
    }

    #[test]
    fn correlate_reports_empty_subsets_per_cell() {
        let records = synthetic_records();
        let refs: Vec<&ExperimentRecord> = records.iter().collect();
        let subsets = [SubsetDef::tagged("dist", "nowhere")];
        let table = correlate(&refs, &subsets, false);
        assert_eq!(table.subsets[0].count, 0);
        for cell in &table.subsets[0].cells {
            assert!(cell.pearson.is_none());
            assert!(cell.error.is_some());
        }
        assert!(table.subsets[0].steiger_vs_hdisc.is_empty());
    }
}
