//! Residual diagnostics: the Jarque-Bera normality statistic and a
//! plot-ready report (QQ points, residual-vs-feature series).

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harness::corr::normal_quantile;
use crate::regression::ols::OlsFit;

/// Jarque-Bera test of residual normality from sample skewness and
/// kurtosis (Pearson convention, normal = 3):
/// JB = (N/6) * (skew^2 + (kurtosis - 3)^2 / 4). The p-value is the
/// chi-square(2) survival function, which is exactly exp(-JB/2).
/// Requires at least 8 residuals with positive variance.
pub fn jarque_bera(residuals: &[f64]) -> Result<(f64, f64)> {
    let n = residuals.len();
    if n < 8 {
        return Err(Error::Numeric(format!(
            "normality test needs at least 8 residuals, got {n}"
        )));
    }
    if let Some(bad) = residuals.iter().find(|v| !v.is_finite()) {
        return Err(Error::Numeric(format!(
            "residuals contain non-finite value {bad}"
        )));
    }
    let nf = n as f64;
    let mu = residuals.iter().sum::<f64>() / nf;
    let mut m2 = 0.0;
    let mut m3 = 0.0;
    let mut m4 = 0.0;
    for &r in residuals {
        let d = r - mu;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    m2 /= nf;
    m3 /= nf;
    m4 /= nf;
    if m2 == 0.0 {
        return Err(Error::Numeric(
            "residuals have zero variance; normality test undefined".to_string(),
        ));
    }
    let skew = m3 / m2.powf(1.5);
    let kurtosis = m4 / (m2 * m2);
    let jb = nf / 6.0 * (skew * skew + (kurtosis - 3.0) * (kurtosis - 3.0) / 4.0);
    if !jb.is_finite() {
        return Err(Error::Numeric(format!(
            "residual moments are too extreme for the normality test (JB = {jb})"
        )));
    }
    Ok((jb, (-jb / 2.0).exp()))
}

/// Jarque-Bera outcome inside a diagnostics report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JarqueBeraReport {
    pub statistic: f64,
    pub p_value: f64,
}

/// One QQ-plot point: a theoretical standard normal quantile against the
/// sample residual quantile at the same probability.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QqPoint {
    pub theoretical: f64,
    pub sample: f64,
}

/// Residuals paired with one feature's values, ready for a scatter plot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSeries {
    pub feature: Vec<f64>,
    pub residual: Vec<f64>,
}

/// Plot-ready residual diagnostics for a fitted model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsReport {
    pub n: usize,
    pub mean_residual: f64,
    pub r_squared: f64,
    pub jarque_bera: Option<JarqueBeraReport>,
    pub jarque_bera_error: Option<String>,
    pub qq: Vec<QqPoint>,
    pub residuals_by_feature: BTreeMap<String, FeatureSeries>,
}

/// Summarizes a fit's residuals: mean, R-squared, the normality test (or
/// why it was unavailable), QQ points at probabilities (i + 1/2)/n, and a
/// residual series per non-intercept feature. Requires a fit that actually
/// carries residuals.
pub fn diagnostics(fit: &OlsFit) -> Result<DiagnosticsReport> {
    let n = fit.residuals.len();
    if n == 0 {
        return Err(Error::InvalidConfig(
            "diagnostics need a fitted model with residuals".to_string(),
        ));
    }
    let mean_residual = fit.residuals.sum() / n as f64;

    let (jarque_bera, jarque_bera_error) = match jarque_bera(fit.residuals.as_slice().unwrap()) {
        Ok((statistic, p_value)) => (Some(JarqueBeraReport { statistic, p_value }), None),
        Err(e) => (None, Some(e.to_string())),
    };

    let mut sorted: Vec<f64> = fit.residuals.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut qq = Vec::with_capacity(n);
    for (i, &sample) in sorted.iter().enumerate() {
        let p = (i as f64 + 0.5) / n as f64;
        qq.push(QqPoint {
            theoretical: normal_quantile(p)?,
            sample,
        });
    }

    let residual_vec: Vec<f64> = fit.residuals.to_vec();
    let mut residuals_by_feature = BTreeMap::new();
    for (j, name) in fit.column_names.iter().enumerate() {
        if name == "Intercept" {
            continue;
        }
        residuals_by_feature.insert(
            name.clone(),
            FeatureSeries {
                feature: fit.x.column(j).to_vec(),
                residual: residual_vec.clone(),
            },
        );
    }

    Ok(DiagnosticsReport {
        n,
        mean_residual,
        r_squared: fit.r_squared,
        jarque_bera,
        jarque_bera_error,
        qq,
        residuals_by_feature,
    })
}
