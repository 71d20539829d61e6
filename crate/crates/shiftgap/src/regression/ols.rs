//! Least-squares fitting via Householder QR, plus the two contrast
//! evaluations read off a fitted model.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::regression::Design;

/// Relative tolerance deciding when a diagonal entry of R counts as zero.
const RANK_TOL: f64 = 1e-10;

/// Householder QR applied in place to `a` (and optionally to a right-hand
/// side), leaving R in the upper triangle. Fails with the first column whose
/// remaining mass collapses relative to its original norm.
fn qr_factorize(a: &mut Array2<f64>, mut b: Option<&mut Array1<f64>>, names: &[String]) -> Result<()> {
    let (n, p) = a.dim();
    let original: Vec<f64> = (0..p)
        .map(|j| a.column(j).iter().map(|v| v * v).sum::<f64>().sqrt())
        .collect();
    for k in 0..p {
        let m = n - k;
        let mut v: Vec<f64> = (0..m).map(|r| a[[k + r, k]]).collect();
        let alpha = v.iter().map(|t| t * t).sum::<f64>().sqrt();
        if original[k] == 0.0 || alpha <= RANK_TOL * original[k] {
            return Err(Error::RankDeficient {
                column: names[k].clone(),
            });
        }
        let sign = if v[0] >= 0.0 { 1.0 } else { -1.0 };
        v[0] += sign * alpha;
        let beta = 2.0 / v.iter().map(|t| t * t).sum::<f64>();
        for j in k..p {
            let dot: f64 = (0..m).map(|r| v[r] * a[[k + r, j]]).sum();
            let f = beta * dot;
            for r in 0..m {
                a[[k + r, j]] -= f * v[r];
            }
        }
        if let Some(rhs) = b.as_deref_mut() {
            let dot: f64 = (0..m).map(|r| v[r] * rhs[k + r]).sum();
            let f = beta * dot;
            for r in 0..m {
                rhs[k + r] -= f * v[r];
            }
        }
    }
    Ok(())
}

/// Verifies a matrix has full column rank, naming the first column found
/// linearly dependent on its predecessors.
pub(crate) fn check_full_rank(x: ArrayView2<'_, f64>, names: &[String]) -> Result<()> {
    let mut a = x.to_owned();
    qr_factorize(&mut a, None, names)
}

/// A fitted least-squares model. The design matrix is retained internally
/// so diagnostics can plot residuals against each feature.
#[derive(Debug, Clone, PartialEq)]
pub struct OlsFit {
    pub coefficients: Array1<f64>,
    pub residuals: Array1<f64>,
    pub r_squared: f64,
    pub column_names: Vec<String>,
    pub(crate) x: Array2<f64>,
}

impl OlsFit {
    /// Coefficient by column name.
    pub fn coefficient(&self, name: &str) -> Option<f64> {
        self.column_names
            .iter()
            .position(|n| n == name)
            .map(|i| self.coefficients[i])
    }

    /// Wraps externally supplied coefficients (for example published ones)
    /// so contrasts can be evaluated at them. The result carries no data:
    /// residuals are empty and R-squared is NaN, so diagnostics reject it.
    pub fn from_coefficients(column_names: Vec<String>, coefficients: Vec<f64>) -> Result<Self> {
        if column_names.len() != coefficients.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} column names but {} coefficients",
                column_names.len(),
                coefficients.len()
            )));
        }
        let p = column_names.len();
        Ok(OlsFit {
            coefficients: Array1::from_vec(coefficients),
            residuals: Array1::zeros(0),
            r_squared: f64::NAN,
            column_names,
            x: Array2::zeros((0, p)),
        })
    }

    /// Serializable summary of the fit.
    pub fn report(&self) -> FitReport {
        FitReport {
            n: self.residuals.len(),
            r_squared: self.r_squared,
            mean_residual: if self.residuals.is_empty() {
                0.0
            } else {
                self.residuals.sum() / self.residuals.len() as f64
            },
            coefficients: self
                .column_names
                .iter()
                .zip(self.coefficients.iter())
                .map(|(name, &value)| CoefficientEntry {
                    name: name.clone(),
                    value,
                })
                .collect(),
        }
    }
}

/// One named coefficient in a fit report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientEntry {
    pub name: String,
    pub value: f64,
}

/// JSON-ready summary of a fitted model, columns in design order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub n: usize,
    pub r_squared: f64,
    pub mean_residual: f64,
    pub coefficients: Vec<CoefficientEntry>,
}

/// Least-squares fit of `y` on the columns of `x` via Householder QR.
///
/// Requires strictly more rows than columns, finite entries, and full
/// column rank. Residuals are computed against the original data, so the
/// normal equations hold to rounding: every component of X'r stays below
/// 1e-8 times the norm of y. R-squared uses the centered total sum of
/// squares; with an intercept column it lands in [0, 1] (tiny negative
/// rounding is snapped to zero), and without one it may be negative.
pub fn ols_fit(x: ArrayView2<'_, f64>, y: ArrayView1<'_, f64>, column_names: Vec<String>) -> Result<OlsFit> {
    let (n, p) = x.dim();
    if column_names.len() != p {
        return Err(Error::ShapeMismatch(format!(
            "{} column names for {} columns",
            column_names.len(),
            p
        )));
    }
    if y.len() != n {
        return Err(Error::ShapeMismatch(format!(
            "{} rows but {} outcomes",
            n,
            y.len()
        )));
    }
    if p == 0 || n <= p {
        return Err(Error::InvalidConfig(format!(
            "least squares needs more rows than columns, got {n} rows for {p} columns"
        )));
    }
    if x.iter().any(|v| !v.is_finite()) || y.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric(
            "design matrix or outcome contains a non-finite value".to_string(),
        ));
    }

    let mut a = x.to_owned();
    let mut qty = y.to_owned();
    qr_factorize(&mut a, Some(&mut qty), &column_names)?;

    let mut coefficients = Array1::zeros(p);
    for k in (0..p).rev() {
        let mut s = qty[k];
        for j in k + 1..p {
            s -= a[[k, j]] * coefficients[j];
        }
        coefficients[k] = s / a[[k, k]];
    }

    let residuals = &y - &x.dot(&coefficients);
    let ybar = y.sum() / n as f64;
    let sst: f64 = y.iter().map(|v| (v - ybar) * (v - ybar)).sum();
    let ssr: f64 = residuals.iter().map(|r| r * r).sum();
    let r_squared = if sst == 0.0 {
        if ssr < 1e-20 {
            1.0
        } else {
            0.0
        }
    } else {
        let raw = 1.0 - ssr / sst;
        if (-1e-12..0.0).contains(&raw) {
            0.0
        } else {
            raw
        }
    };

    Ok(OlsFit {
        coefficients,
        residuals,
        r_squared,
        column_names,
        x: x.to_owned(),
    })
}

/// Fits a built design.
pub fn fit_design(design: &Design) -> Result<OlsFit> {
    ols_fit(design.x.view(), design.y.view(), design.column_names.clone())
}

fn required(fit: &OlsFit, name: &str) -> Result<f64> {
    fit.coefficient(name).ok_or_else(|| {
        Error::InvalidConfig(format!("fit has no column named {name:?}"))
    })
}

/// Expected change in the outcome when hdisc rises by `delta` from the
/// baseline feature row `x_base`, holding everything else fixed. Reads the
/// hdisc main effect, its train_error interaction, its square, and the
/// square's train_error interaction off the fit.
pub fn contrast_estimation_error(fit: &OlsFit, x_base: &[f64], delta: f64) -> Result<f64> {
    if x_base.len() != fit.column_names.len() {
        return Err(Error::ShapeMismatch(format!(
            "baseline row has {} entries for {} columns",
            x_base.len(),
            fit.column_names.len()
        )));
    }
    if !(delta.is_finite() && delta > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "contrast step must be a positive real, got {delta}"
        )));
    }
    let b_j = required(fit, "hdisc")?;
    let b_l = required(fit, "hdisc:train_error")?;
    let b_q = required(fit, "hdisc^2")?;
    let b_r = required(fit, "train_error:hdisc^2")?;
    let idx = |name: &str| fit.column_names.iter().position(|n| n == name).unwrap();
    let xj = x_base[idx("hdisc")];
    let xk = x_base[idx("train_error")];
    Ok(b_j * delta
        + b_l * delta * xk
        + b_q * (delta * delta + 2.0 * delta * xj)
        + b_r * (delta * delta * xk + 2.0 * delta * xj * xk))
}

/// Expected increase in the error gap from switching a categorical to the
/// given non-reference level, at h-discrepancy `d_value`: the outcome is
/// hdisc minus the gap, so the gap moves by minus the level's effect.
/// `category` names the dummy column (for example "group[T.synth_b]").
pub fn contrast_error_gap(fit: &OlsFit, category: &str, d_value: f64) -> Result<f64> {
    if !d_value.is_finite() {
        return Err(Error::InvalidConfig(format!(
            "contrast point must be finite, got {d_value}"
        )));
    }
    let b_j = required(fit, category)?;
    let b_q = required(fit, &format!("{category}:hdisc"))?;
    Ok(-(b_j + b_q * d_value))
}
