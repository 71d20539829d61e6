//! Ordinary least squares over experiment records: the outcome is the
//! estimation error (hdisc minus observed error gap), explained by a design
//! matrix of categorical dummies, the continuous measurements, and a fixed
//! family of interaction and squared terms.

use std::collections::BTreeSet;

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harness::ExperimentRecord;

pub mod diag;
pub mod ols;

pub use diag::{diagnostics, jarque_bera, DiagnosticsReport, JarqueBeraReport, QqPoint};
pub use ols::{
    contrast_error_gap, contrast_estimation_error, fit_design, ols_fit, CoefficientEntry,
    FitReport, OlsFit,
};

/// Continuous features every record supplies, in design-matrix order.
pub const CONTINUOUS: [&str; 3] = ["train_error", "lamb", "hdisc"];

/// The categorical drawn from the record's classifier kind rather than its
/// tag map.
pub const KIND_FEATURE: &str = "kind";

/// One categorical feature and the level absorbed into the intercept.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Categorical {
    pub name: String,
    pub reference: String,
}

/// Declares which categorical features enter the design. The continuous
/// trio and the interaction family are fixed; only the categoricals (and
/// their reference levels) vary between studies.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DesignSpec {
    #[serde(default)]
    pub categorical: Vec<Categorical>,
}

impl DesignSpec {
    /// Parses and validates a spec from TOML text.
    pub fn from_toml(text: &str) -> Result<Self> {
        let spec: DesignSpec = toml::from_str(text)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string_pretty(self)?)
    }

    /// Rejects empty, duplicate, or reserved feature names.
    pub fn validate(&self) -> Result<()> {
        let mut seen = BTreeSet::new();
        for cat in &self.categorical {
            if cat.name.is_empty() {
                return Err(Error::InvalidConfig(
                    "categorical feature with empty name".to_string(),
                ));
            }
            if cat.reference.is_empty() {
                return Err(Error::InvalidConfig(format!(
                    "categorical {:?} has an empty reference level",
                    cat.name
                )));
            }
            if CONTINUOUS.contains(&cat.name.as_str()) || cat.name == "Intercept" {
                return Err(Error::InvalidConfig(format!(
                    "categorical name {:?} collides with a built-in design column",
                    cat.name
                )));
            }
            if !seen.insert(&cat.name) {
                return Err(Error::InvalidConfig(format!(
                    "categorical {:?} is declared twice",
                    cat.name
                )));
            }
        }
        Ok(())
    }
}

/// A ready-to-fit design: rows are experiments, columns are named features,
/// and the outcome is hdisc minus the observed error gap.
#[derive(Debug, Clone, PartialEq)]
pub struct Design {
    pub x: Array2<f64>,
    pub y: Array1<f64>,
    pub column_names: Vec<String>,
}

fn categorical_level<'r>(record: &'r ExperimentRecord, name: &str) -> Result<&'r str> {
    if name == KIND_FEATURE {
        return Ok(match record.kind {
            crate::classifier::Kind::Linear => "linear",
            crate::classifier::Kind::Fcn => "fcn",
        });
    }
    record.tags.get(name).map(String::as_str).ok_or_else(|| {
        Error::InvalidConfig(format!(
            "record {}/{} (seed {}) is missing categorical feature {:?}",
            record.source, record.target, record.seed, name
        ))
    })
}

fn dummy_name(feature: &str, level: &str) -> String {
    format!("{feature}[T.{level}]")
}

/// Builds the design matrix and outcome vector from experiment records.
///
/// Column order: intercept; each categorical's non-reference dummies
/// (levels sorted, categoricals in spec order); train_error, lamb, hdisc;
/// each dummy interacted with hdisc; then the fixed continuous family
/// hdisc:train_error, hdisc^2, train_error:hdisc^2, lamb:train_error,
/// lamb^2, train_error:lamb^2. Requires at least one more record than
/// columns and verifies full column rank numerically, naming the first
/// dependent column on failure.
pub fn build_design(records: &[&ExperimentRecord], spec: &DesignSpec) -> Result<Design> {
    spec.validate()?;

    // observed non-reference levels define the dummy columns
    let mut dummies: Vec<(usize, String, String)> = Vec::new();
    for (ci, cat) in spec.categorical.iter().enumerate() {
        let mut levels = BTreeSet::new();
        for record in records {
            let level = categorical_level(record, &cat.name)?;
            if level != cat.reference {
                levels.insert(level.to_string());
            }
        }
        for level in levels {
            dummies.push((ci, cat.name.clone(), level));
        }
    }

    let mut names: Vec<String> = vec!["Intercept".to_string()];
    names.extend(dummies.iter().map(|(_, f, l)| dummy_name(f, l)));
    names.extend(CONTINUOUS.iter().map(|s| s.to_string()));
    names.extend(
        dummies
            .iter()
            .map(|(_, f, l)| format!("{}:hdisc", dummy_name(f, l))),
    );
    names.extend(
        [
            "hdisc:train_error",
            "hdisc^2",
            "train_error:hdisc^2",
            "lamb:train_error",
            "lamb^2",
            "train_error:lamb^2",
        ]
        .iter()
        .map(|s| s.to_string()),
    );

    let p = names.len();
    if records.len() < p + 1 {
        return Err(Error::InvalidConfig(format!(
            "design with {} columns needs at least {} records, got {}",
            p,
            p + 1,
            records.len()
        )));
    }

    let mut x = Array2::zeros((records.len(), p));
    let mut y = Array1::zeros(records.len());
    for (i, record) in records.iter().enumerate() {
        let train = record.train_error;
        let lamb = record.adaptability_upper;
        let hdisc = record.stats.hdisc;
        for v in [train, lamb, hdisc, record.error_gap] {
            if !v.is_finite() {
                return Err(Error::InvalidDataset(format!(
                    "record {}/{} (seed {}) has a non-finite design value {v}",
                    record.source, record.target, record.seed
                )));
            }
        }

        let mut col = 0;
        let mut push = |x: &mut Array2<f64>, v: f64| {
            x[[i, col]] = v;
            col += 1;
        };
        push(&mut x, 1.0);
        let mut indicator = Vec::with_capacity(dummies.len());
        for (ci, name, level) in &dummies {
            let on = categorical_level(record, &spec.categorical[*ci].name)? == level;
            debug_assert_eq!(&spec.categorical[*ci].name, name);
            indicator.push(if on { 1.0 } else { 0.0 });
        }
        for &d in &indicator {
            push(&mut x, d);
        }
        push(&mut x, train);
        push(&mut x, lamb);
        push(&mut x, hdisc);
        for &d in &indicator {
            push(&mut x, d * hdisc);
        }
        push(&mut x, hdisc * train);
        push(&mut x, hdisc * hdisc);
        push(&mut x, train * hdisc * hdisc);
        push(&mut x, lamb * train);
        push(&mut x, lamb * lamb);
        push(&mut x, train * lamb * lamb);
        debug_assert_eq!(col, p);

        y[i] = hdisc - record.error_gap;
    }

    ols::check_full_rank(x.view(), &names)?;

    Ok(Design {
        x,
        y,
        column_names: names,
    })
}
