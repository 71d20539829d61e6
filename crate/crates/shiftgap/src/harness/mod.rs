//! Experiment orchestration: records of (source, target, classifier) runs,
//! correlation tables over them, manifest-driven sweeps, and deterministic
//! JSON reports.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::classifier::Kind;
use crate::error::{Error, Result};

pub mod corr;
pub mod sweep;

pub use sweep::{run_experiments, Manifest, PairDecl};

pub use corr::{
    correlate, normal_cdf, normal_quantile, pearson, spearman, steiger_test, CorrCell,
    CorrelationTable, SteigerCell, SubsetDef, SubsetResult,
};

/// The five two-sample statistics measured for one experiment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StatsBlock {
    pub frs: f64,
    pub energy: f64,
    pub mmd: f64,
    pub bbsd: f64,
    pub hdisc: f64,
}

impl StatsBlock {
    /// Statistic value by report name.
    pub fn get(&self, name: &str) -> Option<f64> {
        match name {
            "frs" => Some(self.frs),
            "energy" => Some(self.energy),
            "mmd" => Some(self.mmd),
            "bbsd" => Some(self.bbsd),
            "hdisc" => Some(self.hdisc),
            _ => None,
        }
    }

    /// Report-order statistic names.
    pub const NAMES: [&'static str; 5] = ["frs", "energy", "mmd", "bbsd", "hdisc"];
}

/// One completed (source, target, classifier, seed) experiment.
///
/// `tags` carries the categorical labels downstream analyses group by
/// (dataset group, encoding, news/not-news, within-/out-of-distribution);
/// a sorted map keeps report output deterministic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRecord {
    pub source: String,
    pub target: String,
    pub kind: Kind,
    pub seed: u64,
    pub stats: StatsBlock,
    pub train_error: f64,
    pub target_error: f64,
    pub error_gap: f64,
    pub adaptability_upper: f64,
    pub tags: BTreeMap<String, String>,
}

impl ExperimentRecord {
    /// Checks the cross-field invariants a well-formed record satisfies.
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("frs", self.stats.frs),
            ("energy", self.stats.energy),
            ("mmd", self.stats.mmd),
            ("bbsd", self.stats.bbsd),
            ("hdisc", self.stats.hdisc),
            ("train_error", self.train_error),
            ("target_error", self.target_error),
            ("error_gap", self.error_gap),
            ("adaptability_upper", self.adaptability_upper),
        ];
        for (name, v) in fields {
            if !v.is_finite() {
                return Err(Error::InvalidDataset(format!(
                    "record {}/{} has non-finite {name} {v}",
                    self.source, self.target
                )));
            }
        }
        if !(0.0..=1.0).contains(&self.stats.hdisc) {
            return Err(Error::InvalidDataset(format!(
                "record {}/{} has hdisc {} outside [0, 1]",
                self.source, self.target, self.stats.hdisc
            )));
        }
        let gap = (self.train_error - self.target_error).abs();
        if (self.error_gap - gap).abs() > 1e-12 {
            return Err(Error::InvalidDataset(format!(
                "record {}/{} error_gap {} does not match |{} - {}|",
                self.source, self.target, self.error_gap, self.train_error, self.target_error
            )));
        }
        Ok(())
    }
}

/// Identity of a failed experiment plus what went wrong. Sweeps record these
/// instead of aborting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailedRecord {
    pub source: String,
    pub target: String,
    pub kind: Kind,
    pub seed: u64,
    pub error: String,
}

/// One row of a sweep report: a completed record or a tagged failure.
///
/// Serialized untagged; the presence of `stats` distinguishes the variants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RecordEntry {
    Ok(ExperimentRecord),
    Failed(FailedRecord),
}

impl RecordEntry {
    /// Stable identity used to sort report rows.
    pub fn sort_key(&self) -> (String, String, String, u64) {
        match self {
            RecordEntry::Ok(r) => (
                r.source.clone(),
                r.target.clone(),
                r.kind.to_string(),
                r.seed,
            ),
            RecordEntry::Failed(f) => (
                f.source.clone(),
                f.target.clone(),
                f.kind.to_string(),
                f.seed,
            ),
        }
    }

    pub fn as_ok(&self) -> Option<&ExperimentRecord> {
        match self {
            RecordEntry::Ok(r) => Some(r),
            RecordEntry::Failed(_) => None,
        }
    }
}

/// Top-level sweep report document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordsReport {
    pub version: String,
    pub manifest_hash: String,
    pub records: Vec<RecordEntry>,
}

impl RecordsReport {
    /// Assembles a report: rows sorted by (source, target, kind, seed) so
    /// output is independent of completion order.
    pub fn new(manifest_hash: impl Into<String>, mut records: Vec<RecordEntry>) -> Self {
        records.sort_by_key(RecordEntry::sort_key);
        RecordsReport {
            version: env!("CARGO_PKG_VERSION").to_string(),
            manifest_hash: manifest_hash.into(),
            records,
        }
    }

    /// The successfully completed records, in report order.
    pub fn completed(&self) -> Vec<&ExperimentRecord> {
        self.records.iter().filter_map(RecordEntry::as_ok).collect()
    }

    pub fn failure_count(&self) -> usize {
        self.records.len() - self.completed().len()
    }
}

/// Parses and validates a records report from JSON text.
pub fn records_from_json(text: &str) -> Result<RecordsReport> {
    let report: RecordsReport = serde_json::from_str(text)?;
    for entry in &report.records {
        if let RecordEntry::Ok(r) = entry {
            r.validate()?;
        }
    }
    Ok(report)
}

/// Serializes any report document compactly with a trailing newline.
///
/// Struct fields and sorted maps serialize in a fixed order, so equal values
/// produce byte-identical text.
pub fn report_to_json<T: Serialize>(report: &T) -> Result<String> {
    let mut text = serde_json::to_string(report)?;
    text.push('\n');
    Ok(text)
}

/// Writes a report document to a file.
pub fn emit_report<T: Serialize>(report: &T, path: &std::path::Path) -> Result<()> {
    std::fs::write(path, report_to_json(report)?)?;
    Ok(())
}

/// Reads and validates a records report from a file.
pub fn load_records(path: &std::path::Path) -> Result<RecordsReport> {
    records_from_json(&std::fs::read_to_string(path)?)
}

/// SHA-256 of a byte string, hex-encoded; reports carry this for the inputs
/// they were derived from.
pub fn content_hash(bytes: &[u8]) -> String {
    use sha2::{Digest, Sha256};
    let digest = Sha256::digest(bytes);
    let mut out = String::with_capacity(64);
    for b in digest {
        out.push_str(&format!("{b:02x}"));
    }
    out
}
