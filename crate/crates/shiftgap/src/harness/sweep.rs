//! Manifest-driven experiment sweeps: every declared (pair, classifier
//! kind, seed) combination becomes one record, computed in parallel and
//! written incrementally so a crash loses at most the in-flight record.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use ndarray::Axis;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classifier::{empirical_risk, train, Kind, TrainConfig};
use crate::dataset::{load_dataset, split_half, LabeledDataset};
use crate::discrepancy::{adaptability, hdiscrepancy};
use crate::error::{Error, Result};
use crate::harness::{
    content_hash, emit_report, ExperimentRecord, FailedRecord, RecordEntry, RecordsReport,
    StatsBlock,
};
use crate::rng::{record_seed, stage_seed};
use crate::twosample::{
    bbsd_statistic, energy_statistic, frs_statistic, median_bandwidth, mmd_statistic,
};

/// One source/target comparison. Same dataset name on both sides means the
/// dataset is split in half (within-distribution); different names compare
/// the two datasets wholesale (out-of-distribution). `tags` are copied onto
/// every record the pair produces.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairDecl {
    pub source: String,
    pub target: String,
    #[serde(default)]
    pub tags: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassifierSection {
    pub kinds: Vec<Kind>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeedSection {
    pub list: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub records: String,
}

/// A sweep declaration: named datasets (CSV paths relative to the manifest
/// file), the pairs to compare, classifier kinds, seeds, and where the
/// record report goes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub datasets: BTreeMap<String, String>,
    pub pairs: Vec<PairDecl>,
    pub classifiers: ClassifierSection,
    pub seeds: SeedSection,
    pub output: OutputSection,
}

impl Manifest {
    pub fn from_toml(text: &str) -> Result<Self> {
        let manifest: Manifest = toml::from_str(text)?;
        manifest.validate()?;
        Ok(manifest)
    }

    /// Structural checks: non-empty sections, unique seeds and kinds,
    /// every pair referencing a declared dataset, no duplicate pairs, and
    /// no user tag colliding with the reserved `dist` tag.
    pub fn validate(&self) -> Result<()> {
        if self.datasets.is_empty() {
            return Err(Error::InvalidConfig("manifest declares no datasets".into()));
        }
        if self.pairs.is_empty() {
            return Err(Error::InvalidConfig("manifest declares no pairs".into()));
        }
        if self.classifiers.kinds.is_empty() {
            return Err(Error::InvalidConfig(
                "manifest declares no classifier kinds".into(),
            ));
        }
        if self.seeds.list.is_empty() {
            return Err(Error::InvalidConfig("manifest declares no seeds".into()));
        }
        if self.output.records.is_empty() {
            return Err(Error::InvalidConfig("manifest output path is empty".into()));
        }
        let mut kinds = BTreeSet::new();
        for kind in &self.classifiers.kinds {
            if !kinds.insert(kind.to_string()) {
                return Err(Error::InvalidConfig(format!(
                    "classifier kind {kind} is listed twice"
                )));
            }
        }
        let mut seeds = BTreeSet::new();
        for seed in &self.seeds.list {
            if !seeds.insert(seed) {
                return Err(Error::InvalidConfig(format!("seed {seed} is listed twice")));
            }
        }
        let mut pair_ids = BTreeSet::new();
        for pair in &self.pairs {
            for name in [&pair.source, &pair.target] {
                if !self.datasets.contains_key(name) {
                    return Err(Error::InvalidConfig(format!(
                        "pair references undeclared dataset {name:?}"
                    )));
                }
            }
            if !pair_ids.insert((pair.source.clone(), pair.target.clone())) {
                return Err(Error::InvalidConfig(format!(
                    "pair {} -> {} is declared twice",
                    pair.source, pair.target
                )));
            }
            if pair.tags.contains_key("dist") {
                return Err(Error::InvalidConfig(
                    "the dist tag is assigned by the sweep and cannot be set manually".into(),
                ));
            }
        }
        Ok(())
    }
}

fn resolve(base: &Path, rel: &str) -> PathBuf {
    let p = Path::new(rel);
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

/// Record identities for one task; computable even when the data fails to
/// load, so failures carry the same ids a success would have.
fn split_ids(pair: &PairDecl) -> (String, String) {
    if pair.source == pair.target {
        (format!("{}#a", pair.source), format!("{}#b", pair.source))
    } else {
        (pair.source.clone(), pair.target.clone())
    }
}

fn run_one(
    pair: &PairDecl,
    kind: Kind,
    declared: u64,
    datasets: &BTreeMap<String, std::result::Result<LabeledDataset, String>>,
) -> Result<ExperimentRecord> {
    let fetch = |name: &str| -> Result<&LabeledDataset> {
        datasets
            .get(name)
            .expect("pair names validated against the dataset table")
            .as_ref()
            .map_err(|e| Error::InvalidDataset(format!("dataset {name:?}: {e}")))
    };

    let wd = pair.source == pair.target;
    let pair_id = format!("{}->{}", pair.source, pair.target);
    let composite = record_seed(declared, &pair_id, &kind.to_string());
    let (src_id, tgt_id) = split_ids(pair);

    let (source, target) = if wd {
        let (a, b) = split_half(fetch(&pair.source)?, stage_seed(composite, "split"))?;
        (a.retagged(&src_id), b.retagged(&tgt_id))
    } else {
        (
            fetch(&pair.source)?.clone().retagged(&src_id),
            fetch(&pair.target)?.clone().retagged(&tgt_id),
        )
    };

    let cfg = TrainConfig::with_seed(stage_seed(composite, "train"));
    let h = train(&source, kind, &cfg)?;
    let train_error = empirical_risk(&h, &source)?;
    let target_error = empirical_risk(&h, &target)?;

    let sx = source.features();
    let tx = target.features();
    let frs = frs_statistic(sx, tx)?.value;
    let energy = energy_statistic(sx, tx)?.value;
    let pooled = ndarray::concatenate(Axis(0), &[sx, tx])
        .map_err(|e| Error::ShapeMismatch(e.to_string()))?;
    let sigma = median_bandwidth(pooled.view(), stage_seed(composite, "mmd"))?;
    let mmd = mmd_statistic(sx, tx, sigma)?.value;
    let bbsd = bbsd_statistic(&h, sx, tx, stage_seed(composite, "bbsd"))?.value;

    let adversary_cfg = TrainConfig::with_seed(stage_seed(composite, "hdisc"));
    let hdisc = hdiscrepancy(&h, sx, tx, kind, &adversary_cfg)?.value;
    let adapt_cfg = TrainConfig::with_seed(stage_seed(composite, "adapt"));
    let adaptability_upper = adaptability(&source, &target, kind, &adapt_cfg)?;

    let mut tags = pair.tags.clone();
    tags.insert("dist".to_string(), if wd { "wd" } else { "ood" }.to_string());

    let record = ExperimentRecord {
        source: src_id,
        target: tgt_id,
        kind,
        seed: declared,
        stats: StatsBlock {
            frs,
            energy,
            mmd,
            bbsd,
            hdisc,
        },
        train_error,
        target_error,
        error_gap: (train_error - target_error).abs(),
        adaptability_upper,
        tags,
    };
    record.validate()?;
    Ok(record)
}

/// Runs every (pair, kind, seed) experiment a manifest declares.
///
/// Each record's randomness derives from a composite seed hashed from the
/// declared seed, the pair id, and the kind, so results are independent of
/// execution order; records carry the declared seed. Completed entries are
/// appended as JSON lines to `<records>.partial` while the sweep runs; the
/// sorted report is then written to the declared output path and the
/// partial file removed. Per-record failures become error entries and
/// never abort the sweep; the returned report includes them.
pub fn run_experiments(manifest_path: &Path) -> Result<RecordsReport> {
    let text = fs::read_to_string(manifest_path)?;
    let hash = content_hash(text.as_bytes());
    let manifest = Manifest::from_toml(&text)?;
    let base = manifest_path.parent().unwrap_or_else(|| Path::new("."));

    // load failures are remembered per dataset, not raised: only the tasks
    // touching a bad dataset should fail
    let datasets: BTreeMap<String, std::result::Result<LabeledDataset, String>> = manifest
        .datasets
        .iter()
        .map(|(name, rel)| {
            let loaded = load_dataset(resolve(base, rel)).map_err(|e| e.to_string());
            (name.clone(), loaded)
        })
        .collect();

    let mut tasks = Vec::new();
    for pair in &manifest.pairs {
        for &kind in &manifest.classifiers.kinds {
            for &seed in &manifest.seeds.list {
                tasks.push((pair, kind, seed));
            }
        }
    }

    let out_path = resolve(base, &manifest.output.records);
    if let Some(parent) = out_path.parent() {
        fs::create_dir_all(parent)?;
    }
    let partial_path = PathBuf::from(format!("{}.partial", out_path.display()));
    let sink = Mutex::new(std::io::BufWriter::new(fs::File::create(&partial_path)?));

    let entries: Vec<RecordEntry> = tasks
        .par_iter()
        .map(|&(pair, kind, seed)| {
            let entry = match run_one(pair, kind, seed, &datasets) {
                Ok(record) => RecordEntry::Ok(record),
                Err(e) => {
                    let (source, target) = split_ids(pair);
                    RecordEntry::Failed(FailedRecord {
                        source,
                        target,
                        kind,
                        seed,
                        error: e.to_string(),
                    })
                }
            };
            if let Ok(line) = serde_json::to_string(&entry) {
                let mut w = sink.lock().expect("sink lock");
                let _ = writeln!(w, "{line}");
                let _ = w.flush();
            }
            entry
        })
        .collect();

    let report = RecordsReport::new(hash, entries);
    emit_report(&report, &out_path)?;
    drop(sink);
    let _ = fs::remove_file(&partial_path);
    Ok(report)
}
