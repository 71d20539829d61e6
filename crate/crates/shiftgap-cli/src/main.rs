//! Command-line front end: dataset statistics, training, manifest sweeps,
//! correlation tables, regression reports, synthetic scenarios, and exact
//! sandwich-bound certificates, all emitting deterministic JSON.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{Parser, Subcommand, ValueEnum};
use ndarray::Axis;
use serde::Serialize;

use shiftgap::classifier::{save_model, train, Kind, TrainConfig};
use shiftgap::dataset::{load_dataset, save_dataset, synth_scenario, ScenarioKind};
use shiftgap::discrepancy::{certify_bound, hdiscrepancy, threshold_family, BoundCertificate, Hypothesis};
use shiftgap::harness::{
    correlate, load_records, report_to_json, run_experiments, CorrelationTable, SubsetDef,
};
use shiftgap::regression::{build_design, diagnostics, fit_design, DesignSpec, DiagnosticsReport, FitReport};
use shiftgap::rng::stage_seed;
use shiftgap::twosample::{
    bbsd_statistic, energy_statistic, frs_statistic, median_bandwidth, mmd_statistic,
};
use shiftgap::{Error, Result};

#[derive(Parser)]
#[command(name = "shiftgap", version, about = "Dataset-shift error-gap analysis")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum StatChoice {
    All,
    Frs,
    Energy,
    Mmd,
    Bbsd,
    Hdisc,
}

fn parse_kind(s: &str) -> std::result::Result<Kind, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_scenario(s: &str) -> std::result::Result<ScenarioKind, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

#[derive(Subcommand)]
enum Command {
    /// Two-sample statistics between a source and a target CSV
    Stats {
        source: PathBuf,
        target: PathBuf,
        /// Which statistic to compute
        #[arg(long, value_enum, default_value_t = StatChoice::All)]
        stat: StatChoice,
        /// Classifier kind for the model-based statistics
        #[arg(long, value_parser = parse_kind, default_value = "linear")]
        kind: Kind,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Write the JSON report here instead of stdout
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Train a classifier on a labeled CSV and save the model as JSON
    Train {
        data: PathBuf,
        #[arg(long, value_parser = parse_kind, default_value = "linear")]
        kind: Kind,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Model file to write
        #[arg(long)]
        out: PathBuf,
    },
    /// Run every experiment a manifest declares and write the record report
    Experiment { manifest: PathBuf },
    /// Correlation table of each statistic against the error gap
    Correlate {
        records: PathBuf,
        /// Comma-separated subsets: `all` or `tag=value` filters
        #[arg(long, default_value = "all,dist=wd,dist=ood")]
        subsets: String,
        /// Compare hdisc's correlation against each other statistic
        #[arg(long)]
        steiger: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fit the estimation-error regression and report diagnostics
    Regress {
        records: PathBuf,
        design: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate a synthetic shift scenario as source/target CSVs
    Synth {
        #[arg(long, value_parser = parse_scenario)]
        kind: ScenarioKind,
        /// Points per side
        #[arg(long)]
        n: usize,
        #[arg(long)]
        seed: u64,
        /// Directory for source.csv and target.csv
        #[arg(long)]
        out: PathBuf,
    },
    /// Exact sandwich-bound certificate over a threshold hypothesis family
    Certify {
        source: PathBuf,
        target: PathBuf,
        /// Hypothesis family; `thresholds` enumerates one-feature cuts
        #[arg(long, default_value = "thresholds")]
        hypotheses: String,
        /// Kind of the trained classifier being certified
        #[arg(long, value_parser = parse_kind, default_value = "linear")]
        kind: Kind,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    match run(cli.command) {
        Ok(code) => std::process::exit(code),
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(classify(&e));
        }
    }
}

/// Usage and configuration problems exit 1; data and numeric problems
/// exit 2. Sweeps that complete with per-record failures exit 3 from `run`.
fn classify(e: &Error) -> i32 {
    match e {
        Error::InvalidConfig(_) | Error::TomlParse(_) | Error::TomlEmit(_) => 1,
        _ => 2,
    }
}

fn deliver<T: Serialize>(value: &T, out: Option<&Path>) -> Result<()> {
    let text = report_to_json(value)?;
    match out {
        Some(path) => fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn run(command: Command) -> Result<i32> {
    match command {
        Command::Stats {
            source,
            target,
            stat,
            kind,
            seed,
            out,
        } => cmd_stats(&source, &target, stat, kind, seed, out.as_deref()),
        Command::Train {
            data,
            kind,
            seed,
            out,
        } => cmd_train(&data, kind, seed, &out),
        Command::Experiment { manifest } => cmd_experiment(&manifest),
        Command::Correlate {
            records,
            subsets,
            steiger,
            out,
        } => cmd_correlate(&records, &subsets, steiger, out.as_deref()),
        Command::Regress {
            records,
            design,
            out,
        } => cmd_regress(&records, &design, out.as_deref()),
        Command::Synth { kind, n, seed, out } => cmd_synth(kind, n, seed, &out),
        Command::Certify {
            source,
            target,
            hypotheses,
            kind,
            seed,
            out,
        } => cmd_certify(&source, &target, &hypotheses, kind, seed, out.as_deref()),
    }
}

#[derive(Serialize)]
struct StatsOutput {
    version: String,
    source: String,
    target: String,
    kind: String,
    seed: u64,
    values: BTreeMap<String, f64>,
}

fn cmd_stats(
    source_path: &Path,
    target_path: &Path,
    stat: StatChoice,
    kind: Kind,
    seed: u64,
    out: Option<&Path>,
) -> Result<i32> {
    let source = load_dataset(source_path)?;
    let target = load_dataset(target_path)?;
    let sx = source.features();
    let tx = target.features();
    let wants = |c: StatChoice| stat == StatChoice::All || stat == c;

    let mut values = BTreeMap::new();
    if wants(StatChoice::Frs) {
        values.insert("frs".to_string(), frs_statistic(sx, tx)?.value);
    }
    if wants(StatChoice::Energy) {
        values.insert("energy".to_string(), energy_statistic(sx, tx)?.value);
    }
    if wants(StatChoice::Mmd) {
        let pooled = ndarray::concatenate(Axis(0), &[sx, tx])
            .map_err(|e| Error::ShapeMismatch(e.to_string()))?;
        let sigma = median_bandwidth(pooled.view(), stage_seed(seed, "mmd"))?;
        values.insert("mmd".to_string(), mmd_statistic(sx, tx, sigma)?.value);
    }
    if wants(StatChoice::Bbsd) || wants(StatChoice::Hdisc) {
        let cfg = TrainConfig::with_seed(stage_seed(seed, "train"));
        let h = train(&source, kind, &cfg)?;
        if wants(StatChoice::Bbsd) {
            values.insert(
                "bbsd".to_string(),
                bbsd_statistic(&h, sx, tx, stage_seed(seed, "bbsd"))?.value,
            );
        }
        if wants(StatChoice::Hdisc) {
            let adversary_cfg = TrainConfig::with_seed(stage_seed(seed, "hdisc"));
            values.insert(
                "hdisc".to_string(),
                hdiscrepancy(&h, sx, tx, kind, &adversary_cfg)?.value,
            );
        }
    }

    let report = StatsOutput {
        version: env!("CARGO_PKG_VERSION").to_string(),
        source: source_path.display().to_string(),
        target: target_path.display().to_string(),
        kind: kind.to_string(),
        seed,
        values,
    };
    deliver(&report, out)?;
    Ok(0)
}

#[derive(Serialize)]
struct TrainOutput {
    version: String,
    data: String,
    kind: String,
    seed: u64,
    model: String,
    train_error: f64,
}

fn cmd_train(data_path: &Path, kind: Kind, seed: u64, out: &Path) -> Result<i32> {
    let ds = load_dataset(data_path)?;
    // same stage label as `stats`, so both produce the same model per seed
    let cfg = TrainConfig::with_seed(stage_seed(seed, "train"));
    let h = train(&ds, kind, &cfg)?;
    save_model(&h, out)?;
    let report = TrainOutput {
        version: env!("CARGO_PKG_VERSION").to_string(),
        data: data_path.display().to_string(),
        kind: kind.to_string(),
        seed,
        model: out.display().to_string(),
        train_error: shiftgap::classifier::empirical_risk(&h, &ds)?,
    };
    deliver(&report, None)?;
    Ok(0)
}

#[derive(Serialize)]
struct ExperimentOutput {
    version: String,
    manifest_hash: String,
    records: usize,
    failures: usize,
}

fn cmd_experiment(manifest: &Path) -> Result<i32> {
    let report = run_experiments(manifest)?;
    let failures = report.failure_count();
    let summary = ExperimentOutput {
        version: env!("CARGO_PKG_VERSION").to_string(),
        manifest_hash: report.manifest_hash.clone(),
        records: report.records.len(),
        failures,
    };
    deliver(&summary, None)?;
    Ok(if failures > 0 { 3 } else { 0 })
}

fn parse_subsets(spec: &str) -> Result<Vec<SubsetDef>> {
    let mut subsets = Vec::new();
    for item in spec.split(',') {
        let item = item.trim();
        if item.is_empty() {
            continue;
        }
        if item == "all" {
            subsets.push(SubsetDef::all());
        } else if let Some((key, value)) = item.split_once('=') {
            if key.is_empty() || value.is_empty() {
                return Err(Error::InvalidConfig(format!(
                    "subset filter {item:?} needs the form tag=value"
                )));
            }
            subsets.push(SubsetDef::tagged(key, value));
        } else {
            return Err(Error::InvalidConfig(format!(
                "subset {item:?} is neither `all` nor a tag=value filter"
            )));
        }
    }
    if subsets.is_empty() {
        return Err(Error::InvalidConfig("no subsets requested".to_string()));
    }
    Ok(subsets)
}

#[derive(Serialize)]
struct CorrelateOutput {
    version: String,
    manifest_hash: String,
    table: CorrelationTable,
}

fn cmd_correlate(records: &Path, subsets: &str, steiger: bool, out: Option<&Path>) -> Result<i32> {
    let subsets = parse_subsets(subsets)?;
    let report = load_records(records)?;
    let completed = report.completed();
    let table = correlate(&completed, &subsets, steiger);
    let output = CorrelateOutput {
        version: env!("CARGO_PKG_VERSION").to_string(),
        manifest_hash: report.manifest_hash.clone(),
        table,
    };
    deliver(&output, out)?;
    Ok(0)
}

#[derive(Serialize)]
struct RegressOutput {
    version: String,
    manifest_hash: String,
    fit: FitReport,
    diagnostics: DiagnosticsReport,
}

fn cmd_regress(records: &Path, design_path: &Path, out: Option<&Path>) -> Result<i32> {
    let report = load_records(records)?;
    let completed = report.completed();
    let spec = DesignSpec::from_toml(&fs::read_to_string(design_path)?)?;
    let design = build_design(&completed, &spec)?;
    let fit = fit_design(&design)?;
    let output = RegressOutput {
        version: env!("CARGO_PKG_VERSION").to_string(),
        manifest_hash: report.manifest_hash.clone(),
        diagnostics: diagnostics(&fit)?,
        fit: fit.report(),
    };
    deliver(&output, out)?;
    Ok(0)
}

#[derive(Serialize)]
struct SynthOutput {
    version: String,
    kind: String,
    n: usize,
    seed: u64,
    source: String,
    target: String,
}

fn cmd_synth(kind: ScenarioKind, n: usize, seed: u64, out_dir: &Path) -> Result<i32> {
    let pair = synth_scenario(kind, n, seed)?;
    fs::create_dir_all(out_dir)?;
    let source = out_dir.join("source.csv");
    let target = out_dir.join("target.csv");
    save_dataset(&pair.source, &source)?;
    save_dataset(&pair.target, &target)?;
    let report = SynthOutput {
        version: env!("CARGO_PKG_VERSION").to_string(),
        kind: kind.to_string(),
        n,
        seed,
        source: source.display().to_string(),
        target: target.display().to_string(),
    };
    deliver(&report, None)?;
    Ok(0)
}

#[derive(Serialize)]
struct CertifyOutput {
    version: String,
    source: String,
    target: String,
    hypotheses: String,
    family_size: usize,
    kind: String,
    seed: u64,
    certificate: BoundCertificate,
}

fn cmd_certify(
    source_path: &Path,
    target_path: &Path,
    hypotheses: &str,
    kind: Kind,
    seed: u64,
    out: Option<&Path>,
) -> Result<i32> {
    if hypotheses != "thresholds" {
        return Err(Error::InvalidConfig(format!(
            "unsupported hypothesis family {hypotheses:?}; only `thresholds` is available"
        )));
    }
    let source = load_dataset(source_path)?;
    let target = load_dataset(target_path)?;
    if source.num_classes() != 2 {
        return Err(Error::InvalidConfig(format!(
            "threshold certification needs binary labels, dataset has {} classes",
            source.num_classes()
        )));
    }
    let h = train(
        &source,
        kind,
        &TrainConfig::with_seed(stage_seed(seed, "train")),
    )?;
    let pooled = ndarray::concatenate(Axis(0), &[source.features(), target.features()])
        .map_err(|e| Error::ShapeMismatch(e.to_string()))?;
    let family = threshold_family(pooled.view())?;
    let refs: Vec<&dyn Hypothesis> = family.iter().map(|r| r as &dyn Hypothesis).collect();
    let certificate = certify_bound(&h, &source, &target, &refs)?;
    let report = CertifyOutput {
        version: env!("CARGO_PKG_VERSION").to_string(),
        source: source_path.display().to_string(),
        target: target_path.display().to_string(),
        hypotheses: hypotheses.to_string(),
        family_size: family.len(),
        kind: kind.to_string(),
        seed,
        certificate,
    };
    deliver(&report, out)?;
    Ok(0)
}
