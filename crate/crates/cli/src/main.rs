//! `hbac`: bias audits with hierarchical bias-aware clustering.
//!
//! Subcommands:
//!
//! - `audit`: ingest a CSV with a TOML schema, choose `n_min` by
//!   cross-validation on the fit split, cluster, and test every cluster on the
//!   held-out split.
//! - `simulate`: run a seeded simulation campaign.
//! - `duo-demo`: synthesize a scored student cohort and audit it.
//! - `assign`: assign new rows to the clusters of a saved partition.
//!
//! Exit status is 0 when every output file was written, 1 for data or usage
//! errors and 2 for internal errors. Failures print a JSON error record on
//! stderr. Output files are written to a temporary file in the output
//! directory and renamed into place.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use hbac_core::audit::write_assignments;
use hbac_core::duo::{read_r2, synth_cohort, CohortMix, RiskTables};
use hbac_core::io::{read_csv_path, RowFilter, SchemaConfig};
use hbac_core::simulation::{run_campaign, CampaignSettings, Experiment, Scenario, SimConfig};
use hbac_core::{
    assign_all, one_hot_expand, run_audit, AuditConfig, AuditOutcome, Correction, NMinGrid, Partition, Splitter,
};

#[derive(Debug, Parser)]
#[command(name = "hbac", version, about = "Hierarchical bias-aware clustering for algorithm audits")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Audit a dataset for clusters with a deviating bias metric.
    Audit(AuditArgs),
    /// Run a seeded simulation campaign.
    Simulate(SimulateArgs),
    /// Synthesize a scored student cohort and audit its high-risk label.
    DuoDemo(DuoArgs),
    /// Assign rows of a CSV to the clusters of a saved partition.
    Assign(AssignArgs),
}

#[derive(Debug, Args)]
struct AuditOptions {
    /// Splitting algorithm, kmeans or kmodes.
    #[arg(long, default_value = "kmeans")]
    splitter: Splitter,
    /// Candidate `n_min` values as fractions of the fit split (comma separated).
    #[arg(long, value_delimiter = ',', conflicts_with = "grid")]
    grid_fractions: Option<Vec<f64>>,
    /// Candidate `n_min` values as absolute row counts (comma separated).
    #[arg(long, value_delimiter = ',')]
    grid: Option<Vec<usize>>,
    #[arg(long, default_value_t = 5)]
    folds: usize,
    #[arg(long, default_value_t = 0.2)]
    test_fraction: f64,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    /// Multiple-testing correction, bonferroni or none.
    #[arg(long, default_value = "bonferroni")]
    correction: Correction,
    #[arg(long, env = "HBAC_SEED", default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1000)]
    max_iterations: usize,
}

impl AuditOptions {
    fn config(&self, metric: &str) -> AuditConfig {
        let grid = match (&self.grid, &self.grid_fractions) {
            (Some(g), _) => NMinGrid::Absolute(g.clone()),
            (None, Some(f)) => NMinGrid::Fractions(f.clone()),
            (None, None) => NMinGrid::default(),
        };
        AuditConfig {
            metric: metric.into(),
            splitter: self.splitter,
            grid,
            folds: self.folds,
            test_fraction: self.test_fraction,
            alpha: self.alpha,
            correction: self.correction,
            seed: self.seed,
            max_iterations: self.max_iterations,
        }
    }
}

#[derive(Debug, Args)]
struct AuditArgs {
    /// CSV file with a header row.
    #[arg(long)]
    input: PathBuf,
    /// TOML schema naming the feature columns and the metric column.
    #[arg(long)]
    schema: PathBuf,
    /// Metric column, overriding the one named in the schema.
    #[arg(long)]
    metric: Option<String>,
    /// Drop rows with empty cells instead of failing.
    #[arg(long)]
    drop_missing: bool,
    /// Drop rows whose `column` equals `value`; may be repeated.
    #[arg(long, value_name = "COLUMN=VALUE", value_parser = parse_exclude)]
    exclude: Vec<(String, String)>,
    #[command(flatten)]
    options: AuditOptions,
    #[arg(long, default_value = "hbac-out")]
    out_dir: PathBuf,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    /// insample_vs_oos, bonferroni_effect, perm_vs_t or accuracy_perm.
    experiment: Experiment,
    /// Bias scenario: constant (1) or linear (2).
    #[arg(long, default_value = "constant")]
    scenario: Scenario,
    #[arg(long, default_value_t = 5)]
    k: usize,
    #[arg(long, default_value_t = 1000)]
    n: usize,
    #[arg(long, default_value_t = 2)]
    d: usize,
    #[arg(long, default_value_t = 200)]
    sims: usize,
    #[arg(long, default_value_t = 199)]
    n_perm: usize,
    #[arg(long, default_value_t = 80)]
    n_min: usize,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    #[arg(long, default_value_t = 0.2)]
    test_fraction: f64,
    #[arg(long, env = "HBAC_SEED", default_value_t = 0)]
    seed: u64,
    /// Use predicted probabilities as the metric in perm_vs_t.
    #[arg(long)]
    probability_metric: bool,
    /// Refit the clustering on every permutation.
    #[arg(long)]
    refit_per_permutation: bool,
    #[arg(long, default_value = "hbac-sim")]
    out_dir: PathBuf,
}

#[derive(Debug, Args)]
struct DuoArgs {
    /// TOML cohort mix with `[[entry]]` tables.
    #[arg(long)]
    cohort: PathBuf,
    /// R2 table (age band by distance band) as CSV.
    #[arg(long)]
    r2: PathBuf,
    /// Number of students to draw.
    #[arg(long, default_value_t = 2000)]
    n: usize,
    #[arg(long, default_value = "kmodes")]
    splitter: Splitter,
    #[arg(long, default_value_t = 0.2)]
    test_fraction: f64,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    #[arg(long, env = "HBAC_SEED", default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "hbac-duo")]
    out_dir: PathBuf,
}

#[derive(Debug, Args)]
struct AssignArgs {
    /// `partition.json` written by `audit` or `duo-demo`.
    #[arg(long)]
    partition: PathBuf,
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    schema: PathBuf,
    #[arg(long)]
    drop_missing: bool,
    /// Output CSV with `row_id,cluster,metric`.
    #[arg(long)]
    out: PathBuf,
}

fn parse_exclude(s: &str) -> std::result::Result<(String, String), String> {
    let (column, value) = s.split_once('=').ok_or_else(|| format!("expected COLUMN=VALUE, got {s:?}"))?;
    Ok((column.trim().to_string(), value.to_string()))
}

/// Writes `contents` to `path` through a temporary file in the same directory.
fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

/// Renders every file first so that a failure leaves no partial output.
fn write_outputs(dir: &Path, files: Vec<(&str, Vec<u8>)>) -> Result<()> {
    for (name, contents) in files {
        write_atomic(&dir.join(name), &contents)?;
    }
    Ok(())
}

fn audit_files(outcome: &AuditOutcome, row_ids: Option<&[String]>) -> Result<Vec<(&'static str, Vec<u8>)>> {
    let mut assignments = Vec::new();
    write_assignments(&mut assignments, &outcome.assignments, row_ids)?;
    Ok(vec![
        ("report.json", outcome.report.to_json()?.into_bytes()),
        ("report.txt", outcome.report.to_text().into_bytes()),
        ("assignments.csv", assignments),
        ("partition.json", (outcome.partition.to_json()? + "\n").into_bytes()),
    ])
}

fn cmd_audit(args: AuditArgs) -> Result<()> {
    let mut schema = SchemaConfig::load(&args.schema)?;
    if let Some(metric) = &args.metric {
        schema.metric = metric.clone();
    }
    let filter = RowFilter { drop_missing: args.drop_missing, exclude: args.exclude.clone() };
    let ingested = read_csv_path(&args.input, &schema, &filter)?;
    if ingested.dropped > 0 {
        log::info!("dropped {} rows", ingested.dropped);
    }
    let config = args.options.config(&schema.metric);
    let outcome = run_audit(&ingested.dataset, &config)?;
    let row_ids: Vec<String> = ingested.row_ids.iter().map(usize::to_string).collect();
    write_outputs(&args.out_dir, audit_files(&outcome, Some(&row_ids))?)?;
    print!("{}", outcome.report.to_text());
    Ok(())
}

fn cmd_simulate(args: SimulateArgs) -> Result<()> {
    let config = SimConfig::new(args.k, args.n, args.d, args.scenario, args.experiment.label_mode());
    let settings = CampaignSettings {
        test_fraction: args.test_fraction,
        n_min: args.n_min,
        n_perm: args.n_perm,
        probability_metric: args.probability_metric,
        refit_per_permutation: args.refit_per_permutation,
        ..CampaignSettings::default()
    };
    let result = run_campaign(args.experiment, &config, &settings, args.sims, args.alpha, args.seed)?;
    let mut records = Vec::new();
    result.write_csv(&mut records)?;
    let mut ranks = Vec::new();
    result.write_rank_csv(&mut ranks)?;
    let text = result.summary_text();
    write_outputs(
        &args.out_dir,
        vec![
            ("summary.json", result.to_json()?.into_bytes()),
            ("summary.txt", text.clone().into_bytes()),
            ("records.csv", records),
            ("ranks.csv", ranks),
        ],
    )?;
    print!("{text}");
    Ok(())
}

/// Original column name and its `(feature index, category)` pairs.
type Group<'a> = (&'a str, Vec<(usize, &'a str)>);

/// Percentage of each cluster's fit rows in every category, grouped by the
/// original column.
fn composition_text(outcome: &AuditOutcome) -> String {
    let p = &outcome.report.partition;
    let mut groups: BTreeMap<usize, Group<'_>> = BTreeMap::new();
    let mut order: Vec<&str> = Vec::new();
    for (j, name) in p.feature_names.iter().enumerate() {
        let (column, value) = name.split_once('=').unwrap_or((name.as_str(), ""));
        let g = order.iter().position(|&c| c == column).unwrap_or_else(|| {
            order.push(column);
            order.len() - 1
        });
        groups.entry(g).or_insert((column, Vec::new())).1.push((j, value));
    }
    let mut out = String::new();
    let _ = writeln!(out, "Student characteristics per cluster (% of fit rows)");
    let header: Vec<String> = p.clusters.iter().map(|c| format!("{:>9}", format!("cluster {}", c.cluster))).collect();
    for (column, values) in groups.values() {
        let _ = writeln!(out);
        let _ = writeln!(out, "{column:<12} | {}", header.join(" | "));
        for &(j, value) in values {
            let cells: Vec<String> =
                p.clusters.iter().map(|c| format!("{:>9.1}", 100.0 * c.feature_means[j])).collect();
            let _ = writeln!(out, "{value:<12} | {}", cells.join(" | "));
        }
    }
    out
}

fn cmd_duo_demo(args: DuoArgs) -> Result<()> {
    let mix = CohortMix::load(&args.cohort).with_context(|| format!("reading cohort {}", args.cohort.display()))?;
    let r2 =
        read_r2(std::fs::File::open(&args.r2).with_context(|| format!("opening R2 table {}", args.r2.display()))?)?;
    let tables = RiskTables::new(r2);
    let cohort = synth_cohort(args.n, &mix, &tables, args.seed)?;
    let config = AuditConfig {
        metric: "high_risk".into(),
        splitter: args.splitter,
        test_fraction: args.test_fraction,
        alpha: args.alpha,
        seed: args.seed,
        ..AuditConfig::default()
    };
    let outcome = run_audit(&cohort.categorical, &config)?;
    let composition = composition_text(&outcome);
    let mut files = audit_files(&outcome, None)?;
    files.push(("composition.txt", composition.clone().into_bytes()));
    write_outputs(&args.out_dir, files)?;
    print!("{}\n{composition}", outcome.report.to_text());
    Ok(())
}

fn cmd_assign(args: AssignArgs) -> Result<()> {
    let partition = Partition::from_json(&std::fs::read_to_string(&args.partition)?)?;
    let schema = SchemaConfig::load(&args.schema)?;
    let filter = RowFilter { drop_missing: args.drop_missing, exclude: Vec::new() };
    let ingested = read_csv_path(&args.input, &schema, &filter)?;
    let data =
        if ingested.dataset.schema().has_categorical() { one_hot_expand(&ingested.dataset) } else { ingested.dataset };
    if data.schema().names() != partition.feature_names {
        return Err(hbac_core::Error::SchemaMismatch(format!(
            "partition was fit on features {:?}, input has {:?}",
            partition.feature_names,
            data.schema().names()
        ))
        .into());
    }
    let labels = assign_all(&partition, &data)?;
    let mut out = String::from("row_id,cluster,metric\n");
    for ((id, c), m) in ingested.row_ids.iter().zip(&labels).zip(data.metric()) {
        let _ = writeln!(out, "{id},{},{m}", c + 1);
    }
    write_atomic(&args.out, out.as_bytes())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Audit(a) => cmd_audit(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::DuoDemo(a) => cmd_duo_demo(a),
        Command::Assign(a) => cmd_assign(a),
    }
}

fn error_record(err: &anyhow::Error) -> (u8, serde_json::Value) {
    let core = err.chain().find_map(|e| e.downcast_ref::<hbac_core::Error>());
    let (code, kind) = match core {
        Some(e) if e.is_data_error() => (1, e.kind()),
        Some(hbac_core::Error::Io(io)) if io.kind() == std::io::ErrorKind::NotFound => (1, "io"),
        Some(e) => (2, e.kind()),
        None => match err.chain().find_map(|e| e.downcast_ref::<std::io::Error>()) {
            Some(io) if io.kind() == std::io::ErrorKind::NotFound => (1, "io"),
            _ => (2, "internal"),
        },
    };
    let chain: Vec<String> = err.chain().map(ToString::to_string).collect();
    (code, serde_json::json!({ "error": kind, "message": chain.join(": "), "exit_code": code }))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(1);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            let (code, record) = error_record(&err);
            eprintln!("{record}");
            ExitCode::from(code)
        }
    }
}
