//! The end-to-end audit: split, choose `n_min`, fit, test, report.

use std::fmt::Write as _;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::clustering::{assign_all, fit_hbac, HbacConfig, Partition, Splitter};
use crate::data::{one_hot_expand, validate, Dataset, MetricKind};
use crate::error::{Error, Result};
use crate::model_selection::{select_n_min, SelectionResult};
use crate::split::split_sample;
use crate::stats::{test_clusters, Correction, SplitSummary, TestReport};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Default `n_min` candidates as fractions of the fit split.
pub const DEFAULT_GRID_FRACTIONS: [f64; 4] = [0.02, 0.04, 0.08, 0.12];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "values", rename_all = "snake_case")]
pub enum NMinGrid {
    /// Fractions of the number of fit rows, rounded to the nearest row.
    Fractions(Vec<f64>),
    Absolute(Vec<usize>),
}

impl Default for NMinGrid {
    fn default() -> Self {
        NMinGrid::Fractions(DEFAULT_GRID_FRACTIONS.to_vec())
    }
}

impl NMinGrid {
    pub fn resolve(&self, n_fit: usize) -> Result<Vec<usize>> {
        let grid: Vec<usize> = match self {
            NMinGrid::Fractions(f) => {
                if let Some(bad) = f.iter().find(|&&x| !(x > 0.0 && x < 0.5)) {
                    return Err(Error::InvalidConfig(format!("grid fraction {bad} must lie in (0, 0.5)")));
                }
                f.iter().map(|&x| ((x * n_fit as f64).round() as usize).max(1)).collect()
            }
            NMinGrid::Absolute(v) => v.clone(),
        };
        if grid.is_empty() {
            return Err(Error::InvalidConfig("n_min grid is empty".into()));
        }
        Ok(grid)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditConfig {
    /// Display name of the bias metric.
    pub metric: String,
    pub splitter: Splitter,
    pub grid: NMinGrid,
    pub folds: usize,
    pub test_fraction: f64,
    pub alpha: f64,
    pub correction: Correction,
    pub seed: u64,
    pub max_iterations: usize,
}

impl Default for AuditConfig {
    fn default() -> Self {
        Self {
            metric: "metric".into(),
            splitter: Splitter::KMeans,
            grid: NMinGrid::default(),
            folds: 5,
            test_fraction: 0.2,
            alpha: 0.05,
            correction: Correction::Bonferroni,
            seed: 0,
            max_iterations: 1000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterSummary {
    /// 1-based, ordered by fit-split metric mean, highest first.
    pub cluster: usize,
    pub n_fit: usize,
    pub n_test: usize,
    pub metric_mean: f64,
    pub metric_std: f64,
    pub centroid: Vec<f64>,
    /// Mean of every feature over the cluster's fit rows.
    pub feature_means: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionSummary {
    pub k: usize,
    pub n_min: usize,
    pub feature_names: Vec<String>,
    pub clusters: Vec<ClusterSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub tool: String,
    pub version: String,
    pub seed: u64,
    /// SHA-256 of the input dataset content.
    pub data_sha256: String,
    pub n_rows: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub config: AuditConfig,
    pub selection: SelectionResult,
    pub partition: PartitionSummary,
    pub tests: TestReport,
    pub provenance: Provenance,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitRole {
    Fit,
    Test,
}

impl SplitRole {
    pub fn name(self) -> &'static str {
        match self {
            SplitRole::Fit => "fit",
            SplitRole::Test => "test",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RowAssignment {
    pub row: usize,
    pub split: SplitRole,
    /// 1-based cluster number.
    pub cluster: usize,
    pub metric: f64,
}

#[derive(Debug, Clone)]
pub struct AuditOutcome {
    pub report: AuditReport,
    pub partition: Partition,
    /// One entry per input row, in input order.
    pub assignments: Vec<RowAssignment>,
}

/// Runs the full audit on `dataset`.
///
/// Categorical columns are one-hot expanded. `n_min` is chosen by
/// cross-validation on the fit split only; the test split is used once, for
/// the per-cluster tests.
pub fn run_audit(dataset: &Dataset, config: &AuditConfig) -> Result<AuditOutcome> {
    validate(dataset).into_result()?;
    let data = if dataset.schema().has_categorical() { one_hot_expand(dataset) } else { dataset.clone() };
    let n = data.len();
    let split = split_sample(n, config.test_fraction, config.seed)?;
    let fit = data.subset(&split.train);
    let test = data.subset(&split.test);

    let grid = config.grid.resolve(fit.len())?;
    let base = HbacConfig::new(1, config.splitter).with_seed(config.seed).with_max_iterations(config.max_iterations);
    let selection = select_n_min(&fit, &grid, config.folds, &base)?;
    let hbac = HbacConfig { n_min: selection.chosen, ..base };
    let partition = fit_hbac(&fit, &hbac)?;

    let mut tests = test_clusters(&partition, &test, config.alpha, config.correction)?;
    tests.split_info =
        Some(SplitSummary { n_fit: fit.len(), n_test: test.len(), fraction: config.test_fraction, seed: config.seed });

    let fit_labels = partition.labels();
    let test_labels = assign_all(&partition, &test)?;
    let mut assignments: Vec<Option<RowAssignment>> = vec![None; n];
    for (role, rows, labels) in
        [(SplitRole::Fit, &split.train, &fit_labels), (SplitRole::Test, &split.test, &test_labels)]
    {
        for (&row, &c) in rows.iter().zip(labels.iter()) {
            assignments[row] = Some(RowAssignment { row, split: role, cluster: c + 1, metric: data.metric()[row] });
        }
    }
    let assignments: Vec<RowAssignment> =
        assignments.into_iter().map(|a| a.expect("every row is fit or test")).collect();

    let d = fit.rows().ncols();
    let clusters = partition
        .clusters
        .iter()
        .enumerate()
        .map(|(c, cl)| {
            let mut means = vec![0.0; d];
            for &i in &cl.member_indices {
                for (m, v) in means.iter_mut().zip(fit.row(i)) {
                    *m += v;
                }
            }
            let len = cl.member_indices.len().max(1) as f64;
            means.iter_mut().for_each(|m| *m /= len);
            ClusterSummary {
                cluster: c + 1,
                n_fit: cl.member_indices.len(),
                n_test: test_labels.iter().filter(|&&l| l == c).count(),
                metric_mean: cl.metric_mean,
                metric_std: cl.metric_std,
                centroid: cl.centroid.values.clone(),
                feature_means: means,
            }
        })
        .collect();
    let summary =
        PartitionSummary { k: partition.k(), n_min: selection.chosen, feature_names: data.schema().names(), clusters };
    let provenance = Provenance {
        tool: "hbac".into(),
        version: VERSION.into(),
        seed: config.seed,
        data_sha256: dataset.content_hash(),
        n_rows: n,
    };
    let report = AuditReport { config: config.clone(), selection, partition: summary, tests, provenance };
    Ok(AuditOutcome { report, partition, assignments })
}

fn format_p(p: Option<f64>) -> String {
    match p {
        None => "n/a".into(),
        Some(p) if p < 1e-16 => "<1e-16".into(),
        Some(p) if p < 1e-3 => format!("{p:.2e}"),
        Some(p) => format!("{p:.4}"),
    }
}

impl AuditReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    fn is_binary(&self) -> bool {
        self.tests.tests.first().is_some_and(|t| t.test_kind == crate::stats::TestKind::Chi2)
    }

    /// Human-readable test table and cluster characteristics.
    pub fn to_text(&self) -> String {
        let binary = self.is_binary() || self.partition.clusters.is_empty();
        let (scale, unit) = if binary { (100.0, " (%)") } else { (1.0, "") };
        let m = &self.config.metric;
        let mut out = String::new();
        let _ = writeln!(
            out,
            "HBAC audit | {} rows | fit {} / test {} | n_min {} | {} clusters | seed {}",
            self.provenance.n_rows,
            self.tests.split_info.as_ref().map_or(0, |s| s.n_fit),
            self.tests.split_info.as_ref().map_or(0, |s| s.n_test),
            self.partition.n_min,
            self.partition.k,
            self.provenance.seed
        );
        let correction = match self.tests.correction {
            Correction::Bonferroni => "Bonferroni",
            Correction::None => "uncorrected",
        };
        let _ = writeln!(out);
        let _ = writeln!(
            out,
            "Cluster | n in cluster | {m}{unit} in cluster | {m}{unit} outside cluster | Difference{unit} | P-value | P-value ({correction})"
        );
        for t in &self.tests.tests {
            let _ = writeln!(
                out,
                "{} | {} | {:.2} | {:.2} | {:.2} | {} | {}",
                t.cluster_index + 1,
                t.n_in,
                t.mean_in * scale,
                t.mean_out * scale,
                t.difference * scale,
                format_p(t.p_raw),
                format_p(t.p_adjusted),
            );
        }
        if self.tests.tests.is_empty() {
            let _ = writeln!(out, "(a single cluster was found; nothing to test)");
        }
        let _ = writeln!(out);
        let _ = writeln!(out, "Characteristics per cluster (mean over fit rows)");
        let header: Vec<String> = self.partition.clusters.iter().map(|c| format!("cluster {}", c.cluster)).collect();
        let width = self.partition.feature_names.iter().map(String::len).max().unwrap_or(7).max(7);
        let _ = writeln!(out, "{:<width$} | {}", "feature", header.join(" | "));
        for (j, name) in self.partition.feature_names.iter().enumerate() {
            let cells: Vec<String> =
                self.partition.clusters.iter().map(|c| format!("{:>9.3}", c.feature_means[j])).collect();
            let _ = writeln!(out, "{name:<width$} | {}", cells.join(" | "));
        }
        out
    }
}

/// Writes `row_id,split,cluster,metric`; `row_ids` defaults to row indices.
pub fn write_assignments<W: Write>(writer: W, assignments: &[RowAssignment], row_ids: Option<&[String]>) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["row_id", "split", "cluster", "metric"])?;
    for a in assignments {
        let id = row_ids.map_or_else(|| a.row.to_string(), |ids| ids[a.row].clone());
        w.write_record([id, a.split.name().to_string(), a.cluster.to_string(), a.metric.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Metric kind of the audit's tests.
pub fn metric_kind_name(kind: MetricKind) -> &'static str {
    match kind {
        MetricKind::Binary => "binary",
        MetricKind::Continuous => "continuous",
    }
}
