//! Seeded Monte Carlo campaigns: generate, split, fit HBAC, test, aggregate.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write;

use ndarray::{Array2, ArrayView2};
use rand::seq::SliceRandom;
use rand::RngCore;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::generate::{draw_params, gen_features, gen_labels, gen_metric, LabelMode, Scenario, SimConfig};
use super::logistic::{metric_from_model, train_logistic, LogisticTrainer, MetricSource, DEFAULT_L2};
use crate::clustering::{assign_all, fit_hbac, HbacConfig, Partition, Splitter};
use crate::data::{Dataset, FeatureSchema, MetricKind};
use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::split::split_sample;
use crate::stats::{
    cluster_abs_differences, permutation_cluster_tests, permutation_p_value, permutation_test, test_assignment,
    ClusterTest, Correction, PermutationOutcome, TestKind, MIN_PERMUTATIONS,
};

const SPLIT_STREAM: u64 = u64::MAX;
const HBAC_STREAM: u64 = u64::MAX - 1;
const PERM_STREAM: u64 = u64::MAX - 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    InsampleVsOos,
    BonferroniEffect,
    PermVsT,
    AccuracyPerm,
}

impl Experiment {
    pub const ALL: [Experiment; 4] =
        [Experiment::InsampleVsOos, Experiment::BonferroniEffect, Experiment::PermVsT, Experiment::AccuracyPerm];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::InsampleVsOos => "insample_vs_oos",
            Experiment::BonferroniEffect => "bonferroni_effect",
            Experiment::PermVsT => "perm_vs_t",
            Experiment::AccuracyPerm => "accuracy_perm",
        }
    }

    pub fn label_mode(self) -> LabelMode {
        match self {
            Experiment::InsampleVsOos | Experiment::BonferroniEffect => LabelMode::DirectMetric,
            Experiment::PermVsT | Experiment::AccuracyPerm => LabelMode::BernoulliLabels,
        }
    }

    pub fn uses_permutations(self) -> bool {
        self.label_mode() == LabelMode::BernoulliLabels
    }

    /// K = 5, n = 1000, d = 2 with this experiment's label mode.
    pub fn default_config(self, scenario: Scenario) -> SimConfig {
        SimConfig::new(5, 1000, 2, scenario, self.label_mode())
    }
}

impl std::str::FromStr for Experiment {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Experiment::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| format!("unknown experiment {s:?} (expected one of insample_vs_oos, bonferroni_effect, perm_vs_t, accuracy_perm)"))
    }
}

impl std::fmt::Display for Experiment {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CampaignSettings {
    pub test_fraction: f64,
    pub n_min: usize,
    pub max_iterations: usize,
    pub n_perm: usize,
    pub l2_penalty: f64,
    /// Use predicted probabilities instead of hard predictions in `perm_vs_t`.
    pub probability_metric: bool,
    /// Refit HBAC on every permuted metric instead of holding the partition fixed.
    pub refit_per_permutation: bool,
}

impl Default for CampaignSettings {
    fn default() -> Self {
        Self {
            test_fraction: 0.2,
            n_min: 80,
            max_iterations: 1000,
            n_perm: 199,
            l2_penalty: DEFAULT_L2,
            probability_metric: false,
            refit_per_permutation: false,
        }
    }
}

/// One test configuration applied to every cluster of a simulation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    InsampleTUncorrected,
    InsampleTBonferroni,
    OosTUncorrected,
    OosTBonferroni,
    OosPermUncorrected,
    OosPermBonferroni,
}

impl Variant {
    pub fn name(self) -> &'static str {
        match self {
            Variant::InsampleTUncorrected => "insample_t_uncorrected",
            Variant::InsampleTBonferroni => "insample_t_bonferroni",
            Variant::OosTUncorrected => "oos_t_uncorrected",
            Variant::OosTBonferroni => "oos_t_bonferroni",
            Variant::OosPermUncorrected => "oos_perm_uncorrected",
            Variant::OosPermBonferroni => "oos_perm_bonferroni",
        }
    }

    pub fn in_sample(self) -> bool {
        matches!(self, Variant::InsampleTUncorrected | Variant::InsampleTBonferroni)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariantTest {
    pub variant: Variant,
    pub p_raw: Option<f64>,
    pub p_adjusted: Option<f64>,
    pub significant: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterRecord {
    /// Position in the partition, i.e. rank by fit-split metric mean.
    pub rank: usize,
    pub n_fit: usize,
    pub n_test: usize,
    /// Signed in-sample difference, mean inside minus mean outside.
    pub diff_in: f64,
    /// Signed out-of-sample difference; `None` when a side has no test rows.
    pub diff_oos: Option<f64>,
    pub tests: Vec<VariantTest>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimRecord {
    pub sim: usize,
    pub stream: RngStream,
    pub n_clusters: usize,
    pub clusters: Vec<ClusterRecord>,
    /// Whether at least one cluster was significant, per variant.
    pub rejected: BTreeMap<Variant, bool>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateSummary {
    pub variant: Variant,
    pub rejections: usize,
    pub n_sims: usize,
    pub rate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

/// `rate +- 1.96 * sqrt(rate (1 - rate) / n)`.
pub fn rate_summary(variant: Variant, rejections: usize, n_sims: usize) -> RateSummary {
    let rate = rejections as f64 / n_sims as f64;
    let half = 1.96 * (rate * (1.0 - rate) / n_sims as f64).sqrt();
    RateSummary { variant, rejections, n_sims, rate, ci_low: rate - half, ci_high: rate + half }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanCi {
    pub mean: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub count: usize,
}

impl MeanCi {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len();
        if n == 0 {
            return Self { mean: f64::NAN, ci_low: f64::NAN, ci_high: f64::NAN, count: 0 };
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let half = if n > 1 {
            let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
            1.96 * (var / n as f64).sqrt()
        } else {
            0.0
        };
        Self { mean, ci_low: mean - half, ci_high: mean + half, count: n }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DifferenceSummary {
    /// Mean over clusters of `|diff_in|`.
    pub mean_abs_in: f64,
    /// Mean over clusters of `|diff_oos|`.
    pub mean_abs_oos: f64,
    /// Mean over clusters of `sign(diff_in) * diff_oos`: how much of the
    /// in-sample difference, in its direction, survives on held-out rows.
    pub mean_oriented_oos: f64,
    pub clusters: usize,
}

impl DifferenceSummary {
    pub fn abs_ratio(&self) -> f64 {
        self.mean_abs_in / self.mean_abs_oos
    }

    pub fn oriented_ratio(&self) -> f64 {
        self.mean_abs_in / self.mean_oriented_oos.abs()
    }
}

/// Mean signed differences per cluster rank, pooled over simulations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RankRow {
    pub rank: usize,
    pub diff_in: MeanCi,
    pub diff_oos: MeanCi,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignSummary {
    pub rates: Vec<RateSummary>,
    pub differences: DifferenceSummary,
    pub by_rank: Vec<RankRow>,
    pub mean_clusters: f64,
}

impl CampaignSummary {
    pub fn rate(&self, variant: Variant) -> Option<&RateSummary> {
        self.rates.iter().find(|r| r.variant == variant)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignResult {
    pub experiment: Experiment,
    pub config: SimConfig,
    pub settings: CampaignSettings,
    pub n_sims: usize,
    pub alpha: f64,
    pub seed: u64,
    pub summary: CampaignSummary,
    pub records: Vec<SimRecord>,
}

/// Runs `n_sims` simulations with streams `RngStream(seed, sim)`.
///
/// Simulations run in parallel; records are kept in simulation order, so the
/// result does not depend on the number of worker threads.
pub fn run_campaign(
    experiment: Experiment,
    config: &SimConfig,
    settings: &CampaignSettings,
    n_sims: usize,
    alpha: f64,
    seed: u64,
) -> Result<CampaignResult> {
    if n_sims == 0 {
        return Err(Error::InvalidConfig("n_sims must be at least 1".into()));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidConfig(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    if config.label_mode != experiment.label_mode() {
        return Err(Error::InvalidConfig(format!(
            "experiment {experiment} needs label mode {:?}",
            experiment.label_mode()
        )));
    }
    if experiment.uses_permutations() && settings.n_perm < MIN_PERMUTATIONS {
        return Err(Error::InvalidConfig(format!(
            "need at least {MIN_PERMUTATIONS} permutations, got {}",
            settings.n_perm
        )));
    }
    config.check()?;
    let records: Vec<SimRecord> = (0..n_sims)
        .into_par_iter()
        .map(|sim| {
            let stream = RngStream::new(seed, sim as u64);
            run_simulation(experiment, config, settings, alpha, sim, stream).map_err(|e| Error::Campaign {
                sim,
                seed: stream.seed,
                source: Box::new(e),
            })
        })
        .collect::<Result<_>>()?;
    let summary = summarize(&records);
    Ok(CampaignResult { experiment, config: *config, settings: *settings, n_sims, alpha, seed, summary, records })
}

fn derived_seed(stream: RngStream, id: u64) -> u64 {
    stream.substream(id).rng().next_u64()
}

fn metric_source(experiment: Experiment, settings: &CampaignSettings) -> MetricSource {
    match experiment {
        Experiment::AccuracyPerm => MetricSource::Accuracy,
        _ if settings.probability_metric => MetricSource::Probability,
        _ => MetricSource::PredictedValue,
    }
}

fn metric_kind(source: MetricSource) -> MetricKind {
    match source {
        MetricSource::Probability => MetricKind::Continuous,
        _ => MetricKind::Binary,
    }
}

/// One simulation of `experiment` on the stream `stream`.
pub fn run_simulation(
    experiment: Experiment,
    config: &SimConfig,
    settings: &CampaignSettings,
    alpha: f64,
    sim: usize,
    stream: RngStream,
) -> Result<SimRecord> {
    let mut rng = stream.rng();
    let params = draw_params(config, &mut rng)?;
    let (x, truth) = gen_features(config, &params, &mut rng)?;
    let source = metric_source(experiment, settings);
    let (metric, labels, kind) = match experiment.label_mode() {
        LabelMode::DirectMetric => (gen_metric(config, &params, &truth, &mut rng)?, None, MetricKind::Continuous),
        LabelMode::BernoulliLabels => {
            let y = gen_labels(config, &params, &truth, &mut rng)?;
            let model = train_logistic(x.view(), &y, settings.l2_penalty, stream.seed)?;
            (metric_from_model(source, &model, x.view(), &y), Some(y), metric_kind(source))
        }
    };
    let n = x.nrows();
    let split = split_sample(n, settings.test_fraction, derived_seed(stream, SPLIT_STREAM))?;
    let dataset = Dataset::new(x.clone(), metric.clone(), None, FeatureSchema::numeric(config.d, kind))?;
    let fit = dataset.subset(&split.train);
    let test = dataset.subset(&split.test);
    let hbac = HbacConfig::new(settings.n_min, Splitter::KMeans)
        .with_seed(derived_seed(stream, HBAC_STREAM))
        .with_max_iterations(settings.max_iterations);
    let partition = fit_hbac(&fit, &hbac)?;
    let k = partition.k();
    let in_labels = partition.labels();
    let oos_labels = assign_all(&partition, &test)?;

    let welch = |labels: &[usize], metric: &[f64], correction| {
        test_assignment(labels, k, metric, TestKind::WelchT, alpha, correction)
    };
    let mut families: Vec<(Variant, Vec<ClusterTest>)> = vec![
        (Variant::InsampleTUncorrected, welch(&in_labels, fit.metric(), Correction::None)?),
        (Variant::InsampleTBonferroni, welch(&in_labels, fit.metric(), Correction::Bonferroni)?),
        (Variant::OosTUncorrected, welch(&oos_labels, test.metric(), Correction::None)?),
        (Variant::OosTBonferroni, welch(&oos_labels, test.metric(), Correction::Bonferroni)?),
    ];

    if let (Some(y), true) = (labels.as_deref(), k >= 2) {
        let mut assignment: Vec<Option<usize>> = vec![None; n];
        for (&row, &c) in split.test.iter().zip(&oos_labels) {
            assignment[row] = Some(c);
        }
        let perm_stream = stream.substream(PERM_STREAM);
        let trainer = LogisticTrainer { l2_penalty: settings.l2_penalty };
        let outcome = if settings.refit_per_permutation {
            refit_permutation_test(
                x.view(),
                y,
                &trainer,
                source,
                &split.train,
                &split.test,
                &hbac,
                &assignment,
                k,
                settings.n_perm,
                perm_stream,
            )?
        } else {
            let metric_fn = |m: &_, f: ArrayView2<'_, f64>, y: &[u8]| metric_from_model(source, m, f, y);
            permutation_test(x.view(), y, &trainer, &metric_fn, &assignment, k, settings.n_perm, perm_stream)?
        };
        families.push((
            Variant::OosPermUncorrected,
            permutation_cluster_tests(&outcome, &assignment, &metric, alpha, Correction::None),
        ));
        families.push((
            Variant::OosPermBonferroni,
            permutation_cluster_tests(&outcome, &assignment, &metric, alpha, Correction::Bonferroni),
        ));
    }

    let clusters = (0..k)
        .map(|c| {
            let find = |v: Variant| families.iter().find(|(w, _)| *w == v).and_then(|(_, t)| t.get(c));
            let (ins, oos) = (find(Variant::InsampleTUncorrected), find(Variant::OosTUncorrected));
            ClusterRecord {
                rank: c,
                n_fit: partition.clusters[c].len(),
                n_test: oos.map_or(0, |t| t.n_in),
                diff_in: ins.map_or(0.0, |t| t.difference),
                diff_oos: oos.map(|t| t.difference).filter(|d| d.is_finite()),
                tests: families
                    .iter()
                    .filter_map(|(variant, tests)| {
                        tests.get(c).map(|t| VariantTest {
                            variant: *variant,
                            p_raw: t.p_raw,
                            p_adjusted: t.p_adjusted,
                            significant: t.significant,
                        })
                    })
                    .collect(),
            }
        })
        .collect();
    let rejected = families.iter().map(|(v, tests)| (*v, tests.iter().any(|t| t.significant))).collect();
    Ok(SimRecord { sim, stream, n_clusters: k, clusters, rejected })
}

/// Permutation null in which HBAC is refit on the fit rows for every
/// permuted metric. Cluster `c` of a replicate is compared with cluster `c`
/// of the observed partition (both ordered by metric mean).
#[allow(clippy::too_many_arguments)]
fn refit_permutation_test(
    x: ArrayView2<'_, f64>,
    labels: &[u8],
    trainer: &LogisticTrainer,
    source: MetricSource,
    train_rows: &[usize],
    test_rows: &[usize],
    hbac: &HbacConfig,
    assignment: &[Option<usize>],
    k: usize,
    n_perm: usize,
    stream: RngStream,
) -> Result<PermutationOutcome> {
    let metric_of = |y: &[u8]| -> Result<Vec<f64>> {
        let model = train_logistic(x, y, trainer.l2_penalty, 0)?;
        Ok(metric_from_model(source, &model, x, y))
    };
    let observed = cluster_abs_differences(assignment, k, &metric_of(labels)?);
    let schema = FeatureSchema::numeric(x.ncols(), metric_kind(source));
    let features: Array2<f64> = x.to_owned();
    let null: Vec<Vec<Option<f64>>> = (0..n_perm)
        .into_par_iter()
        .map(|r| {
            let sub = stream.substream(r as u64);
            let mut y = labels.to_vec();
            y.shuffle(&mut sub.rng());
            let m = metric_of(&y)?;
            let data = Dataset::from_parts_unchecked(features.clone(), m.clone(), None, schema.clone());
            let part: Partition = fit_hbac(&data.subset(train_rows), hbac)?;
            let test_assign = assign_all(&part, &data.subset(test_rows))?;
            let mut a: Vec<Option<usize>> = vec![None; x.nrows()];
            for (&row, &c) in test_rows.iter().zip(&test_assign) {
                a[row] = Some(c);
            }
            let mut stats = cluster_abs_differences(&a, part.k(), &m);
            stats.resize(k, None);
            Ok(stats)
        })
        .collect::<Result<_>>()?;
    let mut exceedances = vec![0; k];
    let mut p_raw = vec![None; k];
    for c in 0..k {
        if let Some(obs) = observed[c] {
            let values: Vec<f64> = null.iter().map(|rep| rep[c].unwrap_or(f64::NEG_INFINITY)).collect();
            exceedances[c] = values.iter().filter(|&&v| v >= obs).count();
            p_raw[c] = Some(permutation_p_value(obs, &values));
        }
    }
    Ok(PermutationOutcome { n_perm, observed, exceedances, p_raw })
}

/// Aggregates simulation records; the output depends only on the multiset of
/// records.
pub fn summarize(records: &[SimRecord]) -> CampaignSummary {
    let mut sorted: Vec<&SimRecord> = records.iter().collect();
    sorted.sort_by_key(|r| r.sim);
    let n = sorted.len();
    let variants: Vec<Variant> = {
        let mut v: Vec<Variant> = sorted.iter().flat_map(|r| r.rejected.keys().copied()).collect();
        v.sort();
        v.dedup();
        v
    };
    let rates = variants
        .iter()
        .map(|&v| rate_summary(v, sorted.iter().filter(|r| r.rejected.get(&v).copied().unwrap_or(false)).count(), n))
        .collect();

    let mut abs_in = Vec::new();
    let mut abs_oos = Vec::new();
    let mut oriented = Vec::new();
    let max_rank = sorted.iter().map(|r| r.n_clusters).max().unwrap_or(0);
    let mut rank_in = vec![Vec::new(); max_rank];
    let mut rank_oos = vec![Vec::new(); max_rank];
    for rec in &sorted {
        if rec.n_clusters < 2 {
            continue;
        }
        for c in &rec.clusters {
            rank_in[c.rank].push(c.diff_in);
            if let Some(d) = c.diff_oos {
                abs_in.push(c.diff_in.abs());
                abs_oos.push(d.abs());
                oriented.push(c.diff_in.signum() * d);
                rank_oos[c.rank].push(d);
            }
        }
    }
    let mean = |v: &[f64]| if v.is_empty() { f64::NAN } else { v.iter().sum::<f64>() / v.len() as f64 };
    let differences = DifferenceSummary {
        mean_abs_in: mean(&abs_in),
        mean_abs_oos: mean(&abs_oos),
        mean_oriented_oos: mean(&oriented),
        clusters: abs_in.len(),
    };
    let by_rank = (0..max_rank)
        .map(|rank| RankRow { rank, diff_in: MeanCi::of(&rank_in[rank]), diff_oos: MeanCi::of(&rank_oos[rank]) })
        .collect();
    let mean_clusters = sorted.iter().map(|r| r.n_clusters as f64).sum::<f64>() / n.max(1) as f64;
    CampaignSummary { rates, differences, by_rank, mean_clusters }
}

impl CampaignResult {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// One row per (simulation, cluster, variant).
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record([
            "sim",
            "cluster",
            "variant",
            "n_fit",
            "n_test",
            "difference",
            "p_raw",
            "p_adjusted",
            "significant",
        ])?;
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        for rec in &self.records {
            for c in &rec.clusters {
                for t in &c.tests {
                    let diff = if t.variant.in_sample() { Some(c.diff_in) } else { c.diff_oos };
                    w.write_record([
                        rec.sim.to_string(),
                        c.rank.to_string(),
                        t.variant.name().to_string(),
                        c.n_fit.to_string(),
                        c.n_test.to_string(),
                        opt(diff),
                        opt(t.p_raw),
                        opt(t.p_adjusted),
                        t.significant.to_string(),
                    ])?;
                }
            }
        }
        w.flush()?;
        Ok(())
    }

    /// Per-rank mean differences, one row per cluster rank.
    pub fn write_rank_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record([
            "rank",
            "count_in",
            "diff_in",
            "diff_in_low",
            "diff_in_high",
            "count_oos",
            "diff_oos",
            "diff_oos_low",
            "diff_oos_high",
        ])?;
        for row in &self.summary.by_rank {
            let (a, b) = (row.diff_in, row.diff_oos);
            w.write_record([
                row.rank.to_string(),
                a.count.to_string(),
                a.mean.to_string(),
                a.ci_low.to_string(),
                a.ci_high.to_string(),
                b.count.to_string(),
                b.mean.to_string(),
                b.ci_low.to_string(),
                b.ci_high.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Plain-text summary.
    pub fn summary_text(&self) -> String {
        let s = &self.summary;
        let mut out = String::new();
        let _ = writeln!(
            out,
            "experiment {} | scenario {:?} | K={} n={} d={} | sims {} | alpha {} | seed {}",
            self.experiment,
            self.config.scenario,
            self.config.k_clusters,
            self.config.n_total,
            self.config.d,
            self.n_sims,
            self.alpha,
            self.seed
        );
        let _ = writeln!(out, "mean clusters per simulation: {:.2}", s.mean_clusters);
        let _ = writeln!(out, "\nrejection rate (at least one significant cluster)");
        for r in &s.rates {
            let _ = writeln!(
                out,
                "  {:<24} {:>6.3}  [{:.3}, {:.3}]  ({}/{})",
                r.variant.name(),
                r.rate,
                r.ci_low,
                r.ci_high,
                r.rejections,
                r.n_sims
            );
        }
        let d = &s.differences;
        let _ = writeln!(
            out,
            "\nmean |difference| in-sample {:.4}, out-of-sample {:.4}, oriented out-of-sample {:.4}",
            d.mean_abs_in, d.mean_abs_oos, d.mean_oriented_oos
        );
        let _ = writeln!(out, "\nrank  diff in-sample [95% CI]        diff out-of-sample [95% CI]");
        for row in &s.by_rank {
            let _ = writeln!(
                out,
                "{:>4}  {:>8.4} [{:>8.4}, {:>8.4}]  {:>8.4} [{:>8.4}, {:>8.4}]",
                row.rank,
                row.diff_in.mean,
                row.diff_in.ci_low,
                row.diff_in.ci_high,
                row.diff_oos.mean,
                row.diff_oos.ci_low,
                row.diff_oos.ci_high
            );
        }
        out
    }
}
