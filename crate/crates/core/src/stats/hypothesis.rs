//! Per-cluster tests of "mean metric inside the cluster equals the mean
//! outside it", two-sided.

use serde::{Deserialize, Serialize};

use super::descriptive::{mean, sample_variance};
use super::special::{chi2_sf, t_two_sided_p};
use crate::clustering::{assign_all, Partition};
use crate::data::{Dataset, MetricKind};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WelchResult {
    pub statistic: f64,
    pub df: f64,
    pub p: f64,
}

/// Welch two-sample t-test with Satterthwaite degrees of freedom.
pub fn welch_t_test(a: &[f64], b: &[f64]) -> Result<WelchResult> {
    let got = a.len().min(b.len());
    if got < 2 {
        return Err(Error::InsufficientSample { needed: 2, got });
    }
    let (va, vb) = (sample_variance(a), sample_variance(b));
    if va == 0.0 && vb == 0.0 {
        return Err(Error::DegenerateVariance);
    }
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (sa, sb) = (va / na, vb / nb);
    let se2 = sa + sb;
    let statistic = (mean(a) - mean(b)) / se2.sqrt();
    let df = se2 * se2 / (sa * sa / (na - 1.0) + sb * sb / (nb - 1.0));
    let p = t_two_sided_p(statistic, df).clamp(0.0, 1.0);
    Ok(WelchResult { statistic, df, p })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Chi2Result {
    pub statistic: f64,
    pub p: f64,
    /// `[[a_ones, a_zeros], [b_ones, b_zeros]]`
    pub table: [[u64; 2]; 2],
}

/// Pearson chi-squared test (1 df, no continuity correction) on a 2x2 table.
pub fn chi2_2x2(table: [[u64; 2]; 2]) -> Result<Chi2Result> {
    let rows = [table[0][0] + table[0][1], table[1][0] + table[1][1]];
    let cols = [table[0][0] + table[1][0], table[0][1] + table[1][1]];
    if rows.contains(&0) || cols.contains(&0) {
        return Err(Error::DegenerateTable(format!("zero margin in {table:?}")));
    }
    let n = (rows[0] + rows[1]) as f64;
    let mut statistic = 0.0;
    for i in 0..2 {
        for j in 0..2 {
            let expected = rows[i] as f64 * cols[j] as f64 / n;
            let diff = table[i][j] as f64 - expected;
            statistic += diff * diff / expected;
        }
    }
    let p = chi2_sf(statistic, 1.0)?.clamp(0.0, 1.0);
    Ok(Chi2Result { statistic, p, table })
}

/// Pearson chi-squared test comparing the share of ones in two binary samples.
pub fn chi2_test(a: &[f64], b: &[f64]) -> Result<Chi2Result> {
    let count = |s: &[f64]| {
        let ones = s.iter().filter(|&&v| v == 1.0).count() as u64;
        [ones, s.len() as u64 - ones]
    };
    chi2_2x2([count(a), count(b)])
}

/// `min(1, k * p)` for each p.
pub fn bonferroni(p_values: &[f64], k: usize) -> Vec<f64> {
    p_values.iter().map(|&p| (k as f64 * p).min(1.0)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestKind {
    WelchT,
    Chi2,
    Permutation,
}

impl TestKind {
    pub fn for_metric(kind: MetricKind) -> Self {
        match kind {
            MetricKind::Continuous => TestKind::WelchT,
            MetricKind::Binary => TestKind::Chi2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Correction {
    Bonferroni,
    None,
}

impl std::str::FromStr for Correction {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "bonferroni" => Ok(Correction::Bonferroni),
            "none" => Ok(Correction::None),
            other => Err(format!("unknown correction {other:?} (expected bonferroni or none)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterTest {
    pub cluster_index: usize,
    pub n_in: usize,
    pub n_out: usize,
    pub mean_in: f64,
    pub mean_out: f64,
    /// `mean_in - mean_out`
    pub difference: f64,
    pub statistic: Option<f64>,
    pub df: Option<f64>,
    pub p_raw: Option<f64>,
    pub p_adjusted: Option<f64>,
    pub test_kind: TestKind,
    /// Why no test was run, when `p_raw` is `None`.
    pub untestable: Option<String>,
    pub significant: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitSummary {
    pub n_fit: usize,
    pub n_test: usize,
    pub fraction: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestReport {
    pub tests: Vec<ClusterTest>,
    pub alpha: f64,
    pub correction: Correction,
    pub continuity_correction: bool,
    pub split_info: Option<SplitSummary>,
}

impl TestReport {
    pub fn n_tested(&self) -> usize {
        self.tests.iter().filter(|t| t.p_raw.is_some()).count()
    }

    pub fn any_significant(&self) -> bool {
        self.tests.iter().any(|t| t.significant)
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidConfig(format!("alpha must lie in (0, 1), got {alpha}")))
    }
}

/// Applies the correction across tested entries and sets `significant`.
pub fn adjust(tests: &mut [ClusterTest], alpha: f64, correction: Correction) {
    let k = tests.iter().filter(|t| t.p_raw.is_some()).count();
    for t in tests.iter_mut() {
        t.p_adjusted = t.p_raw.map(|p| match correction {
            Correction::Bonferroni => (k as f64 * p).min(1.0),
            Correction::None => p,
        });
        t.significant = t.p_adjusted.is_some_and(|p| p <= alpha);
    }
}

/// Splits `metric` into (inside cluster, outside cluster) for each cluster.
pub fn cluster_groups(assignment: &[usize], k: usize, metric: &[f64]) -> Vec<(Vec<f64>, Vec<f64>)> {
    (0..k)
        .map(|c| {
            let mut inside = Vec::new();
            let mut outside = Vec::new();
            for (&a, &m) in assignment.iter().zip(metric) {
                if a == c {
                    inside.push(m);
                } else {
                    outside.push(m);
                }
            }
            (inside, outside)
        })
        .collect()
}

/// Runs `kind` for each of the `k` clusters against all other rows. With
/// fewer than two clusters there is no contrast and the list is empty.
pub fn test_assignment(
    assignment: &[usize],
    k: usize,
    metric: &[f64],
    kind: TestKind,
    alpha: f64,
    correction: Correction,
) -> Result<Vec<ClusterTest>> {
    check_alpha(alpha)?;
    if k < 2 {
        return Ok(Vec::new());
    }
    let mut tests: Vec<ClusterTest> = cluster_groups(assignment, k, metric)
        .into_iter()
        .enumerate()
        .map(|(cluster_index, (inside, outside))| {
            let avg = |s: &[f64]| if s.is_empty() { f64::NAN } else { mean(s) };
            let (mean_in, mean_out) = (avg(&inside), avg(&outside));
            let outcome = match kind {
                TestKind::WelchT => welch_t_test(&inside, &outside).map(|r| (r.statistic, Some(r.df), r.p)),
                TestKind::Chi2 => chi2_test(&inside, &outside).map(|r| (r.statistic, None, r.p)),
                TestKind::Permutation => {
                    Err(Error::InvalidConfig("permutation tests are run by permutation_test".into()))
                }
            };
            let (statistic, df, p_raw, untestable) = match outcome {
                Ok((s, df, p)) => (Some(s), df, Some(p), None),
                Err(e) => (None, None, None, Some(e.to_string())),
            };
            ClusterTest {
                cluster_index,
                n_in: inside.len(),
                n_out: outside.len(),
                mean_in,
                mean_out,
                difference: mean_in - mean_out,
                statistic,
                df,
                p_raw,
                p_adjusted: None,
                test_kind: kind,
                untestable,
                significant: false,
            }
        })
        .collect();
    adjust(&mut tests, alpha, correction);
    Ok(tests)
}

/// Assigns held-out rows to the partition's centroids and tests each cluster
/// with the test matching the dataset's metric kind.
pub fn test_clusters(
    partition: &Partition,
    test_data: &Dataset,
    alpha: f64,
    correction: Correction,
) -> Result<TestReport> {
    let assignment = assign_all(partition, test_data)?;
    let kind = TestKind::for_metric(test_data.schema().metric_kind);
    let tests = test_assignment(&assignment, partition.k(), test_data.metric(), kind, alpha, correction)?;
    Ok(TestReport { tests, alpha, correction, continuity_correction: false, split_info: None })
}
