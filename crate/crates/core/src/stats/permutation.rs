//! Label-permutation test for per-cluster metric differences.
//!
//! The labels are shuffled to break their dependence on the features, the
//! classifier is retrained and the metric recomputed, and each cluster's
//! `|mean inside - mean outside|` is compared with the observed value on the
//! same fixed cluster assignment.

use ndarray::ArrayView2;
use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::hypothesis::{adjust, ClusterTest, Correction, TestKind};
use crate::error::{Error, Result};
use crate::rng::RngStream;

pub const MIN_PERMUTATIONS: usize = 19;

/// A deterministic learner: identical inputs and seed give an identical model.
pub trait Trainer: Sync {
    type Model: Send;

    fn train(&self, features: ArrayView2<'_, f64>, labels: &[u8], seed: u64) -> Result<Self::Model>;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PermutationOutcome {
    pub n_perm: usize,
    /// Observed statistic per cluster; `None` when a side is empty.
    pub observed: Vec<Option<f64>>,
    /// Number of permuted statistics at least as large as the observed one.
    pub exceedances: Vec<usize>,
    pub p_raw: Vec<Option<f64>>,
}

/// `(1 + #{null >= observed}) / (1 + n)`.
pub fn permutation_p_value(observed: f64, null: &[f64]) -> f64 {
    let b = null.iter().filter(|&&v| v >= observed).count();
    (1 + b) as f64 / (1 + null.len()) as f64
}

/// `|mean inside - mean outside|` for each cluster over the rows with an
/// assignment; `None` for clusters with an empty side.
pub fn cluster_abs_differences(assignment: &[Option<usize>], k: usize, metric: &[f64]) -> Vec<Option<f64>> {
    let mut sum = vec![0.0; k];
    let mut count = vec![0usize; k];
    let mut total = 0.0;
    let mut n = 0usize;
    for (a, &m) in assignment.iter().zip(metric) {
        if let Some(c) = *a {
            sum[c] += m;
            count[c] += 1;
            total += m;
            n += 1;
        }
    }
    (0..k)
        .map(|c| {
            let rest = n - count[c];
            (count[c] > 0 && rest > 0).then(|| (sum[c] / count[c] as f64 - (total - sum[c]) / rest as f64).abs())
        })
        .collect()
}

/// Permutation p-value per cluster.
///
/// `assignment[i]` is the cluster of row `i`, or `None` for rows that take
/// part in training but not in the comparison (e.g. the fit split).
/// Replicate `r` shuffles with `stream.substream(r)`, so results do not
/// depend on thread scheduling.
#[allow(clippy::too_many_arguments)]
pub fn permutation_test<T, M>(
    features: ArrayView2<'_, f64>,
    labels: &[u8],
    trainer: &T,
    metric_fn: &M,
    assignment: &[Option<usize>],
    k: usize,
    n_perm: usize,
    stream: RngStream,
) -> Result<PermutationOutcome>
where
    T: Trainer,
    M: Fn(&T::Model, ArrayView2<'_, f64>, &[u8]) -> Vec<f64> + Sync,
{
    if n_perm < MIN_PERMUTATIONS {
        return Err(Error::InvalidConfig(format!("need at least {MIN_PERMUTATIONS} permutations, got {n_perm}")));
    }
    if labels.len() != features.nrows() || assignment.len() != features.nrows() {
        return Err(Error::InvalidConfig("features, labels and assignment must have equal length".into()));
    }
    let statistic = |labels: &[u8], seed: u64| -> Result<Vec<Option<f64>>> {
        let model = trainer.train(features, labels, seed)?;
        let metric = metric_fn(&model, features, labels);
        Ok(cluster_abs_differences(assignment, k, &metric))
    };
    let observed = statistic(labels, stream.seed)?;
    let null: Vec<Vec<Option<f64>>> = (0..n_perm)
        .into_par_iter()
        .map(|r| {
            let sub = stream.substream(r as u64);
            let mut permuted = labels.to_vec();
            permuted.shuffle(&mut sub.rng());
            statistic(&permuted, sub.seed)
        })
        .collect::<Result<_>>()?;
    let mut exceedances = vec![0; k];
    let mut p_raw = vec![None; k];
    for c in 0..k {
        if let Some(obs) = observed[c] {
            // A permuted replicate with an empty side cannot beat the observed value.
            let values: Vec<f64> = null.iter().map(|rep| rep[c].unwrap_or(f64::NEG_INFINITY)).collect();
            exceedances[c] = values.iter().filter(|&&v| v >= obs).count();
            p_raw[c] = Some(permutation_p_value(obs, &values));
        }
    }
    Ok(PermutationOutcome { n_perm, observed, exceedances, p_raw })
}

/// Report rows for a permutation run, with means taken over assigned rows of
/// `metric` and the chosen multiple-testing correction applied.
pub fn permutation_cluster_tests(
    outcome: &PermutationOutcome,
    assignment: &[Option<usize>],
    metric: &[f64],
    alpha: f64,
    correction: Correction,
) -> Vec<ClusterTest> {
    let k = outcome.p_raw.len();
    if k < 2 {
        return Vec::new();
    }
    let mut tests: Vec<ClusterTest> = (0..k)
        .map(|c| {
            let (mut si, mut ni, mut so, mut no) = (0.0, 0usize, 0.0, 0usize);
            for (a, &m) in assignment.iter().zip(metric) {
                match *a {
                    Some(x) if x == c => {
                        si += m;
                        ni += 1;
                    }
                    Some(_) => {
                        so += m;
                        no += 1;
                    }
                    None => {}
                }
            }
            let (mean_in, mean_out) = (si / ni as f64, so / no as f64);
            ClusterTest {
                cluster_index: c,
                n_in: ni,
                n_out: no,
                mean_in,
                mean_out,
                difference: mean_in - mean_out,
                statistic: outcome.observed[c],
                df: None,
                p_raw: outcome.p_raw[c],
                p_adjusted: None,
                test_kind: TestKind::Permutation,
                untestable: outcome.p_raw[c].is_none().then(|| "cluster has an empty side".to_string()),
                significant: false,
            }
        })
        .collect();
    adjust(&mut tests, alpha, correction);
    tests
}
