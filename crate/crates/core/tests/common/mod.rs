//! Helpers shared by the integration test targets.
#![allow(dead_code)]

use std::collections::BTreeSet;

use hbac_core::clustering::{fit_hbac_traced, FitTrace, SplitOutcome};
use hbac_core::{Column, Dataset, FeatureSchema, HbacConfig, MetricKind, Partition, RngStream, Splitter};
use ndarray::Array2;
use rand::Rng;
use serde::Deserialize;

/// A small random dataset and config. Even seeds give numeric data for
/// k-means, odd seeds categorical data for k-modes.
pub fn random_case(seed: u64) -> (Dataset, HbacConfig) {
    let mut rng = RngStream::new(seed, 7).rng();
    let n = rng.random_range(20..160);
    let d = rng.random_range(1..4);
    let n_min = rng.random_range(1..=n / 4);
    let binary = rng.random_bool(0.5);
    let kind = if binary { MetricKind::Binary } else { MetricKind::Continuous };
    let metric: Vec<f64> = (0..n)
        .map(|_| if binary { f64::from(u8::from(rng.random_bool(0.3))) } else { rng.random_range(-2.0..2.0) })
        .collect();
    let (rows, schema, splitter) = if seed % 2 == 0 {
        let centers: Vec<f64> = (0..3).map(|_| rng.random_range(-5.0..5.0)).collect();
        let rows =
            Array2::from_shape_fn((n, d), |(_, _)| centers[rng.random_range(0..3)] + rng.random_range(-1.0..1.0));
        (rows, FeatureSchema::numeric(d, kind), Splitter::KMeans)
    } else {
        let arity: Vec<usize> = (0..d).map(|_| rng.random_range(2..5)).collect();
        let rows = Array2::from_shape_fn((n, d), |(_, j)| rng.random_range(0..arity[j]) as f64);
        let columns = arity
            .iter()
            .enumerate()
            .map(|(j, &a)| Column::categorical(format!("c{j}"), (0..a).map(|v| format!("v{v}"))))
            .collect();
        (rows, FeatureSchema::new(columns, kind), Splitter::KModes)
    };
    let dataset = Dataset::new(rows, metric, None, schema).expect("valid random dataset");
    let config = HbacConfig::new(n_min, splitter).with_seed(seed).with_max_iterations(rng.random_range(1..40));
    (dataset, config)
}

/// Checks the structural invariants of a fitted partition against its trace.
pub fn check_partition(
    dataset: &Dataset,
    config: &HbacConfig,
    partition: &Partition,
    trace: &FitTrace,
) -> Result<(), String> {
    let n = dataset.len();
    let mut seen = vec![false; n];
    for c in &partition.clusters {
        if c.member_indices.len() < config.n_min {
            return Err(format!("cluster of {} rows below n_min {}", c.member_indices.len(), config.n_min));
        }
        for &i in &c.member_indices {
            if i >= n || std::mem::replace(&mut seen[i], true) {
                return Err(format!("row {i} out of range or in two clusters"));
            }
        }
    }
    if seen.iter().any(|s| !s) {
        return Err("partition does not cover every row".into());
    }
    let k = partition.k();
    if k > n / config.n_min || k > config.max_iterations + 1 {
        return Err(format!("{k} clusters exceed the bound for n={n}, n_min={}", config.n_min));
    }
    // Every node is selected at most once; surviving clusters carry the flag
    // exactly when a split of them was attempted.
    let mut parents = BTreeSet::new();
    for e in &trace.events {
        if !parents.insert(e.parent) {
            return Err(format!("cluster {} selected twice", e.parent));
        }
        if let SplitOutcome::Accepted { sizes, means, .. } = &e.outcome {
            if sizes.iter().any(|&s| s < config.n_min) {
                return Err(format!("accepted split with sizes {sizes:?}"));
            }
            let best = means[0].max(means[1]);
            if best < e.parent_mean - 1e-12 * e.parent_mean.abs().max(1.0) {
                return Err(format!("accepted split lowers the best mean: {best} < {}", e.parent_mean));
            }
        }
    }
    for c in &partition.clusters {
        if c.ever_selected != parents.contains(&c.creation_id) {
            return Err(format!("selection flag of cluster {} disagrees with the trace", c.creation_id));
        }
    }
    if trace.events.len() > config.max_iterations {
        return Err("more split attempts than max_iterations".into());
    }
    let means: Vec<f64> = partition.clusters.iter().map(|c| c.metric_mean).collect();
    if means.windows(2).any(|w| w[0] < w[1]) {
        return Err("clusters are not ordered by metric mean".into());
    }
    Ok(())
}

/// Fits twice and checks invariants plus byte-identical serialization.
pub fn check_case(seed: u64) -> Result<(), String> {
    let (dataset, config) = random_case(seed);
    let (partition, trace) = fit_hbac_traced(&dataset, &config).map_err(|e| format!("seed {seed}: {e}"))?;
    check_partition(&dataset, &config, &partition, &trace).map_err(|e| format!("seed {seed}: {e}"))?;
    let (again, _) = fit_hbac_traced(&dataset, &config).map_err(|e| e.to_string())?;
    if partition.to_json().unwrap() != again.to_json().unwrap() {
        return Err(format!("seed {seed}: refit is not byte-identical"));
    }
    Ok(())
}

/// Two-pass SSB/SSW over the distinct labels.
pub fn brute_force_ch(metric: &[f64], labels: &[usize]) -> f64 {
    let n = metric.len() as f64;
    let grand = metric.iter().sum::<f64>() / n;
    let groups: BTreeSet<usize> = labels.iter().copied().collect();
    let (mut ssb, mut ssw) = (0.0, 0.0);
    for &g in &groups {
        let xs: Vec<f64> = metric.iter().zip(labels).filter(|(_, &l)| l == g).map(|(&x, _)| x).collect();
        let m = xs.iter().sum::<f64>() / xs.len() as f64;
        ssb += xs.len() as f64 * (m - grand).powi(2);
        ssw += xs.iter().map(|x| (x - m).powi(2)).sum::<f64>();
    }
    let k = groups.len() as f64;
    (ssb / (k - 1.0)) / (ssw / (n - k))
}

/// Random metric and labels with at least two points per group and two groups.
pub fn random_ch_instance(seed: u64) -> (Vec<f64>, Vec<usize>) {
    let mut rng = RngStream::new(seed, 11).rng();
    let k = rng.random_range(2..6);
    let per: Vec<usize> = (0..k).map(|_| rng.random_range(2..12)).collect();
    let mut labels = Vec::new();
    for (g, &p) in per.iter().enumerate() {
        labels.extend(std::iter::repeat_n(g, p));
    }
    let offsets: Vec<f64> = (0..k).map(|_| rng.random_range(-3.0..3.0)).collect();
    let metric = labels.iter().map(|&g| offsets[g] + rng.random_range(-1.0..1.0)).collect();
    (metric, labels)
}

#[derive(Debug, Deserialize)]
pub struct WelchCase {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub t: f64,
    pub df: f64,
    pub p: f64,
}

#[derive(Debug, Deserialize)]
pub struct Chi2Case {
    pub table: [[u64; 2]; 2],
    pub stat: f64,
    pub p: f64,
}

#[derive(Debug, Deserialize)]
pub struct TCdfCase {
    pub x: f64,
    pub df: f64,
    pub cdf: f64,
}

#[derive(Debug, Deserialize)]
pub struct Chi2SfCase {
    pub x: f64,
    pub df: f64,
    pub sf: f64,
}

/// p-values from an independent 50-digit implementation.
#[derive(Debug, Deserialize)]
pub struct Oracle {
    pub welch: Vec<WelchCase>,
    pub chi2: Vec<Chi2Case>,
    pub t_cdf: Vec<TCdfCase>,
    pub chi2_sf: Vec<Chi2SfCase>,
}

pub fn oracle() -> Oracle {
    serde_json::from_str(include_str!("../fixtures/pvalue_oracle.json")).expect("oracle fixture parses")
}

/// `|got - want| <= tol * max(1, |want|)`.
pub fn close(got: f64, want: f64, tol: f64) -> bool {
    (got - want).abs() <= tol * want.abs().max(1.0)
}

/// Relative closeness for tail probabilities far below 1.
pub fn close_rel(got: f64, want: f64, tol: f64) -> bool {
    (got - want).abs() <= tol * want.abs() || (got - want).abs() < 1e-300
}
