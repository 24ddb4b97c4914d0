//! Hierarchical bias-aware clustering.
//!
//! Starting from one cluster holding every row, each iteration picks the
//! not-yet-selected cluster with the largest (population) standard deviation
//! of the bias metric, tries a binary split of its rows, and keeps the split
//! when both children have at least `n_min` rows and the larger child mean is
//! at least the parent mean. A selected cluster is never selected again,
//! whether or not its split was kept. The loop ends after `max_iterations`
//! or when every cluster has been selected.
//!
//! The returned clusters are ordered by metric mean, highest first; ties keep
//! creation order.

use ndarray::{ArrayView1, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use super::{split_two_kmeans, split_two_kmodes, Centroid, CentroidKind, Splitter};
use crate::data::{validate, Dataset};
use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::stats::descriptive::mean_and_std;

/// Relative slack in the mean acceptance test, absorbing summation-order
/// rounding when a child mean equals the parent mean exactly.
const ACCEPT_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HbacConfig {
    pub n_min: usize,
    pub max_iterations: usize,
    pub splitter: Splitter,
    pub seed: u64,
}

impl HbacConfig {
    pub fn new(n_min: usize, splitter: Splitter) -> Self {
        Self { n_min, max_iterations: 1_000, splitter, seed: 0 }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_max_iterations(mut self, max_iterations: usize) -> Self {
        self.max_iterations = max_iterations;
        self
    }

    pub fn check(&self) -> Result<()> {
        if self.n_min == 0 {
            return Err(Error::InvalidConfig("n_min must be at least 1".into()));
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidConfig("max_iterations must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cluster {
    /// Ascending row indices into the fit dataset.
    pub member_indices: Vec<usize>,
    pub centroid: Centroid,
    pub metric_mean: f64,
    pub metric_std: f64,
    pub ever_selected: bool,
    /// Position in creation order; the root cluster is 0.
    pub creation_id: usize,
}

impl Cluster {
    pub fn len(&self) -> usize {
        self.member_indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.member_indices.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Partition {
    pub clusters: Vec<Cluster>,
    /// Content hash of the dataset the partition was fit on.
    pub source_split: String,
    pub config: HbacConfig,
    pub n_rows: usize,
    pub feature_names: Vec<String>,
}

impl Partition {
    pub fn k(&self) -> usize {
        self.clusters.len()
    }

    /// Cluster index of each fit row.
    pub fn labels(&self) -> Vec<usize> {
        let mut out = vec![usize::MAX; self.n_rows];
        for (k, c) in self.clusters.iter().enumerate() {
            for &i in &c.member_indices {
                out[i] = k;
            }
        }
        out
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum SplitOutcome {
    Accepted { children: [usize; 2], sizes: [usize; 2], means: [f64; 2] },
    RejectedSize { sizes: [usize; 2], means: [f64; 2] },
    RejectedMean { sizes: [usize; 2], means: [f64; 2] },
    Degenerate { reason: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitEvent {
    pub iteration: usize,
    pub parent: usize,
    pub parent_size: usize,
    pub parent_mean: f64,
    pub parent_std: f64,
    pub outcome: SplitOutcome,
}

/// Record of every split attempt, in iteration order.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FitTrace {
    pub events: Vec<SplitEvent>,
}

struct Node {
    members: Vec<usize>,
    mean: f64,
    std: f64,
    selected: bool,
    active: bool,
}

impl Node {
    fn new(members: Vec<usize>, metric: &[f64]) -> Self {
        let (mean, std) = mean_and_std(members.iter().map(|&i| metric[i]));
        Self { members, mean, std, selected: false, active: true }
    }
}

pub fn fit_hbac(dataset: &Dataset, config: &HbacConfig) -> Result<Partition> {
    fit_hbac_traced(dataset, config).map(|(p, _)| p)
}

pub fn fit_hbac_traced(dataset: &Dataset, config: &HbacConfig) -> Result<(Partition, FitTrace)> {
    config.check()?;
    validate(dataset).into_result()?;
    check_splitter(dataset, config.splitter)?;
    let n = dataset.len();
    if n < 2 * config.n_min {
        return Err(Error::InsufficientData { n, n_min: config.n_min });
    }
    let rows = dataset.rows().as_standard_layout().into_owned();
    let metric = dataset.metric();

    let mut nodes = vec![Node::new((0..n).collect(), metric)];
    let mut trace = FitTrace::default();

    for iteration in 0..config.max_iterations {
        let Some(parent) = pick_cluster(&nodes) else { break };
        nodes[parent].selected = true;
        let members = nodes[parent].members.clone();
        let sub = rows.select(Axis(0), &members);
        let mut rng = RngStream::new(config.seed, iteration as u64).rng();
        let split = match config.splitter {
            Splitter::KMeans => split_two_kmeans(sub.view(), &mut rng),
            Splitter::KModes => split_two_kmodes(sub.view(), &mut rng),
        };
        let node = &nodes[parent];
        let mut event = SplitEvent {
            iteration,
            parent,
            parent_size: node.members.len(),
            parent_mean: node.mean,
            parent_std: node.std,
            outcome: SplitOutcome::Degenerate { reason: String::new() },
        };
        match split {
            Err(Error::DegenerateSplit(reason)) => event.outcome = SplitOutcome::Degenerate { reason },
            Err(e) => return Err(e),
            Ok(s) => {
                let left = Node::new(s.left.iter().map(|&i| members[i]).collect(), metric);
                let right = Node::new(s.right.iter().map(|&i| members[i]).collect(), metric);
                let sizes = [left.members.len(), right.members.len()];
                let means = [left.mean, right.mean];
                let parent_mean = nodes[parent].mean;
                let best = means[0].max(means[1]);
                if sizes[0] < config.n_min || sizes[1] < config.n_min {
                    event.outcome = SplitOutcome::RejectedSize { sizes, means };
                } else if best < parent_mean - ACCEPT_SLACK * parent_mean.abs().max(1.0) {
                    event.outcome = SplitOutcome::RejectedMean { sizes, means };
                } else {
                    nodes[parent].active = false;
                    let children = [nodes.len(), nodes.len() + 1];
                    nodes.push(left);
                    nodes.push(right);
                    event.outcome = SplitOutcome::Accepted { children, sizes, means };
                }
            }
        }
        trace.events.push(event);
    }

    let kind = match config.splitter {
        Splitter::KMeans => CentroidKind::Mean,
        Splitter::KModes => CentroidKind::Mode,
    };
    let mut clusters: Vec<Cluster> = nodes
        .into_iter()
        .enumerate()
        .filter(|(_, node)| node.active)
        .map(|(id, node)| {
            let mut members = node.members;
            members.sort_unstable();
            Cluster {
                centroid: centroid_of(rows.view(), &members, kind),
                member_indices: members,
                metric_mean: node.mean,
                metric_std: node.std,
                ever_selected: node.selected,
                creation_id: id,
            }
        })
        .collect();
    clusters.sort_by(|a, b| b.metric_mean.total_cmp(&a.metric_mean).then(a.creation_id.cmp(&b.creation_id)));

    let partition = Partition {
        clusters,
        source_split: dataset.content_hash(),
        config: *config,
        n_rows: n,
        feature_names: dataset.schema().names(),
    };
    Ok((partition, trace))
}

/// Unselected active cluster with the largest metric std; lowest creation id
/// on ties.
fn pick_cluster(nodes: &[Node]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, node) in nodes.iter().enumerate() {
        if !node.active || node.selected {
            continue;
        }
        if best.is_none_or(|b| node.std > nodes[b].std) {
            best = Some(i);
        }
    }
    best
}

fn check_splitter(dataset: &Dataset, splitter: Splitter) -> Result<()> {
    let schema = dataset.schema();
    match splitter {
        Splitter::KModes if schema.has_numeric() => {
            Err(Error::SchemaMismatch("k-modes cannot split numeric columns".into()))
        }
        Splitter::KMeans if schema.has_categorical() => {
            Err(Error::SchemaMismatch("k-means cannot split categorical columns; one-hot expand them first".into()))
        }
        _ => Ok(()),
    }
}

fn centroid_of(rows: ArrayView2<'_, f64>, members: &[usize], kind: CentroidKind) -> Centroid {
    let d = rows.ncols();
    let values = match kind {
        CentroidKind::Mean => {
            let mut sums = vec![0.0; d];
            for &i in members {
                for (s, x) in sums.iter_mut().zip(rows.row(i)) {
                    *s += x;
                }
            }
            sums.iter().map(|s| s / members.len() as f64).collect()
        }
        CentroidKind::Mode => (0..d)
            .map(|j| {
                let mut counts: Vec<usize> = Vec::new();
                for &i in members {
                    let v = rows[[i, j]] as usize;
                    if v >= counts.len() {
                        counts.resize(v + 1, 0);
                    }
                    counts[v] += 1;
                }
                let mut best = 0;
                for (code, &k) in counts.iter().enumerate() {
                    if k > counts[best] {
                        best = code;
                    }
                }
                best as f64
            })
            .collect(),
    };
    Centroid { kind, values }
}

/// Index of the nearest centroid; lowest index on ties.
pub fn assign(partition: &Partition, row: ArrayView1<'_, f64>) -> Result<usize> {
    let d = partition.feature_names.len();
    if row.len() != d {
        return Err(Error::SchemaMismatch(format!("row has {} features, partition expects {d}", row.len())));
    }
    let mut best = (0, f64::INFINITY);
    for (k, c) in partition.clusters.iter().enumerate() {
        let dist = c.centroid.distance(row);
        if dist < best.1 {
            best = (k, dist);
        }
    }
    Ok(best.0)
}

pub fn assign_rows(partition: &Partition, rows: ArrayView2<'_, f64>) -> Result<Vec<usize>> {
    rows.outer_iter().map(|r| assign(partition, r)).collect()
}

/// Assigns every row of `dataset`, which must share the fit schema's columns.
pub fn assign_all(partition: &Partition, dataset: &Dataset) -> Result<Vec<usize>> {
    let names = dataset.schema().names();
    if names != partition.feature_names {
        return Err(Error::SchemaMismatch(format!(
            "dataset columns {:?} differ from the partition's {:?}",
            names, partition.feature_names
        )));
    }
    assign_rows(partition, dataset.rows())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{Column, FeatureSchema, MetricKind};
    use ndarray::{array, Array2};

    fn two_masses(per: usize) -> Dataset {
        let n = 2 * per;
        let rows = Array2::from_shape_fn((n, 2), |(i, _)| if i < per { 0.0 } else { 5.0 });
        let metric = (0..n).map(|i| f64::from(u8::from(i >= per))).collect();
        Dataset::new(rows, metric, None, FeatureSchema::numeric(2, MetricKind::Binary)).unwrap()
    }

    #[test]
    fn constant_point_mass_stays_one_cluster() {
        let rows = Array2::from_elem((10, 2), 1.0);
        let ds = Dataset::new(rows, vec![0.3; 10], None, FeatureSchema::numeric(2, MetricKind::Continuous)).unwrap();
        let (p, trace) = fit_hbac_traced(&ds, &HbacConfig::new(2, Splitter::KMeans)).unwrap();
        assert_eq!(p.k(), 1);
        assert!(p.clusters[0].ever_selected);
        assert_eq!(trace.events.len(), 1);
        assert!(matches!(trace.events[0].outcome, SplitOutcome::Degenerate { .. }));
    }

    #[test]
    fn two_masses_isolate_the_high_bias_group() {
        let ds = two_masses(4);
        let (p, trace) = fit_hbac_traced(&ds, &HbacConfig::new(2, Splitter::KMeans)).unwrap();
        assert_eq!(p.k(), 2);
        // Root mean 0.5; children 0 and 1; max child 1 >= 0.5 and sizes 4 >= 2.
        let SplitOutcome::Accepted { sizes, means, .. } = &trace.events[0].outcome else { panic!() };
        assert_eq!(*sizes, [4, 4]);
        assert_eq!(means.iter().cloned().fold(f64::MIN, f64::max), 1.0);
        assert_eq!(trace.events[0].parent_mean, 0.5);
        assert_eq!(p.clusters[0].metric_mean, 1.0);
        assert_eq!(p.clusters[0].member_indices, vec![4, 5, 6, 7]);
        assert_eq!(p.clusters[1].member_indices, vec![0, 1, 2, 3]);
    }

    #[test]
    fn insufficient_data() {
        let ds = two_masses(2);
        assert!(matches!(fit_hbac(&ds, &HbacConfig::new(3, Splitter::KMeans)), Err(Error::InsufficientData { .. })));
    }

    #[test]
    fn splitter_schema_compatibility() {
        let ds = two_masses(4);
        assert!(matches!(fit_hbac(&ds, &HbacConfig::new(2, Splitter::KModes)), Err(Error::SchemaMismatch(_))));
        let cat = Dataset::new(
            array![[0.0], [1.0]],
            vec![0.0, 1.0],
            None,
            FeatureSchema::new(vec![Column::categorical("c", ["a", "b"])], MetricKind::Binary),
        )
        .unwrap();
        assert!(matches!(fit_hbac(&cat, &HbacConfig::new(1, Splitter::KMeans)), Err(Error::SchemaMismatch(_))));
        assert_eq!(fit_hbac(&cat, &HbacConfig::new(1, Splitter::KModes)).unwrap().k(), 2);
    }

    #[test]
    fn max_iterations_caps_cluster_count() {
        let rows = Array2::from_shape_fn((64, 1), |(i, _)| i as f64);
        let metric = (0..64).map(|i| (i % 7) as f64).collect();
        let ds = Dataset::new(rows, metric, None, FeatureSchema::numeric(1, MetricKind::Continuous)).unwrap();
        for iters in 1..5 {
            let p = fit_hbac(&ds, &HbacConfig::new(1, Splitter::KMeans).with_max_iterations(iters)).unwrap();
            assert!(p.k() <= iters + 1);
        }
    }

    fn partition_from(centroids: Vec<Vec<f64>>, kind: CentroidKind) -> Partition {
        let d = centroids[0].len();
        Partition {
            clusters: centroids
                .into_iter()
                .enumerate()
                .map(|(i, values)| Cluster {
                    member_indices: vec![i],
                    centroid: Centroid { kind, values },
                    metric_mean: 0.0,
                    metric_std: 0.0,
                    ever_selected: false,
                    creation_id: i,
                })
                .collect(),
            source_split: String::new(),
            config: HbacConfig::new(1, Splitter::KMeans),
            n_rows: 3,
            feature_names: (0..d).map(|j| format!("x{j}")).collect(),
        }
    }

    #[test]
    fn assign_exact_centroid_and_ties() {
        let p = partition_from(vec![vec![0.0, 0.0], vec![4.0, 0.0], vec![2.0, 2.0]], CentroidKind::Mean);
        assert_eq!(assign(&p, array![2.0, 2.0].view()).unwrap(), 2);
        // (2, 0) is at squared distance 4 from all three centroids.
        assert_eq!(assign(&p, array![2.0, 0.0].view()).unwrap(), 0);
        assert!(matches!(assign(&p, array![1.0].view()), Err(Error::SchemaMismatch(_))));
        assert!(assign_rows(&p, Array2::zeros((0, 2)).view()).unwrap().is_empty());
    }

    #[test]
    fn assign_by_hamming() {
        let p = partition_from(vec![vec![0.0, 1.0, 1.0], vec![1.0, 0.0, 0.0]], CentroidKind::Mode);
        assert_eq!(assign(&p, array![0.0, 1.0, 0.0].view()).unwrap(), 0);
    }

    #[test]
    fn assign_all_checks_columns() {
        let ds = two_masses(4);
        let p = fit_hbac(&ds, &HbacConfig::new(2, Splitter::KMeans)).unwrap();
        let labels = assign_all(&p, &ds).unwrap();
        assert_eq!(labels, p.labels());
        let renamed = Dataset::new(
            ds.rows().to_owned(),
            ds.metric().to_vec(),
            None,
            FeatureSchema::new(vec![Column::numeric("a"), Column::numeric("b")], MetricKind::Binary),
        )
        .unwrap();
        assert!(assign_all(&p, &renamed).is_err());
    }

    #[test]
    fn partition_json_round_trip() {
        let p = fit_hbac(&two_masses(4), &HbacConfig::new(2, Splitter::KMeans)).unwrap();
        assert_eq!(Partition::from_json(&p.to_json().unwrap()).unwrap(), p);
    }
}
