//! Binary splitters and the hierarchical bias-aware clustering loop.

mod hbac;
mod kmeans;
mod kmodes;

use ndarray::ArrayView1;
use serde::{Deserialize, Serialize};

pub use hbac::{
    assign, assign_all, assign_rows, fit_hbac, fit_hbac_traced, Cluster, FitTrace, HbacConfig, Partition, SplitEvent,
    SplitOutcome,
};
pub use kmeans::split_two_kmeans;
pub use kmodes::{hamming, split_two_kmodes};

/// Upper bound on assignment/update sweeps inside one binary split.
pub const MAX_SWEEPS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Splitter {
    KMeans,
    KModes,
}

impl std::str::FromStr for Splitter {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "kmeans" | "k-means" => Ok(Splitter::KMeans),
            "kmodes" | "k-modes" => Ok(Splitter::KModes),
            other => Err(format!("unknown splitter {other:?} (expected kmeans or kmodes)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CentroidKind {
    Mean,
    Mode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Centroid {
    pub kind: CentroidKind,
    pub values: Vec<f64>,
}

impl Centroid {
    /// Squared Euclidean distance for mean centroids, Hamming distance for
    /// mode centroids.
    pub fn distance(&self, row: ArrayView1<'_, f64>) -> f64 {
        match self.kind {
            CentroidKind::Mean => self.values.iter().zip(row.iter()).map(|(c, x)| (c - x) * (c - x)).sum(),
            CentroidKind::Mode => self.values.iter().zip(row.iter()).filter(|(c, x)| c != x).count() as f64,
        }
    }
}

/// Result of splitting a set of rows in two. Indices are local to the rows
/// passed to the splitter; `left` always contains row 0.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoWaySplit {
    pub left: Vec<usize>,
    pub right: Vec<usize>,
    pub centroids: [Vec<f64>; 2],
    pub sweeps: usize,
    /// Objective after each centroid update (within-cluster sum of squares
    /// for k-means, total Hamming cost for k-modes).
    pub objective: Vec<f64>,
}

pub(crate) fn finish_split(
    assignment: &[u8],
    mut centroids: [Vec<f64>; 2],
    sweeps: usize,
    objective: Vec<f64>,
) -> TwoWaySplit {
    let flip = assignment.first() == Some(&1);
    let (mut left, mut right) = (Vec::new(), Vec::new());
    for (i, &a) in assignment.iter().enumerate() {
        if (a == 0) != flip {
            left.push(i);
        } else {
            right.push(i);
        }
    }
    if flip {
        centroids.swap(0, 1);
    }
    TwoWaySplit { left, right, centroids, sweeps, objective }
}
