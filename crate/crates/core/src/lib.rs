//! Hierarchical bias-aware clustering (HBAC) for auditing algorithmic
//! decision systems without access to protected attributes.
//!
//! The crate finds clusters of rows whose bias metric deviates from the rest,
//! and tests those deviations on held-out data.

pub mod audit;
pub mod clustering;
pub mod data;
pub mod duo;
pub mod error;
pub mod io;
pub mod model_selection;
pub mod rng;
pub mod simulation;
pub mod split;
pub mod stats;

pub use audit::{run_audit, AuditConfig, AuditOutcome, AuditReport, NMinGrid};
pub use clustering::{assign, assign_all, fit_hbac, Cluster, HbacConfig, Partition, Splitter};
pub use data::{
    one_hot_expand, validate, Column, ColumnKind, Dataset, FeatureSchema, MetricKind, ValidationResult, Violation,
};
pub use error::{Error, Result};
pub use model_selection::{calinski_harabasz, select_n_min, ChScore, SelectionResult};
pub use rng::RngStream;
pub use split::{split_sample, SplitIndices};
pub use stats::{test_clusters, ClusterTest, Correction, TestKind, TestReport};
