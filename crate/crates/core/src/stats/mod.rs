//! Hypothesis tests, multiple-testing correction and the special functions
//! behind the p-values.

pub mod descriptive;
mod hypothesis;
mod permutation;
pub mod special;

pub use hypothesis::{
    adjust, bonferroni, chi2_2x2, chi2_test, cluster_groups, test_assignment, test_clusters, welch_t_test, Chi2Result,
    ClusterTest, Correction, SplitSummary, TestKind, TestReport, WelchResult,
};
pub use permutation::{
    cluster_abs_differences, permutation_cluster_tests, permutation_p_value, permutation_test, PermutationOutcome,
    Trainer, MIN_PERMUTATIONS,
};
pub use special::{chi2_sf, student_t_cdf};
