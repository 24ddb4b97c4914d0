//! Replica of a rule-based student risk-profiling scheme, with a synthetic
//! cohort generator for end-to-end audit demos.
//!
//! R1 (education factor) and R3 (age combinations) are built in. R2 (age by
//! distance) must be supplied as a table file.

mod cohort;
mod score;
mod tables;

pub use cohort::{cohort_from_records, cohort_schema, synth_cohort, Cohort, CohortMix, MixEntry};
pub use score::{categorize, is_high_risk, risk_score, RiskOutcome, StudentRecord, MAX_SCORE};
pub use tables::{
    default_r1, default_r3, read_r1, read_r2, read_r3, AgeBand, AgeTriple, DistanceBand, Education, R3Row, RiskTables,
    R1, R3_ROWS,
};
