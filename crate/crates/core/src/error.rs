use thiserror::Error;

use crate::data::Violation;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dataset failed validation: {}", format_violations(.0))]
    Validation(Vec<Violation>),

    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),

    #[error("degenerate split: {0}")]
    DegenerateSplit(String),

    #[error("insufficient data: {n} rows cannot hold two clusters of at least {n_min}")]
    InsufficientData { n: usize, n_min: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("calinski-harabasz index undefined for k={k}, n={n}")]
    UndefinedScore { k: usize, n: usize },

    #[error("no n_min candidate is feasible on every fold")]
    InfeasibleGrid,

    #[error("degenerate variance: both samples have zero variance")]
    DegenerateVariance,

    #[error("insufficient sample: need at least {needed} observations per group, got {got}")]
    InsufficientSample { needed: usize, got: usize },

    #[error("degenerate contingency table: {0}")]
    DegenerateTable(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("training labels contain a single class")]
    SingleClass,

    #[error("trainer failed: {0}")]
    Trainer(String),

    #[error("risk table has no R2 entry for age {age}, distance {distance}")]
    MissingR2Entry { age: String, distance: String },

    #[error("distance is unknown; the record cannot be scored")]
    UnknownDistance,

    #[error("value {0} is outside the risk score range [0, 180]")]
    OutOfRange(f64),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("simulation {sim} (stream seed {seed}) failed: {source}")]
    Campaign {
        sim: usize,
        seed: u64,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Errors caused by the caller's data or configuration rather than by a
    /// defect in this library.
    pub fn is_data_error(&self) -> bool {
        match self {
            Error::Io(_) | Error::Json(_) => false,
            Error::Campaign { source, .. } => source.is_data_error(),
            _ => true,
        }
    }

    /// Short machine-readable tag used in CLI error records.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Validation(_) => "validation",
            Error::SchemaMismatch(_) => "schema_mismatch",
            Error::DegenerateSplit(_) => "degenerate_split",
            Error::InsufficientData { .. } => "insufficient_data",
            Error::InvalidConfig(_) => "invalid_config",
            Error::UndefinedScore { .. } => "undefined_score",
            Error::InfeasibleGrid => "infeasible_grid",
            Error::DegenerateVariance => "degenerate_variance",
            Error::InsufficientSample { .. } => "insufficient_sample",
            Error::DegenerateTable(_) => "degenerate_table",
            Error::Domain(_) => "domain",
            Error::SingleClass => "single_class",
            Error::Trainer(_) => "trainer",
            Error::MissingR2Entry { .. } => "missing_r2_entry",
            Error::UnknownDistance => "unknown_distance",
            Error::OutOfRange(_) => "out_of_range",
            Error::Parse(_) => "parse",
            Error::Campaign { .. } => "campaign",
            Error::Io(_) => "io",
            Error::Csv(_) => "csv",
            Error::Json(_) => "json",
        }
    }
}

fn format_violations(v: &[Violation]) -> String {
    let shown: Vec<String> = v.iter().take(5).map(|x| x.to_string()).collect();
    let mut s = shown.join("; ");
    if v.len() > 5 {
        s.push_str(&format!("; and {} more", v.len() - 5));
    }
    s
}
