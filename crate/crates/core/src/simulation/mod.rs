//! Synthetic data generators and the simulation campaign harness.

mod campaign;
mod generate;
mod logistic;

pub use campaign::{
    rate_summary, run_campaign, run_simulation, summarize, CampaignResult, CampaignSettings, CampaignSummary,
    ClusterRecord, DifferenceSummary, Experiment, MeanCi, RankRow, RateSummary, SimRecord, Variant, VariantTest,
};
pub use generate::{
    draw_params, eta, gen_features, gen_labels, gen_metric, label_probability, ClusterParams, LabelMode, Scenario,
    SimConfig,
};
pub use logistic::{
    metric_from_model, train_logistic, train_logistic_traced, LogisticModel, LogisticTrainer, MetricSource, DEFAULT_L2,
    GRAD_TOL,
};
