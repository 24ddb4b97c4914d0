//! Fixtures for the benchmarks.

use hbac_core::simulation::{draw_params, gen_features, gen_labels, gen_metric, LabelMode, Scenario, SimConfig};
use hbac_core::{Dataset, FeatureSchema, MetricKind, RngStream};
use ndarray::Array2;

/// Linear-bias simulation data with a continuous metric.
pub fn sim_dataset(k: usize, n: usize, d: usize, seed: u64) -> Dataset {
    let config = SimConfig::new(k, n, d, Scenario::Linear, LabelMode::DirectMetric);
    let mut rng = RngStream::new(seed, 0).rng();
    let params = draw_params(&config, &mut rng).expect("valid config");
    let (x, truth) = gen_features(&config, &params, &mut rng).expect("valid config");
    let metric = gen_metric(&config, &params, &truth, &mut rng).expect("direct metric");
    Dataset::new(x, metric, None, FeatureSchema::numeric(d, MetricKind::Continuous)).expect("valid dataset")
}

/// Features and Bernoulli labels for classifier benchmarks.
pub fn sim_labels(n: usize, d: usize, seed: u64) -> (Array2<f64>, Vec<u8>) {
    let config = SimConfig::new(5, n, d, Scenario::Linear, LabelMode::BernoulliLabels);
    let mut rng = RngStream::new(seed, 0).rng();
    let params = draw_params(&config, &mut rng).expect("valid config");
    let (x, truth) = gen_features(&config, &params, &mut rng).expect("valid config");
    let labels = gen_labels(&config, &params, &truth, &mut rng).expect("bernoulli labels");
    (x, labels)
}

/// Binary metric column with the given rate of ones, deterministic.
pub fn binary_metric(n: usize, every: usize) -> Vec<f64> {
    (0..n).map(|i| if i % every == 0 { 1.0 } else { 0.0 }).collect()
}
