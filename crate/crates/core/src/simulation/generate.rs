use ndarray::Array2;
use rand::Rng;
use rand_distr::{Bernoulli, Distribution, StandardNormal, Uniform};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scenario {
    /// Same metric mean (label probability) in every cluster.
    Constant,
    /// Metric mean rising linearly from -1 to 1 (label probability 0.1 to 0.9).
    Linear,
}

impl std::str::FromStr for Scenario {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "constant" | "1" => Ok(Scenario::Constant),
            "linear" | "2" => Ok(Scenario::Linear),
            other => Err(format!("unknown scenario {other:?} (expected constant or linear)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelMode {
    /// The metric itself is drawn per row.
    DirectMetric,
    /// Binary labels are drawn and the metric comes from a fitted classifier.
    BernoulliLabels,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub k_clusters: usize,
    pub n_total: usize,
    pub d: usize,
    pub scenario: Scenario,
    pub label_mode: LabelMode,
    pub seed: u64,
}

impl SimConfig {
    pub fn new(k_clusters: usize, n_total: usize, d: usize, scenario: Scenario, label_mode: LabelMode) -> Self {
        Self { k_clusters, n_total, d, scenario, label_mode, seed: 0 }
    }

    pub fn check(&self) -> Result<()> {
        if self.k_clusters < 2 {
            return Err(Error::InvalidConfig("need at least 2 generating clusters".into()));
        }
        if self.d == 0 {
            return Err(Error::InvalidConfig("feature dimension must be at least 1".into()));
        }
        if self.n_total == 0 || self.n_total % self.k_clusters != 0 {
            return Err(Error::InvalidConfig(format!(
                "n_total {} must be a positive multiple of k_clusters {}",
                self.n_total, self.k_clusters
            )));
        }
        Ok(())
    }

    pub fn per_cluster(&self) -> usize {
        self.n_total / self.k_clusters
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClusterParams {
    pub mu: f64,
    pub eta: f64,
    pub p: f64,
}

/// Metric mean of cluster `k` (0-based) out of `n_clusters`.
pub fn eta(scenario: Scenario, k: usize, n_clusters: usize) -> f64 {
    match scenario {
        Scenario::Constant => 0.0,
        Scenario::Linear => -1.0 + 2.0 * k as f64 / (n_clusters - 1) as f64,
    }
}

/// Label probability of cluster `k` (0-based) out of `n_clusters`.
pub fn label_probability(scenario: Scenario, k: usize, n_clusters: usize) -> f64 {
    match scenario {
        Scenario::Constant => 0.5,
        Scenario::Linear => 0.1 + 0.8 * k as f64 / (n_clusters - 1) as f64,
    }
}

/// Per-cluster parameters; each feature mean is drawn once from U(-1, 1).
pub fn draw_params<R: Rng + ?Sized>(config: &SimConfig, rng: &mut R) -> Result<Vec<ClusterParams>> {
    config.check()?;
    let unif = Uniform::new(-1.0, 1.0).expect("valid bounds");
    let k = config.k_clusters;
    Ok((0..k)
        .map(|c| ClusterParams {
            mu: unif.sample(rng),
            eta: eta(config.scenario, c, k),
            p: label_probability(config.scenario, c, k),
        })
        .collect())
}

/// Rows of cluster `k` are drawn from N(mu_k * 1_d, I_d). Rows are grouped
/// by cluster; the second value is each row's generating cluster.
pub fn gen_features<R: Rng + ?Sized>(
    config: &SimConfig,
    params: &[ClusterParams],
    rng: &mut R,
) -> Result<(Array2<f64>, Vec<usize>)> {
    config.check()?;
    let per = config.per_cluster();
    let truth: Vec<usize> = (0..config.n_total).map(|i| i / per).collect();
    let mut x = Array2::zeros((config.n_total, config.d));
    for (mut row, &k) in x.outer_iter_mut().zip(&truth) {
        for v in row.iter_mut() {
            let z: f64 = StandardNormal.sample(rng);
            *v = params[k].mu + z;
        }
    }
    Ok((x, truth))
}

/// `m_i ~ N(eta_k, 1)` for the row's generating cluster.
pub fn gen_metric<R: Rng + ?Sized>(
    config: &SimConfig,
    params: &[ClusterParams],
    truth: &[usize],
    rng: &mut R,
) -> Result<Vec<f64>> {
    if config.label_mode != LabelMode::DirectMetric {
        return Err(Error::InvalidConfig("metric generation needs label_mode = direct_metric".into()));
    }
    Ok(truth
        .iter()
        .map(|&k| {
            let z: f64 = StandardNormal.sample(rng);
            params[k].eta + z
        })
        .collect())
}

/// `y_i ~ Bernoulli(p_k)` for the row's generating cluster.
pub fn gen_labels<R: Rng + ?Sized>(
    config: &SimConfig,
    params: &[ClusterParams],
    truth: &[usize],
    rng: &mut R,
) -> Result<Vec<u8>> {
    if config.label_mode != LabelMode::BernoulliLabels {
        return Err(Error::InvalidConfig("label generation needs label_mode = bernoulli_labels".into()));
    }
    let dists: Vec<Bernoulli> = params
        .iter()
        .map(|p| Bernoulli::new(p.p).map_err(|e| Error::InvalidConfig(e.to_string())))
        .collect::<Result<_>>()?;
    Ok(truth.iter().map(|&k| u8::from(dists[k].sample(rng))).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngStream;

    fn cfg(k: usize, n: usize, d: usize, scenario: Scenario, mode: LabelMode) -> SimConfig {
        SimConfig::new(k, n, d, scenario, mode)
    }

    #[test]
    fn closed_forms_for_all_k() {
        for k in 2..=10 {
            for c in 0..k {
                let (num, den) = (c as f64, (k - 1) as f64);
                assert_eq!(eta(Scenario::Linear, c, k), -1.0 + 2.0 * num / den);
                assert_eq!(label_probability(Scenario::Linear, c, k), 0.1 + 0.8 * num / den);
                assert_eq!(eta(Scenario::Constant, c, k), 0.0);
                assert_eq!(label_probability(Scenario::Constant, c, k), 0.5);
            }
            assert_eq!(eta(Scenario::Linear, 0, k), -1.0);
            assert_eq!(eta(Scenario::Linear, k - 1, k), 1.0);
        }
    }

    #[test]
    fn five_cluster_values() {
        let e: Vec<f64> = (0..5).map(|c| eta(Scenario::Linear, c, 5)).collect();
        assert_eq!(e, vec![-1.0, -0.5, 0.0, 0.5, 1.0]);
        let p: Vec<f64> = (0..5).map(|c| label_probability(Scenario::Linear, c, 5)).collect();
        for (got, want) in p.iter().zip([0.1, 0.3, 0.5, 0.7, 0.9]) {
            assert!((got - want).abs() < 1e-15);
        }
        assert_eq!((0..2).map(|c| eta(Scenario::Linear, c, 2)).collect::<Vec<_>>(), vec![-1.0, 1.0]);
    }

    #[test]
    fn shapes_and_cluster_sizes() {
        let c = cfg(5, 1000, 2, Scenario::Constant, LabelMode::DirectMetric);
        let mut rng = RngStream::new(1, 0).rng();
        let params = draw_params(&c, &mut rng).unwrap();
        let (x, truth) = gen_features(&c, &params, &mut rng).unwrap();
        assert_eq!(x.dim(), (1000, 2));
        for k in 0..5 {
            assert_eq!(truth.iter().filter(|&&t| t == k).count(), 200);
        }
        let c1 = cfg(2, 10, 1, Scenario::Linear, LabelMode::DirectMetric);
        let p1 = draw_params(&c1, &mut rng).unwrap();
        assert_eq!(gen_features(&c1, &p1, &mut rng).unwrap().0.dim(), (10, 1));
    }

    #[test]
    fn feature_means_within_clt_bound() {
        let c = cfg(4, 2000, 3, Scenario::Linear, LabelMode::DirectMetric);
        let mut rng = RngStream::new(11, 0).rng();
        let params = draw_params(&c, &mut rng).unwrap();
        let (x, truth) = gen_features(&c, &params, &mut rng).unwrap();
        let per = c.per_cluster();
        for (k, p) in params.iter().enumerate() {
            assert!((-1.0..1.0).contains(&p.mu));
            let rows: Vec<f64> =
                x.outer_iter().zip(&truth).filter(|(_, &t)| t == k).flat_map(|(r, _)| r.to_vec()).collect();
            let m = rows.iter().sum::<f64>() / rows.len() as f64;
            assert!((m - p.mu).abs() < 4.0 / ((per * c.d) as f64).sqrt());
        }
    }

    #[test]
    fn metric_and_label_rates() {
        let c = cfg(5, 5000, 2, Scenario::Constant, LabelMode::DirectMetric);
        let mut rng = RngStream::new(5, 0).rng();
        let params = draw_params(&c, &mut rng).unwrap();
        let (_, truth) = gen_features(&c, &params, &mut rng).unwrap();
        let m = gen_metric(&c, &params, &truth, &mut rng).unwrap();
        let mean = m.iter().sum::<f64>() / m.len() as f64;
        assert!(mean.abs() < 4.0 / (m.len() as f64).sqrt());

        let c = cfg(5, 5000, 2, Scenario::Linear, LabelMode::BernoulliLabels);
        let params = draw_params(&c, &mut rng).unwrap();
        let (_, truth) = gen_features(&c, &params, &mut rng).unwrap();
        let y = gen_labels(&c, &params, &truth, &mut rng).unwrap();
        let per = c.per_cluster() as f64;
        for (k, p) in params.iter().enumerate() {
            let rate = truth.iter().zip(&y).filter(|(&t, _)| t == k).map(|(_, &v)| f64::from(v)).sum::<f64>() / per;
            assert!((rate - p.p).abs() < 4.0 * (p.p * (1.0 - p.p) / per).sqrt());
        }
        assert!(gen_metric(&c, &params, &truth, &mut rng).is_err());
    }

    #[test]
    fn deterministic_per_seed() {
        let c = cfg(3, 30, 2, Scenario::Linear, LabelMode::DirectMetric);
        let run = || {
            let mut rng = RngStream::new(9, 1).rng();
            let params = draw_params(&c, &mut rng).unwrap();
            let (x, truth) = gen_features(&c, &params, &mut rng).unwrap();
            (x, gen_metric(&c, &params, &truth, &mut rng).unwrap())
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn invalid_configs() {
        assert!(cfg(1, 10, 2, Scenario::Constant, LabelMode::DirectMetric).check().is_err());
        assert!(cfg(3, 10, 2, Scenario::Constant, LabelMode::DirectMetric).check().is_err());
        assert!(cfg(2, 10, 0, Scenario::Constant, LabelMode::DirectMetric).check().is_err());
    }
}
