//! L2-penalised logistic regression fit by damped Newton iterations.
//!
//! The objective is the mean log-loss plus `l2/2 * |w|^2`; the intercept is
//! not penalised. Each Newton step is followed by Armijo backtracking, so the
//! objective never increases.

use nalgebra::{DMatrix, DVector};
use ndarray::ArrayView2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::Trainer;

pub const DEFAULT_L2: f64 = 1e-4;
pub const GRAD_TOL: f64 = 1e-8;
const MAX_NEWTON: usize = 500;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticModel {
    pub weights: Vec<f64>,
    pub intercept: f64,
    pub l2_penalty: f64,
    pub iterations: usize,
    pub grad_norm: f64,
}

fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

struct Problem<'a> {
    x: ArrayView2<'a, f64>,
    y: &'a [u8],
    l2: f64,
}

impl Problem<'_> {
    fn linear(&self, beta: &DVector<f64>, i: usize) -> f64 {
        beta[0] + self.x.row(i).iter().enumerate().map(|(j, v)| beta[j + 1] * v).sum::<f64>()
    }

    fn loss(&self, beta: &DVector<f64>) -> f64 {
        let n = self.x.nrows();
        // Compensated sum: near the optimum the per-step decrease is close
        // to the rounding error of a naive sum.
        let (mut sum, mut comp) = (0.0f64, 0.0f64);
        for i in 0..n {
            let z = self.linear(beta, i);
            let term = softplus(z) - f64::from(self.y[i]) * z;
            let t = sum + term;
            comp += if sum.abs() >= term.abs() { (sum - t) + term } else { (term - t) + sum };
            sum = t;
        }
        let pen: f64 = beta.iter().skip(1).map(|w| w * w).sum();
        (sum + comp) / n as f64 + 0.5 * self.l2 * pen
    }

    fn grad_hess(&self, beta: &DVector<f64>) -> (DVector<f64>, DMatrix<f64>) {
        let (n, d) = self.x.dim();
        let p = d + 1;
        let mut g = DVector::zeros(p);
        let mut h = DMatrix::zeros(p, p);
        let mut z = vec![1.0; p];
        for i in 0..n {
            for j in 0..d {
                z[j + 1] = self.x[[i, j]];
            }
            let s = sigmoid(self.linear(beta, i));
            let r = s - f64::from(self.y[i]);
            let w = s * (1.0 - s);
            for a in 0..p {
                g[a] += r * z[a];
                for b in 0..=a {
                    h[(a, b)] += w * z[a] * z[b];
                }
            }
        }
        let inv_n = 1.0 / n as f64;
        g *= inv_n;
        h *= inv_n;
        for a in 0..p {
            for b in 0..a {
                h[(b, a)] = h[(a, b)];
            }
        }
        for j in 1..p {
            g[j] += self.l2 * beta[j];
            h[(j, j)] += self.l2;
        }
        (g, h)
    }
}

/// Fits the model; `losses` receives the objective after every iterate.
pub fn train_logistic_traced(
    features: ArrayView2<'_, f64>,
    labels: &[u8],
    l2_penalty: f64,
    losses: &mut Vec<f64>,
) -> Result<LogisticModel> {
    let n = features.nrows();
    if n < 2 || labels.len() != n {
        return Err(Error::InvalidConfig(format!("need at least 2 labelled rows, got {n}")));
    }
    if !(l2_penalty >= 0.0 && l2_penalty.is_finite()) {
        return Err(Error::InvalidConfig(format!("l2 penalty must be nonnegative, got {l2_penalty}")));
    }
    let ones = labels.iter().filter(|&&v| v == 1).count();
    if ones == 0 || ones == n {
        return Err(Error::SingleClass);
    }
    let prob = Problem { x: features, y: labels, l2: l2_penalty };
    let p = features.ncols() + 1;
    let mut beta = DVector::zeros(p);
    // Start from the intercept-only optimum.
    let rate = ones as f64 / n as f64;
    beta[0] = (rate / (1.0 - rate)).ln();
    let mut loss = prob.loss(&beta);
    losses.push(loss);
    let mut iterations = 0;
    let mut grad_norm;
    loop {
        let (g, h) = prob.grad_hess(&beta);
        grad_norm = g.norm();
        if grad_norm <= GRAD_TOL || iterations >= MAX_NEWTON {
            break;
        }
        let step = match h.clone().cholesky() {
            Some(ch) => ch.solve(&(-&g)),
            None => -&g,
        };
        let slope = g.dot(&step);
        let step = if slope < 0.0 { step } else { -&g };
        let slope = g.dot(&step);
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..60 {
            let cand = &beta + &step * t;
            let cand_loss = prob.loss(&cand);
            // Past the precision of the loss, accept a non-increasing step
            // that shrinks the gradient.
            let armijo = cand_loss <= loss + 1e-4 * t * slope;
            if armijo || (cand_loss <= loss && prob.grad_hess(&cand).0.norm() < grad_norm) {
                beta = cand;
                loss = cand_loss;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        iterations += 1;
        losses.push(loss);
        if !accepted {
            // No representable decrease remains.
            break;
        }
    }
    if !beta.iter().all(|v| v.is_finite()) {
        return Err(Error::Trainer("non-finite coefficients".into()));
    }
    if grad_norm > GRAD_TOL {
        log::debug!("logistic fit stopped at gradient norm {grad_norm:e} after {iterations} iterations");
    }
    Ok(LogisticModel {
        weights: beta.iter().skip(1).copied().collect(),
        intercept: beta[0],
        l2_penalty,
        iterations,
        grad_norm,
    })
}

/// Deterministic: `_seed` is accepted for the trainer interface only.
pub fn train_logistic(
    features: ArrayView2<'_, f64>,
    labels: &[u8],
    l2_penalty: f64,
    _seed: u64,
) -> Result<LogisticModel> {
    train_logistic_traced(features, labels, l2_penalty, &mut Vec::new())
}

impl LogisticModel {
    pub fn probabilities(&self, features: ArrayView2<'_, f64>) -> Vec<f64> {
        features
            .outer_iter()
            .map(|r| sigmoid(self.intercept + r.iter().zip(&self.weights).map(|(x, w)| x * w).sum::<f64>()))
            .collect()
    }

    /// Hard predictions (probability at least 0.5) and probabilities.
    pub fn predict(&self, features: ArrayView2<'_, f64>) -> (Vec<u8>, Vec<f64>) {
        let probs = self.probabilities(features);
        (probs.iter().map(|&p| u8::from(p >= 0.5)).collect(), probs)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogisticTrainer {
    pub l2_penalty: f64,
}

impl Default for LogisticTrainer {
    fn default() -> Self {
        Self { l2_penalty: DEFAULT_L2 }
    }
}

impl Trainer for LogisticTrainer {
    type Model = LogisticModel;

    fn train(&self, features: ArrayView2<'_, f64>, labels: &[u8], seed: u64) -> Result<LogisticModel> {
        train_logistic(features, labels, self.l2_penalty, seed)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricSource {
    /// `m_i = yhat_i`, the hard prediction.
    PredictedValue,
    /// `m_i = 1` when the hard prediction equals the label.
    Accuracy,
    /// `m_i` is the predicted probability.
    Probability,
}

pub fn metric_from_model(
    kind: MetricSource,
    model: &LogisticModel,
    features: ArrayView2<'_, f64>,
    labels: &[u8],
) -> Vec<f64> {
    let (hard, probs) = model.predict(features);
    match kind {
        MetricSource::PredictedValue => hard.iter().map(|&v| f64::from(v)).collect(),
        MetricSource::Accuracy => hard.iter().zip(labels).map(|(a, b)| f64::from(u8::from(a == b))).collect(),
        MetricSource::Probability => probs,
    }
}
