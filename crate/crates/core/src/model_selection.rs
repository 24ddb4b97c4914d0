//! Calinski-Harabasz scoring on the bias metric and cross-validated choice
//! of the minimum cluster size.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::clustering::{assign_all, fit_hbac, HbacConfig};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::split::kfold;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChScore {
    /// Finite score; ignored when `infinite` is set.
    pub value: f64,
    /// Zero within-cluster variance with nonzero between-cluster variance.
    pub infinite: bool,
    pub k: usize,
    pub n: usize,
}

impl ChScore {
    pub fn as_f64(&self) -> f64 {
        if self.infinite {
            f64::INFINITY
        } else {
            self.value
        }
    }
}

/// `[SSB / (k - 1)] / [SSW / (n - k)]` of the scalar metric under `assignment`.
///
/// `k` counts the distinct labels present. A zero within-cluster sum of
/// squares gives the infinite flag, unless the between-cluster sum is zero as
/// well, in which case the score is 0.
pub fn calinski_harabasz(metric: &[f64], assignment: &[usize]) -> Result<ChScore> {
    let n = metric.len();
    if assignment.len() != n {
        return Err(Error::InvalidConfig("metric and assignment lengths differ".into()));
    }
    let width = assignment.iter().copied().max().map_or(0, |m| m + 1);
    let mut sums = vec![0.0; width];
    let mut counts = vec![0usize; width];
    for (&a, &m) in assignment.iter().zip(metric) {
        sums[a] += m;
        counts[a] += 1;
    }
    let k = counts.iter().filter(|&&c| c > 0).count();
    if k < 2 || n <= k {
        return Err(Error::UndefinedScore { k, n });
    }
    let grand = metric.iter().sum::<f64>() / n as f64;
    let means: Vec<f64> = sums.iter().zip(&counts).map(|(s, &c)| if c > 0 { s / c as f64 } else { 0.0 }).collect();
    let ssb: f64 = means.iter().zip(&counts).map(|(m, &c)| c as f64 * (m - grand) * (m - grand)).sum();
    let ssw: f64 = assignment.iter().zip(metric).map(|(&a, &m)| (m - means[a]) * (m - means[a])).sum();
    let (value, infinite) =
        if ssw == 0.0 { (0.0, ssb > 0.0) } else { ((ssb / (k - 1) as f64) / (ssw / (n - k) as f64), false) };
    Ok(ChScore { value, infinite, k, n })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum FoldScore {
    Scored {
        score: ChScore,
    },
    /// Held-out rows landed in fewer than two clusters (or too few rows);
    /// scored as 0, the minimum of the index.
    Degenerate {
        clusters: usize,
    },
}

impl FoldScore {
    pub fn as_f64(&self) -> f64 {
        match self {
            FoldScore::Scored { score } => score.as_f64(),
            FoldScore::Degenerate { .. } => 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateScores {
    pub n_min: usize,
    pub feasible: bool,
    pub fold_scores: Vec<FoldScore>,
    /// Mean over folds; `None` when infeasible or infinite.
    pub mean_score: Option<f64>,
    pub mean_infinite: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionResult {
    pub grid: Vec<usize>,
    pub folds: usize,
    pub candidates: Vec<CandidateScores>,
    pub chosen: usize,
}

/// Picks the `n_min` maximising the mean held-out Calinski-Harabasz index.
///
/// For each candidate and fold, HBAC is fit on the other folds, the held-out
/// fold is assigned by centroid, and the index is computed on its metric
/// values. Candidates with `2 * n_min` above any fold's training size are
/// infeasible. An infinite mean beats every finite one; ties go to the smaller
/// `n_min`.
pub fn select_n_min(dataset: &Dataset, grid: &[usize], folds: usize, base: &HbacConfig) -> Result<SelectionResult> {
    let blocks = kfold(dataset.len(), folds, base.seed)?;
    let n = dataset.len();
    let min_train = blocks.iter().map(|b| n - b.len()).min().unwrap_or(0);
    let train_sets: Vec<(Dataset, Dataset)> = blocks
        .iter()
        .map(|held| {
            let mut in_fold = vec![false; n];
            held.iter().for_each(|&i| in_fold[i] = true);
            let train: Vec<usize> = (0..n).filter(|&i| !in_fold[i]).collect();
            (dataset.subset(&train), dataset.subset(held))
        })
        .collect();

    let jobs: Vec<(usize, usize)> = grid
        .iter()
        .enumerate()
        .filter(|(_, &n_min)| n_min >= 1 && 2 * n_min <= min_train)
        .flat_map(|(c, _)| (0..folds).map(move |f| (c, f)))
        .collect();
    let scored: Vec<((usize, usize), FoldScore)> = jobs
        .par_iter()
        .map(|&(c, f)| {
            let config = HbacConfig { n_min: grid[c], ..*base };
            let (train, held) = &train_sets[f];
            let partition = fit_hbac(train, &config)?;
            let labels = assign_all(&partition, held)?;
            let score = match calinski_harabasz(held.metric(), &labels) {
                Ok(score) => FoldScore::Scored { score },
                Err(Error::UndefinedScore { k, .. }) => FoldScore::Degenerate { clusters: k },
                Err(e) => return Err(e),
            };
            Ok(((c, f), score))
        })
        .collect::<Result<_>>()?;

    let mut candidates: Vec<CandidateScores> = grid
        .iter()
        .map(|&n_min| CandidateScores {
            n_min,
            feasible: n_min >= 1 && 2 * n_min <= min_train,
            fold_scores: Vec::new(),
            mean_score: None,
            mean_infinite: false,
        })
        .collect();
    for ((c, _), score) in scored {
        candidates[c].fold_scores.push(score);
    }
    for cand in candidates.iter_mut().filter(|c| c.feasible) {
        let values: Vec<f64> = cand.fold_scores.iter().map(FoldScore::as_f64).collect();
        if values.iter().any(|v| v.is_infinite()) {
            cand.mean_infinite = true;
        } else {
            cand.mean_score = Some(values.iter().sum::<f64>() / values.len() as f64);
        }
    }

    let key =
        |c: &CandidateScores| if c.mean_infinite { f64::INFINITY } else { c.mean_score.unwrap_or(f64::NEG_INFINITY) };
    let chosen = candidates
        .iter()
        .filter(|c| c.feasible)
        .max_by(|a, b| key(a).total_cmp(&key(b)).then(b.n_min.cmp(&a.n_min)))
        .map(|c| c.n_min)
        .ok_or(Error::InfeasibleGrid)?;
    Ok(SelectionResult { grid: grid.to_vec(), folds, candidates, chosen })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_computed_eight() {
        // Means 1 and 5, grand 3: SSB = 2*4 + 2*4 = 16, SSW = 4, (16/1)/(4/2) = 8.
        let s = calinski_harabasz(&[0.0, 2.0, 4.0, 6.0], &[0, 0, 1, 1]).unwrap();
        assert_eq!(s.value, 8.0);
        assert!(!s.infinite);
        assert_eq!((s.k, s.n), (2, 4));
    }

    #[test]
    fn zero_within_variance_is_infinite() {
        let s = calinski_harabasz(&[1.0, 1.0, 2.0, 2.0], &[0, 0, 1, 1]).unwrap();
        assert!(s.infinite);
        assert_eq!(s.as_f64(), f64::INFINITY);
    }

    #[test]
    fn constant_metric_scores_zero() {
        let s = calinski_harabasz(&[1.0; 4], &[0, 0, 1, 1]).unwrap();
        assert!(!s.infinite);
        assert_eq!(s.value, 0.0);
    }

    #[test]
    fn single_cluster_is_undefined() {
        assert!(matches!(calinski_harabasz(&[1.0, 2.0], &[0, 0]), Err(Error::UndefinedScore { k: 1, .. })));
        assert!(matches!(calinski_harabasz(&[1.0, 2.0], &[0, 1]), Err(Error::UndefinedScore { k: 2, n: 2 })));
    }

    #[test]
    fn gaps_in_labels_are_not_counted() {
        let a = calinski_harabasz(&[0.0, 2.0, 4.0, 6.0], &[0, 0, 3, 3]).unwrap();
        assert_eq!(a.value, 8.0);
        assert_eq!(a.k, 2);
    }
}
