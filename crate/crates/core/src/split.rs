//! Train/test sample splitting and cross-validation folds.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::RngStream;

const SPLIT_STREAM: u64 = 0x5917;
const FOLD_STREAM: u64 = 0xF01D;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitIndices {
    /// Ascending.
    pub train: Vec<usize>,
    /// Ascending.
    pub test: Vec<usize>,
    pub fraction: f64,
    pub seed: u64,
}

/// Number of held-out rows: `fraction * n` rounded half up.
pub fn test_size(n: usize, fraction: f64) -> usize {
    (fraction * n as f64 + 0.5).floor() as usize
}

/// Uniform random partition of `0..n` into train and test, with
/// `round(fraction * n)` test rows.
pub fn split_sample(n: usize, fraction: f64, seed: u64) -> Result<SplitIndices> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::InvalidConfig(format!("test fraction must lie in (0, 1), got {fraction}")));
    }
    let n_test = test_size(n, fraction);
    if n < 2 || n_test == 0 || n_test >= n {
        return Err(Error::DegenerateSplit(format!(
            "splitting {n} rows with fraction {fraction} leaves {n_test} test and {} train rows",
            n.saturating_sub(n_test)
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut RngStream::new(seed, SPLIT_STREAM).rng());
    let mut test = order[..n_test].to_vec();
    let mut train = order[n_test..].to_vec();
    test.sort_unstable();
    train.sort_unstable();
    Ok(SplitIndices { train, test, fraction, seed })
}

/// `folds` contiguous blocks of a seeded shuffle of `0..n`; block sizes
/// differ by at most one. Each block is returned ascending.
pub fn kfold(n: usize, folds: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if folds < 2 || folds > n {
        return Err(Error::InvalidConfig(format!("cannot build {folds} folds from {n} rows")));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut RngStream::new(seed, FOLD_STREAM).rng());
    let base = n / folds;
    let extra = n % folds;
    let mut out = Vec::with_capacity(folds);
    let mut start = 0;
    for f in 0..folds {
        let len = base + usize::from(f < extra);
        let mut block = order[start..start + len].to_vec();
        block.sort_unstable();
        out.push(block);
        start += len;
    }
    Ok(out)
}
