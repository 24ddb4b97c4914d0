use ndarray::{ArrayView1, ArrayView2};
use rand::Rng;

use super::{finish_split, TwoWaySplit, MAX_SWEEPS};
use crate::error::{Error, Result};

/// Rows sampled when looking for the farthest seed pair.
const SEED_SAMPLE: usize = 64;

fn sq_dist(a: ArrayView1<'_, f64>, b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn farthest_from(rows: ArrayView2<'_, f64>, anchor: &[f64]) -> (usize, f64) {
    let mut best = (0, -1.0);
    for (i, r) in rows.outer_iter().enumerate() {
        let d = sq_dist(r, anchor);
        if d > best.1 {
            best = (i, d);
        }
    }
    best
}

/// Farthest pair among a seeded sample of rows. Falls back to the row
/// farthest from the first sampled row when the sample is a single point.
fn seed_pair<R: Rng + ?Sized>(rows: ArrayView2<'_, f64>, rng: &mut R) -> Result<(usize, usize)> {
    let n = rows.nrows();
    let mut sample = rand::seq::index::sample(rng, n, n.min(SEED_SAMPLE)).into_vec();
    sample.sort_unstable();
    let mut best = (sample[0], sample[0], 0.0);
    for (p, &i) in sample.iter().enumerate() {
        for &j in &sample[p + 1..] {
            let d = sq_dist(rows.row(i), rows.row(j).as_slice().expect("standard layout"));
            if d > best.2 {
                best = (i, j, d);
            }
        }
    }
    if best.2 > 0.0 {
        return Ok((best.0, best.1));
    }
    let anchor = rows.row(sample[0]).to_vec();
    let (j, d) = farthest_from(rows, &anchor);
    if d > 0.0 {
        Ok((sample[0], j))
    } else {
        Err(Error::DegenerateSplit("all rows are identical".into()))
    }
}

/// Approximate most distant pair by a double farthest-point sweep.
fn distant_pair(rows: ArrayView2<'_, f64>) -> (usize, usize) {
    let (a, _) = farthest_from(rows, rows.row(0).as_slice().expect("standard layout"));
    let (b, _) = farthest_from(rows, &rows.row(a).to_vec());
    (a, b)
}

fn assign(rows: ArrayView2<'_, f64>, c: &[Vec<f64>; 2], out: &mut [u8]) -> [usize; 2] {
    let mut counts = [0, 0];
    for (i, r) in rows.outer_iter().enumerate() {
        let side = u8::from(sq_dist(r, &c[1]) < sq_dist(r, &c[0]));
        out[i] = side;
        counts[side as usize] += 1;
    }
    counts
}

fn update(rows: ArrayView2<'_, f64>, assignment: &[u8]) -> ([Vec<f64>; 2], f64) {
    let d = rows.ncols();
    let mut sums = [vec![0.0; d], vec![0.0; d]];
    let mut counts = [0usize; 2];
    for (r, &a) in rows.outer_iter().zip(assignment) {
        counts[a as usize] += 1;
        for (s, x) in sums[a as usize].iter_mut().zip(r.iter()) {
            *s += x;
        }
    }
    for (s, &c) in sums.iter_mut().zip(&counts) {
        for v in s.iter_mut() {
            *v /= c as f64;
        }
    }
    let wss = rows.outer_iter().zip(assignment).map(|(r, &a)| sq_dist(r, &sums[a as usize])).sum();
    (sums, wss)
}

/// Two-means split by Lloyd iteration from a farthest-pair seed.
///
/// Iterates until the assignment is unchanged or [`MAX_SWEEPS`] sweeps have
/// run. Fails when every row is identical, or when a side empties twice.
pub fn split_two_kmeans<R: Rng + ?Sized>(rows: ArrayView2<'_, f64>, rng: &mut R) -> Result<TwoWaySplit> {
    let n = rows.nrows();
    if n < 2 {
        return Err(Error::DegenerateSplit(format!("cannot split {n} rows")));
    }
    let rows = rows.as_standard_layout();
    let rows = rows.view();
    let (a, b) = seed_pair(rows, rng)?;
    let mut centroids = [rows.row(a).to_vec(), rows.row(b).to_vec()];
    let mut assignment = vec![0u8; n];
    let mut reseeded = false;
    let mut objective = Vec::new();
    let mut sweeps = 0;
    let mut counts = assign(rows, &centroids, &mut assignment);
    loop {
        if counts.contains(&0) {
            if reseeded {
                return Err(Error::DegenerateSplit("a side emptied after reseeding".into()));
            }
            reseeded = true;
            let (a, b) = distant_pair(rows);
            centroids = [rows.row(a).to_vec(), rows.row(b).to_vec()];
            counts = assign(rows, &centroids, &mut assignment);
            continue;
        }
        let (c, wss) = update(rows, &assignment);
        centroids = c;
        objective.push(wss);
        sweeps += 1;
        if sweeps >= MAX_SWEEPS {
            break;
        }
        let mut next = vec![0u8; n];
        let next_counts = assign(rows, &centroids, &mut next);
        if next == assignment {
            break;
        }
        assignment = next;
        counts = next_counts;
    }
    Ok(finish_split(&assignment, centroids, sweeps, objective))
}
