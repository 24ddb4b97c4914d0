use ndarray::{ArrayView1, ArrayView2};
use rand::Rng;

use super::{finish_split, TwoWaySplit, MAX_SWEEPS};
use crate::error::{Error, Result};

/// Number of positions where two category vectors differ.
pub fn hamming(a: ArrayView1<'_, f64>, b: &[f64]) -> usize {
    a.iter().zip(b).filter(|(x, y)| x != y).count()
}

/// Per-column value counts over category codes `0..=max_code`.
struct ColumnCounts {
    counts: Vec<Vec<usize>>,
}

impl ColumnCounts {
    fn new(rows: ArrayView2<'_, f64>) -> Result<Self> {
        let mut counts = Vec::with_capacity(rows.ncols());
        for col in rows.columns() {
            let mut max = 0usize;
            for &v in col {
                if v < 0.0 || v.fract() != 0.0 || !v.is_finite() {
                    return Err(Error::SchemaMismatch(format!("k-modes needs category codes, found {v}")));
                }
                max = max.max(v as usize);
            }
            counts.push(vec![0; max + 1]);
        }
        Ok(Self { counts })
    }

    fn clear(&mut self) {
        self.counts.iter_mut().for_each(|c| c.fill(0));
    }

    fn add(&mut self, row: ArrayView1<'_, f64>) {
        for (c, &v) in self.counts.iter_mut().zip(row) {
            c[v as usize] += 1;
        }
    }

    /// Most frequent code per column; ties go to the smallest code.
    fn modes(&self) -> Vec<f64> {
        self.counts
            .iter()
            .map(|c| {
                let mut best = 0;
                for (code, &k) in c.iter().enumerate() {
                    if k > c[best] {
                        best = code;
                    }
                }
                best as f64
            })
            .collect()
    }
}

/// Cao et al. density/distance seeding for two modes: the densest row, then
/// the row maximising density times Hamming distance to the first.
fn cao_seeds(rows: ArrayView2<'_, f64>, counts: &ColumnCounts) -> Result<(usize, usize)> {
    let density: Vec<f64> = rows
        .outer_iter()
        .map(|r| r.iter().zip(&counts.counts).map(|(&v, c)| c[v as usize] as f64).sum::<f64>())
        .collect();
    let mut first = 0;
    for (i, &d) in density.iter().enumerate() {
        if d > density[first] {
            first = i;
        }
    }
    let anchor = rows.row(first).to_vec();
    let mut second = None;
    let mut best = 0.0;
    for (i, r) in rows.outer_iter().enumerate() {
        let score = density[i] * hamming(r, &anchor) as f64;
        if score > best {
            best = score;
            second = Some(i);
        }
    }
    second.map(|s| (first, s)).ok_or_else(|| Error::DegenerateSplit("all rows are identical".into()))
}

fn distant_pair(rows: ArrayView2<'_, f64>) -> (usize, usize) {
    let farthest = |anchor: &[f64]| {
        let mut best = (0, 0);
        for (i, r) in rows.outer_iter().enumerate() {
            let d = hamming(r, anchor);
            if d > best.1 {
                best = (i, d);
            }
        }
        best.0
    };
    let a = farthest(&rows.row(0).to_vec());
    let b = farthest(&rows.row(a).to_vec());
    (a, b)
}

fn assign(rows: ArrayView2<'_, f64>, modes: &[Vec<f64>; 2], out: &mut [u8]) -> [usize; 2] {
    let mut counts = [0, 0];
    for (i, r) in rows.outer_iter().enumerate() {
        let side = u8::from(hamming(r, &modes[1]) < hamming(r, &modes[0]));
        out[i] = side;
        counts[side as usize] += 1;
    }
    counts
}

fn update(rows: ArrayView2<'_, f64>, assignment: &[u8], scratch: &mut [ColumnCounts; 2]) -> ([Vec<f64>; 2], f64) {
    scratch.iter_mut().for_each(ColumnCounts::clear);
    for (r, &a) in rows.outer_iter().zip(assignment) {
        scratch[a as usize].add(r);
    }
    let modes = [scratch[0].modes(), scratch[1].modes()];
    let cost = rows.outer_iter().zip(assignment).map(|(r, &a)| hamming(r, &modes[a as usize]) as f64).sum();
    (modes, cost)
}

/// Two-modes split (Huang mode updates under Hamming distance) seeded by
/// Cao's density method.
///
/// The seeding is deterministic, so `rng` is unused; it is accepted so both
/// splitters share a signature.
pub fn split_two_kmodes<R: Rng + ?Sized>(rows: ArrayView2<'_, f64>, _rng: &mut R) -> Result<TwoWaySplit> {
    let n = rows.nrows();
    if n < 2 {
        return Err(Error::DegenerateSplit(format!("cannot split {n} rows")));
    }
    let mut totals = ColumnCounts::new(rows)?;
    for r in rows.outer_iter() {
        totals.add(r);
    }
    let (a, b) = cao_seeds(rows, &totals)?;
    let mut scratch = [ColumnCounts::new(rows)?, ColumnCounts::new(rows)?];
    let mut modes = [rows.row(a).to_vec(), rows.row(b).to_vec()];
    let mut assignment = vec![0u8; n];
    let mut counts = assign(rows, &modes, &mut assignment);
    let mut reseeded = false;
    let mut objective = Vec::new();
    let mut sweeps = 0;
    loop {
        if counts.contains(&0) {
            if reseeded {
                return Err(Error::DegenerateSplit("a side emptied after reseeding".into()));
            }
            reseeded = true;
            let (a, b) = distant_pair(rows);
            modes = [rows.row(a).to_vec(), rows.row(b).to_vec()];
            counts = assign(rows, &modes, &mut assignment);
            continue;
        }
        let (m, cost) = update(rows, &assignment, &mut scratch);
        modes = m;
        objective.push(cost);
        sweeps += 1;
        if sweeps >= MAX_SWEEPS {
            break;
        }
        let mut next = vec![0u8; n];
        let next_counts = assign(rows, &modes, &mut next);
        if next == assignment {
            break;
        }
        assignment = next;
        counts = next_counts;
    }
    Ok(finish_split(&assignment, modes, sweeps, objective))
}
