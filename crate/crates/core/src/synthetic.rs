//! Deterministic synthetic dataset generators.
//!
//! The benchmark suite runs offline, so classification corpora are generated
//! rather than downloaded: sparse binary feature rows with labels from a
//! planted linear separator plus label noise. Two presets mirror the shapes
//! of common LibSVM binary tasks (a 112-feature one-hot categorical corpus
//! and a 300-feature sparse sparse-binary one). Identical (shape, seed)
//! inputs produce identical datasets on every platform.

use crate::objective::Dataset;
use crate::rng::{RngStream, StreamKind};

/// Sparse binary rows: `nnz_per_row` distinct active features per sample,
/// labels from a planted Gaussian-ish separator with `noise` flip rate.
/// Every feature index below `dim` appears in at least one row so the
/// dataset dimension is exactly `dim`.
pub fn sparse_binary(n: usize, dim: usize, nnz_per_row: usize, noise: f64, seed: u64) -> Dataset {
    assert!(n > 0 && dim > 0 && nnz_per_row >= 1 && nnz_per_row <= dim);
    let mut rng = RngStream::new(seed, 0, 0, StreamKind::Sampling);
    // planted separator, roughly unit-scale entries
    let w: Vec<f64> = (0..dim).map(|_| 2.0 * rng.uniform() - 1.0).collect();
    let mut rows = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let mut cols = rng.subset(dim, nnz_per_row);
        // cycle a guaranteed feature through the rows so all of 0..dim occur
        let forced = i % dim;
        if !cols.contains(&forced) {
            cols[0] = forced;
            cols.sort_unstable();
        }
        let margin: f64 = cols.iter().map(|&j| w[j]).sum();
        let mut label = if margin >= 0.0 { 1.0 } else { -1.0 };
        if rng.bernoulli(noise) {
            label = -label;
        }
        rows.push(cols.into_iter().map(|j| (j, 1.0)).collect());
        labels.push(label);
    }
    Dataset::from_rows(rows, labels, dim).expect("synthetic rows are nonempty")
}

/// One-hot categorical corpus: 22 attributes of ~5 categories each flattened
/// to 112 binary columns, one active column per attribute group.
pub fn one_hot_categorical(n: usize, seed: u64) -> Dataset {
    const GROUPS: usize = 22;
    const DIM: usize = 112;
    // split 112 columns into 22 groups of 5 or 6
    let base = DIM / GROUPS;
    let rem = DIM % GROUPS;
    let mut bounds = Vec::with_capacity(GROUPS + 1);
    bounds.push(0usize);
    for g in 0..GROUPS {
        bounds.push(bounds[g] + base + usize::from(g < rem));
    }
    let mut rng = RngStream::new(seed, 0, 1, StreamKind::Sampling);
    let w: Vec<f64> = (0..DIM).map(|_| 2.0 * rng.uniform() - 1.0).collect();
    let mut rows = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let mut cols = Vec::with_capacity(GROUPS);
        for g in 0..GROUPS {
            let width = bounds[g + 1] - bounds[g];
            // cycle category choices so every column occurs
            let pick = if g == 0 {
                i % width
            } else {
                rng.index(width)
            };
            cols.push(bounds[g] + pick);
        }
        let margin: f64 = cols.iter().map(|&j| w[j]).sum();
        let mut label = if margin >= 0.0 { 1.0 } else { -1.0 };
        if rng.bernoulli(0.02) {
            label = -label;
        }
        rows.push(cols.into_iter().map(|j| (j, 1.0)).collect());
        labels.push(label);
    }
    Dataset::from_rows(rows, labels, DIM).expect("synthetic rows are nonempty")
}

/// 112-feature one-hot stand-in at mushroom-corpus shape.
pub fn mushrooms_like(n: usize) -> Dataset {
    one_hot_categorical(n, 0x4D55_5348)
}

/// 300-feature sparse binary stand-in at w1a-corpus shape.
pub fn w1a_like(n: usize) -> Dataset {
    sparse_binary(n, 300, 11, 0.05, 0x0057_3141)
}
