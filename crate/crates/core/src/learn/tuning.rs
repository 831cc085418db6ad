//! k-fold grid search maximising mean held-out RCE.

use rand::seq::SliceRandom;

use super::{fit_rows, Params, Prepared};
use crate::error::Result;
use crate::metrics::rce;
use crate::rng::{hash_seed, stream};

pub const FOLDS: usize = 4;

#[derive(Debug, Clone, PartialEq)]
pub struct CvResult {
    pub best: usize,
    /// Mean RCE per grid cell; −∞ where a fold could not be scored.
    pub scores: Vec<f64>,
}

/// Shuffled row ids cut into `k` contiguous folds.
pub fn fold_split(n: usize, k: usize, seed: u64) -> Vec<Vec<u32>> {
    let mut ids: Vec<u32> = (0..n as u32).collect();
    ids.shuffle(&mut stream(seed, "cv_folds"));
    (0..k).map(|f| ids[f * n / k..(f + 1) * n / k].to_vec()).collect()
}

fn two_classes(rows: &[u32], y: &[i64]) -> bool {
    let pos = rows.iter().filter(|&&i| y[i as usize] == 1).count();
    pos > 0 && pos < rows.len()
}

pub fn cross_validate(data: &Prepared, y: &[i64], grid: &[Params], folds: usize, seed: u64) -> Result<CvResult> {
    let split = fold_split(data.x.n_rows, folds, seed);
    let mut scores = Vec::with_capacity(grid.len());
    for (c, params) in grid.iter().enumerate() {
        let cell_seed = hash_seed(seed, &format!("cell{c}"));
        let mut sum = 0.0;
        for (f, held) in split.iter().enumerate() {
            let train: Vec<u32> = split
                .iter()
                .enumerate()
                .filter(|(g, _)| *g != f)
                .flat_map(|(_, r)| r.iter().copied())
                .collect();
            if !two_classes(held, y) || !two_classes(&train, y) {
                tracing::info!(cell = c, fold = f, "single-class fold, cell scored -inf");
                sum = f64::NEG_INFINITY;
                break;
            }
            let score = fit_rows(params, data, &train, y, cell_seed).and_then(|m| {
                let p = m.predict_rows(data, held);
                let yh: Vec<i64> = held.iter().map(|&i| y[i as usize]).collect();
                rce(&yh, &p)
            });
            match score {
                Ok(s) if s.is_finite() => sum += s,
                other => {
                    tracing::info!(cell = c, fold = f, result = ?other, "cell scored -inf");
                    sum = f64::NEG_INFINITY;
                    break;
                }
            }
        }
        scores.push(sum / folds as f64);
    }
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate() {
        if s > scores[best] {
            best = i;
        }
    }
    Ok(CvResult { best, scores })
}
