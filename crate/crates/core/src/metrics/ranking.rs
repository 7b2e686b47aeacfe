use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{euclidean, sq_dist, FeatureSet, MetricsError};
use crate::par::{self, Exec};

pub const DEFAULT_POOL_SIZE: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RPrecision {
    pub top1: f64,
    pub top2: f64,
    pub top3: f64,
}

fn check_pair(a: &FeatureSet, b: &FeatureSet) -> Result<(), MetricsError> {
    if a.len() != b.len() || a.dim() != b.dim() {
        return Err(MetricsError::Shape(format!("{}x{} vs {}x{} feature sets", a.len(), a.dim(), b.len(), b.dim())));
    }
    Ok(())
}

/// Distractor indices for row `i`: `pool_size - 1` distinct rows other than
/// `i`, drawn from stream `i` of the seeded generator.
pub(crate) fn distractors(n: usize, i: usize, pool_size: usize, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(i as u64);
    sample(&mut rng, n - 1, pool_size - 1).into_iter().map(|j| if j >= i { j + 1 } else { j }).collect()
}

/// Top-1/2/3 retrieval accuracy of each motion's own text within a pool of
/// itself plus `pool_size - 1` random other texts. The ground truth's rank is
/// one plus the number of distractors strictly closer than it.
pub fn r_precision(
    text: &FeatureSet,
    motion: &FeatureSet,
    pool_size: usize,
    seed: u64,
) -> Result<RPrecision, MetricsError> {
    r_precision_with(text, motion, pool_size, seed, Exec::default())
}

pub fn r_precision_with(
    text: &FeatureSet,
    motion: &FeatureSet,
    pool_size: usize,
    seed: u64,
    exec: Exec,
) -> Result<RPrecision, MetricsError> {
    check_pair(text, motion)?;
    let n = text.len();
    if pool_size == 0 || n < pool_size {
        return Err(MetricsError::InsufficientData(format!("r-precision needs at least {pool_size} rows, got {n}")));
    }
    let ranks = par::map_range(exec, n, |i| {
        let m = motion.row(i);
        let gt = sq_dist(m, text.row(i));
        1 + distractors(n, i, pool_size, seed).into_iter().filter(|&j| sq_dist(m, text.row(j)) < gt).count()
    });
    let frac = |k: usize| ranks.iter().filter(|&&r| r <= k).count() as f64 / n as f64;
    Ok(RPrecision { top1: frac(1), top2: frac(2), top3: frac(3) })
}

/// Mean Euclidean distance between paired rows.
pub fn mm_dist(text: &FeatureSet, motion: &FeatureSet) -> Result<f64, MetricsError> {
    mm_dist_with(text, motion, Exec::default())
}

pub fn mm_dist_with(text: &FeatureSet, motion: &FeatureSet, exec: Exec) -> Result<f64, MetricsError> {
    check_pair(text, motion)?;
    let n = text.len();
    Ok(par::sum_range(exec, n, |i| euclidean(text.row(i), motion.row(i))) / n as f64)
}
