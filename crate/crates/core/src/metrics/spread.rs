use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{euclidean, FeatureGroup, FeatureSet, MetricsError};
use crate::par::{self, Exec};

pub const DEFAULT_SUBSET_SIZE: usize = 300;
pub const DEFAULT_MM_PAIRS: usize = 10;

/// `count` disjoint index pairs over `0..n`: `2 * count` distinct indices are
/// drawn, the first half paired with the second half position by position.
fn disjoint_pairs(rng: &mut ChaCha8Rng, n: usize, count: usize) -> Vec<(usize, usize)> {
    let idx = sample(rng, n, 2 * count).into_vec();
    (0..count).map(|k| (idx[k], idx[count + k])).collect()
}

/// Index pairs [`diversity`] averages over for an `n`-row set.
pub fn diversity_pairs(n: usize, subset_size: usize, seed: u64) -> Result<Vec<(usize, usize)>, MetricsError> {
    if subset_size == 0 || n < 2 * subset_size {
        return Err(MetricsError::InsufficientData(format!(
            "diversity with subset size {subset_size} needs at least {} rows, got {n}",
            2 * subset_size
        )));
    }
    Ok(disjoint_pairs(&mut ChaCha8Rng::seed_from_u64(seed), n, subset_size))
}

/// Mean distance between the rows of two disjoint random subsets, matched
/// position by position.
pub fn diversity(feats: &FeatureSet, subset_size: usize, seed: u64) -> Result<f64, MetricsError> {
    let pairs = diversity_pairs(feats.len(), subset_size, seed)?;
    Ok(pairs.iter().map(|&(a, b)| euclidean(feats.row(a), feats.row(b))).sum::<f64>() / pairs.len() as f64)
}

/// Pairs drawn for group `g` of size `n`, from stream `g` of the seeded
/// generator.
pub fn multimodality_pairs(n: usize, g: usize, pairs: usize, seed: u64) -> Vec<(usize, usize)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(g as u64);
    disjoint_pairs(&mut rng, n, pairs)
}

/// Per group, the mean distance over `pairs` disjoint random pairs; then the
/// mean over groups.
pub fn multimodality(groups: &[FeatureGroup], pairs: usize, seed: u64) -> Result<f64, MetricsError> {
    multimodality_with(groups, pairs, seed, Exec::default())
}

pub fn multimodality_with(groups: &[FeatureGroup], pairs: usize, seed: u64, exec: Exec) -> Result<f64, MetricsError> {
    if groups.is_empty() || pairs == 0 {
        return Err(MetricsError::InsufficientData("multimodality needs at least one group and one pair".into()));
    }
    for g in groups {
        if g.rows.len() < 2 * pairs {
            return Err(MetricsError::InsufficientData(format!(
                "group {:?} has {} rows, multimodality with {pairs} pairs needs {}",
                g.name,
                g.rows.len(),
                2 * pairs
            )));
        }
        if let Some(r) = g.rows.iter().find(|r| r.len() != groups[0].rows[0].len()) {
            return Err(MetricsError::Shape(format!("group {:?} has a row of width {}", g.name, r.len())));
        }
    }
    let per_group = par::map_range(exec, groups.len(), |gi| {
        let g = &groups[gi];
        let ps = multimodality_pairs(g.rows.len(), gi, pairs, seed);
        ps.iter().map(|&(a, b)| euclidean(&g.rows[a], &g.rows[b])).sum::<f64>() / pairs as f64
    });
    Ok(per_group.iter().sum::<f64>() / groups.len() as f64)
}
