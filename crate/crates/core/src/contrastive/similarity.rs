use super::ContrastiveError;
use crate::par::{self, Exec};

/// Cosine similarity clamped to `[-1, 1]`.
pub fn cosine_similarity(a: &[f64], b: &[f64]) -> Result<f64, ContrastiveError> {
    if a.len() != b.len() {
        return Err(ContrastiveError::Shape(format!("cosine of {}- and {}-dim vectors", a.len(), b.len())));
    }
    let na = norm(a);
    let nb = norm(b);
    if na == 0.0 || nb == 0.0 || !na.is_finite() || !nb.is_finite() {
        return Err(ContrastiveError::DegenerateVector(None));
    }
    Ok((dot(a, b) / (na * nb)).clamp(-1.0, 1.0))
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Square `n x n` matrix; rows index texts, columns index motions.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityMatrix {
    n: usize,
    data: Vec<f64>,
}

impl SimilarityMatrix {
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, ContrastiveError> {
        let n = rows.len();
        if n == 0 || rows.iter().any(|r| r.len() != n) {
            return Err(ContrastiveError::Shape("similarity matrix must be square and non-empty".into()));
        }
        Ok(Self { n, data: rows.concat() })
    }

    pub(crate) fn from_flat(n: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), n * n);
        Self { n, data }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    /// Same matrix with `c` added to every entry (not clamped).
    pub fn shifted(&self, c: f64) -> Self {
        Self { n: self.n, data: self.data.iter().map(|v| v + c).collect() }
    }
}

/// Cosine similarities between every text row and every motion row.
pub fn similarity_matrix(text: &[Vec<f64>], motion: &[Vec<f64>]) -> Result<SimilarityMatrix, ContrastiveError> {
    similarity_matrix_with(text, motion, Exec::default())
}

pub fn similarity_matrix_with(
    text: &[Vec<f64>],
    motion: &[Vec<f64>],
    exec: Exec,
) -> Result<SimilarityMatrix, ContrastiveError> {
    let n = text.len();
    if n == 0 || motion.len() != n {
        return Err(ContrastiveError::Shape(format!("{n} text rows vs {} motion rows", motion.len())));
    }
    let dim = text[0].len();
    if text.iter().chain(motion).any(|r| r.len() != dim) {
        return Err(ContrastiveError::Shape("embedding rows differ in dimension".into()));
    }
    let unit = |rows: &[Vec<f64>], side: &str| -> Result<Vec<Vec<f64>>, ContrastiveError> {
        rows.iter()
            .enumerate()
            .map(|(i, r)| {
                let nr = norm(r);
                if nr == 0.0 || !nr.is_finite() {
                    Err(ContrastiveError::DegenerateVector(Some(format!("{side} row {i}"))))
                } else {
                    Ok(r.iter().map(|v| v / nr).collect())
                }
            })
            .collect()
    };
    let t = unit(text, "text")?;
    let m = unit(motion, "motion")?;
    let rows = par::map_range(exec, n, |i| m.iter().map(|mj| dot(&t[i], mj).clamp(-1.0, 1.0)).collect::<Vec<_>>());
    Ok(SimilarityMatrix::from_flat(n, rows.concat()))
}

/// Which pairs take part in the contrastive denominators.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NegativeMask {
    n: usize,
    keep: Vec<bool>,
}

impl NegativeMask {
    /// Keep everything.
    pub fn full(n: usize) -> Self {
        Self { n, keep: vec![true; n * n] }
    }

    /// Only the positives.
    pub fn diagonal(n: usize) -> Self {
        let mut m = Self { n, keep: vec![false; n * n] };
        (0..n).for_each(|i| m.keep[i * n + i] = true);
        m
    }

    pub fn from_fn(n: usize, f: impl Fn(usize, usize) -> bool) -> Self {
        Self { n, keep: (0..n * n).map(|k| f(k / n, k % n)).collect() }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn keep(&self, i: usize, j: usize) -> bool {
        self.keep[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, keep: bool) {
        self.keep[i * self.n + j] = keep;
    }

    pub fn filtered_count(&self) -> usize {
        self.keep.iter().filter(|k| !**k).count()
    }
}

/// Drop negatives whose text similarity is strictly above `threshold`.
/// The diagonal (positive pairs) is always kept.
pub fn wrong_negative_mask(text_sims: &[Vec<f64>], threshold: f64) -> Result<NegativeMask, ContrastiveError> {
    let n = text_sims.len();
    if text_sims.iter().any(|r| r.len() != n) {
        return Err(ContrastiveError::Shape(format!("text similarity matrix is not {n} x {n}")));
    }
    Ok(NegativeMask::from_fn(n, |i, j| i == j || text_sims[i][j] <= threshold))
}
