//! Evaluation suite over caller-supplied feature vectors.
//!
//! Seeded metrics draw from ChaCha8 streams derived from `(seed, item)`, so
//! results are bit-identical across runs and across [`Exec`] modes.

mod frechet;
mod ranking;
mod spread;

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::par::Exec;

pub use frechet::{frechet_distance, gaussian_stats, GaussianStats};
pub use ranking::{mm_dist, mm_dist_with, r_precision, r_precision_with, RPrecision, DEFAULT_POOL_SIZE};
pub use spread::{
    diversity, diversity_pairs, multimodality, multimodality_pairs, multimodality_with, DEFAULT_MM_PAIRS,
    DEFAULT_SUBSET_SIZE,
};

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("non-finite feature value at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },
    #[error("invalid gaussian statistics: {0}")]
    InvalidStats(String),
    #[error("feature file: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Row-major N x D feature matrix with optional per-row text labels.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSet {
    dim: usize,
    data: Vec<f64>,
    labels: Option<Vec<String>>,
}

impl FeatureSet {
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, MetricsError> {
        let dim = rows.first().map_or(0, Vec::len);
        if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != dim) {
            return Err(MetricsError::Shape(format!("row {i} has {} columns, expected {dim}", r.len())));
        }
        Self::from_flat(dim, rows.concat())
    }

    pub fn from_flat(dim: usize, data: Vec<f64>) -> Result<Self, MetricsError> {
        if dim == 0 || data.is_empty() {
            return Err(MetricsError::InsufficientData("feature set needs at least one non-empty row".into()));
        }
        if !data.len().is_multiple_of(dim) {
            return Err(MetricsError::Shape(format!("{} values are not a multiple of dimension {dim}", data.len())));
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(MetricsError::NonFinite { row: i / dim, col: i % dim });
        }
        Ok(Self { dim, data, labels: None })
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self, MetricsError> {
        if labels.len() != self.len() {
            return Err(MetricsError::Shape(format!("{} labels for {} rows", labels.len(), self.len())));
        }
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.dim)
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    /// Rows grouped by label, groups in order of first appearance.
    pub fn groups(&self) -> Option<Vec<FeatureGroup>> {
        let labels = self.labels.as_ref()?;
        let mut out: Vec<FeatureGroup> = Vec::new();
        for (i, l) in labels.iter().enumerate() {
            let row = self.row(i).to_vec();
            match out.iter_mut().find(|g| &g.name == l) {
                Some(g) => g.rows.push(row),
                None => out.push(FeatureGroup { name: l.clone(), rows: vec![row] }),
            }
        }
        Some(out)
    }

    /// Headerless little-endian f32 rows of width `dim`.
    pub fn parse_f32(bytes: &[u8], dim: usize) -> Result<Self, MetricsError> {
        if dim == 0 || !bytes.len().is_multiple_of(4 * dim) {
            return Err(MetricsError::Format(format!(
                "{} bytes do not hold whole rows of {dim} f32 values",
                bytes.len()
            )));
        }
        let data = bytes.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64).collect();
        Self::from_flat(dim, data)
    }

    pub fn read_f32(path: impl AsRef<Path>, dim: usize) -> Result<Self, MetricsError> {
        let bytes = std::fs::read(path.as_ref())?;
        Self::parse_f32(&bytes, dim).map_err(|e| match e {
            MetricsError::Format(m) => MetricsError::Format(format!("{}: {m}", path.as_ref().display())),
            other => other,
        })
    }

    pub fn to_f32_bytes(&self) -> Vec<u8> {
        self.data.iter().flat_map(|v| (*v as f32).to_le_bytes()).collect()
    }
}

/// Feature vectors generated for one text.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureGroup {
    pub name: String,
    pub rows: Vec<Vec<f64>>,
}

pub(crate) fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    sq_dist(a, b).sqrt()
}

pub(crate) fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportConfig {
    pub seeds: Vec<u64>,
    pub subset_size: usize,
    pub pool_size: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub r_precision: RPrecision,
    pub mm_dist: f64,
    pub diversity: f64,
    /// Absent when no labeled groups were supplied.
    pub multimodality: Option<f64>,
    pub fid: f64,
    pub config: ReportConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EvalOptions {
    pub seed: u64,
    pub pool_size: usize,
    pub subset_size: usize,
    pub mm_pairs: usize,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self { seed: 0, pool_size: DEFAULT_POOL_SIZE, subset_size: DEFAULT_SUBSET_SIZE, mm_pairs: DEFAULT_MM_PAIRS }
    }
}

/// Full report: R-precision and MM distance between `text` and `generated`
/// row pairs, diversity of `generated`, FID between `real` and `generated`,
/// and multimodality over `groups` when given.
pub fn evaluate(
    text: &FeatureSet,
    generated: &FeatureSet,
    real: &FeatureSet,
    groups: Option<&[FeatureGroup]>,
    opts: &EvalOptions,
    exec: Exec,
) -> Result<MetricsReport, MetricsError> {
    let r = r_precision_with(text, generated, opts.pool_size, opts.seed, exec)?;
    let mm = mm_dist_with(text, generated, exec)?;
    let div = diversity(generated, opts.subset_size, opts.seed)?;
    let fid = frechet_distance(&gaussian_stats(real)?, &gaussian_stats(generated)?)?;
    let modality = groups.map(|g| multimodality_with(g, opts.mm_pairs, opts.seed, exec)).transpose()?;
    Ok(MetricsReport {
        r_precision: r,
        mm_dist: mm,
        diversity: div,
        multimodality: modality,
        fid,
        config: ReportConfig { seeds: vec![opts.seed], subset_size: opts.subset_size, pool_size: opts.pool_size },
    })
}
