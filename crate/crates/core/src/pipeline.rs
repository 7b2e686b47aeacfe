//! End-to-end glue: description, per-part query embeddings, retrieval,
//! composition and pooled evaluation features.
//!
//! Query embeddings come from a [`QueryEmbedder`]: either an
//! [`EmbeddingLookup`] file of precomputed vectors or a remote
//! [`HttpEmbedder`]. The lookup is a JSONL file whose lines are
//! `{"part": "hands", "text": "...", "embedding": [...]}`, keyed by part and
//! normalized text.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::compose::{compose_topk_with, ComposeError, ComposeOptions, ComposedMotion, JointPartition, MotionLoader};
use crate::config::{ConfigError, EngineConfig};
use crate::index::{self, IndexError, Part, PartDatabases, PartQueries, RetrievalResult};
use crate::metrics::{FeatureSet, MetricsError};
use crate::motion::{encode_features_with, JointMotion, MotionError};
use crate::par::{self, Exec};
use crate::prompt::{normalize_text, PartDescriptions, PromptError};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("no {part} embedding for {text:?}; run describe and export the description embeddings first")]
    MissingEmbedding { part: Part, text: String },
    #[error("embedding lookup: {0}")]
    Lookup(String),
    #[error("embedding endpoint: {0}")]
    Endpoint(String),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Prompt(#[from] PromptError),
    #[error(transparent)]
    Index(#[from] IndexError),
    #[error(transparent)]
    Compose(#[from] ComposeError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    Motion(#[from] MotionError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Maps a part description to its query vector.
pub trait QueryEmbedder: Sync {
    fn embed(&self, part: Part, text: &str) -> Result<Vec<f64>, PipelineError>;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LookupRecord {
    pub part: Part,
    pub text: String,
    pub embedding: Vec<f32>,
}

#[derive(Debug, Clone, Default)]
pub struct EmbeddingLookup {
    map: HashMap<(Part, String), Vec<f32>>,
}

impl EmbeddingLookup {
    /// Later records win on duplicate keys.
    pub fn from_records(records: impl IntoIterator<Item = LookupRecord>) -> Self {
        let map = records.into_iter().map(|r| ((r.part, normalize_text(&r.text)), r.embedding)).collect();
        Self { map }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, PipelineError> {
        let path = path.as_ref();
        let mut records = Vec::new();
        for (i, line) in BufReader::new(File::open(path)?).lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let rec = serde_json::from_str(&line)
                .map_err(|e| PipelineError::Lookup(format!("{}:{}: {e}", path.display(), i + 1)))?;
            records.push(rec);
        }
        Ok(Self::from_records(records))
    }

    pub fn write(path: impl AsRef<Path>, records: &[LookupRecord]) -> Result<(), PipelineError> {
        let mut w = BufWriter::new(File::create(path)?);
        for r in records {
            serde_json::to_writer(&mut w, r).map_err(|e| PipelineError::Lookup(e.to_string()))?;
            w.write_all(b"\n")?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn get(&self, part: Part, text: &str) -> Option<&[f32]> {
        self.map.get(&(part, normalize_text(text))).map(Vec::as_slice)
    }
}

impl QueryEmbedder for EmbeddingLookup {
    fn embed(&self, part: Part, text: &str) -> Result<Vec<f64>, PipelineError> {
        self.get(part, text)
            .map(|v| v.iter().map(|&x| x as f64).collect())
            .ok_or_else(|| PipelineError::MissingEmbedding { part, text: text.to_owned() })
    }
}

/// Remote encoder: POST `{"part", "text"}`, expects `{"embedding": [...]}`.
#[derive(Debug, Clone)]
pub struct HttpEmbedder {
    endpoint: String,
    agent: ureq::Agent,
}

impl HttpEmbedder {
    pub fn new(endpoint: impl Into<String>, timeout: Duration) -> Self {
        let agent = ureq::Agent::config_builder().timeout_global(Some(timeout)).build().into();
        Self { endpoint: endpoint.into(), agent }
    }
}

impl QueryEmbedder for HttpEmbedder {
    fn embed(&self, part: Part, text: &str) -> Result<Vec<f64>, PipelineError> {
        let body = serde_json::json!({"part": part.as_str(), "text": text}).to_string();
        let fail = |m: String| PipelineError::Endpoint(format!("{}: {m}", self.endpoint));
        let mut resp = self
            .agent
            .post(&self.endpoint)
            .header("Content-Type", "application/json")
            .send(body.as_bytes())
            .map_err(|e| fail(e.to_string()))?;
        let text = resp.body_mut().read_to_string().map_err(|e| fail(e.to_string()))?;
        let v: Value = serde_json::from_str(&text).map_err(|e| fail(e.to_string()))?;
        v.get("embedding")
            .and_then(Value::as_array)
            .and_then(|a| a.iter().map(Value::as_f64).collect::<Option<Vec<f64>>>())
            .ok_or_else(|| fail("response has no numeric embedding array".into()))
    }
}

pub fn part_queries(pd: &PartDescriptions, embedder: &dyn QueryEmbedder) -> Result<PartQueries, PipelineError> {
    Ok(PartQueries {
        torso: embedder.embed(Part::Torso, &pd.torso)?,
        hands: embedder.embed(Part::Hands, &pd.hands)?,
        legs: embedder.embed(Part::Legs, &pd.legs)?,
    })
}

/// Load the three databases named by `config`.
pub fn load_databases(config: &EngineConfig) -> Result<PartDatabases, PipelineError> {
    let load = |p: Part| -> Result<_, PipelineError> { Ok(Some(index::io::load(config.db_path(p)?)?)) };
    Ok(PartDatabases { torso: load(Part::Torso)?, hands: load(Part::Hands)?, legs: load(Part::Legs)? })
}

pub fn retrieve(
    pd: &PartDescriptions,
    dbs: &PartDatabases,
    embedder: &dyn QueryEmbedder,
    k: usize,
    exec: Exec,
) -> Result<[RetrievalResult; 3], PipelineError> {
    let q = part_queries(pd, embedder)?;
    Ok(index::retrieve_parts_with(dbs, &q, k, exec)?)
}

/// Retrieval output as written by the CLI.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetrievalReport {
    pub source: String,
    pub descriptions: PartDescriptions,
    pub k: usize,
    pub results: Vec<RetrievalResult>,
}

#[allow(clippy::too_many_arguments)]
pub fn retrieve_and_compose(
    pd: &PartDescriptions,
    dbs: &PartDatabases,
    embedder: &dyn QueryEmbedder,
    loader: &dyn MotionLoader,
    k: usize,
    partition: &JointPartition,
    opts: &ComposeOptions,
    exec: Exec,
) -> Result<(RetrievalReport, Vec<ComposedMotion>), PipelineError> {
    let results = retrieve(pd, dbs, embedder, k, exec)?;
    let composed = compose_topk_with(&results, k, partition, loader, opts, exec)?;
    let report = RetrievalReport { source: pd.source.clone(), descriptions: pd.clone(), k, results: results.to_vec() };
    Ok((report, composed))
}

/// Mean of the 263-wide feature rows of `m`.
pub fn pooled_features(m: &JointMotion, contact_threshold: f64) -> Result<Vec<f64>, PipelineError> {
    Ok(encode_features_with(m, contact_threshold)?.mean_row())
}

/// One pooled feature row per motion.
pub fn pooled_feature_set(
    motions: &[JointMotion],
    contact_threshold: f64,
    exec: Exec,
) -> Result<FeatureSet, PipelineError> {
    let rows = par::map_slice(exec, motions, |m| pooled_features(m, contact_threshold));
    let rows = rows.into_iter().collect::<Result<Vec<_>, _>>()?;
    Ok(FeatureSet::from_rows(&rows)?)
}
