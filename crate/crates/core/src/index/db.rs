use std::cmp::Ordering;
use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::{IndexError, Part};
use crate::par::{self, Exec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatabaseEntry {
    pub id: String,
    pub part: Part,
    pub embedding: Vec<f32>,
    /// Path of the `MORAGMO1` motion file, resolved by the caller's loader.
    pub motion_ref: String,
    pub length: u32,
    pub source_text: String,
}

/// Immutable per-part table of embeddings.
#[derive(Debug, Clone)]
pub struct PartDatabase {
    part: Part,
    dim: usize,
    entries: Vec<DatabaseEntry>,
    /// Row-major unit-norm copies of the embeddings.
    unit: Vec<f64>,
}

impl PartialEq for PartDatabase {
    fn eq(&self, other: &Self) -> bool {
        self.part == other.part && self.dim == other.dim && self.entries == other.entries
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hit {
    pub id: String,
    pub score: f64,
    pub length: u32,
    pub motion_ref: String,
    pub source_text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetrievalResult {
    pub part: Part,
    pub hits: Vec<Hit>,
    /// Set when fewer than the requested `k` entries were available.
    pub truncated: bool,
}

impl RetrievalResult {
    pub fn len(&self) -> usize {
        self.hits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.hits.is_empty()
    }
}

impl PartDatabase {
    pub fn build(part: Part, entries: Vec<DatabaseEntry>) -> Result<Self, IndexError> {
        let Some(first) = entries.first() else {
            return Err(IndexError::Build("no entries".into()));
        };
        let dim = first.embedding.len();
        if dim == 0 {
            return Err(IndexError::Build("embedding dimension is zero".into()));
        }
        let mut seen = HashSet::with_capacity(entries.len());
        let mut unit = Vec::with_capacity(entries.len() * dim);
        for e in &entries {
            if e.part != part {
                return Err(IndexError::Build(format!("entry {:?} belongs to {}, not {part}", e.id, e.part)));
            }
            if e.embedding.len() != dim {
                return Err(IndexError::Shape(format!(
                    "entry {:?} has {} dims, expected {dim}",
                    e.id,
                    e.embedding.len()
                )));
            }
            if !seen.insert(e.id.as_str()) {
                return Err(IndexError::Build(format!("duplicate id {:?}", e.id)));
            }
            if e.length == 0 {
                return Err(IndexError::Build(format!("entry {:?} has zero length", e.id)));
            }
            let norm = e.embedding.iter().map(|v| (*v as f64).powi(2)).sum::<f64>().sqrt();
            if norm == 0.0 || !norm.is_finite() {
                return Err(IndexError::DegenerateEntry { id: e.id.clone() });
            }
            unit.extend(e.embedding.iter().map(|v| *v as f64 / norm));
        }
        Ok(Self { part, dim, entries, unit })
    }

    pub fn part(&self) -> Part {
        self.part
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[DatabaseEntry] {
        &self.entries
    }

    pub fn get(&self, id: &str) -> Option<&DatabaseEntry> {
        self.entries.iter().find(|e| e.id == id)
    }

    /// Top `min(k, len)` entries by cosine similarity to `q`.
    pub fn query(&self, q: &[f64], k: usize) -> Result<RetrievalResult, IndexError> {
        self.query_with(q, k, Exec::default())
    }

    pub fn query_with(&self, q: &[f64], k: usize, exec: Exec) -> Result<RetrievalResult, IndexError> {
        if q.len() != self.dim {
            return Err(IndexError::Shape(format!("query has {} dims, database {}", q.len(), self.dim)));
        }
        if k == 0 {
            return Err(IndexError::Config("k must be at least 1".into()));
        }
        let qn = q.iter().map(|v| v * v).sum::<f64>().sqrt();
        if qn == 0.0 || !qn.is_finite() {
            return Err(IndexError::DegenerateQuery);
        }
        let qu: Vec<f64> = q.iter().map(|v| v / qn).collect();
        let dim = self.dim;
        let scores = par::map_range(exec, self.len(), |i| {
            let row = &self.unit[i * dim..(i + 1) * dim];
            row.iter().zip(&qu).map(|(a, b)| a * b).sum::<f64>().clamp(-1.0, 1.0)
        });
        let mut order: Vec<usize> = (0..self.len()).collect();
        let cmp = |a: &usize, b: &usize| -> Ordering {
            scores[*b].total_cmp(&scores[*a]).then_with(|| self.entries[*a].id.cmp(&self.entries[*b].id))
        };
        let take = k.min(order.len());
        if take < order.len() {
            order.select_nth_unstable_by(take - 1, cmp);
            order.truncate(take);
        }
        order.sort_unstable_by(cmp);
        let hits = order
            .into_iter()
            .map(|i| {
                let e = &self.entries[i];
                Hit {
                    id: e.id.clone(),
                    score: scores[i],
                    length: e.length,
                    motion_ref: e.motion_ref.clone(),
                    source_text: e.source_text.clone(),
                }
            })
            .collect();
        Ok(RetrievalResult { part: self.part, hits, truncated: k > self.len() })
    }
}

/// The three part databases; any may be missing until configured.
#[derive(Debug, Clone, Default)]
pub struct PartDatabases {
    pub torso: Option<PartDatabase>,
    pub hands: Option<PartDatabase>,
    pub legs: Option<PartDatabase>,
}

impl PartDatabases {
    pub fn get(&self, part: Part) -> Option<&PartDatabase> {
        match part {
            Part::Torso => self.torso.as_ref(),
            Part::Hands => self.hands.as_ref(),
            Part::Legs => self.legs.as_ref(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PartQueries {
    pub torso: Vec<f64>,
    pub hands: Vec<f64>,
    pub legs: Vec<f64>,
}

impl PartQueries {
    pub fn get(&self, part: Part) -> &[f64] {
        match part {
            Part::Torso => &self.torso,
            Part::Hands => &self.hands,
            Part::Legs => &self.legs,
        }
    }
}

/// Independent k-NN query against each part database, in torso, hands,
/// legs order.
pub fn retrieve_parts(
    dbs: &PartDatabases,
    queries: &PartQueries,
    k: usize,
) -> Result<[RetrievalResult; 3], IndexError> {
    retrieve_parts_with(dbs, queries, k, Exec::default())
}

pub fn retrieve_parts_with(
    dbs: &PartDatabases,
    queries: &PartQueries,
    k: usize,
    exec: Exec,
) -> Result<[RetrievalResult; 3], IndexError> {
    let mut out = Vec::with_capacity(3);
    for part in Part::ALL {
        let db = dbs.get(part).ok_or_else(|| IndexError::Config(format!("no {part} database loaded")))?;
        if db.part() != part {
            return Err(IndexError::Config(format!("database in the {part} slot is tagged {}", db.part())));
        }
        out.push(db.query_with(queries.get(part), k, exec)?);
    }
    Ok(out.try_into().expect("three parts"))
}
