//! Part-specific motion databases with exact cosine k-NN search.
//!
//! One [`PartDatabase`] per body part maps motion ids to mean embeddings.
//! Queries are a linear scan over unit-normalized copies of the stored
//! vectors; ties in score are broken by ascending id, so results are fully
//! deterministic.

mod db;
pub mod io;
pub mod manifest;

pub use db::{
    retrieve_parts, retrieve_parts_with, DatabaseEntry, Hit, PartDatabase, PartDatabases, PartQueries, RetrievalResult,
};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Part {
    Torso,
    Hands,
    Legs,
}

impl Part {
    pub const ALL: [Part; 3] = [Part::Torso, Part::Hands, Part::Legs];

    pub fn tag(self) -> u8 {
        match self {
            Part::Torso => 0,
            Part::Hands => 1,
            Part::Legs => 2,
        }
    }

    pub fn from_tag(tag: u8) -> Option<Part> {
        Part::ALL.get(tag as usize).copied()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Part::Torso => "torso",
            Part::Hands => "hands",
            Part::Legs => "legs",
        }
    }
}

impl fmt::Display for Part {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Part {
    type Err = IndexError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "torso" => Ok(Part::Torso),
            "hands" => Ok(Part::Hands),
            "legs" => Ok(Part::Legs),
            other => Err(IndexError::Config(format!("unknown body part {other:?}"))),
        }
    }
}

#[derive(Debug, Error)]
pub enum IndexError {
    #[error("build error: {0}")]
    Build(String),
    #[error("entry {id:?} has a zero-norm embedding")]
    DegenerateEntry { id: String },
    #[error("query vector has zero norm")]
    DegenerateQuery,
    #[error("shape error: {0}")]
    Shape(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("database format error: {0}")]
    Format(String),
    #[error("database file corrupt: {0}")]
    Corrupt(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
