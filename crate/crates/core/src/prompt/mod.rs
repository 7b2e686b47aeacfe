//! Per-part description generation through a text-completion endpoint.
//!
//! A [`PromptTemplate`] turns an action description into a prompt asking for
//! torso, hands and legs descriptions; [`parse_llm_output`] recovers the three
//! segments from the completion. [`describe_parts`] ties both to an
//! [`LlmClient`] and an append-only [`PromptCache`].

mod cache;
mod client;
mod describe;
mod parse;
mod template;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use cache::{cache_key, CacheRecord, PromptCache};
pub use client::{HttpClient, LlmClient, LlmRequest, LlmResponse, Usage, API_KEY_ENV, DEFAULT_MAX_TOKENS};
pub use describe::{describe_batch, describe_parts, LlmSettings};
pub use parse::parse_llm_output;
pub use template::{build_prompt, has_unbalanced_brackets, PromptTemplate, PLACEHOLDER};

#[derive(Debug, Error)]
pub enum PromptError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("invalid template: {0}")]
    InvalidTemplate(String),
    #[error("could not find torso, hands and legs segments in completion: {raw:?}")]
    Parse { raw: String },
    #[error("endpoint error: {0}")]
    Endpoint(String),
    #[error("no parseable completion after {attempts} attempts; last completion: {last:?}")]
    ParseExhausted { attempts: usize, last: String },
    #[error("cache file {path}: {message}")]
    Cache { path: String, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Torso, hands and legs descriptions generated for one input description.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartDescriptions {
    pub source: String,
    pub torso: String,
    pub hands: String,
    pub legs: String,
}

impl PartDescriptions {
    pub fn get(&self, part: crate::index::Part) -> &str {
        use crate::index::Part;
        match part {
            Part::Torso => &self.torso,
            Part::Hands => &self.hands,
            Part::Legs => &self.legs,
        }
    }

    /// Canonical three-line form, which [`parse_llm_output`] inverts.
    pub fn serialize(&self) -> String {
        format!("1) Torso: {}\n2) Hands: {}\n3) Legs: {}", self.torso, self.hands, self.legs)
    }
}

/// Lower-cased, trimmed, internal whitespace collapsed to single spaces.
pub fn normalize_text(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase()
}
