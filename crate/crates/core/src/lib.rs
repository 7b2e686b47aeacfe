//! Part-specific motion retrieval and composition engine.
//!
//! The pipeline turns a free-text action description into full-body motion
//! candidates in four stages:
//!
//! 1. [`prompt`] asks a completion endpoint for torso / hands / legs
//!    descriptions of the action and parses the answer.
//! 2. [`index`] looks each part description up in its own exact cosine
//!    k-nearest-neighbour database of motion embeddings.
//! 3. [`compose`](mod@compose) fuses the i-th ranked motion of every part into one
//!    skeleton, joint subset by joint subset, with the root trajectory taken
//!    from the legs source.
//! 4. [`metrics`] scores feature sets with the usual text-to-motion
//!    benchmark suite (R-precision, FID, MM distance, diversity,
//!    multimodality).
//!
//! [`contrastive`] holds the embedding-space mathematics the part databases
//! are trained with (Gaussian latents, KL terms, filtered InfoNCE) together
//! with a small linear-projection trainer, and [`motion`] the skeletal and
//! 263-dimensional feature representations plus their binary file format.
//!
//! Data-parallel inner loops go through [`par`]; building without the
//! default `parallel` feature swaps rayon for plain iterators.

#![allow(clippy::needless_range_loop)]

pub mod compose;
pub mod config;
pub mod contrastive;
pub mod index;
pub mod metrics;
pub mod motion;
pub mod par;
pub mod pipeline;
pub mod prompt;
pub mod synth;

pub use compose::{
    compose, compose_topk, default_partition, ComposedMotion, JointPartition, Provenance, Source, TrimMode,
};
pub use config::EngineConfig;
pub use contrastive::{GaussianLatent, LossWeights, SimilarityMatrix};
pub use index::{DatabaseEntry, Part, PartDatabase, RetrievalResult};
pub use motion::{FeatureSequence, JointMotion, RootTrajectory};
pub use par::Exec;
pub use prompt::{PartDescriptions, PromptTemplate};
