//! Embedding-space mathematics for the part-specific retrieval models.
//!
//! Text and motion encoders each emit a diagonal Gaussian; training samples
//! from it with the reparameterization trick while retrieval uses the mean.
//! The per-part objective is
//! `L = L_rec + λ_kl·L_kl + λ_e·L_e + λ_nce·L_nce`, where `L_nce` is a
//! symmetric InfoNCE over a cosine similarity matrix with "wrong negatives"
//! (pairs whose texts are near-paraphrases) removed from the denominators.

mod latent;
mod loss;
mod similarity;
pub mod sims;
pub mod train;

pub use latent::{kl_diag_gaussians, kl_loss, reparameterize, GaussianLatent};
pub use loss::{
    embedding_similarity_loss, infonce_loss, reconstruction_loss, smooth_l1, total_loss, LossComponents, LossWeights,
};
pub use similarity::{
    cosine_similarity, similarity_matrix, similarity_matrix_with, wrong_negative_mask, NegativeMask, SimilarityMatrix,
};
pub use sims::{parse_text_sims, read_text_sims, text_sims_bytes, write_text_sims, SYMMETRY_TOLERANCE};
pub use train::{
    toy_objective, train_toy_projection, Objective, Projection, ToyModel, ToyPairs, TrainOptions, TrainReport,
};

use thiserror::Error;

/// Latent width of the part embeddings.
pub const LATENT_DIM: usize = 256;

#[derive(Debug, Error, PartialEq)]
pub enum ContrastiveError {
    #[error("shape error: {0}")]
    Shape(String),
    #[error("degenerate (zero-norm) vector{}", .0.as_ref().map(|s| format!(" at {s}")).unwrap_or_default())]
    DegenerateVector(Option<String>),
    #[error("invalid mask: {0}")]
    InvalidMask(String),
    #[error("invalid latent: {0}")]
    InvalidLatent(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("training diverged at epoch {epoch}: loss {loss}")]
    TrainingDiverged { epoch: usize, loss: f64 },
    #[error("{path}: {message}")]
    Io { path: String, message: String },
}
