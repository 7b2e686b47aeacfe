//! Desk-scale contrastive trainer: two linear maps projecting paired text
//! and motion feature vectors into a shared space, fitted by full-batch
//! gradient descent on `λ_e·L_e + λ_nce·L_nce`.
//!
//! The reconstruction and KL terms are left out (there is no decoder and no
//! variance head); the point is to exercise the loss and its gradients
//! end-to-end with deterministic, checkable numbers.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::loss::{check_inputs, masked_lse, smooth_l1, smooth_l1_grad};
use super::similarity::{dot, norm};
use super::{wrong_negative_mask, ContrastiveError, LossWeights, NegativeMask, LATENT_DIM};
use crate::synth::normal;

/// Paired raw features; `text_sims` optionally drives negative filtering.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToyPairs {
    pub text: Vec<Vec<f64>>,
    pub motion: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text_sims: Option<Vec<Vec<f64>>>,
}

impl ToyPairs {
    pub fn len(&self) -> usize {
        self.text.len()
    }

    pub fn is_empty(&self) -> bool {
        self.text.is_empty()
    }

    fn validate(&self) -> Result<(usize, usize), ContrastiveError> {
        let n = self.text.len();
        if n < 2 || self.motion.len() != n {
            return Err(ContrastiveError::Shape(format!(
                "need at least 2 pairs, got {n} text and {} motion rows",
                self.motion.len()
            )));
        }
        let dt = self.text[0].len();
        let dm = self.motion[0].len();
        if dt == 0 || dm == 0 {
            return Err(ContrastiveError::Shape("feature dimension must be at least 1".into()));
        }
        if self.text.iter().any(|r| r.len() != dt) || self.motion.iter().any(|r| r.len() != dm) {
            return Err(ContrastiveError::Shape("ragged feature rows".into()));
        }
        if self.text.iter().chain(&self.motion).flatten().any(|v| !v.is_finite()) {
            return Err(ContrastiveError::Shape("non-finite features".into()));
        }
        Ok((dt, dm))
    }

    /// Negative mask from `text_sims`, or the full mask when absent.
    pub fn mask(&self, threshold: f64) -> Result<NegativeMask, ContrastiveError> {
        match &self.text_sims {
            Some(s) if s.len() == self.len() => wrong_negative_mask(s, threshold),
            Some(s) => {
                Err(ContrastiveError::Shape(format!("{} text-similarity rows for {} pairs", s.len(), self.len())))
            }
            None => Ok(NegativeMask::full(self.len())),
        }
    }
}

/// Row-major `out x inp` weight matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Projection {
    pub out: usize,
    pub inp: usize,
    pub weights: Vec<f64>,
}

impl Projection {
    fn random(rng: &mut ChaCha8Rng, out: usize, inp: usize) -> Self {
        let scale = 1.0 / (inp as f64).sqrt();
        Self { out, inp, weights: (0..out * inp).map(|_| normal(rng) * scale).collect() }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.weights.chunks_exact(self.inp).map(|row| dot(row, x)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToyModel {
    pub text: Projection,
    pub motion: Projection,
}

impl ToyModel {
    pub fn init(text_dim: usize, motion_dim: usize, out_dim: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let text = Projection::random(&mut rng, out_dim, text_dim);
        let motion = Projection::random(&mut rng, out_dim, motion_dim);
        Self { text, motion }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainOptions {
    pub epochs: usize,
    pub learning_rate: f64,
    pub seed: u64,
    pub output_dim: usize,
}

impl Default for TrainOptions {
    fn default() -> Self {
        Self { epochs: 2000, learning_rate: 1.0, seed: 0, output_dim: LATENT_DIM }
    }
}

/// Objective value, its two terms, and gradients w.r.t. both weight matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct Objective {
    pub loss: f64,
    pub embedding: f64,
    pub nce: f64,
    pub grad_text: Vec<f64>,
    pub grad_motion: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub model: ToyModel,
    /// Objective before each update, then once after the last one.
    pub loss_trace: Vec<f64>,
    pub initial_loss: f64,
    pub final_loss: f64,
    pub final_nce: f64,
    pub final_embedding: f64,
}

/// Value and analytic gradient of `λ_e·L_e + λ_nce·L_nce` at `model`.
pub fn toy_objective(
    model: &ToyModel,
    pairs: &ToyPairs,
    mask: &NegativeMask,
    weights: &LossWeights,
) -> Result<Objective, ContrastiveError> {
    let n = pairs.len();
    let tau = weights.tau;
    check_inputs(n, tau, mask)?;
    let k = model.text.out;
    let zt: Vec<Vec<f64>> = pairs.text.iter().map(|x| model.text.apply(x)).collect();
    let zm: Vec<Vec<f64>> = pairs.motion.iter().map(|y| model.motion.apply(y)).collect();
    let nt: Vec<f64> = zt.iter().map(|z| norm(z)).collect();
    let nm: Vec<f64> = zm.iter().map(|z| norm(z)).collect();
    if let Some(i) = nt.iter().chain(&nm).position(|v| *v == 0.0 || !v.is_finite()) {
        return Err(ContrastiveError::DegenerateVector(Some(format!("projected row {}", i % n))));
    }
    let s: Vec<f64> = (0..n * n).map(|ij| dot(&zt[ij / n], &zm[ij % n]) / (nt[ij / n] * nm[ij % n])).collect();
    let at = |i: usize, j: usize| s[i * n + j] / tau;

    // dL_nce/dS_ij = (P_row_ij + P_col_ij - 2 δ_ij) / (2 N τ)
    let mut g_s = vec![0.0; n * n];
    let mut nce = 0.0;
    for i in 0..n {
        let lse = masked_lse((0..n).filter(|&j| mask.keep(i, j)).map(|j| at(i, j)));
        nce += at(i, i) - lse;
        for j in (0..n).filter(|&j| mask.keep(i, j)) {
            g_s[i * n + j] += (at(i, j) - lse).exp();
        }
    }
    for j in 0..n {
        let lse = masked_lse((0..n).filter(|&i| mask.keep(i, j)).map(|i| at(i, j)));
        nce += at(j, j) - lse;
        for i in (0..n).filter(|&i| mask.keep(i, j)) {
            g_s[i * n + j] += (at(i, j) - lse).exp();
        }
    }
    let nce = -nce / (2.0 * n as f64);
    let scale = weights.lambda_nce / (2.0 * n as f64 * tau);
    for i in 0..n {
        g_s[i * n + i] -= 2.0;
    }
    g_s.iter_mut().for_each(|g| *g *= scale);

    let mut g_zt = vec![vec![0.0; k]; n];
    let mut g_zm = vec![vec![0.0; k]; n];
    for i in 0..n {
        for j in 0..n {
            let g = g_s[i * n + j];
            if g == 0.0 {
                continue;
            }
            let sij = s[i * n + j];
            // dS/dzt = (m̂ - S t̂)/|t|, dS/dzm = (t̂ - S m̂)/|m|
            for d in 0..k {
                let th = zt[i][d] / nt[i];
                let mh = zm[j][d] / nm[j];
                g_zt[i][d] += g * (mh - sij * th) / nt[i];
                g_zm[j][d] += g * (th - sij * mh) / nm[j];
            }
        }
    }

    let mut embedding = 0.0;
    let e_scale = weights.lambda_e / (n as f64 * k as f64);
    for i in 0..n {
        for d in 0..k {
            let diff = zt[i][d] - zm[i][d];
            embedding += smooth_l1(diff);
            let g = e_scale * smooth_l1_grad(diff);
            g_zt[i][d] += g;
            g_zm[i][d] -= g;
        }
    }
    let embedding = embedding / (n as f64 * k as f64);

    let outer = |proj: &Projection, g_z: &[Vec<f64>], xs: &[Vec<f64>]| {
        let mut g = vec![0.0; proj.out * proj.inp];
        for (gz, x) in g_z.iter().zip(xs) {
            for (r, row) in g.chunks_exact_mut(proj.inp).enumerate() {
                let gr = gz[r];
                for (w, xv) in row.iter_mut().zip(x) {
                    *w += gr * xv;
                }
            }
        }
        g
    };
    Ok(Objective {
        loss: weights.lambda_e * embedding + weights.lambda_nce * nce,
        embedding,
        nce,
        grad_text: outer(&model.text, &g_zt, &pairs.text),
        grad_motion: outer(&model.motion, &g_zm, &pairs.motion),
    })
}

/// Fit the two projections from a seeded random start.
pub fn train_toy_projection(
    pairs: &ToyPairs,
    weights: &LossWeights,
    opts: &TrainOptions,
) -> Result<TrainReport, ContrastiveError> {
    weights.validate()?;
    let (dt, dm) = pairs.validate()?;
    if opts.output_dim == 0 {
        return Err(ContrastiveError::InvalidConfig("output_dim must be at least 1".into()));
    }
    if !(opts.learning_rate.is_finite() && opts.learning_rate >= 0.0) {
        return Err(ContrastiveError::InvalidConfig(format!("bad learning rate {}", opts.learning_rate)));
    }
    let mask = pairs.mask(weights.filter_threshold)?;
    let mut model = ToyModel::init(dt, dm, opts.output_dim, opts.seed);
    let mut trace = Vec::with_capacity(opts.epochs + 1);
    for epoch in 0..=opts.epochs {
        let obj = match toy_objective(&model, pairs, &mask, weights) {
            // Projections blew up or collapsed after an update.
            Err(ContrastiveError::DegenerateVector(_)) if epoch > 0 => {
                return Err(ContrastiveError::TrainingDiverged { epoch, loss: f64::NAN })
            }
            other => other?,
        };
        if !obj.loss.is_finite() {
            return Err(ContrastiveError::TrainingDiverged { epoch, loss: obj.loss });
        }
        trace.push(obj.loss);
        if epoch == opts.epochs {
            return Ok(TrainReport {
                initial_loss: trace[0],
                final_loss: obj.loss,
                final_nce: obj.nce,
                final_embedding: obj.embedding,
                loss_trace: trace,
                model,
            });
        }
        let lr = opts.learning_rate;
        for (w, g) in model.text.weights.iter_mut().zip(&obj.grad_text) {
            *w -= lr * g;
        }
        for (w, g) in model.motion.weights.iter_mut().zip(&obj.grad_motion) {
            *w -= lr * g;
        }
        if model.text.weights.iter().chain(&model.motion.weights).any(|w| !w.is_finite()) {
            return Err(ContrastiveError::TrainingDiverged { epoch, loss: f64::NAN });
        }
    }
    unreachable!("loop returns on the last epoch")
}
