use super::ContrastiveError;

/// Diagonal Gaussian `N(mu, diag(sigma^2))`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianLatent {
    mu: Vec<f64>,
    sigma: Vec<f64>,
}

impl GaussianLatent {
    pub fn new(mu: Vec<f64>, sigma: Vec<f64>) -> Result<Self, ContrastiveError> {
        if mu.len() != sigma.len() {
            return Err(ContrastiveError::Shape(format!("mu has {} dims, sigma {}", mu.len(), sigma.len())));
        }
        if let Some(d) = sigma.iter().position(|s| !(s.is_finite() && *s > 0.0)) {
            return Err(ContrastiveError::InvalidLatent(format!("sigma[{d}] = {} is not positive", sigma[d])));
        }
        if mu.iter().any(|m| !m.is_finite()) {
            return Err(ContrastiveError::InvalidLatent("non-finite mu".into()));
        }
        Ok(Self { mu, sigma })
    }

    pub fn standard(dim: usize) -> Self {
        Self { mu: vec![0.0; dim], sigma: vec![1.0; dim] }
    }

    pub fn dim(&self) -> usize {
        self.mu.len()
    }

    pub fn mu(&self) -> &[f64] {
        &self.mu
    }

    pub fn sigma(&self) -> &[f64] {
        &self.sigma
    }

    /// The retrieval-time embedding.
    pub fn mean_embedding(&self) -> &[f64] {
        &self.mu
    }
}

/// `mu + sigma ⊙ noise`.
pub fn reparameterize(g: &GaussianLatent, noise: &[f64]) -> Result<Vec<f64>, ContrastiveError> {
    if noise.len() != g.dim() {
        return Err(ContrastiveError::Shape(format!("noise has {} dims, latent {}", noise.len(), g.dim())));
    }
    Ok(g.mu.iter().zip(&g.sigma).zip(noise).map(|((m, s), e)| m + s * e).collect())
}

/// `KL(p || q)` for diagonal Gaussians, summed over dimensions.
pub fn kl_diag_gaussians(p: &GaussianLatent, q: &GaussianLatent) -> Result<f64, ContrastiveError> {
    if p.dim() != q.dim() {
        return Err(ContrastiveError::Shape(format!("KL between {}- and {}-dim latents", p.dim(), q.dim())));
    }
    Ok((0..p.dim())
        .map(|d| {
            let (sp, sq) = (p.sigma[d], q.sigma[d]);
            let dm = p.mu[d] - q.mu[d];
            (sq / sp).ln() + (sp * sp + dm * dm) / (2.0 * sq * sq) - 0.5
        })
        .sum())
}

/// Both latents against the unit Gaussian plus both cross directions.
pub fn kl_loss(text: &GaussianLatent, motion: &GaussianLatent) -> Result<f64, ContrastiveError> {
    let prior = GaussianLatent::standard(text.dim());
    Ok(kl_diag_gaussians(text, &prior)?
        + kl_diag_gaussians(motion, &prior)?
        + kl_diag_gaussians(text, motion)?
        + kl_diag_gaussians(motion, text)?)
}
