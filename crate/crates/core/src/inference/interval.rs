use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::fem::{EigenBasis, ScalarField};

use super::{sample_posterior, InferenceError, PosteriorGaussian};

/// `{z : |z − ⟨f̄_n, ψ⟩| ≤ R}` with posterior mass `level`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CredibleInterval {
    pub center: f64,
    /// Sampled radius.
    pub radius: f64,
    /// Closed-form Gaussian radius `z_{1−γ/2} (ψᵀ Λ_n ψ)^{1/2}`.
    pub exact_radius: f64,
    pub level: f64,
}

impl CredibleInterval {
    pub fn contains(&self, z: f64) -> bool {
        (z - self.center).abs() <= self.radius
    }
}

/// Type-7 (linear interpolation) empirical quantile of unsorted data.
pub fn quantile_type7(data: &[f64], p: f64) -> f64 {
    assert!(!data.is_empty() && (0.0..=1.0).contains(&p));
    let mut v = data.to_vec();
    v.sort_by(f64::total_cmp);
    let h = (v.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    v[lo] + (h - lo as f64) * (v[hi] - v[lo])
}

/// Interval for `⟨f, ψ⟩` from `m` posterior draws.
pub fn credible_interval(
    post: &PosteriorGaussian,
    psi: &ScalarField,
    basis: &EigenBasis,
    gamma: f64,
    m: usize,
    seed: u64,
) -> Result<CredibleInterval, InferenceError> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(InferenceError::InvalidArgument(format!(
            "gamma must lie in (0,1), got {gamma}"
        )));
    }
    if m < 100 {
        return Err(InferenceError::InvalidArgument(format!(
            "at least 100 draws are required, got {m}"
        )));
    }
    let weights = basis.project(psi)?;
    if weights.len() < post.dim() {
        return Err(InferenceError::DimensionMismatch {
            what: "basis",
            expected: post.dim(),
            got: weights.len(),
        });
    }
    let w = &weights[..post.dim()];
    let dot = |c: &[f64]| -> f64 { c.iter().zip(w).map(|(a, b)| a * b).sum() };
    let center = dot(post.mean());
    let deviations: Vec<f64> = sample_posterior(post, m, seed)
        .iter()
        .map(|c| (dot(c) - center).abs())
        .collect();
    let radius = quantile_type7(&deviations, 1.0 - gamma);
    let z = Normal::standard().inverse_cdf(1.0 - gamma / 2.0);
    Ok(CredibleInterval {
        center,
        radius,
        exact_radius: z * post.quadratic_form(w).sqrt(),
        level: 1.0 - gamma,
    })
}
