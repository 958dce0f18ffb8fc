//! Truncated Gaussian series prior `Σ_{j≤J} λ_j^{−α/2} F_j e_j` with `F_j ~ N(0,1)`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fem::{EigenBasis, FemError, ScalarField};

#[derive(Debug, Error)]
pub enum PriorError {
    #[error("regularity exponent must be finite and non-negative, got {0}")]
    InvalidAlpha(f64),
    #[error("truncation level must be at least 1")]
    ZeroTruncation,
    #[error("truncation level {requested} exceeds the {available} available basis functions")]
    TruncationTooLarge { requested: usize, available: usize },
    #[error("eigenvalues must be positive, got {0}")]
    NonPositiveEigenvalue(f64),
    #[error(transparent)]
    Fem(#[from] FemError),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PriorSpec {
    alpha: f64,
    j: usize,
    dim: usize,
}

impl PriorSpec {
    /// Prior on a two-dimensional domain.
    pub fn new(alpha: f64, j: usize) -> Result<Self, PriorError> {
        Self::with_dimension(alpha, j, 2)
    }

    pub fn with_dimension(alpha: f64, j: usize, dim: usize) -> Result<Self, PriorError> {
        if !(alpha >= 0.0) || !alpha.is_finite() {
            return Err(PriorError::InvalidAlpha(alpha));
        }
        if j == 0 {
            return Err(PriorError::ZeroTruncation);
        }
        Ok(Self { alpha, j, dim })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn truncation(&self) -> usize {
        self.j
    }

    pub fn dimension(&self) -> usize {
        self.dim
    }

    /// True when `α ≤ d/2`, outside the regime covered by the contraction theory.
    /// Such priors are still usable.
    pub fn theory_condition_violated(&self) -> bool {
        self.alpha <= self.dim as f64 / 2.0
    }
}

/// Diagonal prior covariance `Λ = diag(λ_1^{−α}, …, λ_J^{−α})`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PriorCovariance {
    diag: Vec<f64>,
}

impl PriorCovariance {
    pub fn from_eigenvalues(alpha: f64, eigenvalues: &[f64]) -> Result<Self, PriorError> {
        if !(alpha >= 0.0) || !alpha.is_finite() {
            return Err(PriorError::InvalidAlpha(alpha));
        }
        if let Some(&bad) = eigenvalues.iter().find(|&&l| !(l > 0.0)) {
            return Err(PriorError::NonPositiveEigenvalue(bad));
        }
        Ok(Self {
            diag: eigenvalues.iter().map(|l| l.powf(-alpha)).collect(),
        })
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    /// Standard deviations `λ_j^{−α/2}`.
    pub fn std_devs(&self) -> Vec<f64> {
        self.diag.iter().map(|v| v.sqrt()).collect()
    }

    /// `Σ_j λ_j^{−α}`, the expected squared L² norm of a draw.
    pub fn trace(&self) -> f64 {
        self.diag.iter().sum()
    }

    /// Coefficient draw `λ_j^{−α/2} F_j`, deterministic in `seed`.
    pub fn sample(&self, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        self.diag
            .iter()
            .map(|v| {
                let z: f64 = StandardNormal.sample(&mut rng);
                v.sqrt() * z
            })
            .collect()
    }
}

pub fn prior_covariance(spec: &PriorSpec, basis: &EigenBasis) -> Result<PriorCovariance, PriorError> {
    if spec.j > basis.len() {
        return Err(PriorError::TruncationTooLarge {
            requested: spec.j,
            available: basis.len(),
        });
    }
    PriorCovariance::from_eigenvalues(spec.alpha, &basis.eigenvalues()[..spec.j])
}

/// `round(n^{d/(2α+d)})`, at least 1.
pub fn default_truncation(n: usize, alpha: f64, d: usize) -> usize {
    let d = d as f64;
    ((n.max(1) as f64).powf(d / (2.0 * alpha + d)).round() as usize).max(1)
}

/// Prior draw as coefficients and as a field on the basis mesh.
pub fn sample_prior(spec: &PriorSpec, basis: &EigenBasis, seed: u64) -> Result<(Vec<f64>, ScalarField), PriorError> {
    let coeffs = prior_covariance(spec, basis)?.sample(seed);
    let field = basis.reconstruct(&coeffs)?;
    Ok((coeffs, field))
}
