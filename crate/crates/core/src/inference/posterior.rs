use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::fem::{l2_inner, EigenBasis, ScalarField};
use crate::prior::PriorCovariance;
use crate::seed::derive;

use super::{ForwardOperator, InferenceError, Observation};

/// Conjugate Gaussian posterior `N(f̄_n, Λ_n)` on the basis coefficients.
#[derive(Clone, Debug)]
pub struct PosteriorGaussian {
    mean: DVector<f64>,
    covariance: DMatrix<f64>,
    /// lower triangular with `L Lᵀ = Λ_n`
    factor: DMatrix<f64>,
}

impl PosteriorGaussian {
    pub fn mean(&self) -> &[f64] {
        self.mean.as_slice()
    }

    pub fn covariance(&self) -> &DMatrix<f64> {
        &self.covariance
    }

    pub fn cholesky_factor(&self) -> &DMatrix<f64> {
        &self.factor
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    /// `vᵀ Λ_n v`.
    pub fn quadratic_form(&self, v: &[f64]) -> f64 {
        let lt_v = self.factor.tr_mul(&DVector::from_column_slice(v));
        lt_v.norm_squared()
    }
}

/// `Λ_n = (σ⁻²GᵀG + Λ⁻¹)⁻¹`, `f̄_n = σ⁻² Λ_n Gᵀ y`, via a Cholesky factor of the precision.
pub fn compute_posterior(
    op: &ForwardOperator,
    obs: &Observation,
    prior: &PriorCovariance,
) -> Result<PosteriorGaussian, InferenceError> {
    let (n, j) = (op.n(), op.j());
    if obs.y().len() != n {
        return Err(InferenceError::DimensionMismatch {
            what: "observation vector",
            expected: n,
            got: obs.y().len(),
        });
    }
    if prior.len() != j {
        return Err(InferenceError::DimensionMismatch {
            what: "prior covariance",
            expected: j,
            got: prior.len(),
        });
    }
    let s2 = obs.sigma().powi(2);
    let g = op.matrix();
    let mut precision = g.tr_mul(g) / s2;
    for (k, v) in prior.diag().iter().enumerate() {
        precision[(k, k)] += 1.0 / v;
    }
    let precision = 0.5 * (&precision + precision.transpose());
    let rhs = g.tr_mul(&DVector::from_column_slice(obs.y())) / s2;

    // Reversing the index order turns the inverse of an upper factor into a
    // lower one: with E P E = R Rᵀ, Λ_n = (E R⁻ᵀ E)(E R⁻ᵀ E)ᵀ.
    let reversed = DMatrix::from_fn(j, j, |r, c| precision[(j - 1 - r, j - 1 - c)]);
    let chol = Cholesky::<f64, Dyn>::new(reversed)
        .ok_or_else(|| InferenceError::SingularSystem("posterior precision is not positive definite".into()))?;
    let r_inv = chol
        .l()
        .solve_lower_triangular(&DMatrix::identity(j, j))
        .ok_or_else(|| InferenceError::SingularSystem("singular precision factor".into()))?;
    let factor = DMatrix::from_fn(j, j, |r, c| r_inv[(j - 1 - c, j - 1 - r)]);
    let covariance = &factor * factor.transpose();
    let covariance = 0.5 * (&covariance + covariance.transpose());

    let rev_rhs = DVector::from_fn(j, |r, _| rhs[j - 1 - r]);
    let rev_mean = chol.solve(&rev_rhs);
    let mean = DVector::from_fn(j, |r, _| rev_mean[j - 1 - r]);
    if mean.iter().chain(factor.iter()).any(|x| !x.is_finite()) {
        return Err(InferenceError::SingularSystem("non-finite posterior".into()));
    }
    Ok(PosteriorGaussian {
        mean,
        covariance,
        factor,
    })
}

pub fn posterior_mean_field(post: &PosteriorGaussian, basis: &EigenBasis) -> Result<ScalarField, InferenceError> {
    Ok(basis.reconstruct(post.mean())?)
}

/// `m` draws `f̄_n + L z`; draw `i` uses the stream `derive(seed, i)`.
pub fn sample_posterior(post: &PosteriorGaussian, m: usize, seed: u64) -> Vec<Vec<f64>> {
    (0..m as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive(seed, i));
            let z = DVector::from_fn(post.dim(), |_, _| StandardNormal.sample(&mut rng));
            (&post.mean + &post.factor * z).as_slice().to_vec()
        })
        .collect()
}

/// `Σ_j coeffs_j ⟨e_j, ψ⟩`.
pub fn functional_value(coeffs: &[f64], psi: &ScalarField, basis: &EigenBasis) -> Result<f64, InferenceError> {
    let weights = basis.project(psi)?;
    if coeffs.len() > weights.len() {
        return Err(InferenceError::DimensionMismatch {
            what: "coefficient vector",
            expected: weights.len(),
            got: coeffs.len(),
        });
    }
    Ok(coeffs.iter().zip(&weights).map(|(c, w)| c * w).sum())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct L2Error {
    pub absolute: f64,
    /// `absolute / ‖f_true‖`
    pub relative: f64,
}

pub fn l2_error(estimate: &ScalarField, f_true: &ScalarField) -> Result<L2Error, InferenceError> {
    let diff = estimate.add_scaled(-1.0, f_true)?;
    let absolute = l2_inner(&diff, &diff)?.max(0.0).sqrt();
    Ok(L2Error {
        absolute,
        relative: absolute / f_true.l2_norm(),
    })
}

/// Plot-ready posterior summary.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PosteriorRecord {
    pub alpha: f64,
    #[serde(rename = "J")]
    pub j: usize,
    pub sigma: f64,
    #[serde(rename = "T")]
    pub t: f64,
    pub n: usize,
    pub mean: Vec<f64>,
    pub covariance: Vec<Vec<f64>>,
}

impl PosteriorRecord {
    pub fn new(post: &PosteriorGaussian, alpha: f64, sigma: f64, t: f64, n: usize) -> Self {
        let j = post.dim();
        Self {
            alpha,
            j,
            sigma,
            t,
            n,
            mean: post.mean().to_vec(),
            covariance: (0..j)
                .map(|r| post.covariance.row(r).iter().copied().collect())
                .collect(),
        }
    }
}
