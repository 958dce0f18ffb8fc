//! Piecewise-linear finite elements: assembly, the Dirichlet-Laplacian
//! eigenbasis, the heat-equation forward solver and field utilities.

mod assembly;
mod cholesky;
mod eigen;
mod heat;
mod locate;
mod sparse;

use std::sync::Arc;

use thiserror::Error;

use crate::mesh::{Mesh, Point};

pub use assembly::{assemble_mass, assemble_mass_full, assemble_stiffness, assemble_stiffness_full, DofMap};
pub use cholesky::{reverse_cuthill_mckee, EnvelopeCholesky};
pub use eigen::{basis_cache_key, solve_eigenpairs, EigenBasis, EigenOptions};
pub use heat::{default_heat_steps, solve_heat, HeatSolver};
pub use locate::{Interpolator, PointLocator};
pub use sparse::SparseSymMatrix;

#[derive(Debug, Error)]
pub enum FemError {
    #[error("coefficient is not strictly positive at vertex {vertex} (value {value})")]
    NonPositiveCoefficient { vertex: usize, value: f64 },
    #[error("eigensolver did not converge: {0}")]
    EigenFailure(String),
    #[error("linear solve failed: {0}")]
    LinearSolveFailure(String),
    #[error("point ({}, {}) lies outside the mesh", .0[0], .0[1])]
    PointOutsideMesh(Point),
    #[error("fields live on different meshes")]
    MeshMismatch,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("malformed basis dump: {0}")]
    Parse(String),
}

/// A continuous piecewise-linear function given by its nodal values.
#[derive(Clone, Debug)]
pub struct ScalarField {
    mesh: Arc<Mesh>,
    values: Vec<f64>,
}

pub(crate) fn same_mesh(a: &Arc<Mesh>, b: &Arc<Mesh>) -> bool {
    Arc::ptr_eq(a, b) || **a == **b
}

impl ScalarField {
    pub fn new(mesh: Arc<Mesh>, values: Vec<f64>) -> Result<Self, FemError> {
        if values.len() != mesh.num_vertices() {
            return Err(FemError::DimensionMismatch {
                expected: mesh.num_vertices(),
                got: values.len(),
            });
        }
        Ok(Self { mesh, values })
    }

    /// Nodal interpolant of `f`.
    pub fn from_fn(mesh: &Arc<Mesh>, f: impl Fn(Point) -> f64) -> Self {
        let values = mesh.vertices().iter().map(|&p| f(p)).collect();
        Self {
            mesh: Arc::clone(mesh),
            values,
        }
    }

    pub fn zeros(mesh: &Arc<Mesh>) -> Self {
        Self::constant(mesh, 0.0)
    }

    pub fn constant(mesh: &Arc<Mesh>, c: f64) -> Self {
        Self {
            mesh: Arc::clone(mesh),
            values: vec![c; mesh.num_vertices()],
        }
    }

    pub fn mesh(&self) -> &Arc<Mesh> {
        &self.mesh
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Copy with boundary nodal values set to zero.
    pub fn with_zero_boundary(&self) -> Self {
        let mut out = self.clone();
        for (v, x) in out.values.iter_mut().enumerate() {
            if self.mesh.is_boundary(v) {
                *x = 0.0;
            }
        }
        out
    }

    /// `self + a·other`.
    pub fn add_scaled(&self, a: f64, other: &ScalarField) -> Result<Self, FemError> {
        if !same_mesh(&self.mesh, &other.mesh) {
            return Err(FemError::MeshMismatch);
        }
        let values = self.values.iter().zip(&other.values).map(|(x, y)| x + a * y).collect();
        Ok(Self {
            mesh: Arc::clone(&self.mesh),
            values,
        })
    }

    pub fn scaled(&self, a: f64) -> Self {
        Self {
            mesh: Arc::clone(&self.mesh),
            values: self.values.iter().map(|x| a * x).collect(),
        }
    }

    /// Values at `points` by barycentric interpolation.
    pub fn evaluate(&self, points: &[Point]) -> Result<Vec<f64>, FemError> {
        Ok(Interpolator::new(&self.mesh, points)?.apply(&self.values))
    }

    /// Like [`evaluate`](Self::evaluate), but points outside the mesh take the
    /// value at the closest point of the mesh.
    pub fn evaluate_clamped(&self, points: &[Point]) -> Vec<f64> {
        Interpolator::new_clamped(&self.mesh, points).apply(&self.values)
    }

    /// `⟨self, other⟩_{L²}` with the consistent mass matrix.
    pub fn l2_inner(&self, other: &ScalarField) -> Result<f64, FemError> {
        l2_inner(self, other)
    }

    pub fn l2_norm(&self) -> f64 {
        l2_inner(self, self).expect("same mesh").max(0.0).sqrt()
    }
}

/// `aᵀ M b` with the unconstrained consistent mass matrix, computed element by element.
pub fn l2_inner(a: &ScalarField, b: &ScalarField) -> Result<f64, FemError> {
    if !same_mesh(&a.mesh, &b.mesh) {
        return Err(FemError::MeshMismatch);
    }
    let mesh = &a.mesh;
    let (x, y) = (&a.values, &b.values);
    let mut total = 0.0;
    for (t, &[i, j, k]) in mesh.triangles().iter().enumerate() {
        let area = mesh.signed_area(t);
        let sx = x[i] + x[j] + x[k];
        let sy = y[i] + y[j] + y[k];
        // area/12 · (Σ x_i y_i + (Σ x)(Σ y))
        total += area / 12.0 * (x[i] * y[i] + x[j] * y[j] + x[k] * y[k] + sx * sy);
    }
    Ok(total)
}
