//! Crank–Nicolson integration of `M u̇ = −K u` with zero boundary values.

use std::sync::Arc;

use rayon::prelude::*;

use crate::mesh::Mesh;

use super::{
    assemble_mass, assemble_mass_full, assemble_stiffness, same_mesh, DofMap, EnvelopeCholesky, FemError, ScalarField,
    SparseSymMatrix,
};

/// `max(100, ceil(T/h²))`, capped at 10⁴.
pub fn default_heat_steps(t: f64, h: f64) -> usize {
    let fine = (t / (h * h)).ceil();
    (if fine.is_finite() { fine as usize } else { usize::MAX }).clamp(100, 10_000)
}

/// Factorised propagator for a fixed mesh, conductivity, horizon and step count.
#[derive(Clone, Debug)]
pub struct HeatSolver {
    mesh: Arc<Mesh>,
    dofs: DofMap,
    t: f64,
    steps: usize,
    mass_full: SparseSymMatrix,
    mass_chol: EnvelopeCholesky,
    /// `M − dt/2 K`
    explicit: SparseSymMatrix,
    /// factor of `M + dt/2 K`
    implicit: EnvelopeCholesky,
}

impl HeatSolver {
    pub fn new(mesh: &Arc<Mesh>, c: &ScalarField, t: f64, steps: usize) -> Result<Self, FemError> {
        if !(t > 0.0) || !t.is_finite() {
            return Err(FemError::InvalidArgument(format!(
                "terminal time must be positive, got {t}"
            )));
        }
        if steps == 0 {
            return Err(FemError::InvalidArgument("at least one time step is required".into()));
        }
        if !same_mesh(c.mesh(), mesh) {
            return Err(FemError::MeshMismatch);
        }
        let k = assemble_stiffness(mesh, c)?;
        let m = assemble_mass(mesh);
        let half = 0.5 * t / steps as f64;
        Ok(Self {
            mesh: Arc::clone(mesh),
            dofs: DofMap::new(mesh),
            t,
            steps,
            mass_full: assemble_mass_full(mesh),
            mass_chol: EnvelopeCholesky::factor(&m)?,
            explicit: m.linear_combination(1.0, &k, -half),
            implicit: EnvelopeCholesky::factor(&m.linear_combination(1.0, &k, half))?,
        })
    }

    pub fn mesh(&self) -> &Arc<Mesh> {
        &self.mesh
    }

    pub fn terminal_time(&self) -> f64 {
        self.t
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    /// L² projection of `f` onto the fields vanishing on the boundary, in interior dofs.
    fn initial_state(&self, f: &ScalarField) -> Vec<f64> {
        let rhs = self.dofs.restrict(&self.mass_full.mul_vec(f.values()));
        self.mass_chol.solve(&rhs)
    }

    /// `u(T,·)` for initial condition `f`.
    pub fn solve(&self, f: &ScalarField) -> Result<ScalarField, FemError> {
        if !same_mesh(f.mesh(), &self.mesh) {
            return Err(FemError::MeshMismatch);
        }
        let mut u = self.initial_state(f);
        let mut rhs = vec![0.0; u.len()];
        for _ in 0..self.steps {
            self.explicit.mul_vec_into(&u, &mut rhs);
            u = self.implicit.solve(&rhs);
        }
        if u.iter().any(|x| !x.is_finite()) {
            return Err(FemError::LinearSolveFailure("non-finite heat state".into()));
        }
        ScalarField::new(Arc::clone(&self.mesh), self.dofs.extend(&u))
    }

    /// Solves for several initial conditions in parallel; output order matches input.
    pub fn solve_many(&self, fs: &[ScalarField]) -> Result<Vec<ScalarField>, FemError> {
        fs.par_iter().map(|f| self.solve(f)).collect()
    }
}

/// One-shot convenience wrapper around [`HeatSolver`].
pub fn solve_heat(
    mesh: &Arc<Mesh>,
    c: &ScalarField,
    f: &ScalarField,
    t: f64,
    steps: usize,
) -> Result<ScalarField, FemError> {
    HeatSolver::new(mesh, c, t, steps)?.solve(f)
}
