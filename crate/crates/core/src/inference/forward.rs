use std::sync::Arc;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::fem::{EigenBasis, HeatSolver, Interpolator, ScalarField};
use crate::mesh::{DesignGrid, Mesh};

use super::InferenceError;

/// Heat-propagated basis functions `G e_j = u_j(T,·)` on the basis mesh.
///
/// Independent of the design, so one propagation serves every sample size.
#[derive(Clone, Debug)]
pub struct PropagatedBasis {
    mesh: Arc<Mesh>,
    t: f64,
    columns: Vec<ScalarField>,
}

impl PropagatedBasis {
    pub fn new(basis: &EigenBasis, solver: &HeatSolver) -> Result<Self, InferenceError> {
        if !crate::fem::same_mesh(basis.mesh(), solver.mesh()) {
            return Err(crate::fem::FemError::MeshMismatch.into());
        }
        Ok(Self {
            mesh: Arc::clone(basis.mesh()),
            t: solver.terminal_time(),
            columns: solver.solve_many(basis.eigenfunctions())?,
        })
    }

    pub fn len(&self) -> usize {
        self.columns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }

    pub fn terminal_time(&self) -> f64 {
        self.t
    }

    pub fn columns(&self) -> &[ScalarField] {
        &self.columns
    }

    /// Forward matrix for `design`, using the first `j` propagated functions.
    pub fn forward_operator(&self, design: &DesignGrid, j: usize) -> Result<ForwardOperator, InferenceError> {
        if j > self.len() {
            return Err(InferenceError::DimensionMismatch {
                what: "truncation level",
                expected: self.len(),
                got: j,
            });
        }
        let interp = Interpolator::new(&self.mesh, design.points())?;
        let mut matrix = DMatrix::zeros(design.n(), j);
        for (col, u) in self.columns[..j].iter().enumerate() {
            for (row, x) in interp.apply(u.values()).into_iter().enumerate() {
                matrix[(row, col)] = x;
            }
        }
        ForwardOperator::new(matrix, design.clone(), self.t)
    }
}

/// The `n × J` matrix `[(G e_j)(x_i)]`.
#[derive(Clone, Debug)]
pub struct ForwardOperator {
    matrix: DMatrix<f64>,
    design: DesignGrid,
    t: f64,
}

impl ForwardOperator {
    pub fn new(matrix: DMatrix<f64>, design: DesignGrid, t: f64) -> Result<Self, InferenceError> {
        if matrix.nrows() != design.n() {
            return Err(InferenceError::DimensionMismatch {
                what: "forward matrix rows",
                expected: design.n(),
                got: matrix.nrows(),
            });
        }
        Ok(Self { matrix, design, t })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn design(&self) -> &DesignGrid {
        &self.design
    }

    pub fn terminal_time(&self) -> f64 {
        self.t
    }

    pub fn n(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn j(&self) -> usize {
        self.matrix.ncols()
    }

    /// `G f` for a coefficient vector.
    pub fn apply(&self, coeffs: &[f64]) -> Result<Vec<f64>, InferenceError> {
        if coeffs.len() != self.j() {
            return Err(InferenceError::DimensionMismatch {
                what: "coefficient vector",
                expected: self.j(),
                got: coeffs.len(),
            });
        }
        Ok((0..self.n())
            .map(|i| self.matrix.row(i).iter().zip(coeffs).map(|(g, c)| g * c).sum())
            .collect())
    }
}

/// Column `j` is `evaluate(solve_heat(e_j), design)`.
pub fn build_forward_matrix(
    basis: &EigenBasis,
    c: &ScalarField,
    t: f64,
    design: &DesignGrid,
    steps: usize,
) -> Result<ForwardOperator, InferenceError> {
    let solver = HeatSolver::new(basis.mesh(), c, t, steps)?;
    PropagatedBasis::new(basis, &solver)?.forward_operator(design, basis.len())
}

/// Noisy point observations `y = Gf + σW`.
#[derive(Clone, Debug)]
pub struct Observation {
    y: Vec<f64>,
    sigma: f64,
    design: DesignGrid,
    seed: Option<u64>,
}

impl Observation {
    /// Wraps externally supplied data.
    pub fn new(y: Vec<f64>, sigma: f64, design: DesignGrid) -> Result<Self, InferenceError> {
        if !(sigma > 0.0) || !sigma.is_finite() {
            return Err(InferenceError::InvalidArgument(format!(
                "noise level must be positive, got {sigma}"
            )));
        }
        if y.len() != design.n() {
            return Err(InferenceError::DimensionMismatch {
                what: "observation vector",
                expected: design.n(),
                got: y.len(),
            });
        }
        Ok(Self {
            y,
            sigma,
            design,
            seed: None,
        })
    }

    /// `clean + σ·W` with `W` standard normal drawn from `seed`.
    pub fn with_noise(clean: &[f64], sigma: f64, design: DesignGrid, seed: u64) -> Result<Self, InferenceError> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let y = clean
            .iter()
            .map(|g| {
                let w: f64 = StandardNormal.sample(&mut rng);
                g + sigma * w
            })
            .collect();
        let mut obs = Self::new(y, sigma, design)?;
        obs.seed = Some(seed);
        Ok(obs)
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn design(&self) -> &DesignGrid {
        &self.design
    }

    /// Seed of the synthetic noise, `None` for external data.
    pub fn seed(&self) -> Option<u64> {
        self.seed
    }
}

/// `u(T, x_i)` for the truth, solved with `solver` (typically on a finer mesh
/// than the basis) rather than through the truncated expansion.
pub fn noiseless_data(
    solver: &HeatSolver,
    f_true: &ScalarField,
    design: &DesignGrid,
) -> Result<Vec<f64>, InferenceError> {
    Ok(solver.solve(f_true)?.evaluate(design.points())?)
}

pub fn synthesize_data(
    op: &ForwardOperator,
    solver: &HeatSolver,
    f_true: &ScalarField,
    sigma: f64,
    seed: u64,
) -> Result<Observation, InferenceError> {
    if (solver.terminal_time() - op.terminal_time()).abs() > 1e-12 * op.terminal_time() {
        return Err(InferenceError::InvalidArgument(format!(
            "data solver runs to T={} but the forward operator to T={}",
            solver.terminal_time(),
            op.terminal_time()
        )));
    }
    let clean = noiseless_data(solver, f_true, op.design())?;
    Observation::with_noise(&clean, sigma, op.design().clone(), seed)
}
