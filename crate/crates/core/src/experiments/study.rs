use std::path::Path;
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::fem::{basis_cache_key, default_heat_steps, l2_inner, EigenBasis, HeatSolver, Interpolator, ScalarField};
use crate::inference::{
    compute_posterior, credible_interval, l2_error, posterior_mean_field, sample_posterior, CredibleInterval,
    ForwardOperator, Observation, PosteriorGaussian, PosteriorRecord, PropagatedBasis,
};
use crate::mesh::{design_grid, generate_mesh, DesignGrid, Mesh, Point};
use crate::prior::PriorCovariance;
use crate::seed::derive;

use super::{builtins, ExperimentConfig, ExperimentError};

/// Stream tags keeping the random streams of different experiments apart.
const NOISE: u64 = 0x006e_6f69_7365;
const COVERAGE: u64 = 0x0063_6f76_6572;
const DRAWS: u64 = 0x0064_7261_7773;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ErrorRow {
    /// Actual design size.
    pub n: usize,
    pub n_target: usize,
    pub mean_l2: f64,
    pub mean_rel: f64,
    /// Sample standard deviation of the L² error over seeds (0 for one seed).
    pub std_l2: f64,
    pub seeds: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ErrorTable {
    pub rows: Vec<ErrorRow>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CoverageReport {
    pub gamma: f64,
    pub n: usize,
    pub replicates: usize,
    pub coverage: f64,
    pub mean_radius: f64,
    pub mean_exact_radius: f64,
    /// `⟨f₀, ψ⟩` on the data mesh.
    pub truth: f64,
}

/// Values along one principal axis.
#[derive(Clone, Debug, PartialEq)]
pub struct AxisSection {
    pub name: &'static str,
    pub s: Vec<f64>,
    pub f0: Vec<f64>,
    pub fbar: Vec<f64>,
    /// `samples[k][i]`: draw `k` at abscissa `i`.
    pub samples: Vec<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CrossSection {
    pub axes: Vec<AxisSection>,
}

pub const SECTION_POINTS: usize = 101;

/// Meshes, basis, propagated basis and truth shared by all experiments of a config.
pub struct Study {
    config: ExperimentConfig,
    mesh: Arc<Mesh>,
    basis: EigenBasis,
    propagated: PropagatedBasis,
    /// `u(T,·)` of the truth on the data mesh
    truth_terminal: ScalarField,
    /// truth interpolated on the inference mesh
    truth: ScalarField,
    psi: ScalarField,
    /// `⟨f₀, ψ⟩` on the data mesh
    truth_functional: f64,
}

fn field(mesh: &Arc<Mesh>, id: &str) -> ScalarField {
    let f = builtins::lookup(id).expect("ids are validated with the config");
    ScalarField::from_fn(mesh, f)
}

impl Study {
    pub fn new(config: &ExperimentConfig) -> Result<Self, ExperimentError> {
        config.validate()?;
        let mesh = Arc::new(generate_mesh(&config.domain, config.mesh_h)?);
        let basis = Self::load_basis(config, &mesh, config.max_truncation())?;

        let steps = config
            .heat_steps
            .unwrap_or_else(|| default_heat_steps(config.t, config.mesh_h));
        let solver = HeatSolver::new(&mesh, &field(&mesh, &config.conductivity), config.t, steps)?;
        let propagated = PropagatedBasis::new(&basis, &solver)?;

        let fine_h = config.mesh_h / config.data_refinement as f64;
        let fine = Arc::new(generate_mesh(&config.domain, fine_h)?);
        let fine_steps = config
            .heat_steps
            .unwrap_or_else(|| default_heat_steps(config.t, fine_h));
        let fine_solver = HeatSolver::new(&fine, &field(&fine, &config.conductivity), config.t, fine_steps)?;
        let truth_fine = field(&fine, &config.truth);
        let truth_terminal = fine_solver.solve(&truth_fine)?;
        let truth_functional = l2_inner(&truth_fine, &field(&fine, &config.psi))?;

        Ok(Self {
            config: config.clone(),
            truth: field(&mesh, &config.truth),
            psi: field(&mesh, &config.psi),
            mesh,
            basis,
            propagated,
            truth_terminal,
            truth_functional,
        })
    }

    fn load_basis(config: &ExperimentConfig, mesh: &Arc<Mesh>, j: usize) -> Result<EigenBasis, ExperimentError> {
        let Some(dir) = &config.cache_dir else {
            return Ok(EigenBasis::dirichlet_laplacian(mesh, j)?);
        };
        let key = basis_cache_key(mesh, &ScalarField::constant(mesh, 1.0), j);
        let path = dir.join(format!("basis-{key}.txt"));
        if let Ok(text) = std::fs::read_to_string(&path) {
            if let Ok(basis) = EigenBasis::from_text(mesh, &text) {
                return Ok(basis);
            }
        }
        let basis = EigenBasis::dirichlet_laplacian(mesh, j)?;
        std::fs::create_dir_all(dir).map_err(|e| ExperimentError::io(dir, e))?;
        std::fs::write(&path, basis.to_text()).map_err(|e| ExperimentError::io(&path, e))?;
        Ok(basis)
    }

    pub fn config(&self) -> &ExperimentConfig {
        &self.config
    }

    pub fn mesh(&self) -> &Arc<Mesh> {
        &self.mesh
    }

    pub fn basis(&self) -> &EigenBasis {
        &self.basis
    }

    pub fn truth(&self) -> &ScalarField {
        &self.truth
    }

    pub fn psi(&self) -> &ScalarField {
        &self.psi
    }

    pub fn truth_functional(&self) -> f64 {
        self.truth_functional
    }

    pub fn truncation(&self, n: usize) -> usize {
        self.config.truncation_for(n)
    }

    pub fn prior(&self, n: usize) -> Result<PriorCovariance, ExperimentError> {
        let j = self.truncation(n);
        Ok(PriorCovariance::from_eigenvalues(
            self.config.alpha,
            &self.basis.eigenvalues()[..j],
        )?)
    }

    pub fn design(&self, n: usize) -> Result<DesignGrid, ExperimentError> {
        Ok(design_grid(&self.config.domain, n)?)
    }

    /// Noise-free data `u(T, x_i)` from the data mesh.
    pub fn clean_data(&self, design: &DesignGrid) -> Result<Vec<f64>, ExperimentError> {
        Ok(self.truth_terminal.evaluate(design.points())?)
    }

    /// `RMS(G f₀ at the design) / σ`.
    pub fn signal_to_noise(&self, n: usize) -> Result<f64, ExperimentError> {
        let clean = self.clean_data(&self.design(n)?)?;
        let ms = clean.iter().map(|x| x * x).sum::<f64>() / clean.len() as f64;
        Ok(ms.sqrt() / self.config.sigma)
    }

    /// Design, forward operator and noise-free data for a target sample size.
    pub fn setup(&self, n: usize) -> Result<(ForwardOperator, Vec<f64>), ExperimentError> {
        let design = self.design(n)?;
        let op = self.propagated.forward_operator(&design, self.truncation(n))?;
        let clean = self.clean_data(&design)?;
        Ok((op, clean))
    }

    fn posterior_with(
        &self,
        op: &ForwardOperator,
        clean: &[f64],
        prior: &PriorCovariance,
        noise_seed: u64,
    ) -> Result<PosteriorGaussian, ExperimentError> {
        let obs = Observation::with_noise(clean, self.config.sigma, op.design().clone(), noise_seed)?;
        Ok(compute_posterior(op, &obs, prior)?)
    }

    /// Posterior for target size `n` with the noise realisation of `seed`.
    pub fn posterior(&self, n: usize, seed: u64) -> Result<PosteriorGaussian, ExperimentError> {
        let (op, clean) = self.setup(n)?;
        self.posterior_with(&op, &clean, &self.prior(n)?, derive(derive(seed, NOISE), n as u64))
    }

    pub fn posterior_record(&self, n: usize, seed: u64) -> Result<PosteriorRecord, ExperimentError> {
        let post = self.posterior(n, seed)?;
        let actual = self.design(n)?.n();
        Ok(PosteriorRecord::new(
            &post,
            self.config.alpha,
            self.config.sigma,
            self.config.t,
            actual,
        ))
    }

    /// Credible interval for `⟨f, ψ⟩` at level `1 − gamma`.
    pub fn interval(&self, n: usize, seed: u64) -> Result<CredibleInterval, ExperimentError> {
        let post = self.posterior(n, seed)?;
        Ok(credible_interval(
            &post,
            &self.psi,
            &self.basis,
            self.config.gamma,
            self.config.interval_draws,
            derive(derive(seed, DRAWS), n as u64),
        )?)
    }

    /// L² and relative error of the posterior mean for every `n` and seed.
    /// `on_row` sees each row as soon as it is complete.
    pub fn run_table1_with(
        &self,
        mut on_row: impl FnMut(&ErrorRow) -> Result<(), ExperimentError>,
    ) -> Result<ErrorTable, ExperimentError> {
        let mut rows = Vec::with_capacity(self.config.n_list.len());
        for &n in &self.config.n_list {
            let (op, clean) = self.setup(n)?;
            let prior = self.prior(n)?;
            let errors = self
                .config
                .seeds
                .par_iter()
                .map(|&seed| {
                    let post = self.posterior_with(&op, &clean, &prior, derive(derive(seed, NOISE), n as u64))?;
                    let fbar = posterior_mean_field(&post, &self.basis)?;
                    Ok(l2_error(&fbar, &self.truth)?)
                })
                .collect::<Result<Vec<_>, ExperimentError>>()?;
            let k = errors.len() as f64;
            let mean_l2 = errors.iter().map(|e| e.absolute).sum::<f64>() / k;
            let mean_rel = errors.iter().map(|e| e.relative).sum::<f64>() / k;
            let std_l2 = if errors.len() > 1 {
                (errors.iter().map(|e| (e.absolute - mean_l2).powi(2)).sum::<f64>() / (k - 1.0)).sqrt()
            } else {
                0.0
            };
            let row = ErrorRow {
                n: op.n(),
                n_target: n,
                mean_l2,
                mean_rel,
                std_l2,
                seeds: errors.len(),
            };
            on_row(&row)?;
            rows.push(row);
        }
        Ok(ErrorTable { rows })
    }

    pub fn run_table1(&self) -> Result<ErrorTable, ExperimentError> {
        self.run_table1_with(|_| Ok(()))
    }

    /// Frequentist coverage of the credible interval for `⟨f₀, ψ⟩` over fresh noise.
    pub fn run_coverage(&self, replicates: usize) -> Result<CoverageReport, ExperimentError> {
        if replicates < 50 {
            return Err(ExperimentError::InvalidArgument(format!(
                "coverage needs at least 50 replicates, got {replicates}"
            )));
        }
        let n = self.config.study_n();
        let (op, clean) = self.setup(n)?;
        let prior = self.prior(n)?;
        let base = derive(self.config.seeds[0], COVERAGE);
        let intervals = (0..replicates as u64)
            .into_par_iter()
            .map(|r| {
                let post = self.posterior_with(&op, &clean, &prior, derive(base, 2 * r))?;
                Ok(credible_interval(
                    &post,
                    &self.psi,
                    &self.basis,
                    self.config.gamma,
                    self.config.interval_draws,
                    derive(base, 2 * r + 1),
                )?)
            })
            .collect::<Result<Vec<_>, ExperimentError>>()?;
        let k = replicates as f64;
        let hits = intervals.iter().filter(|c| c.contains(self.truth_functional)).count();
        Ok(CoverageReport {
            gamma: self.config.gamma,
            n: op.n(),
            replicates,
            coverage: hits as f64 / k,
            mean_radius: intervals.iter().map(|c| c.radius).sum::<f64>() / k,
            mean_exact_radius: intervals.iter().map(|c| c.exact_radius).sum::<f64>() / k,
            truth: self.truth_functional,
        })
    }

    /// Truth, posterior mean and `m` posterior draws along both principal axes.
    pub fn run_cross_section(&self, m: usize) -> Result<CrossSection, ExperimentError> {
        if m == 0 {
            return Err(ExperimentError::InvalidArgument(
                "at least one posterior sample is required".into(),
            ));
        }
        let n = self.config.study_n();
        let seed = self.config.seeds[0];
        let post = self.posterior(n, seed)?;
        let draws = sample_posterior(&post, m, derive(derive(seed, DRAWS), u64::MAX - n as u64));
        let truth = builtins::lookup(&self.config.truth).expect("validated id");
        let names = ["major", "minor"];
        let mut axes = Vec::new();
        for (name, (a, b)) in names.into_iter().zip(self.config.domain.principal_axes()) {
            let half = 0.5 * ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt();
            let pts: Vec<Point> = (0..SECTION_POINTS)
                .map(|i| {
                    let u = i as f64 / (SECTION_POINTS - 1) as f64;
                    [a[0] + u * (b[0] - a[0]), a[1] + u * (b[1] - a[1])]
                })
                .collect();
            let interp = Interpolator::new_clamped(&self.mesh, &pts);
            // basis values at the section points, one row per function
            let e: Vec<Vec<f64>> = self.basis.eigenfunctions()[..post.dim()]
                .iter()
                .map(|f| interp.apply(f.values()))
                .collect();
            let combine = |c: &[f64]| -> Vec<f64> {
                (0..pts.len())
                    .map(|i| c.iter().zip(&e).map(|(cj, ej)| cj * ej[i]).sum())
                    .collect()
            };
            axes.push(AxisSection {
                name,
                s: (0..SECTION_POINTS)
                    .map(|i| -half + 2.0 * half * i as f64 / (SECTION_POINTS - 1) as f64)
                    .collect(),
                f0: pts.iter().map(|&p| truth(p)).collect(),
                fbar: combine(post.mean()),
                samples: draws.iter().map(|d| combine(d)).collect(),
            });
        }
        Ok(CrossSection { axes })
    }

    /// Writes the inference mesh in the plain-text mesh format.
    pub fn write_mesh(&self, path: &Path) -> Result<(), ExperimentError> {
        std::fs::write(path, self.mesh.to_text()).map_err(|e| ExperimentError::io(path, e))
    }
}
