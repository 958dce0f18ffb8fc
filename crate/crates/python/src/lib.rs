//! Python bindings for the `heatbayes` crate.
//!
//! Vectors cross the boundary as plain lists and the posterior as a dict, so
//! the module has no runtime dependency beyond the interpreter.

use std::path::PathBuf;
use std::sync::Arc;

use nalgebra::DMatrix;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use heatbayes::experiments::{ExperimentConfig, ExperimentError, Study};
use heatbayes::fem::{EigenBasis, HeatSolver, ScalarField};
use heatbayes::inference::{compute_posterior, ForwardOperator, Observation, PosteriorGaussian};
use heatbayes::mesh::{generate_mesh, DesignGrid, DomainSpec};
use heatbayes::prior::{default_truncation, PriorCovariance};

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn experiment_err(e: ExperimentError) -> PyErr {
    match e.exit_code() {
        1 => PyValueError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn parse_domain(name: &str) -> PyResult<DomainSpec> {
    match name {
        "ellipse" | "rotated_ellipse" => Ok(DomainSpec::study_ellipse()),
        "unit_square" | "square" => Ok(DomainSpec::UnitSquare),
        "unit_disk" | "disk" => Ok(DomainSpec::UnitDisk),
        other => Err(PyValueError::new_err(format!("unknown domain `{other}`"))),
    }
}

#[pyclass(name = "Mesh", module = "heatbayes_py", frozen)]
struct PyMesh {
    inner: Arc<heatbayes::mesh::Mesh>,
}

#[pymethods]
impl PyMesh {
    /// Quality triangulation of a named domain with target edge length `h`.
    #[new]
    #[pyo3(signature = (domain = "ellipse", h = 0.05))]
    fn new(domain: &str, h: f64) -> PyResult<Self> {
        let mesh = generate_mesh(&parse_domain(domain)?, h).map_err(value_err)?;
        Ok(Self { inner: Arc::new(mesh) })
    }

    #[staticmethod]
    fn from_text(text: &str) -> PyResult<Self> {
        let mesh = heatbayes::mesh::Mesh::from_text(text).map_err(value_err)?;
        Ok(Self { inner: Arc::new(mesh) })
    }

    #[getter]
    fn num_vertices(&self) -> usize {
        self.inner.num_vertices()
    }

    #[getter]
    fn num_triangles(&self) -> usize {
        self.inner.num_triangles()
    }

    #[getter]
    fn vertices(&self) -> Vec<(f64, f64)> {
        self.inner.vertices().iter().map(|p| (p[0], p[1])).collect()
    }

    #[getter]
    fn triangles(&self) -> Vec<(usize, usize, usize)> {
        self.inner.triangles().iter().map(|t| (t[0], t[1], t[2])).collect()
    }

    #[getter]
    fn boundary(&self) -> Vec<bool> {
        self.inner.boundary_flags().to_vec()
    }

    fn total_area(&self) -> f64 {
        self.inner.total_area()
    }

    fn min_angle_degrees(&self) -> f64 {
        self.inner.min_angle_degrees()
    }

    fn to_text(&self) -> String {
        self.inner.to_text()
    }

    fn __repr__(&self) -> String {
        format!(
            "Mesh(vertices={}, triangles={})",
            self.inner.num_vertices(),
            self.inner.num_triangles()
        )
    }
}

#[pyclass(name = "EigenBasis", module = "heatbayes_py", frozen)]
struct PyEigenBasis {
    inner: EigenBasis,
}

impl PyEigenBasis {
    fn field(&self, values: Vec<f64>) -> PyResult<ScalarField> {
        ScalarField::new(Arc::clone(self.inner.mesh()), values).map_err(value_err)
    }
}

#[pymethods]
impl PyEigenBasis {
    /// First `j` Dirichlet-Laplacian eigenpairs on `mesh`.
    #[new]
    fn new(py: Python<'_>, mesh: &PyMesh, j: usize) -> PyResult<Self> {
        let m = Arc::clone(&mesh.inner);
        let inner = py
            .detach(|| EigenBasis::dirichlet_laplacian(&m, j))
            .map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
        Ok(Self { inner })
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    #[getter]
    fn eigenvalues(&self) -> Vec<f64> {
        self.inner.eigenvalues().to_vec()
    }

    /// Nodal values of eigenfunction `j` (zero-based).
    fn eigenfunction(&self, j: usize) -> PyResult<Vec<f64>> {
        if j >= self.inner.len() {
            return Err(PyValueError::new_err(format!("index {j} out of range")));
        }
        Ok(self.inner.eigenfunction(j).values().to_vec())
    }

    fn orthonormality_defect(&self) -> f64 {
        self.inner.orthonormality_defect()
    }

    /// L² coefficients of a nodal field.
    fn project(&self, values: Vec<f64>) -> PyResult<Vec<f64>> {
        self.inner.project(&self.field(values)?).map_err(value_err)
    }

    /// Nodal values of `Σ c_j e_j`.
    fn reconstruct(&self, coeffs: Vec<f64>) -> PyResult<Vec<f64>> {
        Ok(self.inner.reconstruct(&coeffs).map_err(value_err)?.into_values())
    }

    /// `u(t)` for the heat equation with conductivity `c` (nodal) started from `f` (nodal).
    #[pyo3(signature = (f, c, t, steps = 100))]
    fn solve_heat(&self, py: Python<'_>, f: Vec<f64>, c: Vec<f64>, t: f64, steps: usize) -> PyResult<Vec<f64>> {
        let (f, c) = (self.field(f)?, self.field(c)?);
        let mesh = Arc::clone(self.inner.mesh());
        py.detach(|| HeatSolver::new(&mesh, &c, t, steps).and_then(|s| s.solve(&f)))
            .map(ScalarField::into_values)
            .map_err(value_err)
    }
}

fn posterior_dict<'py>(py: Python<'py>, post: &PosteriorGaussian) -> PyResult<Bound<'py, PyDict>> {
    let j = post.dim();
    let cov: Vec<Vec<f64>> = (0..j)
        .map(|r| post.covariance().row(r).iter().copied().collect())
        .collect();
    let d = PyDict::new(py);
    d.set_item("mean", post.mean().to_vec())?;
    d.set_item("covariance", cov)?;
    Ok(d)
}

/// Conjugate posterior for `y = G f + σ W` with prior `N(0, diag(λ_j^{-α}))`.
///
/// `g` is a list of `n` rows of length `J`.
#[pyfunction]
fn conjugate_posterior<'py>(
    py: Python<'py>,
    g: Vec<Vec<f64>>,
    y: Vec<f64>,
    sigma: f64,
    eigenvalues: Vec<f64>,
    alpha: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let n = g.len();
    let j = g.first().map_or(0, Vec::len);
    if g.iter().any(|row| row.len() != j) {
        return Err(PyValueError::new_err("rows of g must have equal length"));
    }
    let matrix = DMatrix::from_fn(n, j, |r, c| g[r][c]);
    let design = DesignGrid::from_points(vec![[0.0, 0.0]; n], 0.0);
    let op = ForwardOperator::new(matrix, design.clone(), 1.0).map_err(value_err)?;
    let obs = Observation::new(y, sigma, design).map_err(value_err)?;
    let prior = PriorCovariance::from_eigenvalues(alpha, &eigenvalues).map_err(value_err)?;
    let post = compute_posterior(&op, &obs, &prior).map_err(value_err)?;
    posterior_dict(py, &post)
}

/// `round(n^{d/(2α+d)})`.
#[pyfunction]
#[pyo3(name = "default_truncation", signature = (n, alpha, d = 2))]
fn py_default_truncation(n: usize, alpha: f64, d: usize) -> usize {
    default_truncation(n, alpha, d)
}

#[pyclass(name = "Config", module = "heatbayes_py", skip_from_py_object)]
#[derive(Clone)]
struct PyConfig {
    inner: ExperimentConfig,
}

#[pymethods]
impl PyConfig {
    /// Study defaults, optionally overridden by `key = value` text.
    #[new]
    #[pyo3(signature = (text = ""))]
    fn new(text: &str) -> PyResult<Self> {
        Ok(Self {
            inner: ExperimentConfig::parse(text).map_err(value_err)?,
        })
    }

    #[staticmethod]
    fn from_file(path: PathBuf) -> PyResult<Self> {
        Ok(Self {
            inner: ExperimentConfig::from_file(&path).map_err(value_err)?,
        })
    }

    fn canonical(&self) -> String {
        self.inner.canonical()
    }

    fn sha256(&self) -> String {
        self.inner.hash()
    }

    #[getter]
    fn seeds(&self) -> Vec<u64> {
        self.inner.seeds.clone()
    }

    #[setter]
    fn set_seeds(&mut self, seeds: Vec<u64>) -> PyResult<()> {
        if seeds.is_empty() {
            return Err(PyValueError::new_err("at least one seed is required"));
        }
        self.inner.seeds = seeds;
        Ok(())
    }

    #[getter]
    fn n_list(&self) -> Vec<usize> {
        self.inner.n_list.clone()
    }
}

#[pyclass(name = "Study", module = "heatbayes_py", frozen)]
struct PyStudy {
    inner: Study,
}

#[pymethods]
impl PyStudy {
    /// Builds meshes, the eigenbasis, the propagated basis and the data-mesh truth.
    #[new]
    fn new(py: Python<'_>, config: &PyConfig) -> PyResult<Self> {
        let cfg = config.inner.clone();
        let inner = py.detach(|| Study::new(&cfg)).map_err(experiment_err)?;
        Ok(Self { inner })
    }

    #[getter]
    fn eigenvalues(&self) -> Vec<f64> {
        self.inner.basis().eigenvalues().to_vec()
    }

    fn truth_norm(&self) -> f64 {
        self.inner.truth().l2_norm()
    }

    fn truth_functional(&self) -> f64 {
        self.inner.truth_functional()
    }

    fn signal_to_noise(&self, n: usize) -> PyResult<f64> {
        self.inner.signal_to_noise(n).map_err(experiment_err)
    }

    /// One dict per sample size with `n`, `mean_l2`, `mean_rel`, `std_l2`, `seeds`.
    fn table1<'py>(&self, py: Python<'py>) -> PyResult<Vec<Bound<'py, PyDict>>> {
        let table = py.detach(|| self.inner.run_table1()).map_err(experiment_err)?;
        table
            .rows
            .iter()
            .map(|r| {
                let d = PyDict::new(py);
                d.set_item("n", r.n)?;
                d.set_item("n_target", r.n_target)?;
                d.set_item("mean_l2", r.mean_l2)?;
                d.set_item("mean_rel", r.mean_rel)?;
                d.set_item("std_l2", r.std_l2)?;
                d.set_item("seeds", r.seeds)?;
                Ok(d)
            })
            .collect()
    }

    fn coverage<'py>(&self, py: Python<'py>, replicates: usize) -> PyResult<Bound<'py, PyDict>> {
        let r = py
            .detach(|| self.inner.run_coverage(replicates))
            .map_err(experiment_err)?;
        let d = PyDict::new(py);
        d.set_item("gamma", r.gamma)?;
        d.set_item("n", r.n)?;
        d.set_item("replicates", r.replicates)?;
        d.set_item("coverage", r.coverage)?;
        d.set_item("mean_radius", r.mean_radius)?;
        d.set_item("mean_exact_radius", r.mean_exact_radius)?;
        d.set_item("truth", r.truth)?;
        Ok(d)
    }

    /// Posterior mean and covariance for target size `n` and noise seed `seed`.
    fn posterior<'py>(&self, py: Python<'py>, n: usize, seed: u64) -> PyResult<Bound<'py, PyDict>> {
        let post = py.detach(|| self.inner.posterior(n, seed)).map_err(experiment_err)?;
        posterior_dict(py, &post)
    }

    /// `(center, radius, exact_radius)` of the credible interval for `⟨f, ψ⟩`.
    fn interval(&self, py: Python<'_>, n: usize, seed: u64) -> PyResult<(f64, f64, f64)> {
        let ci = py.detach(|| self.inner.interval(n, seed)).map_err(experiment_err)?;
        Ok((ci.center, ci.radius, ci.exact_radius))
    }
}

#[pymodule]
fn heatbayes_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_class::<PyMesh>()?;
    m.add_class::<PyEigenBasis>()?;
    m.add_class::<PyConfig>()?;
    m.add_class::<PyStudy>()?;
    m.add_function(wrap_pyfunction!(conjugate_posterior, m)?)?;
    m.add_function(wrap_pyfunction!(py_default_truncation, m)?)?;
    Ok(())
}
