//! Smallest generalised eigenpairs `K v = λ M v` by shift-invert block Lanczos.

use std::fmt::Write as _;
use std::sync::Arc;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use crate::mesh::Mesh;

use super::{
    assemble_mass, assemble_mass_full, assemble_stiffness, l2_inner, same_mesh, DofMap, EnvelopeCholesky, FemError,
    ScalarField, SparseSymMatrix,
};

#[derive(Clone, Debug)]
pub struct EigenOptions {
    /// Residual tolerance `‖Kx − θMx‖₂ / (θ ‖Mx‖₂)`.
    pub tol: f64,
    pub block: usize,
    /// Seed of the deterministic start block.
    pub seed: u64,
}

impl Default for EigenOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            block: 4,
            seed: 0x5eed_1a2c,
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(a: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

/// Flips `v` so that its first entry above `1e-6·max|v|` is positive.
pub(crate) fn fix_sign(v: &mut [f64]) {
    let max = v.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    if let Some(first) = v.iter().find(|x| x.abs() > 1e-6 * max) {
        if *first < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
    }
}

struct Krylov<'a> {
    k: &'a SparseSymMatrix,
    m: &'a SparseSymMatrix,
    v: Vec<Vec<f64>>,
    mv: Vec<Vec<f64>>,
    kv: Vec<Vec<f64>>,
    /// `Vᵀ K V`, grown column by column
    a: Vec<Vec<f64>>,
}

impl Krylov<'_> {
    /// M-orthogonalises `w` against the basis (two passes) and appends it.
    /// Returns false when `w` is numerically in the span.
    fn push(&mut self, mut w: Vec<f64>) -> bool {
        let norm0 = dot(&w, &self.m.mul_vec(&w)).sqrt();
        if !(norm0 > 0.0) {
            return false;
        }
        for _ in 0..2 {
            for (v, mv) in self.v.iter().zip(&self.mv) {
                let c = dot(&w, mv);
                axpy(-c, v, &mut w);
            }
        }
        let mw = self.m.mul_vec(&w);
        let norm = dot(&w, &mw).max(0.0).sqrt();
        if norm < 1e-10 * norm0 {
            return false;
        }
        let inv = 1.0 / norm;
        w.iter_mut().for_each(|x| *x *= inv);
        let mw: Vec<f64> = mw.iter().map(|x| x * inv).collect();
        let kw = self.k.mul_vec(&w);
        let mut col: Vec<f64> = self.v.iter().map(|v| dot(v, &kw)).collect();
        col.push(dot(&w, &kw));
        for (row, &x) in self.a.iter_mut().zip(&col) {
            row.push(x);
        }
        self.a.push(col);
        self.v.push(w);
        self.mv.push(mw);
        self.kv.push(kw);
        true
    }

    fn dim(&self) -> usize {
        self.v.len()
    }

    /// Lowest `j` Ritz pairs and the worst relative residual among them.
    fn ritz(&self, j: usize) -> (Vec<f64>, Vec<Vec<f64>>, f64) {
        let m = self.dim();
        let a = DMatrix::from_fn(m, m, |r, c| 0.5 * (self.a[r][c] + self.a[c][r]));
        let eig = SymmetricEigen::new(a);
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by(|&p, &q| eig.eigenvalues[p].total_cmp(&eig.eigenvalues[q]));
        let n = self.v[0].len();
        let mut values = Vec::with_capacity(j);
        let mut vectors = Vec::with_capacity(j);
        let mut worst = 0.0_f64;
        for &col in order.iter().take(j) {
            let theta = eig.eigenvalues[col];
            let y = eig.eigenvectors.column(col);
            let mut x = vec![0.0; n];
            let mut kx = vec![0.0; n];
            let mut mx = vec![0.0; n];
            for (i, &yi) in y.iter().enumerate() {
                axpy(yi, &self.v[i], &mut x);
                axpy(yi, &self.kv[i], &mut kx);
                axpy(yi, &self.mv[i], &mut mx);
            }
            let r: f64 = kx
                .iter()
                .zip(&mx)
                .map(|(p, q)| (p - theta * q).powi(2))
                .sum::<f64>()
                .sqrt();
            let scale = theta.abs() * dot(&mx, &mx).sqrt();
            worst = worst.max(if scale > 0.0 { r / scale } else { f64::INFINITY });
            values.push(theta);
            vectors.push(x);
        }
        (values, vectors, worst)
    }
}

/// Smallest `j` eigenpairs of `K v = λ M v`, ascending, with M-orthonormal
/// eigenvectors under the first-positive sign convention.
pub fn solve_eigenpairs(
    k: &SparseSymMatrix,
    m: &SparseSymMatrix,
    j: usize,
    opts: &EigenOptions,
) -> Result<(Vec<f64>, Vec<Vec<f64>>), FemError> {
    let n = k.dim();
    if m.dim() != n {
        return Err(FemError::DimensionMismatch {
            expected: n,
            got: m.dim(),
        });
    }
    if j == 0 || j > n {
        return Err(FemError::InvalidArgument(format!(
            "requested {j} eigenpairs of a {n}-dimensional problem"
        )));
    }
    let chol = EnvelopeCholesky::factor(k)?;
    let block = opts.block.max(1);
    let max_dim = n.min(6 * j + 200);
    let first_check = n.min((2 * j).max(j + 20));

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let random = |rng: &mut ChaCha8Rng| -> Vec<f64> { (0..n).map(|_| rng.random::<f64>() - 0.5).collect() };
    let mut kr = Krylov {
        k,
        m,
        v: Vec::new(),
        mv: Vec::new(),
        kv: Vec::new(),
        a: Vec::new(),
    };

    let mut current: Vec<Vec<f64>> = Vec::new();
    while current.len() < block.min(n) {
        let before = kr.dim();
        if kr.push(random(&mut rng)) {
            current.push(kr.v[before].clone());
        }
    }

    let mut next_check = first_check;
    let mut worst = f64::INFINITY;
    loop {
        if kr.dim() >= next_check || kr.dim() == max_dim {
            let (values, mut vectors, w) = kr.ritz(j);
            worst = w;
            if w < opts.tol || kr.dim() == n {
                vectors.iter_mut().for_each(|v| fix_sign(v));
                return Ok((values, vectors));
            }
            if kr.dim() >= max_dim {
                break;
            }
            next_check = (kr.dim() + 16).min(max_dim);
        }
        let mut produced = Vec::new();
        for v in &current {
            if kr.dim() >= max_dim {
                break;
            }
            let before = kr.dim();
            let w = chol.solve(&m.mul_vec(v));
            if kr.push(w) || kr.push(random(&mut rng)) {
                produced.push(kr.v[before].clone());
            }
        }
        if produced.is_empty() {
            break;
        }
        current = produced;
    }
    Err(FemError::EigenFailure(format!(
        "{j} eigenpairs not converged with a {}-dimensional subspace (worst residual {worst:e})",
        kr.dim()
    )))
}

/// Leading Dirichlet-Laplacian eigenpairs as fields on a mesh.
#[derive(Clone, Debug)]
pub struct EigenBasis {
    mesh: Arc<Mesh>,
    eigenvalues: Vec<f64>,
    functions: Vec<ScalarField>,
    mass: Arc<SparseSymMatrix>,
}

impl EigenBasis {
    /// First `j` eigenpairs of `−Δ` with zero boundary values.
    pub fn dirichlet_laplacian(mesh: &Arc<Mesh>, j: usize) -> Result<Self, FemError> {
        Self::with_options(mesh, j, &EigenOptions::default())
    }

    pub fn with_options(mesh: &Arc<Mesh>, j: usize, opts: &EigenOptions) -> Result<Self, FemError> {
        let k = assemble_stiffness(mesh, &ScalarField::constant(mesh, 1.0))?;
        let m = assemble_mass(mesh);
        let (values, vectors) = solve_eigenpairs(&k, &m, j, opts)?;
        let dofs = DofMap::new(mesh);
        let functions = vectors
            .iter()
            .map(|v| ScalarField::new(Arc::clone(mesh), dofs.extend(v)))
            .collect::<Result<_, _>>()?;
        Self::from_parts(mesh, values, functions)
    }

    pub fn from_parts(mesh: &Arc<Mesh>, eigenvalues: Vec<f64>, functions: Vec<ScalarField>) -> Result<Self, FemError> {
        if eigenvalues.len() != functions.len() {
            return Err(FemError::DimensionMismatch {
                expected: eigenvalues.len(),
                got: functions.len(),
            });
        }
        if functions.iter().any(|f| !same_mesh(f.mesh(), mesh)) {
            return Err(FemError::MeshMismatch);
        }
        Ok(Self {
            mesh: Arc::clone(mesh),
            eigenvalues,
            functions,
            mass: Arc::new(assemble_mass_full(mesh)),
        })
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn mesh(&self) -> &Arc<Mesh> {
        &self.mesh
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn eigenfunctions(&self) -> &[ScalarField] {
        &self.functions
    }

    pub fn eigenfunction(&self, j: usize) -> &ScalarField {
        &self.functions[j]
    }

    /// The first `j` pairs.
    pub fn truncated(&self, j: usize) -> Result<Self, FemError> {
        if j > self.len() {
            return Err(FemError::InvalidArgument(format!(
                "cannot truncate a basis of {} functions to {j}",
                self.len()
            )));
        }
        Ok(Self {
            mesh: Arc::clone(&self.mesh),
            eigenvalues: self.eigenvalues[..j].to_vec(),
            functions: self.functions[..j].to_vec(),
            mass: Arc::clone(&self.mass),
        })
    }

    /// `⟨field, e_j⟩` for every basis function.
    pub fn project(&self, field: &ScalarField) -> Result<Vec<f64>, FemError> {
        if !same_mesh(field.mesh(), &self.mesh) {
            return Err(FemError::MeshMismatch);
        }
        let mf = self.mass.mul_vec(field.values());
        Ok(self.functions.iter().map(|e| dot(e.values(), &mf)).collect())
    }

    /// `Σ_j coeffs_j e_j`; `coeffs` may be shorter than the basis.
    pub fn reconstruct(&self, coeffs: &[f64]) -> Result<ScalarField, FemError> {
        if coeffs.len() > self.len() {
            return Err(FemError::DimensionMismatch {
                expected: self.len(),
                got: coeffs.len(),
            });
        }
        let mut values = vec![0.0; self.mesh.num_vertices()];
        for (c, e) in coeffs.iter().zip(&self.functions) {
            axpy(*c, e.values(), &mut values);
        }
        ScalarField::new(Arc::clone(&self.mesh), values)
    }

    /// Largest `|⟨e_i, e_j⟩ − δ_ij|`.
    pub fn orthonormality_defect(&self) -> f64 {
        let mut worst = 0.0_f64;
        for (i, a) in self.functions.iter().enumerate() {
            for (j, b) in self.functions.iter().enumerate().skip(i) {
                let g = l2_inner(a, b).expect("same mesh");
                worst = worst.max((g - if i == j { 1.0 } else { 0.0 }).abs());
            }
        }
        worst
    }

    /// Plain-text dump: a header, the eigenvalues, then nodal values, one per line.
    pub fn to_text(&self) -> String {
        let mut s = format!("eigenbasis {} vertices {}\n", self.len(), self.mesh.num_vertices());
        for l in &self.eigenvalues {
            writeln!(s, "{l:?}").expect("write to string");
        }
        for f in &self.functions {
            for x in f.values() {
                writeln!(s, "{x:?}").expect("write to string");
            }
        }
        s
    }

    pub fn from_text(mesh: &Arc<Mesh>, text: &str) -> Result<Self, FemError> {
        let mut lines = text.lines();
        let header: Vec<&str> = lines
            .next()
            .ok_or_else(|| FemError::Parse("empty input".into()))?
            .split_whitespace()
            .collect();
        let (j, nv) = match header.as_slice() {
            ["eigenbasis", j, "vertices", nv] => (
                j.parse::<usize>().map_err(|e| FemError::Parse(e.to_string()))?,
                nv.parse::<usize>().map_err(|e| FemError::Parse(e.to_string()))?,
            ),
            _ => return Err(FemError::Parse("bad header".into())),
        };
        if nv != mesh.num_vertices() {
            return Err(FemError::MeshMismatch);
        }
        let mut next = || -> Result<f64, FemError> {
            lines
                .next()
                .ok_or_else(|| FemError::Parse("truncated input".into()))?
                .trim()
                .parse::<f64>()
                .map_err(|e| FemError::Parse(e.to_string()))
        };
        let values = (0..j).map(|_| next()).collect::<Result<Vec<_>, _>>()?;
        let mut functions = Vec::with_capacity(j);
        for _ in 0..j {
            let nodal = (0..nv).map(|_| next()).collect::<Result<Vec<_>, _>>()?;
            functions.push(ScalarField::new(Arc::clone(mesh), nodal)?);
        }
        Self::from_parts(mesh, values, functions)
    }
}

/// Hex SHA-256 of the mesh text, the conductivity's nodal bits and `j`.
pub fn basis_cache_key(mesh: &Mesh, c: &ScalarField, j: usize) -> String {
    let mut h = Sha256::new();
    h.update(mesh.to_text().as_bytes());
    for x in c.values() {
        h.update(x.to_bits().to_le_bytes());
    }
    h.update((j as u64).to_le_bytes());
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}
