use crate::mesh::Mesh;

use super::{FemError, ScalarField, SparseSymMatrix};

/// Numbering of the interior (non-Dirichlet) vertices.
#[derive(Clone, Debug, PartialEq)]
pub struct DofMap {
    interior: Vec<usize>,
    dof_of: Vec<Option<usize>>,
}

impl DofMap {
    pub fn new(mesh: &Mesh) -> Self {
        let mut interior = Vec::new();
        let dof_of = (0..mesh.num_vertices())
            .map(|v| {
                (!mesh.is_boundary(v)).then(|| {
                    interior.push(v);
                    interior.len() - 1
                })
            })
            .collect();
        Self { interior, dof_of }
    }

    pub fn len(&self) -> usize {
        self.interior.len()
    }

    pub fn is_empty(&self) -> bool {
        self.interior.is_empty()
    }

    /// Vertex id of each degree of freedom.
    pub fn interior(&self) -> &[usize] {
        &self.interior
    }

    pub fn dof(&self, vertex: usize) -> Option<usize> {
        self.dof_of[vertex]
    }

    /// Restricts nodal values to the interior degrees of freedom.
    pub fn restrict(&self, nodal: &[f64]) -> Vec<f64> {
        self.interior.iter().map(|&v| nodal[v]).collect()
    }

    /// Extends interior values by zero on the boundary.
    pub fn extend(&self, dofs: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dof_of.len()];
        for (&v, &x) in self.interior.iter().zip(dofs) {
            out[v] = x;
        }
        out
    }
}

/// Gradients of the three barycentric hat functions, times twice the area.
fn scaled_gradients(p: [[f64; 2]; 3]) -> [[f64; 2]; 3] {
    let mut g = [[0.0; 2]; 3];
    for k in 0..3 {
        let a = p[(k + 1) % 3];
        let b = p[(k + 2) % 3];
        g[k] = [a[1] - b[1], b[0] - a[0]];
    }
    g
}

fn element_stiffness(mesh: &Mesh, t: usize, c: &[f64]) -> [[f64; 3]; 3] {
    let area = mesh.signed_area(t);
    let g = scaled_gradients(mesh.triangle_points(t));
    let tri = mesh.triangles()[t];
    // exact for the linear interpolant of c since gradients are constant
    let cbar = (c[tri[0]] + c[tri[1]] + c[tri[2]]) / 3.0;
    let mut k = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            k[i][j] = cbar * (g[i][0] * g[j][0] + g[i][1] * g[j][1]) / (4.0 * area);
        }
    }
    k
}

fn element_mass(mesh: &Mesh, t: usize) -> [[f64; 3]; 3] {
    let a = mesh.signed_area(t) / 12.0;
    [[2.0 * a, a, a], [a, 2.0 * a, a], [a, a, 2.0 * a]]
}

fn assemble(mesh: &Mesh, dofs: Option<&DofMap>, element: impl Fn(usize) -> [[f64; 3]; 3]) -> SparseSymMatrix {
    let dim = dofs.map_or(mesh.num_vertices(), DofMap::len);
    let index = |v: usize| match dofs {
        Some(d) => d.dof(v),
        None => Some(v),
    };
    let mut triplets = Vec::with_capacity(9 * mesh.num_triangles());
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let e = element(t);
        for i in 0..3 {
            let Some(gi) = index(tri[i]) else { continue };
            for j in 0..3 {
                let Some(gj) = index(tri[j]) else { continue };
                triplets.push((gi, gj, e[i][j]));
            }
        }
    }
    SparseSymMatrix::from_triplets(dim, triplets)
}

fn check_coefficient(c: &ScalarField) -> Result<(), FemError> {
    for (vertex, &value) in c.values().iter().enumerate() {
        if !(value > 0.0) {
            return Err(FemError::NonPositiveCoefficient { vertex, value });
        }
    }
    Ok(())
}

/// `K_ij = ∫ c ∇φ_i·∇φ_j` over interior vertices (boundary rows and columns eliminated).
pub fn assemble_stiffness(mesh: &Mesh, c: &ScalarField) -> Result<SparseSymMatrix, FemError> {
    check_coefficient(c)?;
    let dofs = DofMap::new(mesh);
    Ok(assemble(mesh, Some(&dofs), |t| element_stiffness(mesh, t, c.values())))
}

/// Stiffness matrix over all vertices, without Dirichlet elimination.
pub fn assemble_stiffness_full(mesh: &Mesh, c: &ScalarField) -> Result<SparseSymMatrix, FemError> {
    check_coefficient(c)?;
    Ok(assemble(mesh, None, |t| element_stiffness(mesh, t, c.values())))
}

/// Consistent mass matrix `M_ij = ∫ φ_i φ_j` over interior vertices.
pub fn assemble_mass(mesh: &Mesh) -> SparseSymMatrix {
    let dofs = DofMap::new(mesh);
    assemble(mesh, Some(&dofs), |t| element_mass(mesh, t))
}

/// Consistent mass matrix over all vertices; its entries sum to the mesh area.
pub fn assemble_mass_full(mesh: &Mesh) -> SparseSymMatrix {
    assemble(mesh, None, |t| element_mass(mesh, t))
}
