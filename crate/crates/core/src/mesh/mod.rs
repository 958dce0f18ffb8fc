//! Domains, triangular meshes and observation design grids.

mod delaunay;
mod design;
mod domain;
mod generate;

use std::collections::HashMap;
use std::fmt::Write as _;

use thiserror::Error;

pub use design::{design_grid, DesignGrid};
pub use domain::{BoundaryDistance, DomainSpec};
pub use generate::generate_mesh;

/// A point in the plane.
pub type Point = [f64; 2];

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("invalid domain: {0}")]
    InvalidDomain(String),
    #[error("mesh generation failed: {0}")]
    MeshFailure(String),
    #[error("no lattice point falls inside the domain")]
    EmptyGrid,
    #[error("invalid mesh: {0}")]
    InvalidMesh(String),
    #[error("malformed mesh text at line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

/// Conforming triangulation with boundary-vertex flags.
///
/// Triangles are stored counter-clockwise (positive signed area).
#[derive(Clone, Debug, PartialEq)]
pub struct Mesh {
    vertices: Vec<Point>,
    triangles: Vec<[usize; 3]>,
    boundary: Vec<bool>,
    h: f64,
}

impl Mesh {
    /// Builds a mesh and checks orientation and conformity.
    pub fn new(
        vertices: Vec<Point>,
        triangles: Vec<[usize; 3]>,
        boundary: Vec<bool>,
        h: f64,
    ) -> Result<Self, MeshError> {
        let mesh = Self {
            vertices,
            triangles,
            boundary,
            h,
        };
        mesh.check()?;
        Ok(mesh)
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn boundary_flags(&self) -> &[bool] {
        &self.boundary
    }

    pub fn is_boundary(&self, v: usize) -> bool {
        self.boundary[v]
    }

    /// Target edge length the mesh was generated with.
    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn triangle_points(&self, t: usize) -> [Point; 3] {
        let [a, b, c] = self.triangles[t];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    pub fn signed_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangle_points(t);
        0.5 * delaunay::orient(a, b, c)
    }

    pub fn total_area(&self) -> f64 {
        (0..self.triangles.len()).map(|t| self.signed_area(t)).sum()
    }

    /// All undirected edges with their multiplicity.
    pub fn edges(&self) -> HashMap<(usize, usize), usize> {
        let mut map = HashMap::new();
        for tri in &self.triangles {
            for k in 0..3 {
                let (a, b) = (tri[k], tri[(k + 1) % 3]);
                *map.entry((a.min(b), a.max(b))).or_insert(0) += 1;
            }
        }
        map
    }

    /// Smallest interior angle over all triangles, in degrees.
    pub fn min_angle_degrees(&self) -> f64 {
        let mut min = f64::INFINITY;
        for t in 0..self.triangles.len() {
            let p = self.triangle_points(t);
            for k in 0..3 {
                let (a, b, c) = (p[k], p[(k + 1) % 3], p[(k + 2) % 3]);
                let u = [b[0] - a[0], b[1] - a[1]];
                let v = [c[0] - a[0], c[1] - a[1]];
                let cos = (u[0] * v[0] + u[1] * v[1]) / (u[0].hypot(u[1]) * v[0].hypot(v[1]));
                min = min.min(cos.clamp(-1.0, 1.0).acos().to_degrees());
            }
        }
        min
    }

    fn check(&self) -> Result<(), MeshError> {
        let nv = self.vertices.len();
        if self.boundary.len() != nv {
            return Err(MeshError::InvalidMesh(format!(
                "{} boundary flags for {} vertices",
                self.boundary.len(),
                nv
            )));
        }
        if self.triangles.is_empty() {
            return Err(MeshError::InvalidMesh("mesh has no triangles".into()));
        }
        for (t, tri) in self.triangles.iter().enumerate() {
            if tri.iter().any(|&v| v >= nv) {
                return Err(MeshError::InvalidMesh(format!(
                    "triangle {t} references a missing vertex"
                )));
            }
            if self.signed_area(t) <= 0.0 {
                return Err(MeshError::InvalidMesh(format!(
                    "triangle {t} is not positively oriented"
                )));
            }
        }
        for (&(a, b), &count) in &self.edges() {
            if count > 2 {
                return Err(MeshError::InvalidMesh(format!(
                    "edge ({a},{b}) is shared by {count} triangles"
                )));
            }
            if count == 1 && !(self.boundary[a] && self.boundary[b]) {
                return Err(MeshError::InvalidMesh(format!(
                    "edge ({a},{b}) lies on the mesh boundary but its endpoints are not flagged"
                )));
            }
        }
        Ok(())
    }

    /// Plain-text serialisation: a `vertices <n> triangles <m>` header, one
    /// `x y boundary_flag` line per vertex, then one `i j k` line per triangle.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "vertices {} triangles {}", self.vertices.len(), self.triangles.len());
        for (p, &b) in self.vertices.iter().zip(&self.boundary) {
            let _ = writeln!(s, "{:?} {:?} {}", p[0], p[1], u8::from(b));
        }
        for t in &self.triangles {
            let _ = writeln!(s, "{} {} {}", t[0], t[1], t[2]);
        }
        s
    }

    /// Parses [`to_text`](Self::to_text) output. The target edge length is
    /// not stored, so it is estimated as the mean edge length.
    pub fn from_text(text: &str) -> Result<Self, MeshError> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let perr = |line: usize, msg: &str| MeshError::Parse {
            line,
            msg: msg.to_string(),
        };
        let (hl, header) = lines.next().ok_or_else(|| perr(1, "empty input"))?;
        let tok: Vec<&str> = header.split_whitespace().collect();
        if tok.len() != 4 || tok[0] != "vertices" || tok[2] != "triangles" {
            return Err(perr(hl, "expected `vertices <count> triangles <count>`"));
        }
        let nv: usize = tok[1].parse().map_err(|_| perr(hl, "bad vertex count"))?;
        let nt: usize = tok[3].parse().map_err(|_| perr(hl, "bad triangle count"))?;

        let mut vertices = Vec::with_capacity(nv);
        let mut boundary = Vec::with_capacity(nv);
        for _ in 0..nv {
            let (ln, l) = lines.next().ok_or_else(|| perr(hl, "missing vertex lines"))?;
            let f: Vec<&str> = l.split_whitespace().collect();
            if f.len() != 3 {
                return Err(perr(ln, "expected `x y boundary_flag`"));
            }
            let x: f64 = f[0].parse().map_err(|_| perr(ln, "bad x"))?;
            let y: f64 = f[1].parse().map_err(|_| perr(ln, "bad y"))?;
            let b = match f[2] {
                "0" => false,
                "1" => true,
                _ => return Err(perr(ln, "boundary flag must be 0 or 1")),
            };
            vertices.push([x, y]);
            boundary.push(b);
        }
        let mut triangles = Vec::with_capacity(nt);
        for _ in 0..nt {
            let (ln, l) = lines.next().ok_or_else(|| perr(hl, "missing triangle lines"))?;
            let idx: Result<Vec<usize>, _> = l.split_whitespace().map(str::parse).collect();
            match idx {
                Ok(v) if v.len() == 3 => triangles.push([v[0], v[1], v[2]]),
                _ => return Err(perr(ln, "expected `i j k`")),
            }
        }
        if let Some((ln, _)) = lines.next() {
            return Err(perr(ln, "trailing content"));
        }
        let mut mesh = Self::new(vertices, triangles, boundary, 0.0)?;
        let edges = mesh.edges();
        let total: f64 = edges
            .keys()
            .map(|&(a, b)| domain::dist(mesh.vertices[a], mesh.vertices[b]))
            .sum();
        mesh.h = total / edges.len() as f64;
        Ok(mesh)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_round_trip() {
        let mesh = generate_mesh(&DomainSpec::UnitSquare, 0.25).unwrap();
        let back = Mesh::from_text(&mesh.to_text()).unwrap();
        assert_eq!(back.vertices(), mesh.vertices());
        assert_eq!(back.triangles(), mesh.triangles());
        assert_eq!(back.boundary_flags(), mesh.boundary_flags());
    }

    #[test]
    fn rejects_inverted_triangle() {
        let v = vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];
        assert!(Mesh::new(v.clone(), vec![[0, 1, 2]], vec![true; 3], 1.0).is_ok());
        assert!(Mesh::new(v, vec![[0, 2, 1]], vec![true; 3], 1.0).is_err());
    }

    #[test]
    fn rejects_unflagged_hull_edge() {
        let v = vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];
        assert!(Mesh::new(v, vec![[0, 1, 2]], vec![true, true, false], 1.0).is_err());
    }

    #[test]
    fn parse_errors_name_the_line() {
        let err = Mesh::from_text("vertices 1 triangles 0\n0 0 2\n").unwrap_err();
        assert!(matches!(err, MeshError::Parse { line: 2, .. }));
        assert!(Mesh::from_text("nodes 3\n").is_err());
    }
}
