use crate::mesh::{Mesh, Point};

use super::FemError;

/// Uniform bucket grid over triangle bounding boxes.
pub struct PointLocator<'a> {
    mesh: &'a Mesh,
    origin: Point,
    cell: f64,
    nx: usize,
    ny: usize,
    buckets: Vec<Vec<usize>>,
}

const BARY_TOL: f64 = 1e-10;

impl<'a> PointLocator<'a> {
    pub fn new(mesh: &'a Mesh) -> Self {
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for p in mesh.vertices() {
            for k in 0..2 {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
        let cell = (((hi[0] - lo[0]) * (hi[1] - lo[1])) / mesh.num_triangles() as f64)
            .sqrt()
            .max(1e-12)
            * 2.0;
        let nx = ((hi[0] - lo[0]) / cell).ceil() as usize + 1;
        let ny = ((hi[1] - lo[1]) / cell).ceil() as usize + 1;
        let mut buckets = vec![Vec::new(); nx * ny];
        for t in 0..mesh.num_triangles() {
            let p = mesh.triangle_points(t);
            let (mut a, mut b) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
            for q in p {
                for k in 0..2 {
                    a[k] = a[k].min(q[k]);
                    b[k] = b[k].max(q[k]);
                }
            }
            let (i0, j0) = Self::cell_of(lo, cell, a, nx, ny);
            let (i1, j1) = Self::cell_of(lo, cell, b, nx, ny);
            for j in j0..=j1 {
                for i in i0..=i1 {
                    buckets[j * nx + i].push(t);
                }
            }
        }
        Self {
            mesh,
            origin: lo,
            cell,
            nx,
            ny,
            buckets,
        }
    }

    fn cell_of(origin: Point, cell: f64, p: Point, nx: usize, ny: usize) -> (usize, usize) {
        let i = ((p[0] - origin[0]) / cell).floor().max(0.0) as usize;
        let j = ((p[1] - origin[1]) / cell).floor().max(0.0) as usize;
        (i.min(nx - 1), j.min(ny - 1))
    }

    /// Containing triangle and barycentric coordinates of `p`.
    pub fn locate(&self, p: Point) -> Option<(usize, [f64; 3])> {
        let (i, j) = Self::cell_of(self.origin, self.cell, p, self.nx, self.ny);
        self.buckets[j * self.nx + i].iter().find_map(|&t| {
            let bary = barycentric(self.mesh.triangle_points(t), p);
            bary.iter().all(|&w| w >= -BARY_TOL).then_some((t, bary))
        })
    }

    /// Closest point of the mesh to `p`, as triangle and clamped barycentric coordinates.
    pub fn nearest(&self, p: Point) -> (usize, [f64; 3]) {
        if let Some(hit) = self.locate(p) {
            return hit;
        }
        let mut best = (f64::INFINITY, 0, [1.0, 0.0, 0.0]);
        for t in 0..self.mesh.num_triangles() {
            let q = self.mesh.triangle_points(t);
            for k in 0..3 {
                let (a, b) = (q[(k + 1) % 3], q[(k + 2) % 3]);
                let d = [b[0] - a[0], b[1] - a[1]];
                let s = (((p[0] - a[0]) * d[0] + (p[1] - a[1]) * d[1]) / (d[0] * d[0] + d[1] * d[1])).clamp(0.0, 1.0);
                let c = [a[0] + s * d[0], a[1] + s * d[1]];
                let dist = (p[0] - c[0]).hypot(p[1] - c[1]);
                if dist < best.0 {
                    let mut w = [0.0; 3];
                    w[(k + 1) % 3] = 1.0 - s;
                    w[(k + 2) % 3] = s;
                    best = (dist, t, w);
                }
            }
        }
        (best.1, best.2)
    }
}

fn barycentric(p: [Point; 3], x: Point) -> [f64; 3] {
    let [a, b, c] = p;
    let det = (b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]);
    let l1 = ((x[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (x[1] - a[1])) / det;
    let l2 = ((b[0] - a[0]) * (x[1] - a[1]) - (x[0] - a[0]) * (b[1] - a[1])) / det;
    [1.0 - l1 - l2, l1, l2]
}

/// Precomputed interpolation weights for a fixed set of points.
#[derive(Clone, Debug)]
pub struct Interpolator {
    entries: Vec<[(usize, f64); 3]>,
}

impl Interpolator {
    pub fn new(mesh: &Mesh, points: &[Point]) -> Result<Self, FemError> {
        let loc = PointLocator::new(mesh);
        let entries = points
            .iter()
            .map(|&p| {
                let (t, w) = loc.locate(p).ok_or(FemError::PointOutsideMesh(p))?;
                Ok(Self::weights(mesh, t, w))
            })
            .collect::<Result<_, FemError>>()?;
        Ok(Self { entries })
    }

    pub fn new_clamped(mesh: &Mesh, points: &[Point]) -> Self {
        let loc = PointLocator::new(mesh);
        let entries = points
            .iter()
            .map(|&p| {
                let (t, w) = loc.nearest(p);
                Self::weights(mesh, t, w)
            })
            .collect();
        Self { entries }
    }

    fn weights(mesh: &Mesh, t: usize, w: [f64; 3]) -> [(usize, f64); 3] {
        let tri = mesh.triangles()[t];
        [(tri[0], w[0]), (tri[1], w[1]), (tri[2], w[2])]
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn apply(&self, nodal: &[f64]) -> Vec<f64> {
        self.entries
            .iter()
            .map(|e| e.iter().map(|&(v, w)| w * nodal[v]).sum())
            .collect()
    }
}
