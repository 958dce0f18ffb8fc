use serde::{Deserialize, Serialize};

use super::domain::BoundaryDistance;
use super::generate::lattice;
use super::{DomainSpec, MeshError, Point};

/// Observation locations `x_1, …, x_n`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DesignGrid {
    points: Vec<Point>,
    spacing: f64,
}

impl DesignGrid {
    /// Wraps an explicit point list; `spacing` is informational.
    pub fn from_points(points: Vec<Point>, spacing: f64) -> Self {
        Self { points, spacing }
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn n(&self) -> usize {
        self.points.len()
    }

    /// Lattice spacing the grid was built with.
    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    /// First `n` points, for nested designs.
    pub fn prefix(&self, n: usize) -> DesignGrid {
        DesignGrid {
            points: self.points[..n.min(self.points.len())].to_vec(),
            spacing: self.spacing,
        }
    }
}

/// Lattice anchorings tried by [`design_grid`]: a lattice point at the domain
/// centre, or the centre midway between two lattice points. On centrally
/// symmetric domains these give odd and even counts respectively.
const ANCHORS: [(f64, f64); 2] = [(0.0, 0.0), (0.25, 0.5)];

/// Interior lattice points for spacing `s`, discarding points closer than `s/2` to the boundary.
fn lattice_interior(spec: &DomainSpec, dist: &BoundaryDistance, s: f64, anchor: (f64, f64)) -> Vec<Point> {
    lattice(spec, s, anchor.0, anchor.1)
        .into_iter()
        .filter(|&p| spec.contains(p) && dist.distance(p) >= 0.5 * s)
        .collect()
}

/// Deterministic equilateral-lattice design with about `n_target` interior points.
///
/// The spacing is scanned over a fixed geometric grid around the value implied
/// by the domain area, for each of two lattice anchorings; the combination
/// whose point count is nearest to `n_target` wins (first found on ties).
pub fn design_grid(spec: &DomainSpec, n_target: usize) -> Result<DesignGrid, MeshError> {
    spec.validate()?;
    if n_target == 0 {
        return Err(MeshError::EmptyGrid);
    }
    let dist = BoundaryDistance::new(spec);
    let s0 = (2.0 * spec.area() / (3f64.sqrt() * n_target as f64)).sqrt();
    const STEPS: usize = 400;
    let (lo, hi) = (0.5 * s0, 2.5 * s0);
    let mut best: Option<(usize, f64, (f64, f64))> = None;
    'scan: for k in 0..=STEPS {
        let s = lo * (hi / lo).powf(k as f64 / STEPS as f64);
        if s >= spec.diameter() {
            break;
        }
        for anchor in ANCHORS {
            let count = lattice_interior(spec, &dist, s, anchor).len();
            if count == 0 {
                continue;
            }
            let gap = count.abs_diff(n_target);
            if best.is_none_or(|(g, _, _)| gap < g) {
                best = Some((gap, s, anchor));
            }
            if gap == 0 {
                break 'scan;
            }
        }
    }
    let (_, spacing, anchor) = best.ok_or(MeshError::EmptyGrid)?;
    let points = lattice_interior(spec, &dist, spacing, anchor);
    if points.is_empty() {
        return Err(MeshError::EmptyGrid);
    }
    Ok(DesignGrid { points, spacing })
}
