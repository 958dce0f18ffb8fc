//! Computational domains described by a closed parametric boundary.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use super::{MeshError, Point};

/// Shape of the spatial domain.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DomainSpec {
    /// Ellipse centred at the origin with semi-axes `a` (along the rotated
    /// x-axis) and `b`, rotated counter-clockwise by `theta`.
    RotatedEllipse { a: f64, b: f64, theta: f64 },
    /// The open unit square (0,1)².
    UnitSquare,
    /// The open unit disk centred at the origin.
    UnitDisk,
    /// Simple closed polygon; the closing edge is implicit.
    Polygon { vertices: Vec<Point> },
}

impl DomainSpec {
    /// The ellipse used in the numerical study: semi-axes 1 and 3/4, rotated by π/6.
    pub fn study_ellipse() -> Self {
        DomainSpec::RotatedEllipse {
            a: 1.0,
            b: 0.75,
            theta: PI / 6.0,
        }
    }

    pub fn validate(&self) -> Result<(), MeshError> {
        match self {
            DomainSpec::RotatedEllipse { a, b, theta } => {
                if !(a.is_finite() && *a > 0.0 && b.is_finite() && *b > 0.0) {
                    return Err(MeshError::InvalidDomain(format!(
                        "ellipse semi-axes must be positive, got a={a}, b={b}"
                    )));
                }
                if !(0.0..TAU).contains(theta) {
                    return Err(MeshError::InvalidDomain(format!(
                        "rotation angle must lie in [0, 2π), got {theta}"
                    )));
                }
                Ok(())
            }
            DomainSpec::UnitSquare | DomainSpec::UnitDisk => Ok(()),
            DomainSpec::Polygon { vertices } => validate_polygon(vertices),
        }
    }

    /// Point on the boundary at parameter `t ∈ [0, 2π)`.
    ///
    /// Ellipses use the angular parameter; polygons (including the unit
    /// square) are traversed at constant speed starting from the first vertex.
    pub fn boundary_point(&self, t: f64) -> Point {
        match self {
            DomainSpec::RotatedEllipse { a, b, theta } => ellipse_point(*a, *b, *theta, t),
            DomainSpec::UnitDisk => [t.cos(), t.sin()],
            DomainSpec::UnitSquare => polygon_point(&UNIT_SQUARE, t),
            DomainSpec::Polygon { vertices } => polygon_point(&ccw(vertices), t),
        }
    }

    /// True iff `p` lies strictly inside the domain.
    pub fn contains(&self, p: Point) -> bool {
        match self {
            DomainSpec::RotatedEllipse { a, b, theta } => {
                let [u, v] = rotate(p, -theta);
                (u / a).powi(2) + (v / b).powi(2) < 1.0
            }
            DomainSpec::UnitDisk => p[0] * p[0] + p[1] * p[1] < 1.0,
            DomainSpec::UnitSquare => p[0] > 0.0 && p[0] < 1.0 && p[1] > 0.0 && p[1] < 1.0,
            DomainSpec::Polygon { vertices } => {
                let tol = 1e-14 * self.diameter();
                point_in_polygon(vertices, p) && polyline_distance(vertices, p) > tol
            }
        }
    }

    /// Exact area of the domain.
    pub fn area(&self) -> f64 {
        match self {
            DomainSpec::RotatedEllipse { a, b, .. } => PI * a * b,
            DomainSpec::UnitDisk => PI,
            DomainSpec::UnitSquare => 1.0,
            DomainSpec::Polygon { vertices } => signed_area(vertices).abs(),
        }
    }

    pub fn diameter(&self) -> f64 {
        match self {
            DomainSpec::RotatedEllipse { a, b, .. } => 2.0 * a.max(*b),
            DomainSpec::UnitDisk => 2.0,
            DomainSpec::UnitSquare => 2f64.sqrt(),
            DomainSpec::Polygon { vertices } => {
                let mut d: f64 = 0.0;
                for p in vertices {
                    for q in vertices {
                        d = d.max(dist(*p, *q));
                    }
                }
                d
            }
        }
    }

    /// Axis-aligned bounding box `(min, max)`.
    pub fn bounding_box(&self) -> (Point, Point) {
        match self {
            DomainSpec::RotatedEllipse { a, b, theta } => {
                let (s, c) = theta.sin_cos();
                let hx = ((a * c).powi(2) + (b * s).powi(2)).sqrt();
                let hy = ((a * s).powi(2) + (b * c).powi(2)).sqrt();
                ([-hx, -hy], [hx, hy])
            }
            DomainSpec::UnitDisk => ([-1.0, -1.0], [1.0, 1.0]),
            DomainSpec::UnitSquare => ([0.0, 0.0], [1.0, 1.0]),
            DomainSpec::Polygon { vertices } => {
                let mut lo = [f64::INFINITY; 2];
                let mut hi = [f64::NEG_INFINITY; 2];
                for p in vertices {
                    for k in 0..2 {
                        lo[k] = lo[k].min(p[k]);
                        hi[k] = hi[k].max(p[k]);
                    }
                }
                (lo, hi)
            }
        }
    }

    /// Centre of the domain's principal axes.
    pub fn center(&self) -> Point {
        match self {
            DomainSpec::RotatedEllipse { .. } | DomainSpec::UnitDisk => [0.0, 0.0],
            _ => {
                let (lo, hi) = self.bounding_box();
                [0.5 * (lo[0] + hi[0]), 0.5 * (lo[1] + hi[1])]
            }
        }
    }

    /// Principal axes as `(start, end)` boundary-to-boundary chords through [`center`](Self::center).
    pub fn principal_axes(&self) -> [(Point, Point); 2] {
        match self {
            DomainSpec::RotatedEllipse { a, b, theta } => {
                let major = rotate([*a, 0.0], *theta);
                let minor = rotate([0.0, *b], *theta);
                [([-major[0], -major[1]], major), ([-minor[0], -minor[1]], minor)]
            }
            DomainSpec::UnitDisk => [([-1.0, 0.0], [1.0, 0.0]), ([0.0, -1.0], [0.0, 1.0])],
            _ => {
                let (lo, hi) = self.bounding_box();
                let c = self.center();
                [([lo[0], c[1]], [hi[0], c[1]]), ([c[0], lo[1]], [c[0], hi[1]])]
            }
        }
    }

    /// Ellipse parameters for curved kinds.
    fn ellipse_params(&self) -> Option<(f64, f64, f64)> {
        match self {
            DomainSpec::RotatedEllipse { a, b, theta } => Some((*a, *b, *theta)),
            DomainSpec::UnitDisk => Some((1.0, 1.0, 0.0)),
            _ => None,
        }
    }

    /// Maps a point near a curved boundary onto the boundary along the ray
    /// from the centre. Identity for polygonal kinds.
    pub(crate) fn snap_to_boundary(&self, p: Point) -> Point {
        match self.ellipse_params() {
            Some((a, b, theta)) => {
                let [u, v] = rotate(p, -theta);
                let t = (v / b).atan2(u / a);
                ellipse_point(a, b, theta, t.rem_euclid(TAU))
            }
            None => p,
        }
    }

    /// Closed boundary polygon, counter-clockwise, with consecutive vertices at
    /// most `spacing` apart. Polygon corners are always included.
    pub fn boundary_polyline(&self, spacing: f64) -> Vec<Point> {
        match self.ellipse_params() {
            Some((a, b, theta)) => {
                let params = equal_arclength_params(a, b, spacing);
                params.into_iter().map(|t| ellipse_point(a, b, theta, t)).collect()
            }
            None => {
                let corners = self.corners();
                let mut out = Vec::new();
                for i in 0..corners.len() {
                    let p = corners[i];
                    let q = corners[(i + 1) % corners.len()];
                    let k = (dist(p, q) / spacing).ceil().max(1.0) as usize;
                    for s in 0..k {
                        let w = s as f64 / k as f64;
                        out.push([p[0] + w * (q[0] - p[0]), p[1] + w * (q[1] - p[1])]);
                    }
                }
                out
            }
        }
    }

    fn corners(&self) -> Vec<Point> {
        match self {
            DomainSpec::UnitSquare => UNIT_SQUARE.to_vec(),
            DomainSpec::Polygon { vertices } => ccw(vertices),
            _ => Vec::new(),
        }
    }

    /// Euclidean distance from `p` to the boundary curve.
    pub fn distance_to_boundary(&self, p: Point) -> f64 {
        BoundaryDistance::new(self).distance(p)
    }
}

/// Reusable boundary-distance evaluator.
pub enum BoundaryDistance {
    Ellipse { a: f64, b: f64, theta: f64 },
    Polyline(Vec<Point>),
}

impl BoundaryDistance {
    pub fn new(spec: &DomainSpec) -> Self {
        match spec.ellipse_params() {
            Some((a, b, theta)) => BoundaryDistance::Ellipse { a, b, theta },
            None => BoundaryDistance::Polyline(spec.corners()),
        }
    }

    pub fn distance(&self, p: Point) -> f64 {
        match self {
            BoundaryDistance::Ellipse { a, b, theta } => {
                let [u, v] = rotate(p, -theta);
                if a >= b {
                    ellipse_distance(*a, *b, u.abs(), v.abs())
                } else {
                    ellipse_distance(*b, *a, v.abs(), u.abs())
                }
            }
            BoundaryDistance::Polyline(poly) => polyline_distance(poly, p),
        }
    }
}

/// Distance from `(y0, y1)` (first quadrant) to the axis-aligned ellipse with
/// semi-axes `e0 >= e1`, by bisection on the Lagrange-multiplier equation
/// (Eberly, "Distance from a point to an ellipse").
fn ellipse_distance(e0: f64, e1: f64, y0: f64, y1: f64) -> f64 {
    if y1 > 0.0 {
        if y0 > 0.0 {
            let z0 = y0 / e0;
            let z1 = y1 / e1;
            let g = z0 * z0 + z1 * z1 - 1.0;
            if g == 0.0 {
                return 0.0;
            }
            let r0 = (e0 / e1).powi(2);
            let n0 = r0 * z0;
            let mut s0 = z1 - 1.0;
            let mut s1 = if g < 0.0 { 0.0 } else { n0.hypot(z1) - 1.0 };
            let mut s = s0;
            for _ in 0..200 {
                s = 0.5 * (s0 + s1);
                if s == s0 || s == s1 {
                    break;
                }
                let ratio0 = n0 / (s + r0);
                let ratio1 = z1 / (s + 1.0);
                let gs = ratio0 * ratio0 + ratio1 * ratio1 - 1.0;
                if gs > 0.0 {
                    s0 = s;
                } else if gs < 0.0 {
                    s1 = s;
                } else {
                    break;
                }
            }
            let x0 = r0 * y0 / (s + r0);
            let x1 = y1 / (s + 1.0);
            (x0 - y0).hypot(x1 - y1)
        } else {
            (y1 - e1).abs()
        }
    } else {
        let numer0 = e0 * y0;
        let denom0 = e0 * e0 - e1 * e1;
        if numer0 < denom0 {
            let xde0 = numer0 / denom0;
            let x0 = e0 * xde0;
            let x1 = e1 * (1.0 - xde0 * xde0).max(0.0).sqrt();
            (x0 - y0).hypot(x1)
        } else {
            (y0 - e0).abs()
        }
    }
}

const UNIT_SQUARE: [Point; 4] = [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];

pub(crate) fn rotate(p: Point, angle: f64) -> Point {
    let (s, c) = angle.sin_cos();
    [c * p[0] - s * p[1], s * p[0] + c * p[1]]
}

fn ellipse_point(a: f64, b: f64, theta: f64, t: f64) -> Point {
    let (st, ct) = t.sin_cos();
    let (sr, cr) = theta.sin_cos();
    [a * ct * cr - b * st * sr, b * st * cr + a * ct * sr]
}

/// Parameters `t_k` splitting the ellipse into `N = ceil(L / spacing)` arcs of
/// equal length, starting at `t = 0`.
fn equal_arclength_params(a: f64, b: f64, spacing: f64) -> Vec<f64> {
    const TABLE: usize = 8192;
    let speed = |t: f64| ((a * t.sin()).powi(2) + (b * t.cos()).powi(2)).sqrt();
    // cumulative arc length by the trapezoid rule (spectrally accurate for periodic integrands)
    let dt = TAU / TABLE as f64;
    let mut cum = vec![0.0; TABLE + 1];
    for i in 0..TABLE {
        let t0 = i as f64 * dt;
        cum[i + 1] = cum[i] + 0.5 * dt * (speed(t0) + speed(t0 + dt));
    }
    let total = cum[TABLE];
    let n = ((total / spacing).ceil() as usize).max(3);
    let mut params = Vec::with_capacity(n);
    let mut idx = 0;
    for k in 0..n {
        let target = total * k as f64 / n as f64;
        while idx + 1 < TABLE && cum[idx + 1] < target {
            idx += 1;
        }
        let seg = cum[idx + 1] - cum[idx];
        let mut t = (idx as f64 + (target - cum[idx]) / seg) * dt;
        // Newton polish on s(t) = target
        for _ in 0..3 {
            let s = cum[idx] + arc_between(&speed, idx as f64 * dt, t);
            t -= (s - target) / speed(t);
        }
        params.push(t);
    }
    params
}

fn arc_between(speed: &impl Fn(f64) -> f64, t0: f64, t1: f64) -> f64 {
    // 5-point Gauss-Legendre on a short interval
    const X: [f64; 5] = [
        0.0,
        -0.538_469_310_105_683,
        0.538_469_310_105_683,
        -0.906_179_845_938_664,
        0.906_179_845_938_664,
    ];
    const W: [f64; 5] = [
        0.568_888_888_888_889,
        0.478_628_670_499_366,
        0.478_628_670_499_366,
        0.236_926_885_056_189,
        0.236_926_885_056_189,
    ];
    let mid = 0.5 * (t0 + t1);
    let half = 0.5 * (t1 - t0);
    X.iter()
        .zip(W.iter())
        .map(|(x, w)| w * speed(mid + half * x))
        .sum::<f64>()
        * half
}

fn polygon_point(vertices: &[Point], t: f64) -> Point {
    let n = vertices.len();
    let lengths: Vec<f64> = (0..n).map(|i| dist(vertices[i], vertices[(i + 1) % n])).collect();
    let total: f64 = lengths.iter().sum();
    let mut s = (t.rem_euclid(TAU) / TAU) * total;
    for i in 0..n {
        if s <= lengths[i] || i == n - 1 {
            let w = (s / lengths[i]).min(1.0);
            let p = vertices[i];
            let q = vertices[(i + 1) % n];
            return [p[0] + w * (q[0] - p[0]), p[1] + w * (q[1] - p[1])];
        }
        s -= lengths[i];
    }
    unreachable!("polygon has at least three vertices")
}

pub(crate) fn dist(p: Point, q: Point) -> f64 {
    (p[0] - q[0]).hypot(p[1] - q[1])
}

fn signed_area(vertices: &[Point]) -> f64 {
    let n = vertices.len();
    0.5 * (0..n)
        .map(|i| {
            let p = vertices[i];
            let q = vertices[(i + 1) % n];
            p[0] * q[1] - q[0] * p[1]
        })
        .sum::<f64>()
}

fn ccw(vertices: &[Point]) -> Vec<Point> {
    let mut v = vertices.to_vec();
    if signed_area(&v) < 0.0 {
        v.reverse();
    }
    v
}

fn point_in_polygon(vertices: &[Point], p: Point) -> bool {
    let n = vertices.len();
    let mut inside = false;
    let mut j = n - 1;
    for i in 0..n {
        let (a, b) = (vertices[i], vertices[j]);
        if (a[1] > p[1]) != (b[1] > p[1]) {
            let x = a[0] + (p[1] - a[1]) * (b[0] - a[0]) / (b[1] - a[1]);
            if p[0] < x {
                inside = !inside;
            }
        }
        j = i;
    }
    inside
}

pub(crate) fn segment_distance(p: Point, a: Point, b: Point) -> f64 {
    let d = [b[0] - a[0], b[1] - a[1]];
    let len2 = d[0] * d[0] + d[1] * d[1];
    let w = if len2 > 0.0 {
        (((p[0] - a[0]) * d[0] + (p[1] - a[1]) * d[1]) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    dist(p, [a[0] + w * d[0], a[1] + w * d[1]])
}

fn polyline_distance(closed: &[Point], p: Point) -> f64 {
    let n = closed.len();
    (0..n)
        .map(|i| segment_distance(p, closed[i], closed[(i + 1) % n]))
        .fold(f64::INFINITY, f64::min)
}

fn segments_cross(p1: Point, p2: Point, q1: Point, q2: Point) -> bool {
    let o = |a: Point, b: Point, c: Point| (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]);
    let d1 = o(q1, q2, p1);
    let d2 = o(q1, q2, p2);
    let d3 = o(p1, p2, q1);
    let d4 = o(p1, p2, q2);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0)) && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0)) {
        return true;
    }
    // touching / collinear overlap
    let on = |a: Point, b: Point, c: Point, d: f64| {
        d == 0.0 && c[0] >= a[0].min(b[0]) && c[0] <= a[0].max(b[0]) && c[1] >= a[1].min(b[1]) && c[1] <= a[1].max(b[1])
    };
    on(q1, q2, p1, d1) || on(q1, q2, p2, d2) || on(p1, p2, q1, d3) || on(p1, p2, q2, d4)
}

fn validate_polygon(vertices: &[Point]) -> Result<(), MeshError> {
    let n = vertices.len();
    if n < 3 {
        return Err(MeshError::InvalidDomain("polygon needs at least three vertices".into()));
    }
    if vertices.iter().any(|p| !(p[0].is_finite() && p[1].is_finite())) {
        return Err(MeshError::InvalidDomain("polygon vertex is not finite".into()));
    }
    if signed_area(vertices).abs() <= 0.0 {
        return Err(MeshError::InvalidDomain("polygon has zero area".into()));
    }
    for i in 0..n {
        let (p1, p2) = (vertices[i], vertices[(i + 1) % n]);
        if p1 == p2 {
            return Err(MeshError::InvalidDomain(format!("repeated vertex at index {i}")));
        }
        for j in (i + 1)..n {
            // skip edges sharing a vertex
            if j == i + 1 || (i == 0 && j == n - 1) {
                continue;
            }
            let (q1, q2) = (vertices[j], vertices[(j + 1) % n]);
            if segments_cross(p1, p2, q1, q2) {
                return Err(MeshError::InvalidDomain(format!("polygon edges {i} and {j} intersect")));
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn ellipse_boundary_at_zero() {
        let p = DomainSpec::study_ellipse().boundary_point(0.0);
        assert_abs_diff_eq!(p[0], 0.866_025_403_784_438_6, epsilon = 1e-12);
        assert_abs_diff_eq!(p[1], 0.5, epsilon = 1e-12);
    }

    #[test]
    fn axis_aligned_ellipse_top() {
        let spec = DomainSpec::RotatedEllipse {
            a: 1.0,
            b: 0.75,
            theta: 0.0,
        };
        let p = spec.boundary_point(PI / 2.0);
        assert_abs_diff_eq!(p[0], 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(p[1], 0.75, epsilon = 1e-15);
    }

    #[test]
    fn square_starts_at_origin() {
        assert_eq!(DomainSpec::UnitSquare.boundary_point(0.0), [0.0, 0.0]);
        let p = DomainSpec::UnitSquare.boundary_point(PI / 2.0);
        assert_abs_diff_eq!(p[0], 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(p[1], 0.0, epsilon = 1e-15);
    }

    #[test]
    fn containment() {
        let e = DomainSpec::study_ellipse();
        assert!(e.contains([0.0, 0.0]));
        assert!(!e.contains([2.0, 2.0]));
        assert!(!DomainSpec::UnitDisk.contains([1.0, 0.0]));
        assert!(!DomainSpec::UnitSquare.contains([0.0, 0.5]));
        let tri = DomainSpec::Polygon {
            vertices: vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]],
        };
        assert!(tri.contains([0.2, 0.2]));
        assert!(!tri.contains([0.5, 0.5]));
        assert!(!tri.contains([0.6, 0.6]));
    }

    #[test]
    fn rejects_bad_specs() {
        assert!(DomainSpec::RotatedEllipse {
            a: 0.0,
            b: 1.0,
            theta: 0.0
        }
        .validate()
        .is_err());
        assert!(DomainSpec::RotatedEllipse {
            a: 1.0,
            b: 1.0,
            theta: 7.0
        }
        .validate()
        .is_err());
        let bowtie = DomainSpec::Polygon {
            vertices: vec![[0.0, 0.0], [1.0, 1.0], [1.0, 0.0], [0.0, 1.0]],
        };
        assert!(bowtie.validate().is_err());
        assert!(DomainSpec::Polygon {
            vertices: vec![[0.0, 0.0], [1.0, 0.0]]
        }
        .validate()
        .is_err());
    }

    #[test]
    fn polyline_spacing_and_on_curve() {
        let e = DomainSpec::study_ellipse();
        let poly = e.boundary_polyline(0.05);
        for i in 0..poly.len() {
            let d = dist(poly[i], poly[(i + 1) % poly.len()]);
            assert!(d <= 0.05 + 1e-12, "spacing {d}");
            let [u, v] = rotate(poly[i], -PI / 6.0);
            assert!((u * u + (v / 0.75).powi(2) - 1.0).abs() < 1e-14);
        }
        // arc lengths are equal, so chords are nearly equal
        let d0 = dist(poly[0], poly[1]);
        let d1 = dist(poly[7], poly[8]);
        assert!((d0 - d1).abs() < 1e-4);
    }

    #[test]
    fn snap_lands_on_ellipse() {
        let e = DomainSpec::study_ellipse();
        let q = e.snap_to_boundary([0.3, 0.1]);
        let [u, v] = rotate(q, -PI / 6.0);
        assert!((u * u + (v / 0.75).powi(2) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn boundary_distance_of_disk_centre() {
        assert_abs_diff_eq!(
            DomainSpec::UnitDisk.distance_to_boundary([0.0, 0.0]),
            1.0,
            epsilon = 1e-6
        );
        assert_abs_diff_eq!(
            DomainSpec::UnitSquare.distance_to_boundary([0.3, 0.5]),
            0.3,
            epsilon = 1e-15
        );
    }

    #[test]
    fn ellipse_distance_matches_dense_sampling() {
        let e = DomainSpec::study_ellipse();
        let fine: Vec<Point> = (0..200_000)
            .map(|k| e.boundary_point(TAU * k as f64 / 200_000.0))
            .collect();
        for p in [[0.0, 0.0], [0.3, -0.2], [0.9, 0.4], [1.5, 1.5], [-0.1, 0.6]] {
            let brute = fine.iter().map(|&q| dist(p, q)).fold(f64::INFINITY, f64::min);
            assert_abs_diff_eq!(e.distance_to_boundary(p), brute, epsilon = 1e-6);
        }
    }
}
