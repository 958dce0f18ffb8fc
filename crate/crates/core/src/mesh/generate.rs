use std::collections::HashMap;

use super::delaunay::{circumcenter, Triangulation, NONE, SUPER};
use super::domain::{dist, BoundaryDistance};
use super::{DomainSpec, Mesh, MeshError, Point};

/// Smallest admissible interior angle after refinement.
const MIN_ANGLE_DEG: f64 = 25.0;

/// Generates a quality triangulation of `spec` with target edge length `h`.
///
/// The boundary is sampled at spacing at most `h`, the interior is seeded with
/// an equilateral lattice of spacing `h`, and the Delaunay triangulation of
/// all points is refined by segment splitting and circumcentre insertion until
/// every triangle has minimum angle at least 25° and circumradius at most `h`.
/// Boundary segments are kept unencroached so they remain Delaunay edges.
/// Points inserted on curved boundaries are placed on the curve.
pub fn generate_mesh(spec: &DomainSpec, h: f64) -> Result<Mesh, MeshError> {
    spec.validate()?;
    let diam = spec.diameter();
    if !(h > 0.0 && h.is_finite()) {
        return Err(MeshError::MeshFailure(format!(
            "target edge length must be positive, got {h}"
        )));
    }
    if h >= diam {
        return Err(MeshError::MeshFailure(format!(
            "target edge length {h} is not smaller than the domain diameter {diam}"
        )));
    }

    let mut tr = Triangulation::new(spec.center(), diam);

    let boundary = spec.boundary_polyline(h);
    let ids: Vec<usize> = boundary.iter().map(|&p| insert(&mut tr, p)).collect::<Result<_, _>>()?;
    let mut segments: Vec<(usize, usize)> = (0..ids.len()).map(|i| (ids[i], ids[(i + 1) % ids.len()])).collect();

    let dist_fn = BoundaryDistance::new(spec);
    for p in lattice(spec, h, 0.0, 0.0) {
        if spec.contains(p) && dist_fn.distance(p) >= 0.5 * h {
            insert(&mut tr, p)?;
        }
    }

    refine(spec, h, &mut tr, &mut segments)?;
    extract(spec, h, &tr, &segments)
}

fn insert(tr: &mut Triangulation, p: Point) -> Result<usize, MeshError> {
    tr.insert(p)
        .ok_or_else(|| MeshError::MeshFailure(format!("point {p:?} escaped the enclosing triangle")))
}

/// Equilateral lattice with spacing `s` covering the bounding box.
///
/// Row `k` sits at height `k + row_offset` row-spacings above the domain
/// centre, and odd rows are shifted by half a spacing.
pub(crate) fn lattice(spec: &DomainSpec, s: f64, col_offset: f64, row_offset: f64) -> Vec<Point> {
    let (lo, hi) = spec.bounding_box();
    let c = spec.center();
    let dy = s * 3f64.sqrt() / 2.0;
    let k_lo = ((lo[1] - c[1]) / dy).floor() as i64 - 1;
    let k_hi = ((hi[1] - c[1]) / dy).ceil() as i64 + 1;
    let j_lo = ((lo[0] - c[0]) / s).floor() as i64 - 1;
    let j_hi = ((hi[0] - c[0]) / s).ceil() as i64 + 1;
    let mut pts = Vec::new();
    for k in k_lo..=k_hi {
        let shift = if k.rem_euclid(2) == 1 { 0.5 * s } else { 0.0 };
        let y = c[1] + (k as f64 + row_offset) * dy;
        for j in j_lo..=j_hi {
            pts.push([c[0] + (j as f64 + col_offset) * s + shift, y]);
        }
    }
    pts
}

fn inside_diametral(p: Point, a: Point, b: Point) -> bool {
    (p[0] - a[0]) * (p[0] - b[0]) + (p[1] - a[1]) * (p[1] - b[1]) < 0.0
}

fn segment_encroached(tr: &Triangulation, edges: &HashMap<(usize, usize), [usize; 2]>, (a, b): (usize, usize)) -> bool {
    let Some(adj) = edges.get(&(a.min(b), a.max(b))) else {
        // missing from the triangulation: splitting recovers it
        return true;
    };
    let (pa, pb) = (tr.points[a], tr.points[b]);
    adj.iter().filter(|&&t| t != NONE).any(|&t| {
        tr.tris[t]
            .v
            .iter()
            .any(|&v| v >= SUPER && v != a && v != b && inside_diametral(tr.points[v], pa, pb))
    })
}

fn split_segment(
    spec: &DomainSpec,
    tr: &mut Triangulation,
    segments: &mut Vec<(usize, usize)>,
    si: usize,
) -> Result<(), MeshError> {
    let (a, b) = segments[si];
    let (pa, pb) = (tr.points[a], tr.points[b]);
    let mid = spec.snap_to_boundary([0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1])]);
    let m = insert(tr, mid)?;
    if m == a || m == b {
        return Err(MeshError::MeshFailure(
            "boundary segment cannot be split further".into(),
        ));
    }
    segments[si] = (a, m);
    segments.push((m, b));
    Ok(())
}

fn triangle_inside(spec: &DomainSpec, tr: &Triangulation, t: usize) -> bool {
    if tr.touches_super(t) {
        return false;
    }
    let v = tr.tris[t].v;
    let c = [
        (tr.points[v[0]][0] + tr.points[v[1]][0] + tr.points[v[2]][0]) / 3.0,
        (tr.points[v[0]][1] + tr.points[v[1]][1] + tr.points[v[2]][1]) / 3.0,
    ];
    spec.contains(c)
}

/// Circumradius-to-shortest-edge ratio and circumradius.
fn quality(tr: &Triangulation, t: usize) -> (f64, f64) {
    let v = tr.tris[t].v;
    let p = [tr.points[v[0]], tr.points[v[1]], tr.points[v[2]]];
    let (a, b, c) = (dist(p[1], p[2]), dist(p[0], p[2]), dist(p[0], p[1]));
    let area2 = super::delaunay::orient(p[0], p[1], p[2]).abs();
    let r = a * b * c / (2.0 * area2);
    (r / a.min(b).min(c), r)
}

fn refine(
    spec: &DomainSpec,
    h: f64,
    tr: &mut Triangulation,
    segments: &mut Vec<(usize, usize)>,
) -> Result<(), MeshError> {
    let ratio_bound = 1.0 / (2.0 * MIN_ANGLE_DEG.to_radians().sin());
    let max_points = 20 * tr.points.len() + 1000;

    loop {
        if tr.points.len() > max_points {
            return Err(MeshError::MeshFailure(
                "quality refinement did not terminate; the domain has features below the mesh scale".into(),
            ));
        }
        let edges = tr.edge_map();
        let encroached: Vec<usize> = (0..segments.len())
            .filter(|&si| segment_encroached(tr, &edges, segments[si]))
            .collect();
        if !encroached.is_empty() {
            for si in encroached {
                split_segment(spec, tr, segments, si)?;
            }
            continue;
        }

        let bad: Vec<usize> = tr
            .alive()
            .filter(|&t| triangle_inside(spec, tr, t))
            .filter(|&t| {
                let (ratio, r) = quality(tr, t);
                ratio > ratio_bound || r > h
            })
            .collect();
        if bad.is_empty() {
            return Ok(());
        }

        let mut progressed = false;
        for t in bad {
            if !tr.tris[t].alive {
                continue;
            }
            let v = tr.tris[t].v;
            let cc = circumcenter(tr.points[v[0]], tr.points[v[1]], tr.points[v[2]]);
            let hits: Vec<usize> = (0..segments.len())
                .filter(|&si| {
                    let (a, b) = segments[si];
                    inside_diametral(cc, tr.points[a], tr.points[b])
                })
                .collect();
            if !hits.is_empty() {
                for si in hits {
                    split_segment(spec, tr, segments, si)?;
                }
                progressed = true;
                // segments changed; re-evaluate encroachment before more insertions
                break;
            }
            if spec.contains(cc) {
                let before = tr.points.len();
                insert(tr, cc)?;
                progressed |= tr.points.len() > before;
            }
        }
        if !progressed {
            return Ok(());
        }
    }
}

fn extract(spec: &DomainSpec, h: f64, tr: &Triangulation, segments: &[(usize, usize)]) -> Result<Mesh, MeshError> {
    let min_area = 1e-12 * h * h;
    let kept: Vec<[usize; 3]> = tr
        .alive()
        .filter(|&t| triangle_inside(spec, tr, t))
        .map(|t| tr.tris[t].v)
        .filter(|v| 0.5 * super::delaunay::orient(tr.points[v[0]], tr.points[v[1]], tr.points[v[2]]) > min_area)
        .collect();

    let mut on_boundary = vec![false; tr.points.len()];
    for &(a, b) in segments {
        on_boundary[a] = true;
        on_boundary[b] = true;
    }

    let mut remap = vec![NONE; tr.points.len()];
    let mut vertices = Vec::new();
    let mut flags = Vec::new();
    let mut triangles = Vec::with_capacity(kept.len());
    for v in &kept {
        let mut tri = [0; 3];
        for k in 0..3 {
            if remap[v[k]] == NONE {
                remap[v[k]] = vertices.len();
                vertices.push(tr.points[v[k]]);
                flags.push(on_boundary[v[k]]);
            }
            tri[k] = remap[v[k]];
        }
        triangles.push(tri);
    }

    let mesh = Mesh::new(vertices, triangles, flags, h).map_err(|e| MeshError::MeshFailure(e.to_string()))?;
    let edges = mesh.edges();
    for &(a, b) in segments {
        let (a, b) = (remap[a], remap[b]);
        if a == NONE || b == NONE || edges.get(&(a.min(b), a.max(b))) != Some(&1) {
            return Err(MeshError::MeshFailure(
                "a boundary segment is missing from the triangulation".into(),
            ));
        }
    }
    Ok(mesh)
}
