//! Incremental Bowyer–Watson Delaunay triangulation with triangle adjacency.
//!
//! The first three vertices form an enclosing super-triangle; every point
//! inserted afterwards must lie inside it.

use std::collections::HashMap;

use super::Point;

pub(crate) const NONE: usize = usize::MAX;
pub(crate) const SUPER: usize = 3;

#[derive(Clone, Debug)]
pub(crate) struct Tri {
    /// Counter-clockwise vertex ids.
    pub v: [usize; 3],
    /// `nb[i]` is the neighbour across the edge opposite `v[i]`.
    pub nb: [usize; 3],
    pub alive: bool,
}

pub(crate) struct Triangulation {
    pub points: Vec<Point>,
    pub tris: Vec<Tri>,
    last: usize,
    mark: Vec<u32>,
    stamp: u32,
    rng: u64,
}

pub(crate) fn orient(a: Point, b: Point, c: Point) -> f64 {
    (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
}

/// Positive iff `d` lies inside the circumcircle of the counter-clockwise triangle `abc`.
pub(crate) fn incircle(a: Point, b: Point, c: Point, d: Point) -> f64 {
    let (adx, ady) = (a[0] - d[0], a[1] - d[1]);
    let (bdx, bdy) = (b[0] - d[0], b[1] - d[1]);
    let (cdx, cdy) = (c[0] - d[0], c[1] - d[1]);
    let ad = adx * adx + ady * ady;
    let bd = bdx * bdx + bdy * bdy;
    let cd = cdx * cdx + cdy * cdy;
    adx * (bdy * cd - bd * cdy) - ady * (bdx * cd - bd * cdx) + ad * (bdx * cdy - bdy * cdx)
}

pub(crate) fn circumcenter(a: Point, b: Point, c: Point) -> Point {
    let (bx, by) = (b[0] - a[0], b[1] - a[1]);
    let (cx, cy) = (c[0] - a[0], c[1] - a[1]);
    let d = 2.0 * (bx * cy - by * cx);
    let b2 = bx * bx + by * by;
    let c2 = cx * cx + cy * cy;
    [a[0] + (cy * b2 - by * c2) / d, a[1] + (bx * c2 - cx * b2) / d]
}

impl Triangulation {
    /// Empty triangulation whose super-triangle encloses the disk of radius
    /// `radius` about `center` with a wide margin.
    pub fn new(center: Point, radius: f64) -> Self {
        let r = 64.0 * radius;
        let points = (0..3)
            .map(|k| {
                let ang = std::f64::consts::FRAC_PI_2 + k as f64 * 2.0 * std::f64::consts::PI / 3.0;
                [center[0] + r * ang.cos(), center[1] + r * ang.sin()]
            })
            .collect();
        Self {
            points,
            tris: vec![Tri {
                v: [0, 1, 2],
                nb: [NONE; 3],
                alive: true,
            }],
            last: 0,
            mark: vec![0],
            stamp: 0,
            rng: 0x9e37_79b9_7f4a_7c15,
        }
    }

    fn next_rand(&mut self) -> usize {
        // xorshift; only used to break walk cycles
        self.rng ^= self.rng << 13;
        self.rng ^= self.rng >> 7;
        self.rng ^= self.rng << 17;
        (self.rng % 3) as usize
    }

    fn tri_points(&self, t: usize) -> [Point; 3] {
        let v = self.tris[t].v;
        [self.points[v[0]], self.points[v[1]], self.points[v[2]]]
    }

    /// Triangle containing `p` (on its closure), or `None` if outside the super-triangle.
    pub fn locate(&mut self, p: Point) -> Option<usize> {
        let mut t = if self.tris[self.last].alive {
            self.last
        } else {
            self.tris.iter().position(|t| t.alive)?
        };
        let max_steps = 4 * self.tris.len() + 16;
        'walk: for _ in 0..max_steps {
            let start = self.next_rand();
            let [a, b, c] = self.tri_points(t);
            let pts = [a, b, c];
            for k in 0..3 {
                let i = (start + k) % 3;
                if orient(pts[(i + 1) % 3], pts[(i + 2) % 3], p) < 0.0 {
                    let n = self.tris[t].nb[i];
                    if n == NONE {
                        return None;
                    }
                    t = n;
                    continue 'walk;
                }
            }
            return Some(t);
        }
        // walk failed to terminate on near-degenerate input; fall back to a scan
        (0..self.tris.len()).find(|&t| {
            self.tris[t].alive && {
                let [a, b, c] = self.tri_points(t);
                orient(b, c, p) >= 0.0 && orient(c, a, p) >= 0.0 && orient(a, b, p) >= 0.0
            }
        })
    }

    /// Inserts `p`, returning its vertex id (an existing id if `p` duplicates a vertex).
    pub fn insert(&mut self, p: Point) -> Option<usize> {
        let seed = self.locate(p)?;
        for &v in &self.tris[seed].v {
            let q = self.points[v];
            if (q[0] - p[0]).abs() <= 1e-13 * (1.0 + q[0].abs()) && (q[1] - p[1]).abs() <= 1e-13 * (1.0 + q[1].abs()) {
                return Some(v);
            }
        }

        // cavity: triangles whose circumcircle contains p, grown from the seed
        self.stamp = self.stamp.wrapping_add(1);
        if self.stamp == 0 {
            self.mark.iter_mut().for_each(|m| *m = 0);
            self.stamp = 1;
        }
        let stamp = self.stamp;
        let mut cavity = vec![seed];
        self.mark[seed] = stamp;
        let mut i = 0;
        while i < cavity.len() {
            let t = cavity[i];
            i += 1;
            for k in 0..3 {
                let n = self.tris[t].nb[k];
                if n == NONE || self.mark[n] == stamp {
                    continue;
                }
                let [a, b, c] = self.tri_points(n);
                if incircle(a, b, c, p) > 0.0 {
                    self.mark[n] = stamp;
                    cavity.push(n);
                }
            }
        }

        // keep the cavity star-shaped with respect to p
        loop {
            let mut bad = None;
            'scan: for &t in &cavity {
                if t == seed {
                    continue;
                }
                for k in 0..3 {
                    let n = self.tris[t].nb[k];
                    if n != NONE && self.mark[n] == stamp {
                        continue;
                    }
                    let v = self.tris[t].v;
                    if orient(self.points[v[(k + 1) % 3]], self.points[v[(k + 2) % 3]], p) <= 0.0 {
                        bad = Some(t);
                        break 'scan;
                    }
                }
            }
            match bad {
                Some(t) => {
                    self.mark[t] = stamp.wrapping_sub(1);
                    cavity.retain(|&c| c != t);
                }
                None => break,
            }
        }

        let pid = self.points.len();
        self.points.push(p);

        struct Edge {
            a: usize,
            b: usize,
            outer: usize,
            old: usize,
        }
        let mut edges = Vec::new();
        for &t in &cavity {
            let tri = &self.tris[t];
            for k in 0..3 {
                let n = tri.nb[k];
                if n != NONE && self.mark[n] == stamp {
                    continue;
                }
                edges.push(Edge {
                    a: tri.v[(k + 1) % 3],
                    b: tri.v[(k + 2) % 3],
                    outer: n,
                    old: t,
                });
            }
        }

        let base = self.tris.len();
        let mut by_second: HashMap<usize, usize> = HashMap::with_capacity(edges.len());
        let mut by_third: HashMap<usize, usize> = HashMap::with_capacity(edges.len());
        for (k, e) in edges.iter().enumerate() {
            by_second.insert(e.a, base + k);
            by_third.insert(e.b, base + k);
        }
        for (k, e) in edges.iter().enumerate() {
            let id = base + k;
            // (p, a, b): across (b,p) is the fan triangle starting at b; across (p,a) the one ending at a
            let nb_a = *by_second.get(&e.b).unwrap_or(&NONE);
            let nb_b = *by_third.get(&e.a).unwrap_or(&NONE);
            self.tris.push(Tri {
                v: [pid, e.a, e.b],
                nb: [e.outer, nb_a, nb_b],
                alive: true,
            });
            self.mark.push(0);
            if e.outer != NONE {
                let outer = &mut self.tris[e.outer];
                for j in 0..3 {
                    if outer.nb[j] == e.old {
                        outer.nb[j] = id;
                    }
                }
            }
        }
        for &t in &cavity {
            self.tris[t].alive = false;
        }
        self.last = base;
        Some(pid)
    }

    /// Alive triangle ids, including those touching the super-triangle.
    pub fn alive(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.tris.len()).filter(|&t| self.tris[t].alive)
    }

    pub fn touches_super(&self, t: usize) -> bool {
        self.tris[t].v.iter().any(|&v| v < SUPER)
    }

    /// Map from undirected edge to the (up to two) alive triangles sharing it.
    pub fn edge_map(&self) -> HashMap<(usize, usize), [usize; 2]> {
        let mut map: HashMap<(usize, usize), [usize; 2]> = HashMap::new();
        for t in self.alive() {
            let v = self.tris[t].v;
            for k in 0..3 {
                let (a, b) = (v[(k + 1) % 3], v[(k + 2) % 3]);
                let key = (a.min(b), a.max(b));
                let slot = map.entry(key).or_insert([NONE, NONE]);
                if slot[0] == NONE {
                    slot[0] = t;
                } else {
                    slot[1] = t;
                }
            }
        }
        map
    }
}
