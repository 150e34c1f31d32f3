//! Graded triangular meshes of wedge domains.
//!
//! Vertices sit on concentric rings (circles about the corner) whose spacing
//! follows the size function, so both side arcs are resolved exactly at every
//! ring. Neighbouring rings are stitched with a greedy min-angle zipper, the
//! innermost ring is fanned to the corner vertex, and a pass of Lawson edge
//! flips finishes the job.

use crate::geometry::{cartesian, cross, dist, sub, BoundaryTag, Point, WedgeDomain};
use std::f64::consts::PI;
use std::fmt::Write as _;

/// Minimum admissible interior angle, degrees.
pub const MIN_ANGLE_DEG: f64 = 20.0;

const SMOOTHING_PASSES: usize = 8;
const SMOOTHING_TARGET_DEG: f64 = 25.0;
/// Cap on placement size relative to the distance to O.
const CORNER_SIZE_RATIO: f64 = 0.6;

type InteriorEdge = ((usize, usize), [(usize, usize); 2]);

/// Relative size floor: target edge lengths never drop below `h_max * SIZE_FLOOR`.
pub const SIZE_FLOOR: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MeshError {
    #[error("h_max = {h_max} must lie in (0, delta_star = {delta_star})")]
    TooCoarse { h_max: f64, delta_star: f64 },
    #[error("grading exponent {0} must be >= 0")]
    InvalidGrading(f64),
    #[error("minimum angle {min_angle_deg:.2} deg below {MIN_ANGLE_DEG} deg")]
    QualityFailure { min_angle_deg: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryEdge {
    pub v: [usize; 2],
    pub tag: BoundaryTag,
    /// Arclength coordinate of each endpoint along its boundary piece.
    pub s: [f64; 2],
}

#[derive(Debug, Clone)]
pub struct Mesh {
    pub vertices: Vec<Point>,
    /// Counter-clockwise vertex triples.
    pub triangles: Vec<[usize; 3]>,
    pub boundary_edges: Vec<BoundaryEdge>,
    pub grading: f64,
    pub h_max: f64,
    /// Index of the corner vertex O.
    pub corner: usize,
}

/// Target edge length at distance `r` from the corner.
pub fn target_size(h_max: f64, grading: f64, delta_star: f64, r: f64) -> f64 {
    (h_max * (r / delta_star).powf(grading)).max(h_max * SIZE_FLOOR)
}

/// Edge length used for ring placement: the target size, capped near the
/// corner by a fixed fraction of the distance to O (for grading < 1 the target
/// exceeds the distance itself).
fn placement_size(h_max: f64, g: f64, delta_star: f64, r: f64) -> f64 {
    target_size(h_max, g, delta_star, r).min((CORNER_SIZE_RATIO * r).max(h_max * SIZE_FLOOR))
}

/// Tabulated `s(r) = int_0^r dr / h(r)`, the ring-count coordinate.
struct SizeCoordinate {
    r: Vec<f64>,
    s: Vec<f64>,
}

impl SizeCoordinate {
    const SAMPLES: usize = 20000;

    fn new(h_max: f64, g: f64, delta_star: f64) -> Self {
        let h0 = h_max * SIZE_FLOOR;
        let r_min = 1e-3 * h0;
        let mut r = vec![0.0, r_min];
        let mut s = vec![0.0, r_min / h0];
        let ratio = (delta_star / r_min).powf(1.0 / Self::SAMPLES as f64);
        for k in 1..=Self::SAMPLES {
            let (a, b) = (r[k], if k == Self::SAMPLES { delta_star } else { r_min * ratio.powi(k as i32) });
            let inv = |x: f64| 1.0 / placement_size(h_max, g, delta_star, x);
            s.push(s[k] + 0.5 * (b - a) * (inv(a) + inv(b)));
            r.push(b);
        }
        SizeCoordinate { r, s }
    }

    fn total(&self) -> f64 {
        *self.s.last().unwrap()
    }

    fn radius(&self, s: f64) -> f64 {
        let k = self.s.partition_point(|&x| x < s).clamp(1, self.s.len() - 1);
        let t = (s - self.s[k - 1]) / (self.s[k] - self.s[k - 1]);
        self.r[k - 1] + t * (self.r[k] - self.r[k - 1])
    }
}

pub fn generate_mesh(domain: &WedgeDomain, h_max: f64, grading: f64) -> Result<Mesh, MeshError> {
    let ds = domain.delta_star();
    if !(h_max > 0.0 && h_max < ds) {
        return Err(MeshError::TooCoarse { h_max, delta_star: ds });
    }
    if !(grading >= 0.0 && grading.is_finite()) {
        return Err(MeshError::InvalidGrading(grading));
    }

    let coord = SizeCoordinate::new(h_max, grading, ds);
    let total = coord.total();
    let ring_step = 3f64.sqrt() / 2.0;
    let n_rings = ((total / ring_step).round() as usize).max(1);
    let radii: Vec<f64> =
        (1..=n_rings).map(|k| if k == n_rings { ds } else { coord.radius(total * k as f64 / n_rings as f64) }).collect();

    let mut vertices = vec![[0.0, 0.0]];
    let mut rings: Vec<Vec<usize>> = Vec::with_capacity(n_rings);
    let min_segments = |opening: f64| ((opening / (PI / 3.0)).ceil() as usize).max(1);
    for &r in &radii {
        let opening = domain.opening(r);
        let h = placement_size(h_max, grading, ds, r);
        let n = min_segments(opening).max((opening * r / h).round() as usize);
        let th0 = domain.theta_minus(r);
        let ring = (0..=n)
            .map(|j| {
                let th = if j == n { domain.theta_plus(r) } else { th0 + opening * j as f64 / n as f64 };
                vertices.push(cartesian(r, th));
                vertices.len() - 1
            })
            .collect();
        rings.push(ring);
    }

    let mut triangles = Vec::new();
    let first = &rings[0];
    for w in first.windows(2) {
        triangles.push([0, w[0], w[1]]);
    }
    for k in 0..n_rings - 1 {
        zip_rings(&vertices, &rings[k], &rings[k + 1], &mut triangles);
    }
    for t in triangles.iter_mut() {
        if signed_area(&vertices, *t) < 0.0 {
            t.swap(1, 2);
        }
    }

    let mut boundary_edges = Vec::new();
    let mut prev_minus = (0usize, 0.0);
    let mut prev_plus = (0usize, 0.0);
    for (ring, &r) in rings.iter().zip(&radii) {
        let vm = ring[0];
        let vp = *ring.last().unwrap();
        let sm = domain.arclength(BoundaryTag::SideMinus, r);
        let sp = domain.arclength(BoundaryTag::SidePlus, r);
        boundary_edges.push(BoundaryEdge { v: [prev_minus.0, vm], tag: BoundaryTag::SideMinus, s: [prev_minus.1, sm] });
        boundary_edges.push(BoundaryEdge { v: [prev_plus.0, vp], tag: BoundaryTag::SidePlus, s: [prev_plus.1, sp] });
        prev_minus = (vm, sm);
        prev_plus = (vp, sp);
    }
    let th_start = domain.theta_minus(ds);
    let outer = rings.last().unwrap();
    let outer_s = |v: usize| {
        let p = vertices[v];
        let th = domain.unwrapped_angle(p);
        (ds * (th - th_start)).max(0.0)
    };
    for w in outer.windows(2) {
        boundary_edges.push(BoundaryEdge { v: [w[0], w[1]], tag: BoundaryTag::OuterArc, s: [outer_s(w[0]), outer_s(w[1])] });
    }
    // pin the far end exactly
    if let Some(last) = boundary_edges.last_mut() {
        last.s[1] = domain.outer_arc_length();
    }

    let mut mesh = Mesh { vertices, triangles, boundary_edges, grading, h_max, corner: 0 };
    mesh.delaunay_flips();
    for _ in 0..SMOOTHING_PASSES {
        if mesh.min_angle_deg() >= SMOOTHING_TARGET_DEG || !mesh.smooth_poor_stars() {
            break;
        }
        mesh.delaunay_flips();
    }
    let min_angle_deg = mesh.min_angle_deg();
    if min_angle_deg < MIN_ANGLE_DEG {
        return Err(MeshError::QualityFailure { min_angle_deg });
    }
    Ok(mesh)
}

fn zip_rings(vertices: &[Point], outer: &[usize], inner: &[usize], out: &mut Vec<[usize; 3]>) {
    let (mut i, mut j) = (0, 0);
    while i + 1 < outer.len() || j + 1 < inner.len() {
        let advance_outer = if i + 1 == outer.len() {
            false
        } else if j + 1 == inner.len() {
            true
        } else {
            // Ring nodes are equally spaced in angle: merge by fractional
            // position, breaking ties by the better triangle.
            let pa = (i + 1) as f64 / (outer.len() - 1) as f64;
            let pb = (j + 1) as f64 / (inner.len() - 1) as f64;
            if (pa - pb).abs() > 1e-12 {
                pa < pb
            } else {
                let a = min_angle(vertices, [outer[i], inner[j], outer[i + 1]]);
                let b = min_angle(vertices, [outer[i], inner[j], inner[j + 1]]);
                a >= b
            }
        };
        if advance_outer {
            out.push([outer[i], inner[j], outer[i + 1]]);
            i += 1;
        } else {
            out.push([outer[i], inner[j], inner[j + 1]]);
            j += 1;
        }
    }
}

fn signed_area(v: &[Point], t: [usize; 3]) -> f64 {
    0.5 * cross(sub(v[t[1]], v[t[0]]), sub(v[t[2]], v[t[0]]))
}

fn angles(v: &[Point], t: [usize; 3]) -> [f64; 3] {
    let mut out = [0.0; 3];
    for k in 0..3 {
        let p = v[t[k]];
        let a = sub(v[t[(k + 1) % 3]], p);
        let b = sub(v[t[(k + 2) % 3]], p);
        out[k] = cross(a, b).abs().atan2(a[0] * b[0] + a[1] * b[1]);
    }
    out
}

fn min_angle(v: &[Point], t: [usize; 3]) -> f64 {
    let a = angles(v, t);
    a[0].min(a[1]).min(a[2])
}

impl Mesh {
    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn triangle_points(&self, t: usize) -> [Point; 3] {
        let [a, b, c] = self.triangles[t];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    pub fn triangle_area(&self, t: usize) -> f64 {
        signed_area(&self.vertices, self.triangles[t])
    }

    pub fn total_area(&self) -> f64 {
        (0..self.n_triangles()).map(|t| self.triangle_area(t)).sum()
    }

    /// Longest edge of triangle `t`.
    pub fn triangle_size(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangle_points(t);
        dist(a, b).max(dist(b, c)).max(dist(c, a))
    }

    pub fn min_angle_deg(&self) -> f64 {
        self.triangles
            .iter()
            .map(|&t| min_angle(&self.vertices, t))
            .fold(f64::INFINITY, f64::min)
            .to_degrees()
    }

    /// Distinct vertices touched by boundary edges carrying `tag`, sorted by arclength.
    pub fn boundary_nodes(&self, tag: BoundaryTag) -> Vec<(usize, f64)> {
        let mut nodes: Vec<(usize, f64)> = self
            .boundary_edges
            .iter()
            .filter(|e| e.tag == tag)
            .flat_map(|e| [(e.v[0], e.s[0]), (e.v[1], e.s[1])])
            .collect();
        nodes.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
        nodes.dedup_by_key(|n| n.0);
        nodes
    }

    /// Walks the boundary starting at the corner: up the minus side, along the
    /// outer arc, down the plus side. Returns the tag sequence of the walk, or
    /// a description of the first inconsistency.
    pub fn boundary_cycle(&self) -> Result<Vec<BoundaryTag>, String> {
        let n = self.boundary_edges.len();
        let mut incident: Vec<Vec<usize>> = vec![Vec::new(); self.n_vertices()];
        for (k, e) in self.boundary_edges.iter().enumerate() {
            if e.v[0] == e.v[1] {
                return Err(format!("degenerate boundary edge {k}"));
            }
            incident[e.v[0]].push(k);
            incident[e.v[1]].push(k);
        }
        if let Some(v) = incident.iter().position(|l| !l.is_empty() && l.len() != 2) {
            return Err(format!("vertex {v} has {} boundary edges", incident[v].len()));
        }
        let start = self.corner;
        let mut current = start;
        let mut used = vec![false; n];
        let mut prev_edge = *incident[start]
            .iter()
            .find(|&&k| self.boundary_edges[k].tag == BoundaryTag::SideMinus)
            .ok_or("corner is not on the minus side")?;
        let mut tags = Vec::with_capacity(n);
        loop {
            let e = &self.boundary_edges[prev_edge];
            used[prev_edge] = true;
            tags.push(e.tag);
            current = if e.v[0] == current { e.v[1] } else { e.v[0] };
            if current == start {
                break;
            }
            prev_edge = match incident[current].iter().find(|&&k| !used[k]) {
                Some(&k) => k,
                None => return Err(format!("walk stuck at vertex {current}")),
            };
        }
        if tags.len() != n {
            return Err(format!("boundary has {} edges but the cycle through O covers {}", n, tags.len()));
        }
        let mut runs: Vec<BoundaryTag> = tags.clone();
        runs.dedup();
        if runs != [BoundaryTag::SideMinus, BoundaryTag::OuterArc, BoundaryTag::SidePlus] {
            return Err(format!("unexpected tag order {runs:?}"));
        }
        Ok(tags)
    }

    /// Interior edges shared by two triangles: (edge, [(tri, local opposite vertex)]).
    fn interior_edges(&self) -> Vec<InteriorEdge> {
        let mut half: Vec<((usize, usize), usize, usize)> = Vec::with_capacity(3 * self.n_triangles());
        for (t, tri) in self.triangles.iter().enumerate() {
            for k in 0..3 {
                let a = tri[(k + 1) % 3];
                let b = tri[(k + 2) % 3];
                half.push(((a.min(b), a.max(b)), t, k));
            }
        }
        half.sort_unstable();
        half.windows(2)
            .filter(|w| w[0].0 == w[1].0)
            .map(|w| (w[0].0, [(w[0].1, w[0].2), (w[1].1, w[1].2)]))
            .collect()
    }

    /// Lawson flips until every interior edge is locally Delaunay.
    fn delaunay_flips(&mut self) {
        for _sweep in 0..1000 {
            let mut flipped = false;
            let mut touched = vec![false; self.n_triangles()];
            for ((a, b), [(t1, k1), (t2, k2)]) in self.interior_edges() {
                if touched[t1] || touched[t2] {
                    continue;
                }
                let c = self.triangles[t1][k1];
                let d = self.triangles[t2][k2];
                let v = &self.vertices;
                let angle_at = |p: usize| {
                    let x = sub(v[a], v[p]);
                    let y = sub(v[b], v[p]);
                    cross(x, y).abs().atan2(x[0] * y[0] + x[1] * y[1])
                };
                if angle_at(c) + angle_at(d) <= PI + 1e-12 {
                    continue;
                }
                let n1 = [c, d, a];
                let n2 = [d, c, b];
                if signed_area(v, n1).abs() < 1e-300 || signed_area(v, n2).abs() < 1e-300 {
                    continue;
                }
                // only flip when the quad is convex
                if signed_area(v, n1).signum() != signed_area(v, n2).signum() {
                    continue;
                }
                let old = min_angle(v, self.triangles[t1]).min(min_angle(v, self.triangles[t2]));
                let new = min_angle(v, n1).min(min_angle(v, n2));
                if new <= old {
                    continue;
                }
                let mut n1 = n1;
                let mut n2 = n2;
                if signed_area(v, n1) < 0.0 {
                    n1.swap(1, 2);
                }
                if signed_area(v, n2) < 0.0 {
                    n2.swap(1, 2);
                }
                self.triangles[t1] = n1;
                self.triangles[t2] = n2;
                touched[t1] = true;
                touched[t2] = true;
                flipped = true;
            }
            if !flipped {
                break;
            }
        }
    }

    /// Moves interior vertices whose star is poor to the centroid of their
    /// neighbours when that raises the star's minimum angle. Returns whether
    /// anything moved.
    fn smooth_poor_stars(&mut self) -> bool {
        let nv = self.n_vertices();
        let mut on_boundary = vec![false; nv];
        for e in &self.boundary_edges {
            on_boundary[e.v[0]] = true;
            on_boundary[e.v[1]] = true;
        }
        let mut star: Vec<Vec<usize>> = vec![Vec::new(); nv];
        for (t, tri) in self.triangles.iter().enumerate() {
            for &v in tri {
                star[v].push(t);
            }
        }
        let threshold = SMOOTHING_TARGET_DEG.to_radians();
        let mut moved = false;
        for v in 0..nv {
            if on_boundary[v] {
                continue;
            }
            let star_min = |verts: &[Point]| {
                star[v].iter().map(|&t| min_angle(verts, self.triangles[t])).fold(f64::INFINITY, f64::min)
            };
            let before = star_min(&self.vertices);
            if before >= threshold {
                continue;
            }
            let mut c = [0.0, 0.0];
            let mut count = 0.0;
            for &t in &star[v] {
                for &w in &self.triangles[t] {
                    if w != v {
                        // each neighbour appears in two star triangles
                        c[0] += self.vertices[w][0];
                        c[1] += self.vertices[w][1];
                        count += 1.0;
                    }
                }
            }
            let old = self.vertices[v];
            self.vertices[v] = [c[0] / count, c[1] / count];
            let valid = star[v].iter().all(|&t| signed_area(&self.vertices, self.triangles[t]) > 0.0);
            if valid && star_min(&self.vertices) > before {
                moved = true;
            } else {
                self.vertices[v] = old;
            }
        }
        moved
    }

    /// Plain-text listing: `v x y`, `t a b c`, `e a b TAG s0 s1`, one record per line.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# schema=1");
        let _ = writeln!(
            out,
            "# vertices={} triangles={} boundary_edges={} h_max={} grading={} corner={}",
            self.n_vertices(),
            self.n_triangles(),
            self.boundary_edges.len(),
            self.h_max,
            self.grading,
            self.corner
        );
        for p in &self.vertices {
            let _ = writeln!(out, "v {:e} {:e}", p[0], p[1]);
        }
        for t in &self.triangles {
            let _ = writeln!(out, "t {} {} {}", t[0], t[1], t[2]);
        }
        for e in &self.boundary_edges {
            let _ = writeln!(out, "e {} {} {} {:e} {:e}", e.v[0], e.v[1], e.tag.name(), e.s[0], e.s[1]);
        }
        out
    }
}

/// Bounding-volume hierarchy over mesh triangles for point location.
#[derive(Debug, Clone)]
pub struct Locator {
    nodes: Vec<BvhNode>,
    order: Vec<usize>,
    boxes: Vec<[f64; 4]>,
}

#[derive(Debug, Clone)]
struct BvhNode {
    bbox: [f64; 4],
    /// Leaf: `[start, end)` into `order`; inner: child indices.
    kind: NodeKind,
}

#[derive(Debug, Clone)]
enum NodeKind {
    Leaf(usize, usize),
    Inner(usize, usize),
}

const LEAF_SIZE: usize = 8;

fn union(a: [f64; 4], b: [f64; 4]) -> [f64; 4] {
    [a[0].min(b[0]), a[1].min(b[1]), a[2].max(b[2]), a[3].max(b[3])]
}

/// Barycentric coordinates of `p` in the triangle.
pub fn barycentric(tri: [Point; 3], p: Point) -> [f64; 3] {
    let [a, b, c] = tri;
    let det = cross(sub(b, a), sub(c, a));
    let l1 = cross(sub(p, a), sub(c, a)) / det;
    let l2 = cross(sub(b, a), sub(p, a)) / det;
    [1.0 - l1 - l2, l1, l2]
}

impl Locator {
    pub fn new(mesh: &Mesh) -> Self {
        let boxes: Vec<[f64; 4]> = (0..mesh.n_triangles())
            .map(|t| {
                let [a, b, c] = mesh.triangle_points(t);
                [a[0].min(b[0]).min(c[0]), a[1].min(b[1]).min(c[1]), a[0].max(b[0]).max(c[0]), a[1].max(b[1]).max(c[1])]
            })
            .collect();
        let mut order: Vec<usize> = (0..boxes.len()).collect();
        let mut nodes = Vec::new();
        if !boxes.is_empty() {
            Self::build(&boxes, &mut order, 0, boxes.len(), &mut nodes);
        }
        Locator { nodes, order, boxes }
    }

    fn build(boxes: &[[f64; 4]], order: &mut [usize], start: usize, end: usize, nodes: &mut Vec<BvhNode>) -> usize {
        let bbox = order[start..end].iter().map(|&t| boxes[t]).reduce(union).unwrap();
        let id = nodes.len();
        nodes.push(BvhNode { bbox, kind: NodeKind::Leaf(start, end) });
        if end - start <= LEAF_SIZE {
            return id;
        }
        let axis = if bbox[2] - bbox[0] >= bbox[3] - bbox[1] { 0 } else { 1 };
        let key = |t: usize| boxes[t][axis] + boxes[t][axis + 2];
        let mid = (start + end) / 2;
        order[start..end].select_nth_unstable_by(mid - start, |&a, &b| key(a).total_cmp(&key(b)));
        let left = Self::build(boxes, order, start, mid, nodes);
        let right = Self::build(boxes, order, mid, end, nodes);
        nodes[id].kind = NodeKind::Inner(left, right);
        id
    }

    /// Triangle containing `p` and its barycentric coordinates. Points within
    /// a relative tolerance of the mesh boundary are accepted.
    pub fn locate(&self, mesh: &Mesh, p: Point) -> Option<(usize, [f64; 3])> {
        const TOL: f64 = 1e-9;
        let mut best: Option<(usize, [f64; 3], f64)> = None;
        let mut stack = Vec::with_capacity(64);
        if !self.nodes.is_empty() {
            stack.push(0);
        }
        while let Some(id) = stack.pop() {
            let node = &self.nodes[id];
            let b = node.bbox;
            let pad = 1e-12 * (b[2] - b[0]).max(b[3] - b[1]);
            if p[0] < b[0] - pad || p[0] > b[2] + pad || p[1] < b[1] - pad || p[1] > b[3] + pad {
                continue;
            }
            match node.kind {
                NodeKind::Inner(l, r) => {
                    stack.push(l);
                    stack.push(r);
                }
                NodeKind::Leaf(s, e) => {
                    for &t in &self.order[s..e] {
                        let bb = self.boxes[t];
                        let tpad = 1e-9 * (bb[2] - bb[0]).max(bb[3] - bb[1]);
                        if p[0] < bb[0] - tpad || p[0] > bb[2] + tpad || p[1] < bb[1] - tpad || p[1] > bb[3] + tpad {
                            continue;
                        }
                        let l = barycentric(mesh.triangle_points(t), p);
                        let worst = l[0].min(l[1]).min(l[2]);
                        if worst >= 0.0 {
                            return Some((t, l));
                        }
                        if worst >= -TOL && best.as_ref().is_none_or(|b| worst > b.2) {
                            best = Some((t, l, worst));
                        }
                    }
                }
            }
        }
        best.map(|(t, l, _)| (t, l))
    }
}
