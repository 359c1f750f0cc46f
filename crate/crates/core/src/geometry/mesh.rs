//! Conforming triangulation of the scatterer, the exterior annulus and the
//! absorbing layer.

use std::collections::HashMap;
use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::delaunay::{Quality, Triangulation, OUTSIDE};
use crate::geometry::domain::{point_in_polygon, BoundaryPiece, DomainSpec};
use crate::Point;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Region {
    Interior,
    Exterior,
    Pml,
}

impl Region {
    pub fn tag(self) -> u8 {
        match self {
            Region::Interior => 0,
            Region::Exterior => 1,
            Region::Pml => 2,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeLabel {
    /// The scatterer boundary.
    Interface,
    /// Inner circle of the absorbing layer.
    PmlInterface,
    /// Outer circle, where the field is set to zero.
    Truncation,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundaryEdge {
    pub v: [usize; 2],
    pub label: EdgeLabel,
}

/// Triangulation of the disk `B(0, R + pml_width)` conforming to the scatterer.
#[derive(Clone, Debug)]
pub struct Mesh2D {
    pub vertices: Vec<Point>,
    /// Counterclockwise vertex triples.
    pub triangles: Vec<[usize; 3]>,
    pub regions: Vec<Region>,
    pub boundary_edges: Vec<BoundaryEdge>,
    pub h: f64,
    pub corner_vertices: Vec<usize>,
    pub truncation_radius: f64,
    pub pml_width: f64,
    pub corner_grading: f64,
    pub domain: DomainSpec,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct MeshStats {
    pub vertices: usize,
    pub triangles: usize,
    pub interior_triangles: usize,
    pub min_angle_deg: f64,
    pub max_edge: f64,
    pub min_edge: f64,
}

/// Default reduction of the mesh size at corners.
pub const DEFAULT_CORNER_GRADING: f64 = 8.0;
const MIN_ANGLE_DEG: f64 = 25.0;
const MAX_VERTICES: usize = 3_000_000;

/// Mesh the disk of radius `truncation_radius + pml_width` around the domain.
pub fn build_mesh(
    domain: &DomainSpec,
    h: f64,
    truncation_radius: f64,
    pml_width: f64,
    corner_grading: f64,
) -> Result<Mesh2D> {
    domain.validate()?;
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::Config(format!("mesh.h must be positive, got {h}")));
    }
    if !(pml_width > 0.0 && pml_width.is_finite()) {
        return Err(Error::Config(format!("pml.width must be positive, got {pml_width}")));
    }
    if !(corner_grading >= 1.0 && corner_grading.is_finite()) {
        return Err(Error::Config(format!(
            "mesh.corner_grading must be >= 1, got {corner_grading}"
        )));
    }
    let rc = domain.circumradius();
    if !(truncation_radius.is_finite() && rc + 0.5 * h <= truncation_radius) {
        return Err(Error::Config(format!(
            "domain (circumradius {rc:.4}) does not fit inside the truncation ball of radius \
             {truncation_radius} with margin h/2 = {}",
            0.5 * h
        )));
    }
    let outer = truncation_radius + pml_width;
    let cells = (outer / h).powi(2);
    if cells > 2.0e6 {
        return Err(Error::Config(format!(
            "mesh.h = {h} is too small for a disk of radius {outer} (about {cells:.0} cells)"
        )));
    }

    let corners: Vec<Point> = domain.corner_points().iter().map(|c| c.point).collect();
    let g = corner_grading;
    let size = move |p: Point| -> f64 {
        let d = corners.iter().map(|c| c.dist(p)).fold(f64::INFINITY, f64::min);
        h.min(h / g + 0.5 * d)
    };

    // Boundary loops.
    let mut omega: Vec<Point> = Vec::new();
    for piece in domain.pieces() {
        let pts = sample_piece(&piece, &size);
        omega.extend_from_slice(&pts[..pts.len() - 1]);
    }
    let n_r = ((2.0 * PI * truncation_radius / h).ceil() as usize).max(16);
    let n_o = ((2.0 * PI * outer / h).ceil() as usize).max(16);
    let circle = |r: f64, n: usize| -> Vec<Point> {
        (0..n).map(|k| Point::from_polar(r, 2.0 * PI * k as f64 / n as f64)).collect()
    };
    let ring_r = circle(truncation_radius, n_r);
    let ring_o = circle(outer, n_o);
    let chord_r = truncation_radius * (PI / n_r as f64).cos();
    if rc >= chord_r - 0.25 * h {
        return Err(Error::Config(format!(
            "domain (circumradius {rc:.4}) is too close to the truncation circle R = {truncation_radius}"
        )));
    }

    let mut tr = Triangulation::new(Point::new(0.0, 0.0), outer);
    let mut segments = Vec::new();
    for (pts, label) in [(&omega, 0u8), (&ring_r, 1), (&ring_o, 2)] {
        let mut idx = Vec::with_capacity(pts.len());
        for &p in pts.iter() {
            idx.push(tr.insert_point(p).ok_or_else(|| {
                Error::Numerical(format!("point insertion failed at ({}, {})", p.x, p.y))
            })?);
        }
        for i in 0..idx.len() {
            segments.push((idx[i], idx[(i + 1) % idx.len()], label));
        }
    }
    let min_seg = 1.0e-4 * h / g;
    tr.conform(&segments, min_seg).map_err(Error::Config)?;

    let classify = |p: Point| -> u8 {
        if point_in_polygon(&omega, p) {
            Region::Interior.tag()
        } else if point_in_polygon(&ring_r, p) {
            Region::Exterior.tag()
        } else if point_in_polygon(&ring_o, p) {
            Region::Pml.tag()
        } else {
            OUTSIDE
        }
    };
    tr.flood_regions(classify);
    let q = Quality {
        min_angle_deg: MIN_ANGLE_DEG,
        size: &size,
        min_segment: min_seg,
        max_vertices: MAX_VERTICES,
    };
    tr.refine(&q).map_err(Error::Config)?;

    let domain_corners = domain.corner_points();
    extract(tr, domain, h, truncation_radius, pml_width, corner_grading, &domain_corners)
}

/// Points along a piece whose spacing follows the size function.
fn sample_piece(piece: &BoundaryPiece, size: &dyn Fn(Point) -> f64) -> Vec<Point> {
    const STEPS: usize = 4000;
    let len = piece.length();
    let mut cum = vec![0.0; STEPS + 1];
    for i in 0..STEPS {
        let t = (i as f64 + 0.5) / STEPS as f64;
        cum[i + 1] = cum[i] + len / STEPS as f64 / size(piece.point_at(t));
    }
    let total = cum[STEPS];
    let min_n = if piece.is_curved() { 8 } else { 1 };
    let n = (total.ceil() as usize).max(min_n);
    let mut out = Vec::with_capacity(n + 1);
    out.push(piece.point_at(0.0));
    let mut j = 0;
    for k in 1..n {
        let target = total * k as f64 / n as f64;
        while cum[j + 1] < target {
            j += 1;
        }
        let frac = (target - cum[j]) / (cum[j + 1] - cum[j]);
        out.push(piece.point_at((j as f64 + frac) / STEPS as f64));
    }
    out.push(piece.point_at(1.0));
    out
}

fn extract(
    tr: Triangulation,
    domain: &DomainSpec,
    h: f64,
    truncation_radius: f64,
    pml_width: f64,
    corner_grading: f64,
    corners: &[crate::geometry::domain::Corner],
) -> Result<Mesh2D> {
    let mut map = vec![usize::MAX; tr.pts.len()];
    let mut vertices = Vec::new();
    let mut triangles = Vec::new();
    let mut regions = Vec::new();
    for t in 0..tr.tri.len() {
        if !tr.alive[t] || tr.region[t] == OUTSIDE {
            continue;
        }
        let mut tri = [0; 3];
        for (k, &v) in tr.tri[t].iter().enumerate() {
            if map[v] == usize::MAX {
                map[v] = vertices.len();
                vertices.push(tr.pts[v]);
            }
            tri[k] = map[v];
        }
        triangles.push(tri);
        regions.push(match tr.region[t] {
            0 => Region::Interior,
            1 => Region::Exterior,
            _ => Region::Pml,
        });
    }
    let mut boundary_edges: Vec<BoundaryEdge> = tr
        .segs
        .iter()
        .filter(|(k, _)| map[k.0] != usize::MAX && map[k.1] != usize::MAX)
        .map(|(k, &l)| BoundaryEdge {
            v: [map[k.0], map[k.1]],
            label: match l {
                0 => EdgeLabel::Interface,
                1 => EdgeLabel::PmlInterface,
                _ => EdgeLabel::Truncation,
            },
        })
        .collect();
    boundary_edges.sort_by_key(|e| (e.label as u8, e.v));
    let mut corner_vertices = Vec::new();
    for c in corners {
        let v = vertices
            .iter()
            .position(|&p| p.dist(c.point) <= 1e-12 * (1.0 + c.point.norm()))
            .ok_or_else(|| {
                Error::Numerical(format!("corner ({}, {}) missing from mesh", c.point.x, c.point.y))
            })?;
        corner_vertices.push(v);
    }
    Ok(Mesh2D {
        vertices,
        triangles,
        regions,
        boundary_edges,
        h,
        corner_vertices,
        truncation_radius,
        pml_width,
        corner_grading,
        domain: domain.clone(),
    })
}

impl Mesh2D {
    pub fn outer_radius(&self) -> f64 {
        self.truncation_radius + self.pml_width
    }

    pub fn corners(&self, t: usize) -> [Point; 3] {
        self.triangles[t].map(|v| self.vertices[v])
    }

    pub fn area(&self, t: usize) -> f64 {
        let [a, b, c] = self.corners(t);
        0.5 * (b - a).cross(c - a)
    }

    pub fn centroid(&self, t: usize) -> Point {
        let [a, b, c] = self.corners(t);
        (a + b + c) * (1.0 / 3.0)
    }

    /// Smallest interior angle of triangle `t`, in degrees.
    pub fn min_angle_deg(&self, t: usize) -> f64 {
        let p = self.corners(t);
        (0..3)
            .map(|i| {
                let u = p[(i + 1) % 3] - p[i];
                let v = p[(i + 2) % 3] - p[i];
                u.cross(v).abs().atan2(u.dot(v)).to_degrees()
            })
            .fold(f64::INFINITY, f64::min)
    }

    pub fn stats(&self) -> MeshStats {
        let mut max_edge: f64 = 0.0;
        let mut min_edge = f64::INFINITY;
        for t in 0..self.triangles.len() {
            let p = self.corners(t);
            for i in 0..3 {
                let l = p[i].dist(p[(i + 1) % 3]);
                max_edge = max_edge.max(l);
                min_edge = min_edge.min(l);
            }
        }
        MeshStats {
            vertices: self.vertices.len(),
            triangles: self.triangles.len(),
            interior_triangles: self.regions.iter().filter(|&&r| r == Region::Interior).count(),
            min_angle_deg: (0..self.triangles.len())
                .map(|t| self.min_angle_deg(t))
                .fold(f64::INFINITY, f64::min),
            max_edge,
            min_edge,
        }
    }

    /// Map from each undirected edge to the triangles containing it.
    pub fn edge_map(&self) -> HashMap<(usize, usize), Vec<usize>> {
        let mut m: HashMap<(usize, usize), Vec<usize>> = HashMap::new();
        for (t, tri) in self.triangles.iter().enumerate() {
            for i in 0..3 {
                let (a, b) = (tri[i], tri[(i + 1) % 3]);
                m.entry((a.min(b), a.max(b))).or_default().push(t);
            }
        }
        m
    }

    /// Every edge is shared by two triangles, except those on the outer circle.
    pub fn is_conforming(&self) -> bool {
        let truncation: std::collections::HashSet<(usize, usize)> = self
            .boundary_edges
            .iter()
            .filter(|e| e.label == EdgeLabel::Truncation)
            .map(|e| (e.v[0].min(e.v[1]), e.v[0].max(e.v[1])))
            .collect();
        self.edge_map().iter().all(|(k, ts)| match ts.len() {
            2 => !truncation.contains(k),
            1 => truncation.contains(k),
            _ => false,
        })
    }

    pub fn edges_with(&self, label: EdgeLabel) -> impl Iterator<Item = &BoundaryEdge> {
        self.boundary_edges.iter().filter(move |e| e.label == label)
    }

    /// Vertices on the outer circle.
    pub fn truncation_vertices(&self) -> Vec<bool> {
        let mut on = vec![false; self.vertices.len()];
        for e in self.edges_with(EdgeLabel::Truncation) {
            on[e.v[0]] = true;
            on[e.v[1]] = true;
        }
        on
    }

    /// Vertex adjacency lists, sorted.
    pub fn vertex_neighbors(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.vertices.len()];
        for tri in &self.triangles {
            for i in 0..3 {
                for j in 0..3 {
                    if i != j {
                        adj[tri[i]].push(tri[j]);
                    }
                }
            }
        }
        for a in &mut adj {
            a.sort_unstable();
            a.dedup();
        }
        adj
    }

    /// Triangles incident to each vertex.
    pub fn vertex_triangles(&self) -> Vec<Vec<usize>> {
        let mut vt = vec![Vec::new(); self.vertices.len()];
        for (t, tri) in self.triangles.iter().enumerate() {
            for &v in tri {
                vt[v].push(t);
            }
        }
        vt
    }

    /// Vertices that belong to at least one triangle of `region`.
    pub fn region_vertices(&self, region: Region) -> Vec<bool> {
        let mut on = vec![false; self.vertices.len()];
        for (tri, &r) in self.triangles.iter().zip(&self.regions) {
            if r == region {
                for &v in tri {
                    on[v] = true;
                }
            }
        }
        on
    }

    pub fn locator(&self) -> Locator<'_> {
        Locator::new(self)
    }

    /// Largest deviation of interface edges from the true boundary.
    pub fn interface_deviation(&self) -> f64 {
        let pieces = self.domain.pieces();
        let mut worst: f64 = 0.0;
        for e in self.edges_with(EdgeLabel::Interface) {
            let (a, b) = (self.vertices[e.v[0]], self.vertices[e.v[1]]);
            for k in 0..=4 {
                let p = a + (b - a) * (k as f64 / 4.0);
                let d = pieces
                    .iter()
                    .map(|pc| pc.project(p).1)
                    .fold(f64::INFINITY, f64::min);
                worst = worst.max(d);
            }
        }
        worst
    }
}

/// Barycentric coordinates of `p` in the triangle `(a, b, c)`.
pub fn barycentric(a: Point, b: Point, c: Point, p: Point) -> [f64; 3] {
    let det = (b - a).cross(c - a);
    let l1 = (p - a).cross(c - a) / det;
    let l2 = (b - a).cross(p - a) / det;
    [1.0 - l1 - l2, l1, l2]
}

/// Uniform-grid point location.
pub struct Locator<'a> {
    mesh: &'a Mesh2D,
    origin: Point,
    cell: f64,
    nx: usize,
    ny: usize,
    bins: Vec<Vec<usize>>,
}

impl<'a> Locator<'a> {
    pub fn new(mesh: &'a Mesh2D) -> Self {
        let mut lo = Point::new(f64::INFINITY, f64::INFINITY);
        let mut hi = Point::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        for p in &mesh.vertices {
            lo = Point::new(lo.x.min(p.x), lo.y.min(p.y));
            hi = Point::new(hi.x.max(p.x), hi.y.max(p.y));
        }
        let n = (mesh.triangles.len() as f64).sqrt().ceil().max(1.0);
        let span = (hi.x - lo.x).max(hi.y - lo.y).max(1e-12);
        let cell = span / n;
        let nx = ((hi.x - lo.x) / cell).floor() as usize + 1;
        let ny = ((hi.y - lo.y) / cell).floor() as usize + 1;
        let mut bins = vec![Vec::new(); nx * ny];
        for t in 0..mesh.triangles.len() {
            let p = mesh.corners(t);
            let (x0, x1) = (p.iter().map(|q| q.x).fold(f64::INFINITY, f64::min), p.iter().map(|q| q.x).fold(f64::NEG_INFINITY, f64::max));
            let (y0, y1) = (p.iter().map(|q| q.y).fold(f64::INFINITY, f64::min), p.iter().map(|q| q.y).fold(f64::NEG_INFINITY, f64::max));
            let i0 = ((x0 - lo.x) / cell).floor().max(0.0) as usize;
            let i1 = (((x1 - lo.x) / cell).floor() as usize).min(nx - 1);
            let j0 = ((y0 - lo.y) / cell).floor().max(0.0) as usize;
            let j1 = (((y1 - lo.y) / cell).floor() as usize).min(ny - 1);
            for j in j0..=j1 {
                for i in i0..=i1 {
                    bins[j * nx + i].push(t);
                }
            }
        }
        Self { mesh, origin: lo, cell, nx, ny, bins }
    }

    fn candidates(&self, p: Point) -> &[usize] {
        let i = ((p.x - self.origin.x) / self.cell).floor();
        let j = ((p.y - self.origin.y) / self.cell).floor();
        if i < 0.0 || j < 0.0 || i as usize >= self.nx || j as usize >= self.ny {
            return &[];
        }
        &self.bins[j as usize * self.nx + i as usize]
    }

    /// Triangle containing `p` and its barycentric coordinates, optionally
    /// restricted to one region.
    pub fn locate_in(&self, p: Point, region: Option<Region>) -> Option<(usize, [f64; 3])> {
        let mut best: Option<(usize, [f64; 3], f64)> = None;
        for &t in self.candidates(p) {
            if region.is_some_and(|r| self.mesh.regions[t] != r) {
                continue;
            }
            let [a, b, c] = self.mesh.corners(t);
            let l = barycentric(a, b, c, p);
            let worst = l.iter().copied().fold(f64::INFINITY, f64::min);
            if best.as_ref().is_none_or(|bb| worst > bb.2) {
                best = Some((t, l, worst));
            }
        }
        match best {
            Some((t, l, w)) if w >= -1e-9 => Some((t, l)),
            _ => None,
        }
    }

    pub fn locate(&self, p: Point) -> Option<(usize, [f64; 3])> {
        self.locate_in(p, None)
    }

    pub fn mesh(&self) -> &'a Mesh2D {
        self.mesh
    }
}
