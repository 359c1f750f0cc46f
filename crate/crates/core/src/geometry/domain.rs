use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{Real, Vec2};
use crate::Point;

/// Shape of the scatterer, before placement.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DomainKind {
    /// `{0 < r < radius, 0 < theta < ell * pi / m}`.
    Sector { m: u32, ell: u32, radius: f64 },
    /// Simple polygon, vertices counterclockwise.
    Polygon { vertices: Vec<[f64; 2]> },
    /// `(0, side)^2`.
    Square { side: f64 },
    Disk { radius: f64 },
}

/// A bounded scatterer `Omega`: a shape translated by `offset`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DomainSpec {
    #[serde(flatten)]
    pub kind: DomainKind,
    #[serde(default)]
    pub offset: [f64; 2],
}

/// One smooth piece of the boundary, traversed with `Omega` on the left.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum BoundaryPiece {
    Line { a: Point, b: Point },
    Arc { center: Point, radius: f64, start: f64, end: f64 },
}

impl BoundaryPiece {
    pub fn length(&self) -> f64 {
        match *self {
            BoundaryPiece::Line { a, b } => a.dist(b),
            BoundaryPiece::Arc { radius, start, end, .. } => radius * (end - start).abs(),
        }
    }

    /// Point at arclength fraction `t` in `[0, 1]`.
    pub fn point_at(&self, t: f64) -> Point {
        match *self {
            BoundaryPiece::Line { a, b } => a + (b - a) * t,
            BoundaryPiece::Arc { center, radius, start, end } => {
                center + Point::from_polar(radius, start + (end - start) * t)
            }
        }
    }

    /// Unit tangent in the direction of traversal.
    pub fn tangent_at(&self, t: f64) -> Point {
        match *self {
            BoundaryPiece::Line { a, b } => (b - a).normalized(),
            BoundaryPiece::Arc { start, end, .. } => {
                let phi = start + (end - start) * t;
                let s = if end >= start { 1.0 } else { -1.0 };
                Point::from_angle(phi).perp() * s
            }
        }
    }

    /// Inward unit normal (left of the direction of traversal).
    pub fn normal_at(&self, t: f64) -> Point {
        self.tangent_at(t).perp()
    }

    /// Closest point parameter and distance.
    pub fn project(&self, p: Point) -> (f64, f64) {
        match *self {
            BoundaryPiece::Line { a, b } => {
                let d = b - a;
                let t = ((p - a).dot(d) / d.norm_sqr()).clamp(0.0, 1.0);
                (t, p.dist(a + d * t))
            }
            BoundaryPiece::Arc { center, start, end, .. } => {
                let phi = (p - center).angle();
                let (lo, hi) = if start <= end { (start, end) } else { (end, start) };
                let mut best = (0.0, f64::INFINITY);
                // Candidate angles: the projection (modulo 2 pi) and both endpoints.
                for k in -2..=2 {
                    let cand = phi + 2.0 * PI * k as f64;
                    if cand >= lo && cand <= hi {
                        let t = (cand - start) / (end - start);
                        let d = p.dist(self.point_at(t));
                        if d < best.1 {
                            best = (t, d);
                        }
                    }
                }
                for t in [0.0, 1.0] {
                    let d = p.dist(self.point_at(t));
                    if d < best.1 {
                        best = (t, d);
                    }
                }
                best
            }
        }
    }

    pub fn is_curved(&self) -> bool {
        matches!(self, BoundaryPiece::Arc { .. })
    }
}

/// A corner of `Omega` and its interior angle.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Corner {
    pub point: Point,
    pub angle: f64,
    /// Index of the boundary piece that starts at this corner.
    pub piece: usize,
}

impl DomainSpec {
    pub fn new(kind: DomainKind) -> Self {
        Self { kind, offset: [0.0, 0.0] }
    }

    pub fn with_offset(mut self, offset: [f64; 2]) -> Self {
        self.offset = offset;
        self
    }

    pub fn sector(m: u32, ell: u32, radius: f64) -> Self {
        Self::new(DomainKind::Sector { m, ell, radius })
    }

    pub fn square(side: f64) -> Self {
        Self::new(DomainKind::Square { side })
    }

    pub fn disk(radius: f64) -> Self {
        Self::new(DomainKind::Disk { radius })
    }

    pub fn polygon(vertices: Vec<[f64; 2]>) -> Self {
        Self::new(DomainKind::Polygon { vertices })
    }

    fn shift(&self) -> Point {
        Point::new(self.offset[0], self.offset[1])
    }

    /// Opening angle of a sector domain.
    pub fn sector_angle(&self) -> Option<f64> {
        match self.kind {
            DomainKind::Sector { m, ell, .. } => Some(ell as f64 * PI / m as f64),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.offset[0].is_finite() && self.offset[1].is_finite()) {
            return Err(Error::Config("domain.offset must be finite".into()));
        }
        match &self.kind {
            DomainKind::Sector { m, ell, radius } => {
                if *m < 2 {
                    return Err(Error::Config(format!("domain.m must be >= 2, got {m}")));
                }
                if *ell < 1 || *ell >= 2 * m {
                    return Err(Error::Config(format!(
                        "domain.ell must satisfy 1 <= ell <= 2m - 1 = {}, got {ell}",
                        2 * m - 1
                    )));
                }
                positive("domain.radius", *radius)
            }
            DomainKind::Square { side } => positive("domain.side", *side),
            DomainKind::Disk { radius } => positive("domain.radius", *radius),
            DomainKind::Polygon { vertices } => validate_polygon(vertices),
        }
    }

    /// Boundary pieces in counterclockwise order.
    pub fn pieces(&self) -> Vec<BoundaryPiece> {
        let o = self.shift();
        match &self.kind {
            DomainKind::Sector { radius, .. } => {
                let phi = self.sector_angle().unwrap();
                vec![
                    BoundaryPiece::Line { a: o, b: o + Point::new(*radius, 0.0) },
                    BoundaryPiece::Arc { center: o, radius: *radius, start: 0.0, end: phi },
                    BoundaryPiece::Line { a: o + Point::from_polar(*radius, phi), b: o },
                ]
            }
            DomainKind::Square { side } => {
                let s = *side;
                let v = [
                    Point::new(0.0, 0.0),
                    Point::new(s, 0.0),
                    Point::new(s, s),
                    Point::new(0.0, s),
                ];
                (0..4)
                    .map(|i| BoundaryPiece::Line { a: o + v[i], b: o + v[(i + 1) % 4] })
                    .collect()
            }
            DomainKind::Disk { radius } => vec![BoundaryPiece::Arc {
                center: o,
                radius: *radius,
                start: 0.0,
                end: 2.0 * PI,
            }],
            DomainKind::Polygon { vertices } => {
                let n = vertices.len();
                (0..n)
                    .map(|i| {
                        let a = vertices[i];
                        let b = vertices[(i + 1) % n];
                        BoundaryPiece::Line {
                            a: o + Point::new(a[0], a[1]),
                            b: o + Point::new(b[0], b[1]),
                        }
                    })
                    .collect()
            }
        }
    }

    /// Whether `p` lies in the open set `Omega`.
    pub fn contains<T: Real>(&self, p: Vec2<T>) -> bool {
        let p = p.cast::<f64>() - self.shift();
        match &self.kind {
            DomainKind::Sector { radius, .. } => {
                let r = p.norm();
                if r <= 0.0 || r >= *radius {
                    return false;
                }
                let mut th = p.angle();
                if th < 0.0 {
                    th += 2.0 * PI;
                }
                th > 0.0 && th < self.sector_angle().unwrap()
            }
            DomainKind::Square { side } => p.x > 0.0 && p.x < *side && p.y > 0.0 && p.y < *side,
            DomainKind::Disk { radius } => p.norm() < *radius,
            DomainKind::Polygon { vertices } => {
                let pts: Vec<Point> = vertices.iter().map(|v| Point::new(v[0], v[1])).collect();
                if polygon_boundary_distance(&pts, p) < 1e-14 {
                    return false;
                }
                point_in_polygon(&pts, p)
            }
        }
    }

    /// All boundary points where the one-sided tangents differ.
    pub fn corner_points(&self) -> Vec<Corner> {
        let pieces = self.pieces();
        let n = pieces.len();
        let mut out = Vec::new();
        for i in 0..n {
            let prev = pieces[(i + n - 1) % n];
            let next = pieces[i];
            let t_in = prev.tangent_at(1.0);
            let t_out = next.tangent_at(0.0);
            let turn = t_in.cross(t_out).atan2(t_in.dot(t_out));
            if turn.abs() > 1e-12 {
                out.push(Corner { point: next.point_at(0.0), angle: PI - turn, piece: i });
            }
        }
        out
    }

    /// Distance from `p` to the boundary and the closest piece with its parameter.
    pub fn boundary_distance(&self, p: Point) -> (f64, usize, f64) {
        let mut best = (f64::INFINITY, 0, 0.0);
        for (i, piece) in self.pieces().iter().enumerate() {
            let (t, d) = piece.project(p);
            if d < best.0 {
                best = (d, i, t);
            }
        }
        best
    }

    /// Inward unit normal at a smooth boundary point. Points within
    /// `corner_tol` of a corner are rejected; use [`Self::corner_points`].
    pub fn inward_normal(&self, p: Point, corner_tol: f64) -> Result<Point> {
        for c in self.corner_points() {
            if c.point.dist(p) <= corner_tol {
                return Err(Error::Ambiguity(format!(
                    "point ({}, {}) is within {corner_tol} of the corner at ({}, {}); \
                     the normal is not unique there, query corner_points instead",
                    p.x, p.y, c.point.x, c.point.y
                )));
            }
        }
        let (d, i, t) = self.boundary_distance(p);
        let scale = self.circumradius().max(1.0);
        if d > 1e-8 * scale {
            return Err(Error::Domain(format!(
                "point ({}, {}) is not on the boundary (distance {d})",
                p.x, p.y
            )));
        }
        Ok(self.pieces()[i].normal_at(t))
    }

    /// Radius of the smallest origin-centred ball containing the closure of `Omega`.
    pub fn circumradius(&self) -> f64 {
        let mut r: f64 = 0.0;
        for piece in self.pieces() {
            match piece {
                BoundaryPiece::Line { a, b } => r = r.max(a.norm()).max(b.norm()),
                BoundaryPiece::Arc { .. } => {
                    for k in 0..=256 {
                        r = r.max(piece.point_at(k as f64 / 256.0).norm());
                    }
                    if let BoundaryPiece::Arc { center, radius, start, end } = piece {
                        let dir = center.angle();
                        for k in -2..=2 {
                            let a = dir + 2.0 * PI * k as f64;
                            if a >= start.min(end) && a <= start.max(end) {
                                r = r.max(center.norm() + radius);
                            }
                        }
                    }
                }
            }
        }
        r
    }

    pub fn area(&self) -> f64 {
        match &self.kind {
            DomainKind::Sector { radius, .. } => 0.5 * radius * radius * self.sector_angle().unwrap(),
            DomainKind::Square { side } => side * side,
            DomainKind::Disk { radius } => PI * radius * radius,
            DomainKind::Polygon { vertices } => {
                let pts: Vec<Point> = vertices.iter().map(|v| Point::new(v[0], v[1])).collect();
                signed_area(&pts)
            }
        }
    }

    pub fn perimeter(&self) -> f64 {
        self.pieces().iter().map(|p| p.length()).sum()
    }

    /// Local graph representation of the boundary near `x0`.
    pub fn local_frame(&self, x0: Point, patch_radius: f64) -> Result<LocalFrame> {
        let corners = self.corner_points();
        let scale = self.circumradius().max(1.0);
        if let Some(c) = corners.iter().find(|c| c.point.dist(x0) <= 1e-9 * scale) {
            let pieces = self.pieces();
            let n = pieces.len();
            let t_in = pieces[(c.piece + n - 1) % n].tangent_at(1.0);
            let t_out = pieces[c.piece].tangent_at(0.0);
            // Inward bisector: rotate the incoming reversed tangent by half the interior angle.
            let back = -t_in;
            let half = 0.5 * c.angle;
            let normal = Point::new(
                t_out.x * half.cos() - t_out.y * half.sin(),
                t_out.x * half.sin() + t_out.y * half.cos(),
            );
            let _ = back;
            let deviation = 0.5 * (PI - c.angle);
            let slope = deviation.tan();
            return Ok(LocalFrame {
                base: x0,
                normal,
                lipschitz: slope.abs(),
                patch_radius,
                profile: GraphProfile::Wedge { slope },
            });
        }
        let (d, i, t) = self.boundary_distance(x0);
        if d > 1e-8 * scale {
            return Err(Error::Domain(format!(
                "local frame requested off the boundary (distance {d})"
            )));
        }
        let piece = self.pieces()[i];
        let normal = piece.normal_at(t);
        let (profile, lipschitz) = match piece {
            BoundaryPiece::Line { .. } => (GraphProfile::Flat, 0.0),
            BoundaryPiece::Arc { radius, .. } => {
                let e = patch_radius.min(0.999 * radius);
                (GraphProfile::Circle { radius }, e / (radius * radius - e * e).sqrt())
            }
        };
        Ok(LocalFrame { base: x0, normal, lipschitz, patch_radius, profile })
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if !(v > 0.0) || !v.is_finite() {
        return Err(Error::Config(format!("{name} must be positive and finite, got {v}")));
    }
    Ok(())
}

/// Boundary shape in local coordinates `(t, s)`: the boundary is `s = f(t)`
/// with `s` measured along the inward normal.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum GraphProfile {
    Flat,
    /// Circle of the given radius curving towards the interior.
    Circle { radius: f64 },
    /// `f(t) = slope * |t|`; positive slope for convex corners.
    Wedge { slope: f64 },
}

/// Rotated and translated coordinates in which the boundary near `base`
/// is the graph of a Lipschitz function `f` with `f(0) = 0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LocalFrame {
    pub base: Point,
    pub normal: Point,
    pub lipschitz: f64,
    pub patch_radius: f64,
    pub profile: GraphProfile,
}

impl LocalFrame {
    /// Graph function `f(t)`.
    pub fn graph(&self, t: f64) -> f64 {
        match self.profile {
            GraphProfile::Flat => 0.0,
            GraphProfile::Circle { radius } => radius - (radius * radius - t * t).max(0.0).sqrt(),
            GraphProfile::Wedge { slope } => slope * t.abs(),
        }
    }

    /// Tangent direction, so that `(tangent, normal)` is positively oriented.
    pub fn tangent(&self) -> Point {
        -self.normal.perp()
    }

    /// Map local coordinates to the plane.
    pub fn to_global(&self, t: f64, s: f64) -> Point {
        self.base + self.tangent() * t + self.normal * s
    }

    pub fn to_local(&self, p: Point) -> (f64, f64) {
        let d = p - self.base;
        (d.dot(self.tangent()), d.dot(self.normal))
    }
}

pub(crate) fn signed_area(pts: &[Point]) -> f64 {
    let n = pts.len();
    0.5 * (0..n).map(|i| pts[i].cross(pts[(i + 1) % n])).sum::<f64>()
}

pub(crate) fn point_in_polygon(pts: &[Point], p: Point) -> bool {
    let n = pts.len();
    let mut inside = false;
    let mut j = n - 1;
    for i in 0..n {
        let (a, b) = (pts[i], pts[j]);
        if (a.y > p.y) != (b.y > p.y) {
            let x = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
            if p.x < x {
                inside = !inside;
            }
        }
        j = i;
    }
    inside
}

fn polygon_boundary_distance(pts: &[Point], p: Point) -> f64 {
    let n = pts.len();
    (0..n)
        .map(|i| BoundaryPiece::Line { a: pts[i], b: pts[(i + 1) % n] }.project(p).1)
        .fold(f64::INFINITY, f64::min)
}

fn segments_cross(a: Point, b: Point, c: Point, d: Point) -> bool {
    let o = |p: Point, q: Point, r: Point| (q - p).cross(r - p);
    let d1 = o(c, d, a);
    let d2 = o(c, d, b);
    let d3 = o(a, b, c);
    let d4 = o(a, b, d);
    ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0)) && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
}

fn validate_polygon(vertices: &[[f64; 2]]) -> Result<()> {
    if vertices.len() < 3 {
        return Err(Error::Config("polygon needs at least 3 vertices".into()));
    }
    if vertices.iter().any(|v| !v[0].is_finite() || !v[1].is_finite()) {
        return Err(Error::Config("polygon vertices must be finite".into()));
    }
    let pts: Vec<Point> = vertices.iter().map(|v| Point::new(v[0], v[1])).collect();
    if signed_area(&pts) <= 0.0 {
        return Err(Error::Config("polygon vertices must be counterclockwise".into()));
    }
    let n = pts.len();
    for i in 0..n {
        if pts[i].dist(pts[(i + 1) % n]) == 0.0 {
            return Err(Error::Config(format!("polygon has repeated vertex {i}")));
        }
        for j in i + 1..n {
            if j == i + 1 || (i == 0 && j == n - 1) {
                continue;
            }
            if segments_cross(pts[i], pts[(i + 1) % n], pts[j], pts[(j + 1) % n]) {
                return Err(Error::Config(format!(
                    "polygon is not simple: edges {i} and {j} intersect"
                )));
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_corners_and_normals() {
        let sq = DomainSpec::square(1.0);
        let c = sq.corner_points();
        assert_eq!(c.len(), 4);
        for corner in &c {
            assert!((corner.angle - PI / 2.0).abs() < 1e-12);
        }
        let n = sq.inward_normal(Point::new(0.3, 0.0), 0.01).unwrap();
        assert!((n - Point::new(0.0, 1.0)).norm() < 1e-14);
        assert!(matches!(sq.inward_normal(Point::new(0.0, 0.0), 0.01), Err(Error::Ambiguity(_))));
    }

    #[test]
    fn sector_geometry() {
        let s = DomainSpec::sector(2, 3, 1.0);
        let corners = s.corner_points();
        assert_eq!(corners.len(), 3);
        let origin = corners.iter().find(|c| c.point.norm() < 1e-14).unwrap();
        assert!((origin.angle - 1.5 * PI).abs() < 1e-12);
        for c in corners.iter().filter(|c| c.point.norm() > 0.5) {
            assert!((c.angle - PI / 2.0).abs() < 1e-12);
        }
        for (m, ell) in [(2u32, 1u32), (3, 2), (5, 3)] {
            let s = DomainSpec::sector(m, ell, 1.0);
            let phi = ell as f64 * PI / m as f64;
            let n = s.inward_normal(Point::from_polar(0.5, phi), 1e-3).unwrap();
            assert!((n - Point::new(phi.sin(), -phi.cos())).norm() < 1e-12);
        }
        // ell = m: the origin is a flat boundary point.
        assert_eq!(DomainSpec::sector(2, 2, 1.0).corner_points().len(), 2);
    }

    #[test]
    fn disk_normal_and_no_corners() {
        let d = DomainSpec::disk(1.0);
        assert!(d.corner_points().is_empty());
        let n = d.inward_normal(Point::new(1.0, 0.0), 0.0).unwrap();
        assert!((n - Point::new(-1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn local_frames() {
        let sq = DomainSpec::square(1.0);
        let f = sq.local_frame(Point::new(0.5, 0.0), 0.1).unwrap();
        assert_eq!(f.lipschitz, 0.0);
        assert_eq!(f.graph(0.05), 0.0);
        let c = sq.local_frame(Point::new(1.0, 1.0), 0.1).unwrap();
        assert!((c.lipschitz - 1.0).abs() < 1e-12);
        assert!((c.graph(-0.03) - 0.03).abs() < 1e-12);
        // The corner's graph reproduces both edges.
        for t in [-0.05, 0.05] {
            let p = c.to_global(t, c.graph(t));
            assert!(sq.boundary_distance(p).0 < 1e-12);
        }
        let s = DomainSpec::sector(2, 1, 1.0).local_frame(Point::new(0.0, 0.0), 0.1).unwrap();
        assert!((s.lipschitz - 1.0).abs() < 1e-12);
    }

    #[test]
    fn polygon_validation() {
        let ok = DomainSpec::polygon(vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]);
        assert!(ok.validate().is_ok());
        let cw = DomainSpec::polygon(vec![[0.0, 0.0], [0.0, 1.0], [1.0, 0.0]]);
        assert!(cw.validate().is_err());
        let bow = DomainSpec::polygon(vec![[0.0, 0.0], [1.0, 1.0], [1.0, 0.0], [0.0, 1.0]]);
        assert!(bow.validate().is_err());
        assert!(DomainSpec::sector(2, 3, 1.0).validate().is_ok());
        assert!(DomainSpec::sector(2, 4, 1.0).validate().is_err());
        assert!(DomainSpec::sector(1, 1, 1.0).validate().is_err());
    }

    #[test]
    fn inward_normals_point_inside() {
        let domains = [
            DomainSpec::square(1.0).with_offset([-0.5, -0.5]),
            DomainSpec::sector(3, 4, 1.0),
            DomainSpec::disk(0.7),
            DomainSpec::polygon(vec![[0.0, 0.0], [2.0, 0.0], [1.0, 0.5], [2.0, 1.0], [0.0, 1.0]]),
        ];
        for d in &domains {
            for piece in d.pieces() {
                for k in 1..10 {
                    let p = piece.point_at(k as f64 / 10.0);
                    let n = d.inward_normal(p, 1e-6).unwrap();
                    assert!((n.norm() - 1.0).abs() < 1e-12);
                    assert!(d.contains(p + n * 1e-6), "{:?} at {:?}", d.kind, p);
                    assert!(!d.contains(p - n * 1e-6));
                }
            }
        }
    }
}
