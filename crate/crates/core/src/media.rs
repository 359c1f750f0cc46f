//! Anisotropic coefficients `(A, rho)`, their extension by `(Id, 1)` outside
//! the scatterer, and media obtained by pushing the Laplacian forward
//! through a diffeomorphism.

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::geometry::{DomainKind, DomainSpec};
use crate::scalar::{Mat2, Real, Sym2, Vec2};

/// Maps `Omega` onto itself, with inverse and Jacobian.
#[derive(Clone, Debug, PartialEq)]
pub enum Diffeomorphism<T> {
    Identity,
    /// `x -> s x`.
    Scaling { s: T },
    /// `x -> x + c psi(x) e` inside a convex polygon, identity outside.
    /// `psi` is the product of the edge distance functions, so it vanishes
    /// on the boundary and has zero gradient at the corners.
    Bump {
        vertices: Vec<Vec2<T>>,
        /// Unit direction `e`.
        direction: Vec2<T>,
        /// Effective coefficient `c`.
        coeff: T,
    },
}

impl<T: Real> Diffeomorphism<T> {
    /// Bump family on a convex polygon. `strength` in `[0, 1)` bounds
    /// `c |grad psi|`, hence `det DPhi >= 1 - strength`.
    pub fn bump(domain: &DomainSpec, strength: T, angle: T) -> Result<Self> {
        let DomainKind::Polygon { vertices } = &domain.kind else {
            if let DomainKind::Square { side } = domain.kind {
                let s = side;
                let poly = DomainSpec::polygon(vec![[0.0, 0.0], [s, 0.0], [s, s], [0.0, s]])
                    .with_offset(domain.offset);
                return Self::bump(&poly, strength, angle);
            }
            return Err(Error::Config("bump diffeomorphism needs a polygon or square domain".into()));
        };
        if !(strength >= T::zero() && strength < T::one()) {
            return Err(Error::Config(format!("bump strength must lie in [0, 1), got {strength}")));
        }
        domain.validate()?;
        let off = Vec2::new(T::lit(domain.offset[0]), T::lit(domain.offset[1]));
        let verts: Vec<Vec2<T>> =
            vertices.iter().map(|v| Vec2::new(T::lit(v[0]), T::lit(v[1])) + off).collect();
        let n = verts.len();
        for i in 0..n {
            let a = verts[i];
            let b = verts[(i + 1) % n];
            let c = verts[(i + 2) % n];
            if (b - a).cross(c - b) <= T::zero() {
                return Err(Error::Config("bump diffeomorphism needs a strictly convex polygon".into()));
            }
        }
        let mut phi = Self::Bump { vertices: verts.clone(), direction: Vec2::from_angle(angle), coeff: T::one() };
        // Bound |grad psi| by dense sampling of the bounding box.
        let (mut lo, mut hi) = (verts[0], verts[0]);
        for v in &verts {
            lo = Vec2::new(lo.x.min(v.x), lo.y.min(v.y));
            hi = Vec2::new(hi.x.max(v.x), hi.y.max(v.y));
        }
        let k = 200;
        let mut gmax = T::zero();
        for i in 0..=k {
            for j in 0..=k {
                let p = Vec2::new(
                    lo.x + (hi.x - lo.x) * T::from_usize_lossy(i) / T::from_usize_lossy(k),
                    lo.y + (hi.y - lo.y) * T::from_usize_lossy(j) / T::from_usize_lossy(k),
                );
                if let Some((_, g)) = psi(&verts, p) {
                    gmax = gmax.max(g.norm());
                }
            }
        }
        if let Self::Bump { coeff, .. } = &mut phi {
            *coeff = strength / (gmax * T::lit(1.05));
        }
        Ok(phi)
    }

    pub fn forward(&self, x: Vec2<T>) -> Vec2<T> {
        match self {
            Self::Identity => x,
            Self::Scaling { s } => x * *s,
            Self::Bump { vertices, direction, coeff } => match psi(vertices, x) {
                Some((v, _)) => x + *direction * (*coeff * v),
                None => x,
            },
        }
    }

    pub fn inverse(&self, y: Vec2<T>) -> Result<Vec2<T>> {
        match self {
            Self::Identity => Ok(y),
            Self::Scaling { s } => Ok(y * (T::one() / *s)),
            Self::Bump { vertices, direction, coeff } => {
                if psi(vertices, y).is_none() {
                    return Ok(y);
                }
                let mut x = y;
                for _ in 0..200 {
                    let v = psi(vertices, x).map_or(T::zero(), |p| p.0);
                    let next = y - *direction * (*coeff * v);
                    let step = (next - x).norm();
                    x = next;
                    if step <= T::epsilon() * T::lit(4.0) * (T::one() + y.norm()) {
                        return Ok(x);
                    }
                }
                Err(Error::Numerical(format!(
                    "inverse map iteration did not converge at ({}, {})",
                    y.x, y.y
                )))
            }
        }
    }

    pub fn jacobian(&self, x: Vec2<T>) -> Mat2<T> {
        match self {
            Self::Identity => Mat2::identity(),
            Self::Scaling { s } => Mat2::new(*s, T::zero(), T::zero(), *s),
            Self::Bump { vertices, direction, coeff } => match psi(vertices, x) {
                Some((_, g)) => {
                    let e = *direction * *coeff;
                    Mat2::new(T::one() + e.x * g.x, e.x * g.y, e.y * g.x, T::one() + e.y * g.y)
                }
                None => Mat2::identity(),
            },
        }
    }

    pub fn is_boundary_fixing(&self) -> bool {
        !matches!(self, Self::Scaling { .. })
    }
}

/// Product of inward edge distances and its gradient, for points in the closed polygon.
fn psi<T: Real>(verts: &[Vec2<T>], x: Vec2<T>) -> Option<(T, Vec2<T>)> {
    let n = verts.len();
    let mut ls = Vec::with_capacity(n);
    let mut ns = Vec::with_capacity(n);
    for i in 0..n {
        let a = verts[i];
        let b = verts[(i + 1) % n];
        let nrm = (b - a).normalized().perp();
        let l = (x - a).dot(nrm);
        if l < T::zero() {
            return None;
        }
        ls.push(l);
        ns.push(nrm);
    }
    let value = ls.iter().fold(T::one(), |acc, &l| acc * l);
    let mut g = Vec2::zero();
    for i in 0..n {
        let others = (0..n).filter(|&j| j != i).fold(T::one(), |acc, j| acc * ls[j]);
        g += ns[i] * others;
    }
    Some((value, g))
}

#[derive(Clone, Debug, PartialEq)]
pub enum MediumKind<T> {
    Constant { a: Sym2<T>, rho: T },
    /// Entry-wise closed forms; `a[0][1]` and `a[1][0]` are checked for symmetry.
    Expression { a: [[Expr; 2]; 2], rho: Expr },
    Pushforward { phi: Diffeomorphism<T> },
}

/// Coefficients `A` (symmetric 2x2) and `rho` on the closure of `Omega`.
#[derive(Clone, Debug, PartialEq)]
pub struct MediumCoefficients<T> {
    pub kind: MediumKind<T>,
    /// Ellipticity constant certified on a sample set.
    pub c_ellip: Option<T>,
    /// Declared smoothness class; recorded, not verified.
    pub regularity: String,
}

impl<T: Real> MediumCoefficients<T> {
    pub fn isotropic(a: T, rho: T) -> Self {
        Self::constant(Sym2::scalar(a), rho)
    }

    pub fn constant(a: Sym2<T>, rho: T) -> Self {
        Self { kind: MediumKind::Constant { a, rho }, c_ellip: None, regularity: "constant".into() }
    }

    pub fn vacuum() -> Self {
        Self::isotropic(T::one(), T::one())
    }

    pub fn expression(a: [[Expr; 2]; 2], rho: Expr) -> Self {
        Self { kind: MediumKind::Expression { a, rho }, c_ellip: None, regularity: "declared smooth".into() }
    }

    /// Full (possibly non-symmetric) matrix and density at `x`.
    fn raw(&self, x: Vec2<T>) -> Result<(Mat2<T>, T)> {
        match &self.kind {
            MediumKind::Constant { a, rho } => Ok((Mat2::new(a.xx, a.xy, a.xy, a.yy), *rho)),
            MediumKind::Expression { a, rho } => {
                let (px, py) = (x.x.as_f64(), x.y.as_f64());
                let e = |ex: &Expr| T::lit(ex.eval(px, py));
                Ok((Mat2::new(e(&a[0][0]), e(&a[0][1]), e(&a[1][0]), e(&a[1][1])), e(rho)))
            }
            MediumKind::Pushforward { phi } => {
                let pre = phi.inverse(x)?;
                let j = phi.jacobian(pre);
                let det = j.det();
                let g = j.gram();
                Ok((Mat2::new(g.xx / det, g.xy / det, g.xy / det, g.yy / det), T::one() / det))
            }
        }
    }

    /// `(A(x), rho(x))`.
    pub fn eval(&self, x: Vec2<T>) -> Result<(Sym2<T>, T)> {
        let (m, rho) = self.raw(x)?;
        let half = T::lit(0.5);
        Ok((Sym2::new(m.m[0][0], (m.m[0][1] + m.m[1][0]) * half, m.m[1][1]), rho))
    }

    pub fn a(&self, x: Vec2<T>) -> Result<Sym2<T>> {
        Ok(self.eval(x)?.0)
    }

    pub fn rho(&self, x: Vec2<T>) -> Result<T> {
        Ok(self.eval(x)?.1)
    }

    /// Compute and store the ellipticity constant on `samples`.
    pub fn certify(mut self, samples: &[Vec2<T>]) -> Result<Self> {
        self.c_ellip = Some(ellipticity_constant(&self, samples)?);
        Ok(self)
    }

    pub fn is_vacuum(&self) -> bool {
        match &self.kind {
            MediumKind::Constant { a, rho } => *a == Sym2::identity() && *rho == T::one(),
            MediumKind::Pushforward { phi } => *phi == Diffeomorphism::Identity,
            MediumKind::Expression { .. } => false,
        }
    }
}

/// Smallest `c >= 1` with `|xi|^2 / c <= xi.A xi <= c |xi|^2` on the samples.
pub fn ellipticity_constant<T: Real>(medium: &MediumCoefficients<T>, samples: &[Vec2<T>]) -> Result<T> {
    if samples.is_empty() {
        return Err(Error::Config("ellipticity check needs at least one sample point".into()));
    }
    let mut c = T::one();
    let mut bad = Vec::new();
    let mut reasons = Vec::new();
    for &x in samples {
        let (m, rho) = medium.raw(x)?;
        let scale = T::one() + m.m[0][1].abs().max(m.m[1][0].abs());
        if (m.m[0][1] - m.m[1][0]).abs() > T::lit(1e-12) * scale {
            bad.push([x.x.as_f64(), x.y.as_f64()]);
            reasons.push("non-symmetric A");
            continue;
        }
        let s = Sym2::new(m.m[0][0], m.m[0][1], m.m[1][1]);
        let (lo, hi) = s.eigenvalues();
        if !(lo > T::zero()) || !hi.is_finite() {
            bad.push([x.x.as_f64(), x.y.as_f64()]);
            reasons.push("A not positive definite");
            continue;
        }
        if !(rho > T::zero()) || !rho.is_finite() {
            bad.push([x.x.as_f64(), x.y.as_f64()]);
            reasons.push("rho not positive");
            continue;
        }
        c = c.max(hi).max(T::one() / lo);
    }
    if !bad.is_empty() {
        reasons.sort_unstable();
        reasons.dedup();
        return Err(Error::Validation {
            message: format!("medium fails at {} sample(s): {}", bad.len(), reasons.join(", ")),
            points: bad,
        });
    }
    Ok(c)
}

/// Pushforward of `(Id, 1)` through `phi`: `A = DPhi DPhi^T / det`, `rho = 1 / det`,
/// both evaluated at `Phi^{-1}(y)`.
pub fn pushforward_medium<T: Real>(phi: Diffeomorphism<T>, domain: &DomainSpec) -> Result<MediumCoefficients<T>> {
    let samples = domain_samples::<T>(domain, 40);
    let mut bad = Vec::new();
    for &y in &samples {
        let x = phi.inverse(y)?;
        let det = phi.jacobian(x).det();
        if !(det > T::zero()) || !det.is_finite() {
            bad.push([y.x.as_f64(), y.y.as_f64()]);
        }
    }
    if !bad.is_empty() {
        return Err(Error::Validation { message: "degenerate Jacobian of the diffeomorphism".into(), points: bad });
    }
    let regularity = match phi {
        Diffeomorphism::Bump { .. } => "Lipschitz across the boundary, polynomial inside".into(),
        _ => "constant".into(),
    };
    let m = MediumCoefficients { kind: MediumKind::Pushforward { phi }, c_ellip: None, regularity };
    m.certify(&samples)
}

/// Grid of points in the closure of `Omega`, including boundary samples.
pub fn domain_samples<T: Real>(domain: &DomainSpec, n: usize) -> Vec<Vec2<T>> {
    let pieces = domain.pieces();
    let mut lo = Vec2::new(f64::INFINITY, f64::INFINITY);
    let mut hi = Vec2::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
    let mut out = Vec::new();
    for piece in &pieces {
        for k in 0..=n {
            let p = piece.point_at(k as f64 / n as f64);
            lo = Vec2::new(lo.x.min(p.x), lo.y.min(p.y));
            hi = Vec2::new(hi.x.max(p.x), hi.y.max(p.y));
            out.push(p.cast());
        }
    }
    for i in 0..=n {
        for j in 0..=n {
            let p = Vec2::new(
                lo.x + (hi.x - lo.x) * i as f64 / n as f64,
                lo.y + (hi.y - lo.y) * j as f64 / n as f64,
            );
            if domain.contains(p) {
                out.push(p.cast());
            }
        }
    }
    out
}

/// `(A, rho)` inside `Omega` and `(Id, 1)` outside.
#[derive(Clone, Debug)]
pub struct ExtendedMedium<T> {
    pub medium: MediumCoefficients<T>,
    pub domain: DomainSpec,
    /// Boundary points within this distance use the interior limit.
    pub boundary_tol: f64,
}

pub fn extend_to_freespace<T: Real>(medium: MediumCoefficients<T>, domain: &DomainSpec) -> ExtendedMedium<T> {
    let tol = 1e-12 * domain.circumradius().max(1.0);
    ExtendedMedium { medium, domain: domain.clone(), boundary_tol: tol }
}

impl<T: Real> ExtendedMedium<T> {
    pub fn eval(&self, x: Vec2<T>) -> Result<(Sym2<T>, T)> {
        let p = x.cast::<f64>();
        if self.domain.contains(p) || self.domain.boundary_distance(p).0 <= self.boundary_tol {
            self.medium.eval(x)
        } else {
            Ok((Sym2::identity(), T::one()))
        }
    }

    pub fn ellipticity(&self) -> Option<T> {
        self.medium.c_ellip.map(|c| c.max(T::one()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    type P = Vec2<f64>;

    fn grid() -> Vec<P> {
        (0..10).flat_map(|i| (0..10).map(move |j| P::new(i as f64 * 0.1, j as f64 * 0.1))).collect()
    }

    #[test]
    fn ellipticity_examples() {
        let s = grid();
        assert_eq!(ellipticity_constant(&MediumCoefficients::isotropic(1.0, 1.0), &s).unwrap(), 1.0);
        assert_eq!(ellipticity_constant(&MediumCoefficients::isotropic(2.0, 1.0), &s).unwrap(), 2.0);
        assert_eq!(ellipticity_constant(&MediumCoefficients::constant(Sym2::diag(1.0, 4.0), 1.0), &s).unwrap(), 4.0);
        assert_eq!(ellipticity_constant(&MediumCoefficients::isotropic(0.25, 1.0), &s).unwrap(), 4.0);
    }

    #[test]
    fn validation_lists_points() {
        let e = |s: &str| Expr::parse(s).unwrap();
        let m = MediumCoefficients::<f64>::expression([[e("1"), e("x")], [e("0"), e("1")]], e("1"));
        match ellipticity_constant(&m, &[P::new(0.0, 0.0), P::new(0.5, 0.0)]) {
            Err(Error::Validation { points, .. }) => assert_eq!(points, vec![[0.5, 0.0]]),
            other => panic!("{other:?}"),
        }
        let m = MediumCoefficients::<f64>::expression([[e("1"), e("0")], [e("0"), e("x - 0.5")]], e("1"));
        assert!(matches!(ellipticity_constant(&m, &grid()), Err(Error::Validation { .. })));
    }

    #[test]
    fn pushforward_examples() {
        let d = DomainSpec::square(1.0);
        let id = pushforward_medium(Diffeomorphism::<f64>::Identity, &d).unwrap();
        let (a, rho) = id.eval(P::new(0.3, 0.4)).unwrap();
        assert_eq!(a, Sym2::identity());
        assert_eq!(rho, 1.0);
        let sc = pushforward_medium(Diffeomorphism::Scaling { s: 2.0 }, &d).unwrap();
        let (a, rho) = sc.eval(P::new(0.3, 0.4)).unwrap();
        assert!((a.xx - 1.0).abs() < 1e-15 && a.xy.abs() < 1e-15 && (a.yy - 1.0).abs() < 1e-15);
        assert!((rho - 0.25).abs() < 1e-15);
    }

    #[test]
    fn bump_fixes_corners_and_boundary() {
        let d = DomainSpec::polygon(vec![[-0.6, -0.5], [0.7, -0.4], [0.5, 0.6], [-0.3, 0.7], [-0.8, 0.1]]);
        let phi = Diffeomorphism::bump(&d, 0.5, 0.7).unwrap();
        let m = pushforward_medium(phi.clone(), &d).unwrap();
        for c in d.corner_points() {
            let (a, rho) = m.eval(c.point).unwrap();
            assert!((a.xx - 1.0).abs() < 1e-15 && a.xy.abs() < 1e-15 && (a.yy - 1.0).abs() < 1e-15);
            assert!((rho - 1.0).abs() < 1e-15);
        }
        for piece in d.pieces() {
            let p = piece.point_at(0.37);
            assert!(phi.forward(p).dist(p) < 1e-15);
        }
        let x = P::new(0.1, 0.05);
        assert!(phi.inverse(phi.forward(x)).unwrap().dist(x) < 1e-13);
        assert!(phi.forward(x).dist(x) > 1e-3);
        assert!(m.c_ellip.unwrap() > 1.0);
    }

    #[test]
    fn extension_outside_is_vacuum() {
        let d = DomainSpec::square(1.0);
        let ext = extend_to_freespace(MediumCoefficients::isotropic(3.0, 2.0).certify(&grid()).unwrap(), &d);
        assert_eq!(ext.eval(P::new(2.0, 0.5)).unwrap(), (Sym2::identity(), 1.0));
        assert_eq!(ext.eval(P::new(0.5, 0.5)).unwrap(), (Sym2::scalar(3.0), 2.0));
        assert_eq!(ext.eval(P::new(1.0, 0.5)).unwrap(), (Sym2::scalar(3.0), 2.0));
        assert_eq!(ext.ellipticity(), Some(3.0));
    }

    #[test]
    fn pushforward_density_integrates_to_area() {
        let d = DomainSpec::square(1.0);
        let m = pushforward_medium(Diffeomorphism::bump(&d, 0.6, 0.3).unwrap(), &d).unwrap();
        let rule = crate::quadrature::gauss_interval(24, 0.0, 1.0);
        let mut total = 0.0;
        for &(x, wx) in &rule {
            for &(y, wy) in &rule {
                total += wx * wy * m.rho(P::new(x, y)).unwrap();
            }
        }
        assert!((total - 1.0).abs() < 1e-6, "{total}");
    }
}
