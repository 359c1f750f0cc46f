use num_complex::Complex64;
use serde::Serialize;

use super::field::{ScalarField, P3};
use super::profile::{dyadic_radii, RadialProfile};
use crate::error::{Error, Result};
use crate::geometry::{DomainSpec, EdgeLabel, Mesh2D, Region};
use crate::incident::{Grad, IncidentField, IncidentKind};
use crate::media::MediumCoefficients;
use crate::quadrature::gauss_interval;
use crate::solver::ComplexField;
use crate::specfun::bessel_j;
use crate::Point;

type C = Complex64;

/// Values with modulus below this count as zero in sign reports.
const SIGN_TOL: f64 = 1e-12;

/// `nu.(Id - A) grad u_inc` at a boundary point with inward normal `nu`.
fn trace_at(medium: &MediumCoefficients<f64>, incident: &IncidentField<f64>, x: Point, nu: Point) -> Result<C> {
    let (a, _) = medium.eval(x)?;
    let an = a.apply(nu);
    let d = nu - an;
    let g = incident.gradient(x)?;
    Ok(g[0] * d.x + g[1] * d.y)
}

#[derive(Clone, Debug, Serialize)]
pub struct TraceSample {
    pub point: [f64; 2],
    pub piece: usize,
    pub t: f64,
    pub re: f64,
    pub im: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NondegeneracyVerdict {
    LowerBound { c: f64 },
    UpperBound { c: f64 },
    Degenerate { near: [f64; 2] },
}

/// Behaviour of the trace as a corner is approached along each adjacent piece.
#[derive(Clone, Debug, Serialize)]
pub struct CornerTrace {
    pub point: [f64; 2],
    /// Real part at the corner with the normal of the incoming and of the outgoing piece.
    pub one_sided: [f64; 2],
    /// Profiles of `|Re trace|` against distance along the incoming and the outgoing piece.
    pub approach: [RadialProfile; 2],
}

#[derive(Clone, Debug, Serialize)]
pub struct NondegeneracyReport {
    pub samples: Vec<TraceSample>,
    pub min_re: f64,
    pub max_re: f64,
    pub max_abs_im: f64,
    pub sign_changes: usize,
    pub corners: Vec<CornerTrace>,
    pub verdict: NondegeneracyVerdict,
}

/// Sample `nu.(Id - A) grad u_inc` on the boundary: `per_piece` midpoint samples
/// on every smooth piece and one-sided values and approach profiles at corners.
/// `corner_radius` defaults to an eighth of the shortest adjacent piece.
pub fn nondegeneracy_trace(
    medium: &MediumCoefficients<f64>,
    incident: &IncidentField<f64>,
    domain: &DomainSpec,
    per_piece: usize,
    corner_radius: Option<f64>,
) -> Result<NondegeneracyReport> {
    if per_piece == 0 {
        return Err(Error::Config("at least one sample per boundary piece is needed".into()));
    }
    let pieces = domain.pieces();
    let mut samples = Vec::new();
    for (i, pc) in pieces.iter().enumerate() {
        for k in 0..per_piece {
            let t = (k as f64 + 0.5) / per_piece as f64;
            let x = pc.point_at(t);
            let v = trace_at(medium, incident, x, pc.normal_at(t))?;
            samples.push(TraceSample { point: [x.x, x.y], piece: i, t, re: v.re, im: v.im });
        }
    }
    let n = pieces.len();
    let mut corners = Vec::new();
    for c in domain.corner_points() {
        let (prev, next) = (pieces[(c.piece + n - 1) % n], pieces[c.piece]);
        let r_max = corner_radius.unwrap_or(prev.length().min(next.length()) / 8.0);
        let radii = dyadic_radii(r_max);
        let one_sided = [
            trace_at(medium, incident, c.point, prev.normal_at(1.0))?.re,
            trace_at(medium, incident, c.point, next.normal_at(0.0))?.re,
        ];
        let mut approach = Vec::new();
        for (k, pc) in [prev, next].iter().enumerate() {
            let mut vals = Vec::new();
            for &r in &radii {
                let f = (r / pc.length()).min(1.0);
                let t = if k == 0 { 1.0 - f } else { f };
                vals.push(trace_at(medium, incident, pc.point_at(t), pc.normal_at(t))?.re.abs());
            }
            approach.push(RadialProfile::new("corner_trace", &[c.point.x, c.point.y], radii.clone(), vals)?);
        }
        let approach: [RadialProfile; 2] = approach.try_into().expect("two sides");
        corners.push(CornerTrace { point: [c.point.x, c.point.y], one_sided, approach });
    }

    let all_re = samples.iter().map(|s| s.re).chain(corners.iter().flat_map(|c| c.one_sided));
    let (min_re, max_re) = all_re.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    let max_abs_im = samples.iter().map(|s| s.im.abs()).fold(0.0, f64::max);
    let signs: Vec<f64> = samples.iter().filter(|s| s.re.abs() > SIGN_TOL).map(|s| s.re.signum()).collect();
    let sign_changes = signs.windows(2).filter(|w| w[0] != w[1]).count();
    let verdict = if min_re > SIGN_TOL {
        NondegeneracyVerdict::LowerBound { c: min_re }
    } else if max_re < -SIGN_TOL {
        NondegeneracyVerdict::UpperBound { c: -max_re }
    } else {
        let pts = samples.iter().map(|s| (s.re.abs(), s.point));
        let pts = pts.chain(corners.iter().map(|c| (c.one_sided[0].abs().min(c.one_sided[1].abs()), c.point)));
        let near = pts.min_by(|a, b| a.0.total_cmp(&b.0)).map(|p| p.1).unwrap_or([f64::NAN; 2]);
        NondegeneracyVerdict::Degenerate { near }
    };
    Ok(NondegeneracyReport { samples, min_re, max_re, max_abs_im, sign_changes, corners, verdict })
}

#[derive(Clone, Debug, Serialize)]
pub struct BernoulliSample {
    pub leg: usize,
    pub distance: f64,
    pub grad_norm: f64,
    /// `|grad w| / ((m / |x|) |J_m(alpha |x|)|)`.
    pub exact_ratio: f64,
    /// `|grad w| / (alpha^m / (2^m (m - 1)!) |x|^{m - 1})`.
    pub asymptote_ratio: f64,
    /// Derivative along the inward normal.
    pub d_nu: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct BernoulliReport {
    pub m: u32,
    pub ell: u32,
    pub k: usize,
    pub alpha: f64,
    pub samples: Vec<BernoulliSample>,
    pub max_exact_deviation: f64,
    /// Largest `|asymptote_ratio - 1|` over samples with `|x| <= small_radius`.
    pub max_asymptote_deviation: f64,
    pub small_radius: f64,
    /// Sign of `d_nu w` nearest the corner on each leg.
    pub leg_signs: [f64; 2],
    pub changes_sign: bool,
}

/// `|grad w|` for the sector mode on both legs at `per_leg` log-spaced distances
/// in `[r_min, r_max]`.
pub fn bernoulli_trace(
    m: u32,
    ell: u32,
    k: usize,
    per_leg: usize,
    r_min: f64,
    r_max: f64,
) -> Result<BernoulliReport> {
    if !(0.0 < r_min && r_min < r_max && r_max <= 0.5) || per_leg < 2 {
        return Err(Error::Config(format!(
            "leg samples need 0 < r_min < r_max <= 0.5 and at least two per leg, got [{r_min}, {r_max}] x {per_leg}"
        )));
    }
    let w = IncidentField::<f64>::sector_mode(m, ell, k)?;
    let alpha = w.kappa;
    let theta1 = ell as f64 * std::f64::consts::PI / m as f64;
    let dirs = [Point::new(1.0, 0.0), Point::from_angle(theta1)];
    let normals = [Point::new(0.0, 1.0), Point::from_angle(theta1).perp() * -1.0];
    let fact: f64 = (1..m).map(f64::from).product();
    let lead = alpha.powi(m as i32) / (2f64.powi(m as i32) * fact);
    let small_radius = 0.05;
    let mut samples = Vec::new();
    for leg in 0..2 {
        for j in 0..per_leg {
            let s = j as f64 / (per_leg - 1) as f64;
            let r = r_min * (r_max / r_min).powf(s);
            let x = dirs[leg] * r;
            let g = w.gradient(x)?;
            let gr = Point::new(g[0].re, g[1].re);
            let grad_norm = gr.norm();
            let exact = m as f64 / r * bessel_j(m, alpha * r)?.abs();
            samples.push(BernoulliSample {
                leg,
                distance: r,
                grad_norm,
                exact_ratio: grad_norm / exact,
                asymptote_ratio: grad_norm / (lead * r.powi(m as i32 - 1)),
                d_nu: gr.dot(normals[leg]),
            });
        }
    }
    let max_exact_deviation = samples.iter().map(|s| (s.exact_ratio - 1.0).abs()).fold(0.0, f64::max);
    let max_asymptote_deviation = samples
        .iter()
        .filter(|s| s.distance <= small_radius)
        .map(|s| (s.asymptote_ratio - 1.0).abs())
        .fold(0.0, f64::max);
    let leg_signs = [0, 1].map(|leg| {
        samples
            .iter()
            .filter(|s| s.leg == leg)
            .min_by(|a, b| a.distance.total_cmp(&b.distance))
            .map_or(0.0, |s| s.d_nu.signum())
    });
    Ok(BernoulliReport {
        m,
        ell,
        k,
        alpha,
        samples,
        max_exact_deviation,
        max_asymptote_deviation,
        small_radius,
        leg_signs,
        changes_sign: leg_signs[0] != leg_signs[1],
    })
}

/// A boundary quadrature point with its inward normal.
#[derive(Clone, Copy, Debug)]
pub struct BoundaryPoint {
    pub x: Point,
    pub nu: Point,
    pub weight: f64,
}

fn near_corner(domain: &DomainSpec, x: Point, exclusion: f64) -> bool {
    domain.corner_points().iter().any(|c| c.point.dist(x) < exclusion)
}

/// Gauss points on `segments` equal parts of every boundary piece, skipping
/// points within `exclusion` of a corner.
pub fn boundary_points(domain: &DomainSpec, segments: usize, exclusion: f64) -> Vec<BoundaryPoint> {
    let mut out = Vec::new();
    for pc in domain.pieces() {
        let len = pc.length();
        for s in 0..segments {
            let (t0, t1) = (s as f64 / segments as f64, (s + 1) as f64 / segments as f64);
            for (t, w) in gauss_interval::<f64>(4, t0, t1) {
                let x = pc.point_at(t);
                if !near_corner(domain, x, exclusion) {
                    out.push(BoundaryPoint { x, nu: pc.normal_at(t), weight: w * len });
                }
            }
        }
    }
    out
}

/// Gauss points on the interface edges of `mesh` with the interior triangle
/// and barycentric coordinates of each, skipping points within `exclusion` of a corner.
pub(crate) fn interface_points(mesh: &Mesh2D, exclusion: f64) -> Vec<(BoundaryPoint, usize, [f64; 3])> {
    let vt = mesh.vertex_triangles();
    let pieces = mesh.domain.pieces();
    let mut out = Vec::new();
    for e in mesh.edges_with(EdgeLabel::Interface) {
        let [v0, v1] = e.v;
        let Some(&t) = vt[v0].iter().find(|&&t| mesh.regions[t] == Region::Interior && mesh.triangles[t].contains(&v1))
        else {
            continue;
        };
        let tri = mesh.triangles[t];
        let (a, b) = (mesh.vertices[v0], mesh.vertices[v1]);
        for (s, w) in gauss_interval::<f64>(4, 0.0, 1.0) {
            let x = a + (b - a) * s;
            if near_corner(&mesh.domain, x, exclusion) {
                continue;
            }
            let bary = tri.map(|v| if v == v0 { 1.0 - s } else if v == v1 { s } else { 0.0 });
            let (pc, tt) = pieces
                .iter()
                .map(|pc| (pc, pc.project(x)))
                .min_by(|p, q| p.1 .1.total_cmp(&q.1 .1))
                .map(|(pc, (tt, _))| (pc, tt))
                .expect("domain has boundary pieces");
            out.push((BoundaryPoint { x, nu: pc.normal_at(tt), weight: w * a.dist(b) }, t, bary));
        }
    }
    out
}

#[derive(Clone, Debug, Serialize)]
pub struct FluxSample {
    pub point: [f64; 2],
    /// `(nu.A grad u_sc)_int - (d_nu u_sc)_ext`.
    pub conormal: C,
    /// `nu.(Id - A) grad u_inc`.
    pub jump: C,
}

#[derive(Clone, Debug, Serialize)]
pub struct FluxReport {
    pub samples: Vec<FluxSample>,
    pub exclusion: f64,
    /// `L^2` norm of the mismatch on the sampled boundary.
    pub absolute: f64,
    pub reference: f64,
    /// `None` when the reference vanishes.
    pub relative: Option<f64>,
    pub max_pointwise: f64,
}

/// Compare the flux jump `(nu.A grad u_sc)_int - (d_nu u_sc)_ext` with
/// `nu.(Id - A) grad u_inc` at the given boundary points. `grad_sc` receives the
/// index and the point and returns the interior and exterior gradients.
pub fn flux_identity(
    points: &[BoundaryPoint],
    grad_sc: impl Fn(usize, &BoundaryPoint) -> Result<(Grad<f64>, Grad<f64>)>,
    incident: &IncidentField<f64>,
    medium: &MediumCoefficients<f64>,
    exclusion: f64,
) -> Result<FluxReport> {
    let (mut abs2, mut ref2, mut maxp) = (0.0, 0.0, 0.0f64);
    let mut samples = Vec::with_capacity(points.len());
    for (i, bp) in points.iter().enumerate() {
        let (a, _) = medium.eval(bp.x)?;
        let an = a.apply(bp.nu);
        let (gi, ge) = grad_sc(i, bp)?;
        let lhs = gi[0] * an.x + gi[1] * an.y - (ge[0] * bp.nu.x + ge[1] * bp.nu.y);
        let rhs = trace_at(medium, incident, bp.x, bp.nu)?;
        abs2 += (lhs - rhs).norm_sqr() * bp.weight;
        ref2 += rhs.norm_sqr() * bp.weight;
        maxp = maxp.max((lhs - rhs).norm());
        samples.push(FluxSample { point: [bp.x.x, bp.x.y], conormal: lhs, jump: rhs });
    }
    let (absolute, reference) = (abs2.sqrt(), ref2.sqrt());
    let relative = (reference > 1e-14).then(|| absolute / reference);
    Ok(FluxReport { samples, exclusion, absolute, reference, relative, max_pointwise: maxp })
}

/// Flux identity for a finite-element scattered field, with one-sided recovered
/// gradients on both sides and corners excluded within `3h` unless `exclusion` is given.
pub fn flux_jump_check(
    u_sc: &ComplexField<'_>,
    incident: &IncidentField<f64>,
    medium: &MediumCoefficients<f64>,
    exclusion: Option<f64>,
) -> Result<FluxReport> {
    let mesh = u_sc.mesh;
    let ex = exclusion.unwrap_or(3.0 * mesh.h);
    let rec = u_sc.recover_gradients(&[Region::Interior]);
    let ext = u_sc.recover_helmholtz(&[Region::Exterior]);
    let loc = mesh.locator();
    let pts = interface_points(mesh, ex);
    let bps: Vec<BoundaryPoint> = pts.iter().map(|p| p.0).collect();
    flux_identity(
        &bps,
        |i, bp| {
            let gi = rec.at(pts[i].1, pts[i].2);
            let ge = ext
                .sample(&loc, bp.x, Some(Region::Exterior))
                .map(|s| s.1)
                .ok_or_else(|| Error::Numerical(format!("no exterior triangle at ({}, {})", bp.x.x, bp.x.y)))?;
            Ok((gi, ge))
        },
        incident,
        medium,
        ex,
    )
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SlopeVerdict {
    Conclusive,
    Inconclusive,
}

#[derive(Clone, Debug, Serialize)]
pub struct SlopeReport {
    pub radii: Vec<f64>,
    /// Least-squares slope on each ball.
    pub slopes: Vec<f64>,
    /// RMS fit residual on each ball, divided by the radius.
    pub residuals: Vec<f64>,
    /// Slope extrapolated to zero radius.
    pub beta: f64,
    /// `nu.A V / (nu.A nu)` at the base point.
    pub reference: f64,
    /// `nu.A V` at the base point.
    pub reference_literal: f64,
    pub gap: f64,
    pub gap_literal: f64,
    pub verdict: SlopeVerdict,
}

/// Fit `w ~ beta ((x - x0).nu0)_+` on balls `B_r(x0)` with dyadic radii from `r_max`.
pub fn slope_extract(
    w: &dyn ScalarField,
    x0: Point,
    nu0: Point,
    medium: &MediumCoefficients<f64>,
    v: &dyn Fn(Point) -> [f64; 2],
    r_max: f64,
) -> Result<SlopeReport> {
    if !(r_max > 0.0) || (nu0.norm() - 1.0).abs() > 1e-9 {
        return Err(Error::Config("slope fit needs r_max > 0 and a unit normal".into()));
    }
    let radii = dyadic_radii(r_max);
    let (nr, nt) = (16, 64);
    let mut slopes = Vec::new();
    let mut residuals = Vec::new();
    for &r in &radii {
        let mut pts = Vec::new();
        for i in 1..=nr {
            let rho = r * i as f64 / nr as f64;
            for j in 0..nt {
                let th = 2.0 * std::f64::consts::PI * (j as f64 + 0.5) / nt as f64;
                let x = x0 + Point::from_polar(rho, th);
                let s = (x - x0).dot(nu0).max(0.0);
                let val = w.value([x.x, x.y, 0.0] as P3).ok_or_else(|| {
                    Error::Config(format!("slope fit ball leaves the field's domain at ({}, {})", x.x, x.y))
                })?;
                pts.push((s, val));
            }
        }
        let ss: f64 = pts.iter().map(|p| p.0 * p.0).sum();
        let sw: f64 = pts.iter().map(|p| p.0 * p.1).sum();
        let b = sw / ss;
        let res = (pts.iter().map(|p| (p.1 - b * p.0).powi(2)).sum::<f64>() / pts.len() as f64).sqrt() / r;
        slopes.push(b);
        residuals.push(res);
    }
    let n = slopes.len();
    let (b0, b1, b2) = (slopes[n - 3], slopes[n - 2], slopes[n - 1]);
    let (d1, d2) = (b0 - b1, b1 - b2);
    let mut beta = b2;
    if d1.abs() > 1e-14 * b2.abs().max(1.0) && d2.abs() > 1e-14 * b2.abs().max(1.0) && d1 * d2 > 0.0 {
        let q = (d1 / d2).log2();
        if (0.25..=4.0).contains(&q) {
            beta = b2 - d2 / (2f64.powf(q) - 1.0);
        }
    }
    let a = medium.a(x0)?;
    let vx = v(x0);
    let av = a.apply(Point::new(vx[0], vx[1]));
    let reference_literal = nu0.dot(av);
    let reference = reference_literal / a.form(nu0, nu0);
    let gap = (beta - reference).abs() / reference.abs();
    let gap_literal = (beta - reference_literal).abs() / reference_literal.abs();
    let verdict = if residuals[n - 1] > 0.2 * beta.abs() {
        SlopeVerdict::Inconclusive
    } else {
        SlopeVerdict::Conclusive
    };
    Ok(SlopeReport { radii, slopes, residuals, beta, reference, reference_literal, gap, gap_literal, verdict })
}

/// The sector mode `w` with its wavenumber; errors for other incident kinds.
pub fn sector_parameters(incident: &IncidentField<f64>) -> Result<(u32, u32, usize)> {
    match incident.kind {
        IncidentKind::SectorMode { m, ell, k } => Ok((m, ell, k)),
        _ => Err(Error::Config("a sector-mode incident field is required".into())),
    }
}
