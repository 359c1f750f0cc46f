use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;

use super::field::{ScalarField, P3};
use super::profile::RadialProfile;
use crate::error::{Error, Result};
use crate::geometry::DomainSpec;
use crate::quadrature::gauss_interval;
use crate::Point;

/// Exponent below which a decay profile is not considered to decay.
pub const DECAY_THRESHOLD: f64 = 0.1;
/// Exponent below which a growth profile is flagged as diverging.
pub const GROWTH_THRESHOLD: f64 = -0.1;

const RADIAL_NODES: usize = 40;
const ANGLE_NODES: usize = 256;
const POLAR_NODES: usize = 48;
const AZIMUTH_NODES: usize = 128;
const SUP_RADIAL: usize = 32;
const SUP_ANGLES: usize = 128;

/// Offsets and weights of a product rule on the ball of radius `r`,
/// with density `weight(rho)` absorbed into the radial factor.
fn ball_rule(dim: usize, r: f64, nr: usize, weight: impl Fn(f64) -> f64) -> Vec<(P3, f64)> {
    let radial = gauss_interval::<f64>(nr, 0.0, r);
    let mut out = Vec::new();
    if dim == 2 {
        let dt = 2.0 * PI / ANGLE_NODES as f64;
        for &(rho, wr) in &radial {
            for k in 0..ANGLE_NODES {
                let th = (k as f64 + 0.5) * dt;
                out.push(([rho * th.cos(), rho * th.sin(), 0.0], wr * rho * weight(rho) * dt));
            }
        }
    } else {
        let polar = gauss_interval::<f64>(POLAR_NODES, -1.0, 1.0);
        let dp = 2.0 * PI / AZIMUTH_NODES as f64;
        for &(rho, wr) in &radial {
            for &(c, wc) in &polar {
                let s = (1.0 - c * c).sqrt();
                for k in 0..AZIMUTH_NODES {
                    let ph = (k as f64 + 0.5) * dp;
                    out.push(([rho * s * ph.cos(), rho * s * ph.sin(), rho * c], wr * wc * rho * rho * weight(rho) * dp));
                }
            }
        }
    }
    out
}

/// Planar rule for the three-dimensional weight `|x|^{-1}` integrated out over
/// the dummy variable: density `2 ln((r + sqrt(r^2 - rho^2)) / rho)`.
fn lifted_rule(r: f64, nr: usize) -> Vec<(P3, f64)> {
    let dt = 2.0 * PI / ANGLE_NODES as f64;
    let mut out = Vec::new();
    for (t, wt) in gauss_interval::<f64>(nr, 0.0, PI / 2.0) {
        let (s, c) = t.sin_cos();
        let rho = r * s;
        let kernel = 2.0 * ((1.0 + c) / s).ln();
        let w = wt * r * r * s * c * kernel * dt;
        for k in 0..ANGLE_NODES {
            let th = (k as f64 + 0.5) * dt;
            out.push(([rho * th.cos(), rho * th.sin(), 0.0], w));
        }
    }
    out
}

/// Sample offsets for suprema, including the centre and the sphere of radius `r`.
fn sup_samples(dim: usize, r: f64) -> Vec<P3> {
    let mut out = vec![[0.0; 3]];
    for j in 1..=SUP_RADIAL {
        let rho = r * j as f64 / SUP_RADIAL as f64;
        if dim == 2 {
            for k in 0..SUP_ANGLES {
                let th = 2.0 * PI * k as f64 / SUP_ANGLES as f64;
                out.push([rho * th.cos(), rho * th.sin(), 0.0]);
            }
        } else {
            for i in 0..=SUP_ANGLES / 4 {
                let pol = PI * i as f64 / (SUP_ANGLES / 4) as f64;
                for k in 0..SUP_ANGLES / 2 {
                    let az = 4.0 * PI * k as f64 / SUP_ANGLES as f64;
                    out.push([rho * pol.sin() * az.cos(), rho * pol.sin() * az.sin(), rho * pol.cos()]);
                }
            }
        }
    }
    out
}

fn shift(x0: &[f64], d: P3) -> P3 {
    let c = |i: usize| x0.get(i).copied().unwrap_or(0.0);
    [c(0) + d[0], c(1) + d[1], c(2) + d[2]]
}

fn outside(x: P3) -> Error {
    Error::Config(format!("ball leaves the domain of the field at ({}, {}, {})", x[0], x[1], x[2]))
}

fn integrate(rule: &[(P3, f64)], x0: &[f64], f: impl Fn(P3) -> Option<f64>) -> Result<f64> {
    let mut s = 0.0;
    for &(d, w) in rule {
        let x = shift(x0, d);
        s += f(x).ok_or_else(|| outside(x))? * w;
    }
    Ok(s)
}

fn ball_volume(dim: usize, r: f64) -> f64 {
    if dim == 2 {
        PI * r * r
    } else {
        4.0 / 3.0 * PI * r.powi(3)
    }
}

fn check_dim(w: &dyn ScalarField, x0: &[f64]) -> Result<usize> {
    let d = w.dim();
    if !(d == 2 || d == 3) || x0.len() != d {
        return Err(Error::Config(format!("centre of length {} for a field of dimension {d}", x0.len())));
    }
    Ok(d)
}

/// Mean of `w` and of `w_+^2` over balls.
#[derive(Clone, Debug, Serialize)]
pub struct BallAverages {
    pub mean: RadialProfile,
    pub positive_l2: RadialProfile,
}

pub fn ball_average(w: &dyn ScalarField, x0: &[f64], radii: &[f64]) -> Result<BallAverages> {
    let dim = check_dim(w, x0)?;
    let vals: Vec<(f64, f64)> = radii
        .par_iter()
        .map(|&r| {
            let rule = ball_rule(dim, r, RADIAL_NODES, |_| 1.0);
            let vol = ball_volume(dim, r);
            let m = integrate(&rule, x0, |x| w.value(x))?;
            let p = integrate(&rule, x0, |x| w.positive_part(x).map(|v| v * v))?;
            Ok((m / vol, p / vol))
        })
        .collect::<Result<_>>()?;
    Ok(BallAverages {
        mean: RadialProfile::new("ball_mean", x0, radii.to_vec(), vals.iter().map(|v| v.0).collect())?,
        positive_l2: RadialProfile::new("ball_positive_l2", x0, radii.to_vec(), vals.iter().map(|v| v.1).collect())?,
    })
}

fn sup_profile(
    name: &str,
    w: &dyn ScalarField,
    x0: &[f64],
    radii: &[f64],
    f: impl Fn(f64) -> f64 + Sync,
) -> Result<RadialProfile> {
    let dim = check_dim(w, x0)?;
    let vals: Vec<f64> = radii
        .par_iter()
        .map(|&r| {
            let mut sup: f64 = 0.0;
            for d in sup_samples(dim, r) {
                let x = shift(x0, d);
                sup = sup.max(f(w.value(x).ok_or_else(|| outside(x))?));
            }
            Ok(sup / r)
        })
        .collect::<Result<_>>()?;
    RadialProfile::new(name, x0, radii.to_vec(), vals)
}

/// Growth profile with its verdict.
#[derive(Clone, Debug, Serialize)]
pub struct ProbeReport {
    pub profile: RadialProfile,
    pub verdict: String,
}

/// `sup_{B_r} |w| / r`.
pub fn linear_growth_probe(w: &dyn ScalarField, x0: &[f64], radii: &[f64]) -> Result<ProbeReport> {
    let profile = sup_profile("linear_growth", w, x0, radii, f64::abs)?;
    let verdict = if profile.fitted_points >= 2 && profile.exponent < GROWTH_THRESHOLD {
        "super_lipschitz"
    } else {
        "lipschitz_consistent"
    };
    Ok(ProbeReport { profile, verdict: verdict.into() })
}

/// `sup_{B_r} w_- / r`.
pub fn negative_part_decay(w: &dyn ScalarField, x0: &[f64], radii: &[f64]) -> Result<ProbeReport> {
    let profile = sup_profile("negative_part_decay", w, x0, radii, |v| (-v).max(0.0))?;
    let decays = profile.fitted_points < 2 || profile.exponent > DECAY_THRESHOLD;
    Ok(ProbeReport { profile, verdict: if decays { "decays" } else { "no_decay" }.into() })
}

#[derive(Clone, Debug, Serialize)]
pub struct PositivityReport {
    pub delta: f64,
    pub samples: usize,
    pub minimum: f64,
    pub witness: [f64; 2],
    pub positive: bool,
}

/// Minimum of `w` over points of `domain` within `delta` of the boundary,
/// optionally restricted to the disk `window = (centre, radius)`.
pub fn positivity_scan(
    w: &dyn ScalarField,
    domain: &DomainSpec,
    delta: f64,
    window: Option<(Point, f64)>,
    per_piece: usize,
) -> Result<PositivityReport> {
    if !(delta > 0.0) || per_piece == 0 {
        return Err(Error::Config("positivity scan needs delta > 0 and at least one sample".into()));
    }
    let offsets: Vec<f64> =
        (1..=16).map(|j| delta * j as f64 / 16.0).chain((5..=12).map(|j| delta * 0.5f64.powi(j))).collect();
    let mut best = (f64::INFINITY, [f64::NAN; 2]);
    let mut n = 0;
    for piece in domain.pieces() {
        for i in 0..per_piece {
            let t = (i as f64 + 0.5) / per_piece as f64;
            let (b, nu) = (piece.point_at(t), piece.normal_at(t));
            for &s in &offsets {
                let x = b + nu * s;
                if !domain.contains(x) || domain.boundary_distance(x).0 > delta * (1.0 + 1e-12) {
                    continue;
                }
                if window.is_some_and(|(c, r)| c.dist(x) > r) {
                    continue;
                }
                let Some(v) = w.value([x.x, x.y, 0.0]) else { continue };
                n += 1;
                if v < best.0 {
                    best = (v, [x.x, x.y]);
                }
            }
        }
    }
    if n == 0 {
        return Err(Error::Config("positivity scan found no samples in the strip".into()));
    }
    Ok(PositivityReport { delta, samples: n, minimum: best.0, witness: best.1, positive: best.0 > 0.0 })
}

/// Weighted Dirichlet energy of `w_+` (`sign = 1`) or `w_-` on a ball.
fn acf_energy(w: &dyn ScalarField, x0: &[f64], rule: &[(P3, f64)], sign: f64) -> Result<f64> {
    integrate(rule, x0, |x| w.part_gradient(x, sign).map(|g| g[0] * g[0] + g[1] * g[1] + g[2] * g[2]))
}

fn acf_rule(field_dim: usize, ambient: usize, r: f64, nr: usize) -> Vec<(P3, f64)> {
    match (field_dim, ambient) {
        (3, _) => ball_rule(3, r, nr, |rho| 1.0 / rho),
        (_, 3) => lifted_rule(r, nr),
        _ => ball_rule(2, r, nr, |_| 1.0),
    }
}

/// `r^{-4} (int |grad w_+|^2 |x - x0|^{2-n}) (int |grad w_-|^2 |x - x0|^{2-n})` over `B_r(x0)`.
pub fn acf_functional(w: &dyn ScalarField, x0: &[f64], radii: &[f64], ambient: usize) -> Result<RadialProfile> {
    let dim = check_dim(w, x0)?;
    if !(ambient == 2 || ambient == 3) || ambient < dim {
        return Err(Error::Config(format!("ambient dimension {ambient} for a field of dimension {dim}")));
    }
    let vals: Vec<f64> = radii
        .par_iter()
        .map(|&r| {
            let coarse = acf_rule(dim, ambient, r, RADIAL_NODES);
            let fine = acf_rule(dim, ambient, r, 2 * RADIAL_NODES);
            let mut prod = 1.0;
            for sign in [1.0, -1.0] {
                let a = acf_energy(w, x0, &coarse, sign)?;
                let b = acf_energy(w, x0, &fine, sign)?;
                if !b.is_finite() || b > 1.5 * a.max(f64::MIN_POSITIVE) && b > 1e-300 {
                    return Err(Error::Numerical(format!(
                        "weighted energy at radius {r} does not settle under refinement ({a} -> {b})"
                    )));
                }
                prod *= b;
            }
            Ok(prod / r.powi(4))
        })
        .collect::<Result<_>>()?;
    RadialProfile::new("acf", x0, radii.to_vec(), vals)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagnostics::field::AnalyticField;
    use crate::diagnostics::profile::dyadic_radii;

    fn half_plane() -> AnalyticField {
        AnalyticField::planar(|p| p.y.max(0.0), |p| [0.0, if p.y > 0.0 { 1.0 } else { 0.0 }])
    }

    #[test]
    fn half_plane_average() {
        let r = dyadic_radii(0.4);
        let b = ball_average(&half_plane(), &[0.0, 0.0], &r).unwrap();
        for (ri, v) in r.iter().zip(&b.mean.values) {
            assert!((v - 2.0 * ri / (3.0 * PI)).abs() < 1e-5 * ri, "{v}");
        }
        assert!((b.mean.exponent - 1.0).abs() < 1e-4);
        assert!((b.positive_l2.exponent - 2.0).abs() < 1e-4);
    }

    #[test]
    fn constants_and_subharmonic() {
        let c = AnalyticField::planar(|_| 2.5, |_| [0.0, 0.0]);
        let b = ball_average(&c, &[0.3, 0.1], &dyadic_radii(1.0)).unwrap();
        assert!(b.mean.values.iter().all(|v| (v - 2.5).abs() < 1e-12));
        assert!(b.mean.exponent.abs() < 1e-10);
        let q = AnalyticField::planar(|p| p.norm_sqr(), |p| [2.0 * p.x, 2.0 * p.y]);
        let b = ball_average(&q, &[0.0, 0.0], &dyadic_radii(1.0)).unwrap();
        for (r, v) in b.mean.radii.iter().zip(&b.mean.values) {
            assert!((v - r * r / 2.0).abs() < 1e-12);
        }
        assert!(b.mean.is_nondecreasing(0.0));
    }

    #[test]
    fn ball_outside_domain_is_config_error() {
        let w = half_plane().restricted(|x| x[0] * x[0] + x[1] * x[1] < 1.0);
        assert!(matches!(ball_average(&w, &[0.5, 0.0], &[0.8]), Err(Error::Config(_))));
    }

    #[test]
    fn growth_and_decay() {
        let r = dyadic_radii(0.5);
        let g = linear_growth_probe(&half_plane(), &[0.0, 0.0], &r).unwrap();
        assert!(g.profile.values.iter().all(|v| (v - 1.0).abs() < 1e-14));
        assert_eq!(g.verdict, "lipschitz_consistent");
        let sq = AnalyticField::planar(|p| p.norm().sqrt(), |p| [0.0, p.x * 0.0]);
        let g = linear_growth_probe(&sq, &[0.0, 0.0], &r).unwrap();
        assert!((g.profile.exponent + 0.5).abs() < 1e-10);
        assert_eq!(g.verdict, "super_lipschitz");
        let n = negative_part_decay(&half_plane(), &[0.0, 0.0], &r).unwrap();
        assert!(n.profile.is_identically_zero() && n.verdict == "decays");
        let lin = AnalyticField::planar(|p| p.y, |_| [0.0, 1.0]);
        let n = negative_part_decay(&lin, &[0.0, 0.0], &r).unwrap();
        assert!(n.profile.values.iter().all(|v| (v - 1.0).abs() < 1e-14));
        assert_eq!(n.verdict, "no_decay");
    }

    #[test]
    fn positivity() {
        let d = DomainSpec::square(1.0);
        let dist = AnalyticField::planar(|p| p.x.min(1.0 - p.x).min(p.y).min(1.0 - p.y), |_| [0.0, 0.0]);
        let rep = positivity_scan(&dist, &d, 0.1, None, 40).unwrap();
        assert!(rep.positive && rep.minimum > 0.0);
        let shifted = AnalyticField::planar(|p| p.y.max(0.0) - 0.01, |_| [0.0, 0.0]);
        let rep = positivity_scan(&shifted, &d, 0.1, Some((Point::new(0.5, 0.0), 0.2)), 40).unwrap();
        assert!(!rep.positive && rep.witness[1] <= 0.01 + 1e-12, "{rep:?}");
    }

    fn x1(dim: usize) -> AnalyticField {
        AnalyticField::new(dim, |x| x[0], |_| [1.0, 0.0, 0.0])
    }

    #[test]
    fn acf_linear_field() {
        let r = [0.5, 0.3, 0.1];
        let p = acf_functional(&x1(3), &[0.0; 3], &r, 3).unwrap();
        assert!(p.values.iter().all(|v| (v / (PI * PI) - 1.0).abs() < 1e-6), "{:?}", p.values);
        let l = acf_functional(&x1(2), &[0.0; 2], &r, 3).unwrap();
        assert!(l.values.iter().all(|v| (v / (PI * PI) - 1.0).abs() < 1e-3), "{:?}", l.values);
    }

    #[test]
    fn acf_product_field() {
        let w = AnalyticField::new(3, |x| x[0] * x[1], |x| [x[1], x[0], 0.0]);
        let p = acf_functional(&w, &[0.0; 3], &dyadic_radii(0.5), 3).unwrap();
        assert!((p.exponent - 4.0).abs() < 1e-6);
        assert!((p.prefactor / (PI * PI / 9.0) - 1.0).abs() < 1e-6);
    }

    #[test]
    fn acf_detects_divergence() {
        let w = AnalyticField::new(3, |x| x[0], |x| {
            let r = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
            [r.powf(-1.5), 0.0, 0.0]
        });
        assert!(matches!(acf_functional(&w, &[0.0; 3], &[0.5], 3), Err(Error::Numerical(_))));
    }
}
