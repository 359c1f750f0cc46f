use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::farfield::FarFieldPattern;
use crate::incident::Grad;
use crate::specfun::{bessel_j_with_derivs, cylinder_functions};
use crate::Point;

type C = Complex64;

const I: C = C::new(0.0, 1.0);

/// Separation-of-variables solution for plane-wave scattering by a
/// homogeneous disk `A = a Id`, `rho = rho0` centered at the origin.
#[derive(Clone, Debug)]
pub struct DiskSeries {
    pub a: f64,
    pub rho0: f64,
    pub radius: f64,
    pub kappa: f64,
    pub kappa_in: f64,
    /// Incident angle.
    pub theta_d: f64,
    /// `c_m = i^m r[m]` for `m >= 0`; `c_{-m} = c_m`-symmetric in the cosine form.
    ratio: Vec<C>,
    /// Interior coefficients `b_m = i^m inner[m]`.
    inner: Vec<C>,
}

fn i_pow(m: usize) -> C {
    [C::new(1.0, 0.0), I, C::new(-1.0, 0.0), -I][m % 4]
}

pub fn disk_series_solution(a: f64, rho0: f64, radius: f64, kappa: f64, direction: Point) -> Result<DiskSeries> {
    for (name, v) in [("a", a), ("rho0", rho0), ("radius", radius), ("kappa", kappa)] {
        if !(v > 0.0) || !v.is_finite() {
            return Err(Error::Domain(format!("{name} must be positive and finite, got {v}")));
        }
    }
    if (direction.norm() - 1.0).abs() > 1e-6 {
        return Err(Error::Domain("incident direction must be a unit vector".into()));
    }
    let kappa_in = kappa * (rho0 / a).sqrt();
    let x = kappa * radius;
    let x1 = kappa_in * radius;
    let mmax = (3.0 * x.max(x1)).ceil() as usize + 40;
    let out = cylinder_functions(mmax, x);
    let inn = cylinder_functions(mmax, x1);
    let mut ratio = Vec::new();
    let mut inner = Vec::new();
    for m in 0..=mmax {
        let (j, jp, h, hp) = (out.j[m], out.jp[m], out.h[m], out.hp[m]);
        let (j1, j1p) = (inn.j[m], inn.jp[m]);
        if !h.is_finite() || !hp.is_finite() {
            break;
        }
        let num = kappa * jp * j1 - a * kappa_in * j1p * j;
        let den = h * (a * kappa_in * j1p) - hp * (kappa * j1);
        if den.norm() == 0.0 || !den.is_finite() {
            if num == 0.0 {
                break;
            }
            return Err(Error::Numerical(format!("mode matching is singular at order {m}")));
        }
        let r = num / den;
        let b = if j1.abs() >= (a * kappa_in * j1p / kappa).abs() {
            (r * h + j) / j1
        } else {
            (r * hp + jp) * kappa / (a * kappa_in * j1p)
        };
        ratio.push(r);
        inner.push(b);
        if m as f64 > x.max(x1) + 10.0 && r.norm() * h.norm() < 1e-17 && r.norm() < 1e-17 {
            break;
        }
    }
    Ok(DiskSeries {
        a,
        rho0,
        radius,
        kappa,
        kappa_in,
        theta_d: direction.y.atan2(direction.x),
        ratio,
        inner,
    })
}

impl DiskSeries {
    pub fn order(&self) -> usize {
        self.ratio.len() - 1
    }

    /// Scattered coefficient `c_m` of `H_m(kappa r) e^{i m (theta - theta_d)}`.
    pub fn coefficient(&self, m: i64) -> C {
        let k = m.unsigned_abs() as usize;
        self.ratio.get(k).map_or(C::new(0.0, 0.0), |r| i_pow(k) * r)
    }

    fn eps(m: usize) -> f64 {
        if m == 0 {
            1.0
        } else {
            2.0
        }
    }

    /// Scattered field and its gradient; inside the disk this is total minus incident.
    pub fn scattered(&self, p: Point) -> (C, Grad<f64>) {
        let r = p.norm();
        let th = if r == 0.0 { self.theta_d } else { p.y.atan2(p.x) };
        let phi = th - self.theta_d;
        let n = self.ratio.len() - 1;
        let (mut u, mut ur, mut ut) = (C::new(0.0, 0.0), C::new(0.0, 0.0), C::new(0.0, 0.0));
        if r >= self.radius {
            let f = cylinder_functions(n, self.kappa * r);
            for m in 0..=n {
                let c = i_pow(m) * self.ratio[m] * Self::eps(m);
                let (cs, sn) = ((m as f64 * phi).cos(), (m as f64 * phi).sin());
                u += c * f.h[m] * cs;
                ur += c * f.hp[m] * (self.kappa * cs);
                ut -= c * f.h[m] * (m as f64 * sn);
            }
        } else {
            let fi = bessel_j_with_derivs(n, self.kappa_in * r);
            let fo = bessel_j_with_derivs(n, self.kappa * r);
            for m in 0..=n {
                let b = i_pow(m) * Self::eps(m);
                let (cs, sn) = ((m as f64 * phi).cos(), (m as f64 * phi).sin());
                let jin = self.inner[m] * fi.0[m] - fo.0[m];
                let jinp = self.inner[m] * (fi.1[m] * self.kappa_in) - fo.1[m] * self.kappa;
                u += b * jin * cs;
                ur += b * jinp * cs;
                ut -= b * jin * (m as f64 * sn);
            }
        }
        if r == 0.0 {
            return (u, [ur * self.theta_d.cos(), ur * self.theta_d.sin()]);
        }
        let (c, s) = (th.cos(), th.sin());
        (u, [ur * c - ut * (s / r), ur * s + ut * (c / r)])
    }

    /// Far-field amplitude in the convention `u ~ e^{i pi/4} / sqrt(8 pi kappa) e^{i kappa r} r^{-1/2} u_inf`.
    pub fn far_field(&self, theta: f64) -> C {
        let phi = theta - self.theta_d;
        let s: C = self
            .ratio
            .iter()
            .enumerate()
            .map(|(m, r)| r * (Self::eps(m) * (m as f64 * phi).cos()))
            .sum();
        -4.0 * I * s
    }

    pub fn pattern(&self, n: usize) -> FarFieldPattern {
        let angles: Vec<f64> = (0..n).map(|k| 2.0 * PI * k as f64 / n as f64).collect();
        let values = angles.iter().map(|&t| self.far_field(t)).collect();
        FarFieldPattern::new(angles, values, self.kappa)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dir(t: f64) -> Point {
        Point::from_angle(t)
    }

    #[test]
    fn no_contrast_no_scattering() {
        let s = disk_series_solution(1.0, 1.0, 1.0, 2.0, dir(0.3)).unwrap();
        for m in 0..=s.order() as i64 {
            assert_eq!(s.coefficient(m).norm(), 0.0);
        }
    }

    #[test]
    fn optical_theorem() {
        for (a, rho, kappa) in [(2.0, 2.0, 1.0), (0.5, 3.0, 2.5), (1.0, 4.0, 1.7)] {
            let s = disk_series_solution(a, rho, 1.0, kappa, dir(0.0)).unwrap();
            let p = s.pattern(512);
            let lhs = p.norm().powi(2);
            let rhs = 8.0 * PI * s.far_field(0.0).im;
            assert!((lhs - rhs).abs() <= 1e-8 * lhs.max(1.0), "{lhs} {rhs}");
        }
    }

    #[test]
    fn coefficients_decay() {
        let (kappa, radius) = (1.0, 1.0);
        let s = disk_series_solution(2.0, 2.0, radius, kappa, dir(0.0)).unwrap();
        let m0 = (3.0 * kappa * radius + 20.0).ceil() as i64;
        for m in m0..m0 + 20 {
            assert!(s.coefficient(m).norm() <= 1e-12, "{m}");
        }
    }

    #[test]
    fn reciprocity() {
        let (t1, t2) = (0.4, 2.1);
        let a = disk_series_solution(2.0, 3.0, 1.0, 1.5, dir(t1)).unwrap();
        let b = disk_series_solution(2.0, 3.0, 1.0, 1.5, dir(t2 + PI)).unwrap();
        assert!((a.far_field(t2) - b.far_field(t1 + PI)).norm() < 1e-8);
    }

    #[test]
    fn transmission_conditions_hold_on_the_circle() {
        let s = disk_series_solution(2.0, 2.0, 1.0, 1.0, dir(0.0)).unwrap();
        let inc = |p: Point| C::new(0.0, p.x).exp();
        for k in 0..12 {
            let th = 0.5 * k as f64;
            let (pi, po) = (Point::from_polar(1.0 - 1e-9, th), Point::from_polar(1.0 + 1e-9, th));
            let n = Point::from_angle(th);
            let (ui, gi) = s.scattered(pi);
            let (uo, go) = s.scattered(po);
            // Total fields: inside a * d_r u_tot = outside d_r u_tot.
            let (tot_i, tot_o) = (ui + inc(pi), uo + inc(po));
            assert!((tot_i - tot_o).norm() < 1e-7);
            let dinc = C::new(0.0, n.x) * inc(pi);
            let fi = (gi[0] * n.x + gi[1] * n.y + dinc) * 2.0;
            let fo = go[0] * n.x + go[1] * n.y + dinc;
            assert!((fi - fo).norm() < 1e-6, "{fi} {fo}");
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let s = disk_series_solution(2.0, 2.0, 1.0, 1.0, dir(0.7)).unwrap();
        for p in [Point::new(0.3, -0.2), Point::new(1.7, 0.4), Point::new(-0.2, 2.5)] {
            let (_, g) = s.scattered(p);
            let e = 1e-6;
            let dx = (s.scattered(p + Point::new(e, 0.0)).0 - s.scattered(p - Point::new(e, 0.0)).0) / (2.0 * e);
            let dy = (s.scattered(p + Point::new(0.0, e)).0 - s.scattered(p - Point::new(0.0, e)).0) / (2.0 * e);
            assert!((dx - g[0]).norm() < 1e-6 && (dy - g[1]).norm() < 1e-6);
        }
    }

    #[test]
    fn far_field_matches_asymptotics() {
        let s = disk_series_solution(2.0, 2.0, 1.0, 1.0, dir(0.0)).unwrap();
        let gamma = C::from_polar(1.0 / (8.0 * PI * s.kappa).sqrt(), PI / 4.0);
        let r = 400.0;
        for th in [0.0, 1.0, 2.5] {
            let (u, _) = s.scattered(Point::from_polar(r, th));
            let est = u * r.sqrt() * C::new(0.0, -s.kappa * r).exp() / gamma;
            assert!((est - s.far_field(th)).norm() < 1e-2 * s.far_field(th).norm().max(0.1));
        }
    }
}
