//! Closed-form incident fields: global solutions of `(Delta + kappa^2) u = 0`.

use num_complex::Complex;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::scalar::{Real, Vec2};
use crate::specfun::{bessel_j, bessel_j_prime, bessel_j_zero, MAX_ORDER, MAX_ZERO_INDEX};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum IncidentKind<T> {
    PlaneWave { direction: [T; 2] },
    /// `J_m(kappa r) e^{i m theta}`.
    CircularMode { m: u32 },
    /// `J_m(alpha_k r) sin(m theta)`, with `kappa = alpha_k`.
    SectorMode { m: u32, ell: u32, k: usize },
    /// `Re(z^alpha)` on the principal branch, `kappa = 0`.
    HarmonicPower { alpha: T },
}

/// Complex gradient `(d/dx, d/dy)`.
pub type Grad<T> = [Complex<T>; 2];

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct IncidentField<T> {
    pub kappa: T,
    pub kind: IncidentKind<T>,
    /// Constant factor applied to the value and gradient.
    pub amplitude: Complex<T>,
}

impl<T: Real> IncidentField<T> {
    pub fn plane_wave(kappa: T, direction: Vec2<T>) -> Result<Self> {
        if !(kappa > T::zero()) || !kappa.is_finite() {
            return Err(Error::Domain(format!("plane wave needs kappa > 0, got {kappa}")));
        }
        if (direction.norm() - T::one()).abs() > T::lit(1e-6) {
            return Err(Error::Domain(format!(
                "plane wave direction must be a unit vector, |d| = {}",
                direction.norm()
            )));
        }
        let d = direction.normalized();
        Ok(Self {
            kappa,
            kind: IncidentKind::PlaneWave { direction: [d.x, d.y] },
            amplitude: Complex::new(T::one(), T::zero()),
        })
    }

    pub fn circular_mode(m: u32, kappa: T) -> Result<Self> {
        if !(kappa > T::zero()) || !kappa.is_finite() {
            return Err(Error::Domain(format!("circular mode needs kappa > 0, got {kappa}")));
        }
        if m > MAX_ORDER {
            return Err(Error::Range(format!("order {m} exceeds {MAX_ORDER}")));
        }
        Ok(Self { kappa, kind: IncidentKind::CircularMode { m }, amplitude: Complex::new(T::one(), T::zero()) })
    }

    /// The sector eigenfunction `w` whose wavenumber is the `k`-th zero of `J_m`.
    pub fn sector_mode(m: u32, ell: u32, k: usize) -> Result<Self> {
        if m < 2 || ell < 1 || ell >= 2 * m {
            return Err(Error::Config(format!(
                "sector mode needs m >= 2 and 1 <= ell <= 2m - 1, got m = {m}, ell = {ell}"
            )));
        }
        if k == 0 || k > MAX_ZERO_INDEX {
            return Err(Error::Range(format!("zero index {k} outside 1..={MAX_ZERO_INDEX}")));
        }
        let alpha = bessel_j_zero::<T>(m, k)?;
        Ok(Self {
            kappa: alpha,
            kind: IncidentKind::SectorMode { m, ell, k },
            amplitude: Complex::new(T::one(), T::zero()),
        })
    }

    pub fn harmonic_power(alpha: T) -> Result<Self> {
        if !(alpha > T::lit(0.5)) || !alpha.is_finite() {
            return Err(Error::Domain(format!("harmonic power needs alpha > 1/2, got {alpha}")));
        }
        Ok(Self {
            kappa: T::zero(),
            kind: IncidentKind::HarmonicPower { alpha },
            amplitude: Complex::new(T::one(), T::zero()),
        })
    }

    /// The same field multiplied by `a`.
    pub fn scaled(mut self, a: Complex<T>) -> Self {
        self.amplitude = self.amplitude * a;
        self
    }

    pub fn value(&self, p: Vec2<T>) -> Result<Complex<T>> {
        Ok(self.eval(p)?.0)
    }

    pub fn gradient(&self, p: Vec2<T>) -> Result<Grad<T>> {
        Ok(self.eval(p)?.1)
    }

    /// Value and gradient at `p`.
    pub fn eval(&self, p: Vec2<T>) -> Result<(Complex<T>, Grad<T>)> {
        let (u, g) = self.eval_unit(p)?;
        let a = self.amplitude;
        Ok((u * a, [g[0] * a, g[1] * a]))
    }

    fn eval_unit(&self, p: Vec2<T>) -> Result<(Complex<T>, Grad<T>)> {
        let zero = T::zero();
        let c = |re: T, im: T| Complex::new(re, im);
        match self.kind {
            IncidentKind::PlaneWave { direction } => {
                let phase = self.kappa * (p.x * direction[0] + p.y * direction[1]);
                let u = c(phase.cos(), phase.sin());
                let ik = c(zero, self.kappa);
                Ok((u, [ik * direction[0] * u, ik * direction[1] * u]))
            }
            IncidentKind::CircularMode { m } => {
                let r = p.norm();
                let x = self.kappa * r;
                let jm = bessel_j(m, x)?;
                let jp = bessel_j_prime(m, x)?;
                if r == zero {
                    let g = if m == 1 {
                        let h = self.kappa * T::lit(0.5);
                        [c(h, zero), c(zero, h)]
                    } else {
                        [c(zero, zero); 2]
                    };
                    return Ok((c(jm, zero), g));
                }
                let th = p.angle();
                let mf = T::from_u32(m).unwrap();
                let e = c((mf * th).cos(), (mf * th).sin());
                let dr = e * (self.kappa * jp);
                let dth = e * c(zero, mf * jm / r);
                Ok((e * jm, polar_to_cartesian(dr, dth, th)))
            }
            IncidentKind::SectorMode { m, .. } => {
                let r = p.norm();
                if r == zero {
                    return Ok((c(zero, zero), [c(zero, zero); 2]));
                }
                let x = self.kappa * r;
                let jm = bessel_j(m, x)?;
                let jp = bessel_j_prime(m, x)?;
                let th = p.angle();
                let mf = T::from_u32(m).unwrap();
                let (s, co) = (mf * th).sin_cos();
                let dr = c(self.kappa * jp * s, zero);
                let dth = c(mf * jm * co / r, zero);
                Ok((c(jm * s, zero), polar_to_cartesian(dr, dth, th)))
            }
            IncidentKind::HarmonicPower { alpha } => {
                if p.y == zero && p.x < zero {
                    return Err(Error::Domain(format!(
                        "Re(z^{alpha}) evaluated on the branch cut at ({}, {})",
                        p.x, p.y
                    )));
                }
                let r = p.norm();
                if r == zero {
                    if alpha < T::one() {
                        return Err(Error::Domain(
                            "gradient of Re(z^alpha) is unbounded at the origin for alpha < 1".into(),
                        ));
                    }
                    let g = if alpha == T::one() { T::one() } else { zero };
                    return Ok((c(zero, zero), [c(g, zero), c(zero, zero)]));
                }
                let th = p.angle();
                let u = r.powf(alpha) * (alpha * th).cos();
                // f'(z) = alpha z^(alpha - 1); grad Re f = (Re f', -Im f').
                let mag = alpha * r.powf(alpha - T::one());
                let ang = (alpha - T::one()) * th;
                Ok((c(u, zero), [c(mag * ang.cos(), zero), c(-mag * ang.sin(), zero)]))
            }
        }
    }
}

fn polar_to_cartesian<T: Real>(dr: Complex<T>, dth_over_r: Complex<T>, th: T) -> Grad<T> {
    let (s, c) = th.sin_cos();
    [dr * c - dth_over_r * s, dr * s + dth_over_r * c]
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    type P = Vec2<f64>;

    fn helmholtz_residual(f: &IncidentField<f64>, p: P, step: f64) -> f64 {
        let v = |q: P| f.value(q).unwrap();
        let lap = (v(p + P::new(step, 0.0)) + v(p - P::new(step, 0.0)) + v(p + P::new(0.0, step))
            + v(p - P::new(0.0, step))
            - v(p) * 4.0)
            / (step * step);
        (lap + v(p) * (f.kappa * f.kappa)).norm()
    }

    fn gradient_error(f: &IncidentField<f64>, p: P, step: f64) -> f64 {
        let v = |q: P| f.value(q).unwrap();
        let gx = (v(p + P::new(step, 0.0)) - v(p - P::new(step, 0.0))) / (2.0 * step);
        let gy = (v(p + P::new(0.0, step)) - v(p - P::new(0.0, step))) / (2.0 * step);
        let g = f.gradient(p).unwrap();
        (g[0] - gx).norm().max((g[1] - gy).norm())
    }

    #[test]
    fn plane_wave_basics() {
        let f = IncidentField::plane_wave(2.0, P::new(0.6, 0.8)).unwrap();
        assert_eq!(f.value(P::new(0.0, 0.0)).unwrap(), Complex::new(1.0, 0.0));
        assert!((f.value(P::new(3.0, -1.0)).unwrap().norm() - 1.0).abs() < 1e-15);
        assert!(helmholtz_residual(&f, P::new(0.3, -0.7), 1e-3) < 1e-4);
        assert!(IncidentField::plane_wave(2.0, P::new(1.0, 1.0)).is_err());
    }

    #[test]
    fn sector_mode_trace_and_order() {
        let f = IncidentField::<f64>::sector_mode(2, 1, 1).unwrap();
        for i in 1..=20 {
            let r = i as f64 / 20.0;
            assert!(f.value(P::new(r, 0.0)).unwrap().norm() <= 1e-15);
            assert!(f.value(P::from_polar(r, PI / 2.0)).unwrap().norm() <= 1e-12);
        }
        let alpha = f.kappa;
        let lead = alpha * alpha / 8.0;
        let r = 1e-3;
        let ratio = f.value(P::from_polar(r, PI / 4.0)).unwrap().re / r.powi(2);
        assert!((ratio / lead - 1.0).abs() < 1e-5);
        let w = f.value(P::from_polar(0.3, PI / 4.0)).unwrap().re;
        assert!((w - bessel_j(2, 0.3 * alpha).unwrap()).abs() < 1e-15);
    }

    #[test]
    fn harmonic_power_cases() {
        let f = IncidentField::harmonic_power(2.0).unwrap();
        let p = P::new(0.3, -0.4);
        assert!((f.value(p).unwrap().re - (0.09 - 0.16)).abs() < 1e-14);
        let g = IncidentField::harmonic_power(1.5).unwrap();
        let leg = P::from_polar(0.5, PI / 3.0);
        let gr = g.gradient(leg).unwrap();
        let norm = (gr[0].re.powi(2) + gr[1].re.powi(2)).sqrt();
        assert!((norm - 1.5 * 0.5f64.sqrt()).abs() < 1e-14);
        assert!(matches!(g.value(P::new(-1.0, 0.0)), Err(Error::Domain(_))));
        assert!(IncidentField::harmonic_power(0.5).is_err());
    }

    #[test]
    fn circular_mode_origin_values() {
        assert_eq!(IncidentField::circular_mode(0, 1.5).unwrap().value(P::new(0.0, 0.0)).unwrap().re, 1.0);
        assert_eq!(IncidentField::circular_mode(3, 1.5).unwrap().value(P::new(0.0, 0.0)).unwrap().norm(), 0.0);
    }

    #[test]
    fn gradients_and_residuals_second_order() {
        let fields = [
            IncidentField::plane_wave(3.0, P::new(-0.28, 0.96)).unwrap(),
            IncidentField::circular_mode(1, 2.0).unwrap(),
            IncidentField::circular_mode(4, 2.5).unwrap(),
            IncidentField::sector_mode(3, 2, 2).unwrap(),
            IncidentField::harmonic_power(1.5).unwrap(),
        ];
        let pts = [P::new(0.31, 0.42), P::new(-0.55, 0.2), P::new(0.7, -0.65)];
        for f in &fields {
            for &p in &pts {
                let e1 = gradient_error(f, p, 1e-2);
                let e2 = gradient_error(f, p, 5e-3);
                assert!(e2 < 0.3 * e1 || e2 < 1e-9, "{:?} {e1} {e2}", f.kind);
                assert!(helmholtz_residual(f, p, 1e-3) < 1e-3 * (1.0 + f.kappa.powi(4)));
            }
        }
    }

    #[test]
    fn sector_mode_reflection_odd() {
        let f = IncidentField::<f64>::sector_mode(2, 3, 1).unwrap();
        for p in [P::new(0.2, 0.3), P::new(-0.4, 0.1), P::new(0.05, 0.7)] {
            let a = f.value(p).unwrap().re;
            let b = f.value(P::new(p.x, -p.y)).unwrap().re;
            assert!((a + b).abs() < 1e-14);
        }
    }

    #[test]
    fn f32_instantiation() {
        let f = IncidentField::<f32>::plane_wave(1.0, Vec2::new(1.0, 0.0)).unwrap();
        let v = f.value(Vec2::new(std::f32::consts::PI, 0.0)).unwrap();
        assert!((v.re + 1.0).abs() < 1e-6);
    }
}
