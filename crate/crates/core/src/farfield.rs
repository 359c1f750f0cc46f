//! Near-to-far-field transform, far-field norms and the exterior/far-field
//! consistency check.
//!
//! Convention: `u(x) ~ gamma e^{i kappa |x|} |x|^{-1/2} u_inf(x/|x|)` with
//! `gamma = e^{i pi/4} / sqrt(8 pi kappa)`.

use std::f64::consts::PI;
use std::io::Write;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::Region;
use crate::incident::Grad;
use crate::solver::ComplexField;
use crate::Point;

type C = Complex64;

pub const CONVENTION: &str = "u ~ e^{i pi/4}/sqrt(8 pi kappa) e^{i kappa r} r^{-1/2} u_inf";

/// `e^{i pi/4} / sqrt(8 pi kappa)`.
pub fn gamma(kappa: f64) -> C {
    C::from_polar(1.0 / (8.0 * PI * kappa).sqrt(), PI / 4.0)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FarFieldPattern {
    /// Uniform angles `2 pi k / N`.
    pub angles: Vec<f64>,
    pub values: Vec<C>,
    pub kappa: f64,
    pub convention: String,
}

impl FarFieldPattern {
    pub fn new(angles: Vec<f64>, values: Vec<C>, kappa: f64) -> Self {
        Self { angles, values, kappa, convention: CONVENTION.into() }
    }

    pub fn zeros(n: usize, kappa: f64) -> Self {
        let angles = (0..n).map(|k| 2.0 * PI * k as f64 / n as f64).collect();
        Self::new(angles, vec![C::new(0.0, 0.0); n], kappa)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `L^2` norm on the unit circle.
    pub fn norm(&self) -> f64 {
        farfield_norm(self)
    }

    /// `||self - other|| / ||other||` on common angles.
    pub fn relative_error(&self, reference: &FarFieldPattern) -> Result<f64> {
        if self.len() != reference.len() {
            return Err(Error::Config(format!(
                "patterns have {} and {} samples",
                self.len(),
                reference.len()
            )));
        }
        let diff: Vec<C> = self.values.iter().zip(&reference.values).map(|(a, b)| a - b).collect();
        let d = FarFieldPattern::new(self.angles.clone(), diff, self.kappa);
        Ok(d.norm() / reference.norm())
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "angle,re,im,abs")?;
        for (t, v) in self.angles.iter().zip(&self.values) {
            writeln!(out, "{t:.17e},{:.17e},{:.17e},{:.17e}", v.re, v.im, v.norm())?;
        }
        Ok(())
    }
}

/// Trapezoid-rule `L^2` norm over the circle.
pub fn farfield_norm(ff: &FarFieldPattern) -> f64 {
    if ff.values.is_empty() {
        return 0.0;
    }
    let s: f64 = ff.values.iter().map(|v| v.norm_sqr()).sum();
    (s * 2.0 * PI / ff.values.len() as f64).sqrt()
}

/// Smallest admissible number of far-field angles for extraction radius `re`.
pub fn min_angles(kappa: f64, re: f64) -> usize {
    ((8.0 * kappa * re).ceil() as usize).max(64)
}

/// Kirchhoff transform of a radiating field given by value and gradient on `|y| = re`.
pub fn kirchhoff_transform(
    kappa: f64,
    re: f64,
    n_angles: usize,
    n_quad: usize,
    field: impl Fn(Point) -> Result<(C, Grad<f64>)>,
) -> Result<FarFieldPattern> {
    let data: Vec<(Point, C, C)> = (0..n_quad)
        .map(|q| {
            let t = 2.0 * PI * q as f64 / n_quad as f64;
            let n = Point::from_angle(t);
            let y = n * re;
            let (u, g) = field(y)?;
            Ok((y, u, g[0] * n.x + g[1] * n.y))
        })
        .collect::<Result<_>>()?;
    let ds = 2.0 * PI * re / n_quad as f64;
    let angles: Vec<f64> = (0..n_angles).map(|k| 2.0 * PI * k as f64 / n_angles as f64).collect();
    let values = angles
        .par_iter()
        .map(|&th| {
            let xh = Point::from_angle(th);
            data.iter()
                .map(|&(y, u, dn)| {
                    let e = C::new(0.0, -kappa * xh.dot(y)).exp();
                    let de = C::new(0.0, -kappa * xh.dot(y) / re) * e;
                    (u * de - dn * e) * ds
                })
                .sum()
        })
        .collect();
    Ok(FarFieldPattern::new(angles, values, kappa))
}

/// Far field of a finite-element scattered field from the circle `|y| = re`.
pub fn near_to_far(u_sc: &ComplexField<'_>, re: f64) -> Result<FarFieldPattern> {
    near_to_far_with(u_sc, re, min_angles(u_sc.kappa, re))
}

pub fn near_to_far_with(u_sc: &ComplexField<'_>, re: f64, n_angles: usize) -> Result<FarFieldPattern> {
    let mesh = u_sc.mesh;
    let rc = mesh.domain.circumradius();
    if !(re > rc && re < mesh.truncation_radius) {
        return Err(Error::Config(format!(
            "extraction radius {re} must lie strictly between the scatterer radius {rc:.6} and the absorbing layer at {}",
            mesh.truncation_radius
        )));
    }
    if n_angles < min_angles(u_sc.kappa, re) {
        return Err(Error::Config(format!(
            "{n_angles} far-field angles under-resolve the pattern; need at least {}",
            min_angles(u_sc.kappa, re)
        )));
    }
    let loc = mesh.locator();
    let rec = u_sc.recover_helmholtz(&[Region::Exterior]);
    let n_quad = (((2.0 * PI * re / mesh.h) * 8.0).ceil() as usize).max(1024);
    kirchhoff_transform(u_sc.kappa, re, n_angles, n_quad, |y| {
        rec.sample(&loc, y, Some(Region::Exterior))
            .ok_or_else(|| Error::Config(format!("extraction point ({:.4}, {:.4}) is not in the exterior mesh region", y.x, y.y)))
    })
}

/// Norms of the scattered field in an exterior annulus and in the far field.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct RellichReport {
    pub inner_radius: f64,
    pub outer_radius: f64,
    pub exterior_l2: f64,
    pub farfield_norm: f64,
    /// `exterior_l2 / farfield_norm`, NaN when undefined.
    pub ratio: f64,
    pub ratio_defined: bool,
}

/// Exterior `L^2` norm over triangles with centroid in `annulus`, alongside the far-field norm.
pub fn rellich_consistency(u_sc: &ComplexField<'_>, ff: &FarFieldPattern, annulus: (f64, f64)) -> Result<RellichReport> {
    let (r0, r1) = annulus;
    if !(r0 < r1) {
        return Err(Error::Config(format!("annulus ({r0}, {r1}) is empty")));
    }
    let mesh = u_sc.mesh;
    let ext = u_sc.l2_norm_where(|t| {
        let r = mesh.centroid(t).norm();
        mesh.regions[t] == Region::Exterior && r >= r0 && r <= r1
    });
    let ffn = farfield_norm(ff);
    let defined = ffn > 0.0 && ffn.is_finite();
    Ok(RellichReport {
        inner_radius: r0,
        outer_radius: r1,
        exterior_l2: ext,
        farfield_norm: ffn,
        ratio: if defined { ext / ffn } else { f64::NAN },
        ratio_defined: defined,
    })
}
