use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::geometry::{Locator, Region};
use crate::solver::{ComplexField, RecoveredGradient};
use crate::Point;

/// Point in up to three dimensions; planar fields ignore the last coordinate.
pub type P3 = [f64; 3];

pub fn planar(x: P3) -> Point {
    Point::new(x[0], x[1])
}

/// Real scalar field with a gradient, defined on some region.
pub trait ScalarField: Sync {
    fn dim(&self) -> usize;
    /// `None` outside the domain of definition.
    fn value(&self, x: P3) -> Option<f64>;
    fn gradient(&self, x: P3) -> Option<P3>;

    fn positive_part(&self, x: P3) -> Option<f64> {
        self.value(x).map(|v| v.max(0.0))
    }

    fn negative_part(&self, x: P3) -> Option<f64> {
        self.value(x).map(|v| (-v).max(0.0))
    }

    /// `grad w_+` (`sign = 1`) or `grad w_-` (`sign = -1`).
    fn part_gradient(&self, x: P3, sign: f64) -> Option<P3> {
        let v = self.value(x)?;
        if sign * v > 0.0 {
            self.gradient(x).map(|g| [sign * g[0], sign * g[1], sign * g[2]])
        } else {
            Some([0.0; 3])
        }
    }
}

type ValueFn = Box<dyn Fn(P3) -> f64 + Send + Sync>;
type GradFn = Box<dyn Fn(P3) -> P3 + Send + Sync>;
type DomainFn = Box<dyn Fn(P3) -> bool + Send + Sync>;

/// Closed-form field.
pub struct AnalyticField {
    dim: usize,
    f: ValueFn,
    g: GradFn,
    domain: Option<DomainFn>,
}

impl AnalyticField {
    pub fn new(
        dim: usize,
        f: impl Fn(P3) -> f64 + Send + Sync + 'static,
        g: impl Fn(P3) -> P3 + Send + Sync + 'static,
    ) -> Self {
        Self { dim, f: Box::new(f), g: Box::new(g), domain: None }
    }

    /// Planar field from closures on `Point`.
    pub fn planar(
        f: impl Fn(Point) -> f64 + Send + Sync + 'static,
        g: impl Fn(Point) -> [f64; 2] + Send + Sync + 'static,
    ) -> Self {
        Self::new(2, move |x| f(planar(x)), move |x| {
            let d = g(planar(x));
            [d[0], d[1], 0.0]
        })
    }

    pub fn restricted(mut self, domain: impl Fn(P3) -> bool + Send + Sync + 'static) -> Self {
        self.domain = Some(Box::new(domain));
        self
    }

    fn inside(&self, x: P3) -> bool {
        self.domain.as_ref().is_none_or(|d| d(x))
    }
}

impl ScalarField for AnalyticField {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, x: P3) -> Option<f64> {
        self.inside(x).then(|| (self.f)(x))
    }

    fn gradient(&self, x: P3) -> Option<P3> {
        self.inside(x).then(|| (self.g)(x))
    }
}

/// Real reduction of a complex field.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "angle")]
pub enum Reduction {
    #[default]
    Real,
    Imag,
    /// `Re(e^{i phi} w)`.
    Phase(f64),
}

impl Reduction {
    pub fn apply(self, z: Complex64) -> f64 {
        match self {
            Reduction::Real => z.re,
            Reduction::Imag => z.im,
            Reduction::Phase(phi) => (Complex64::from_polar(1.0, phi) * z).re,
        }
    }
}

/// Finite-element field seen through a real reduction, with recovered gradients
/// taken from the triangles of `grad_regions` where possible.
pub struct FemScalarField<'f, 'm> {
    field: &'f ComplexField<'m>,
    reduction: Reduction,
    rec: RecoveredGradient<'f, 'm>,
    loc: Locator<'m>,
    grad_regions: Vec<Region>,
}

impl<'f, 'm> FemScalarField<'f, 'm> {
    pub fn new(field: &'f ComplexField<'m>, reduction: Reduction, grad_regions: &[Region]) -> Self {
        Self {
            field,
            reduction,
            rec: field.recover_gradients(grad_regions),
            loc: field.mesh.locator(),
            grad_regions: grad_regions.to_vec(),
        }
    }
}

impl ScalarField for FemScalarField<'_, '_> {
    fn dim(&self) -> usize {
        2
    }

    fn value(&self, x: P3) -> Option<f64> {
        let (t, l) = self.loc.locate(planar(x))?;
        Some(self.reduction.apply(self.field.at(t, l)))
    }

    fn gradient(&self, x: P3) -> Option<P3> {
        let p = planar(x);
        let g = self
            .grad_regions
            .iter()
            .find_map(|&r| self.loc.locate_in(p, Some(r)).map(|(t, l)| self.rec.at(t, l)))
            .or_else(|| self.loc.locate(p).map(|(t, _)| self.field.triangle_gradient(t)))?;
        Some([self.reduction.apply(g[0]), self.reduction.apply(g[1]), 0.0])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parts_split_the_field() {
        let w = AnalyticField::planar(|p| p.x * p.y - 0.1, |p| [p.y, p.x]);
        for (x, y) in [(0.5, 0.5), (-0.3, 0.9), (0.0, 0.0), (1.0, 0.1)] {
            let p = [x, y, 0.0];
            let (v, a, b) = (w.value(p).unwrap(), w.positive_part(p).unwrap(), w.negative_part(p).unwrap());
            assert_eq!(v, a - b);
            assert_eq!(a * b, 0.0);
        }
    }

    #[test]
    fn reductions() {
        let z = Complex64::new(1.0, 2.0);
        assert_eq!(Reduction::Real.apply(z), 1.0);
        assert_eq!(Reduction::Imag.apply(z), 2.0);
        assert!((Reduction::Phase(std::f64::consts::FRAC_PI_2).apply(z) + 2.0).abs() < 1e-15);
    }
}
