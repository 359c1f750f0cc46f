//! Finite-element solution of the scattered-field transmission problem on a
//! disk truncated by a perfectly matched layer.

mod assemble;
mod field;
mod residual;
mod series;
pub mod sparse;

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;

pub use assemble::{assemble, LinearSystem};
pub(crate) use assemble::hat_gradients;
pub use field::{ComplexField, RecoveredGradient};
pub use residual::{residual_itep, ItepResidual};
pub use series::{disk_series_solution, DiskSeries};
pub use sparse::SolveStats;

use crate::error::{Error, Result};
use crate::geometry::{DomainSpec, Mesh2D};
use crate::incident::IncidentField;
use crate::media::ExtendedMedium;
use crate::Point;

/// Largest admissible `kappa * h` unless explicitly overridden.
pub const MAX_KAPPA_H: f64 = 0.7;

/// Relative residual required of the linear solve.
pub const SOLVE_TOLERANCE: f64 = 1e-10;

/// Quadratic absorbing profile `sigma(r) = sigma0 ((r - R) / width)^2`.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct PmlParams {
    pub width: f64,
    /// Defaults to the strength giving a round-trip reflection of `1e-6`.
    pub sigma0: Option<f64>,
    /// When false the layer is plain free space ending in a Dirichlet wall.
    pub enabled: bool,
}

impl PmlParams {
    pub fn new(width: f64) -> Self {
        Self { width, sigma0: None, enabled: true }
    }

    pub fn disabled(width: f64) -> Self {
        Self { width, sigma0: None, enabled: false }
    }

    pub fn strength(&self) -> f64 {
        self.sigma0.unwrap_or(3.0 * 1e6f64.ln() / (2.0 * self.width))
    }

    /// `exp(-2 * integral of sigma)`.
    pub fn nominal_reflection(&self) -> f64 {
        (-2.0 * self.strength() * self.width / 3.0).exp()
    }
}

/// Extra volume source `f`, added to the load as `integral f v`.
#[derive(Clone)]
pub struct VolumeSource(pub Arc<dyn Fn(Point) -> Complex64 + Send + Sync>);

impl fmt::Debug for VolumeSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("VolumeSource(..)")
    }
}

#[derive(Clone, Debug)]
pub struct TransmissionProblem {
    pub medium: ExtendedMedium<f64>,
    pub incident: IncidentField<f64>,
    pub kappa: f64,
    pub truncation_radius: f64,
    pub pml: PmlParams,
    pub source: Option<VolumeSource>,
    /// Accept meshes with `kappa * h > MAX_KAPPA_H`.
    pub allow_underresolved: bool,
}

impl TransmissionProblem {
    pub fn new(
        medium: ExtendedMedium<f64>,
        incident: IncidentField<f64>,
        truncation_radius: f64,
        pml: PmlParams,
    ) -> Result<Self> {
        let p = Self {
            kappa: incident.kappa,
            medium,
            incident,
            truncation_radius,
            pml,
            source: None,
            allow_underresolved: false,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn domain(&self) -> &DomainSpec {
        &self.medium.domain
    }

    pub fn with_source(mut self, f: impl Fn(Point) -> Complex64 + Send + Sync + 'static) -> Self {
        self.source = Some(VolumeSource(Arc::new(f)));
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.kappa > 0.0) || !self.kappa.is_finite() {
            return Err(Error::Config(format!("wavenumber must be positive, got {}", self.kappa)));
        }
        if (self.kappa - self.incident.kappa).abs() > 1e-12 * self.kappa {
            return Err(Error::Config(format!(
                "problem wavenumber {} differs from the incident wavenumber {}",
                self.kappa, self.incident.kappa
            )));
        }
        let rc = self.domain().circumradius();
        if !(rc < self.truncation_radius) {
            return Err(Error::Config(format!(
                "scatterer (radius {rc}) is not inside the truncation disk of radius {}",
                self.truncation_radius
            )));
        }
        if !(self.pml.width > 0.0) {
            return Err(Error::Config(format!("PML width must be positive, got {}", self.pml.width)));
        }
        if self.medium.ellipticity().is_none() {
            return Err(Error::Config("medium has no ellipticity certificate".into()));
        }
        Ok(())
    }

    /// Mesh matches the geometry of the problem.
    pub fn check_mesh(&self, mesh: &Mesh2D) -> Result<()> {
        if mesh.domain != *self.domain() {
            return Err(Error::Config("mesh was built for a different scatterer".into()));
        }
        let tol = 1e-12 * self.truncation_radius;
        if (mesh.truncation_radius - self.truncation_radius).abs() > tol
            || (mesh.pml_width - self.pml.width).abs() > tol
        {
            return Err(Error::Config(format!(
                "mesh truncation (R = {}, width = {}) differs from the problem (R = {}, width = {})",
                mesh.truncation_radius, mesh.pml_width, self.truncation_radius, self.pml.width
            )));
        }
        if !self.allow_underresolved && self.kappa * mesh.h > MAX_KAPPA_H {
            return Err(Error::Config(format!(
                "mesh under-resolves the wave: kappa*h = {:.3} > {MAX_KAPPA_H}; refine h or set allow_underresolved",
                self.kappa * mesh.h
            )));
        }
        Ok(())
    }
}

/// Scattered field on `mesh`.
pub fn solve<'m>(problem: &TransmissionProblem, mesh: &'m Mesh2D) -> Result<ComplexField<'m>> {
    Ok(solve_with_stats(problem, mesh)?.0)
}

pub fn solve_with_stats<'m>(problem: &TransmissionProblem, mesh: &'m Mesh2D) -> Result<(ComplexField<'m>, SolveStats)> {
    let sys = assemble(problem, mesh)?;
    let (x, stats) = sys.solve()?;
    Ok((ComplexField::new(mesh, sys.expand(&x), problem.kappa)?, stats))
}
