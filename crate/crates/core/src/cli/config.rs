//! Run configuration: a TOML document layered over the defaults of a built-in
//! scenario, with dotted `key=value` overrides.
//!
//! ```toml
//! scenario = "nonscatter-sector"
//! output_dir = "runs/sector"
//!
//! [domain]            # sector | polygon | square | disk, plus `offset`
//! kind = "sector"
//! m = 2
//! ell = 1
//! radius = 1.0
//!
//! [medium]            # isotropic | constant | expression | pushforward | vacuum
//! kind = "isotropic"
//! a = 2.0
//! rho = 2.0
//!
//! [incident]          # plane_wave | circular_mode | sector_mode | harmonic_power
//! kind = "sector_mode"
//! m = 2
//! ell = 1
//! k = 1
//! amplitude = 2.0
//!
//! [mesh]
//! h = 0.1             # coarsest level
//! levels = 3
//! refinement = 2.0
//!
//! [truncation]
//! radius = 2.0
//! pml_width = 1.22
//! extraction_radius = 1.5
//!
//! [diagnostics]
//! probes = ["nondegeneracy", "flux", "slope"]
//! ```

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use toml::{Table, Value};

use super::RunError;
use crate::diagnostics::Reduction;
use crate::expr::Expr;
use crate::geometry::{DomainKind, DomainSpec, DEFAULT_CORNER_GRADING};
use crate::incident::IncidentField;
use crate::media::{domain_samples, pushforward_medium, Diffeomorphism, MediumCoefficients};
use crate::scalar::Sym2;
use crate::Point;

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub scenario: String,
    /// Checked against the wavenumber of the incident field when given.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domain: Option<DomainSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub medium: Option<MediumSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub incident: Option<IncidentSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mesh: Option<MeshSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truncation: Option<TruncationSpec>,
    #[serde(default)]
    pub diagnostics: DiagnosticsSpec,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MediumSpec {
    Isotropic { a: f64, rho: f64 },
    /// `a = [a11, a12, a22]`.
    Constant { a: [f64; 3], rho: f64 },
    Expression { a11: String, a12: String, a22: String, rho: String },
    /// Pushforward of `(Id, 1)` through the bump map of a convex polygon.
    Pushforward { strength: f64, angle: f64 },
    Vacuum,
}

fn one() -> f64 {
    1.0
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum IncidentSpec {
    PlaneWave {
        kappa: f64,
        /// Direction of propagation in radians.
        #[serde(default)]
        angle: f64,
        #[serde(default = "one")]
        amplitude: f64,
    },
    CircularMode {
        m: u32,
        kappa: f64,
        #[serde(default = "one")]
        amplitude: f64,
    },
    SectorMode {
        m: u32,
        ell: u32,
        k: usize,
        #[serde(default = "one")]
        amplitude: f64,
    },
    HarmonicPower { alpha: f64 },
}

fn default_levels() -> usize {
    3
}

fn default_refinement() -> f64 {
    2.0
}

fn default_grading() -> f64 {
    DEFAULT_CORNER_GRADING
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshSpec {
    pub h: f64,
    #[serde(default = "default_levels")]
    pub levels: usize,
    /// Ratio of consecutive mesh sizes.
    #[serde(default = "default_refinement")]
    pub refinement: f64,
    #[serde(default = "default_grading")]
    pub corner_grading: f64,
}

impl MeshSpec {
    pub fn level_h(&self, level: usize) -> f64 {
        self.h / self.refinement.powi(level as i32)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TruncationSpec {
    pub radius: f64,
    pub pml_width: f64,
    pub extraction_radius: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub angles: Option<usize>,
    /// Exterior annulus for the Rellich comparison; defaults to
    /// `(1.1 * scatterer radius, truncation radius)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rellich_annulus: Option<[f64; 2]>,
}

fn default_trace_samples() -> usize {
    64
}

fn default_perturbation() -> f64 {
    1.1
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiagnosticsSpec {
    /// Empty means every diagnostic the scenario offers.
    #[serde(default)]
    pub probes: Vec<String>,
    #[serde(default)]
    pub reduction: Reduction,
    /// Largest radius of the dyadic profiles.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r_max: Option<f64>,
    /// Centre of the growth and decay profiles.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub center: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slope_point: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slope_radius: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub positivity_delta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub corner_radius: Option<f64>,
    #[serde(default = "default_trace_samples")]
    pub trace_samples: usize,
    /// Factor applied to the boundary data in the nonradiating sensitivity check.
    #[serde(default = "default_perturbation")]
    pub perturbation: f64,
}

impl Default for DiagnosticsSpec {
    fn default() -> Self {
        Self {
            probes: Vec::new(),
            reduction: Reduction::Real,
            r_max: None,
            center: None,
            slope_point: None,
            slope_radius: None,
            positivity_delta: None,
            corner_radius: None,
            trace_samples: default_trace_samples(),
            perturbation: default_perturbation(),
        }
    }
}

fn field(path: &str, message: impl Into<String>) -> RunError {
    RunError::Field { field: path.into(), message: message.into() }
}

fn positive(path: &str, v: f64) -> Result<(), RunError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(field(path, format!("must be positive and finite, got {v}")))
    }
}

/// Parse `value` as a TOML value, falling back to a bare string.
fn parse_value(value: &str) -> Value {
    format!("v = {value}")
        .parse::<Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| Value::String(value.into()))
}

/// Apply `key.path=value` to `table`, creating intermediate tables.
pub fn apply_override(table: &mut Table, assignment: &str) -> Result<(), RunError> {
    let (key, value) = assignment
        .split_once('=')
        .ok_or_else(|| field("--set", format!("expected key=value, got `{assignment}`")))?;
    let parts: Vec<&str> = key.trim().split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(field("--set", format!("malformed key `{key}`")));
    }
    let mut t = table;
    for p in &parts[..parts.len() - 1] {
        let entry = t.entry(p.to_string()).or_insert_with(|| Value::Table(Table::new()));
        t = entry.as_table_mut().ok_or_else(|| field(key.trim(), format!("`{p}` is not a table")))?;
    }
    t.insert(parts[parts.len() - 1].to_string(), parse_value(value.trim()));
    Ok(())
}

/// Overlay `top` on `base`, merging nested tables. A table whose `kind`
/// changes replaces the base table instead of merging with it.
pub fn merge(base: &mut Table, top: Table) {
    for (k, v) in top {
        match (base.get_mut(&k), v) {
            (Some(Value::Table(b)), Value::Table(t)) if b.get("kind") == t.get("kind") || t.get("kind").is_none() => {
                merge(b, t)
            }
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}

impl RunConfig {
    pub fn from_table(table: Table) -> Result<Self, RunError> {
        let cfg: RunConfig = serde_path_to_error::deserialize(Value::Table(table)).map_err(|e| {
            let path = e.path().to_string();
            let msg = e.into_inner().to_string();
            field(if path == "." { "config" } else { &path }, msg.lines().next().unwrap_or_default())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).unwrap_or_default()
    }

    pub fn validate(&self) -> Result<(), RunError> {
        if let Some(d) = &self.domain {
            d.validate().map_err(|e| field("domain", e.to_string()))?;
        }
        if let Some(m) = &self.mesh {
            positive("mesh.h", m.h)?;
            if m.levels == 0 {
                return Err(field("mesh.levels", "at least one level is needed"));
            }
            if !(m.refinement > 1.0) {
                return Err(field("mesh.refinement", format!("must exceed 1, got {}", m.refinement)));
            }
            if !(m.corner_grading >= 1.0) {
                return Err(field("mesh.corner_grading", format!("must be at least 1, got {}", m.corner_grading)));
            }
        }
        if let Some(t) = &self.truncation {
            positive("truncation.radius", t.radius)?;
            positive("truncation.pml_width", t.pml_width)?;
            positive("truncation.extraction_radius", t.extraction_radius)?;
            if let Some(d) = &self.domain {
                let rc = d.circumradius();
                if !(rc < t.extraction_radius && t.extraction_radius < t.radius) {
                    return Err(field(
                        "truncation.extraction_radius",
                        format!(
                            "must lie between the scatterer radius {rc} and the truncation radius {}, got {}",
                            t.radius, t.extraction_radius
                        ),
                    ));
                }
            }
            if let Some([a, b]) = t.rellich_annulus {
                if !(0.0 < a && a < b && b <= t.radius) {
                    return Err(field("truncation.rellich_annulus", format!("[{a}, {b}] is not inside (0, R]")));
                }
            }
        }
        if let (Some(IncidentSpec::SectorMode { m, ell, .. }), Some(d)) = (&self.incident, &self.domain) {
            match d.kind {
                DomainKind::Sector { m: dm, ell: dl, .. } if dm == *m && dl == *ell => {}
                _ => {
                    return Err(field(
                        "incident",
                        format!("a sector mode with m = {m}, ell = {ell} needs the sector domain with the same m and ell"),
                    ))
                }
            }
        }
        if let Some(k) = self.kappa {
            let inc = self.incident()?;
            if (k - inc.kappa).abs() > 1e-12 * k.abs().max(1.0) {
                return Err(field("kappa", format!("{k} differs from the incident wavenumber {}", inc.kappa)));
            }
        }
        let d = &self.diagnostics;
        for (i, p) in d.probes.iter().enumerate() {
            if d.probes[..i].contains(p) {
                return Err(field(&format!("diagnostics.probes[{i}]"), format!("`{p}` is requested twice")));
            }
        }
        for (path, v) in [
            ("diagnostics.r_max", d.r_max),
            ("diagnostics.slope_radius", d.slope_radius),
            ("diagnostics.positivity_delta", d.positivity_delta),
            ("diagnostics.corner_radius", d.corner_radius),
        ] {
            if let Some(v) = v {
                positive(path, v)?;
            }
        }
        if d.trace_samples == 0 {
            return Err(field("diagnostics.trace_samples", "at least one sample is needed"));
        }
        Ok(())
    }

    pub fn require_domain(&self) -> Result<&DomainSpec, RunError> {
        self.domain.as_ref().ok_or_else(|| field("domain", "this scenario needs a domain"))
    }

    pub fn require_mesh(&self) -> Result<&MeshSpec, RunError> {
        self.mesh.as_ref().ok_or_else(|| field("mesh", "this scenario needs a mesh section"))
    }

    pub fn require_truncation(&self) -> Result<&TruncationSpec, RunError> {
        self.truncation.as_ref().ok_or_else(|| field("truncation", "this scenario needs a truncation section"))
    }

    /// The certified medium on the domain.
    pub fn medium(&self) -> Result<MediumCoefficients<f64>, RunError> {
        let domain = self.require_domain()?;
        let spec = self.medium.as_ref().ok_or_else(|| field("medium", "this scenario needs a medium"))?;
        let expr = |path: &str, s: &str| Expr::parse(s).map_err(|e| field(path, e.to_string()));
        let raw = match spec {
            MediumSpec::Isotropic { a, rho } => MediumCoefficients::isotropic(*a, *rho),
            MediumSpec::Constant { a, rho } => MediumCoefficients::constant(Sym2::new(a[0], a[1], a[2]), *rho),
            MediumSpec::Expression { a11, a12, a22, rho } => {
                let off = expr("medium.a12", a12)?;
                MediumCoefficients::expression(
                    [[expr("medium.a11", a11)?, off.clone()], [off, expr("medium.a22", a22)?]],
                    expr("medium.rho", rho)?,
                )
            }
            MediumSpec::Pushforward { strength, angle } => {
                let phi = Diffeomorphism::bump(domain, *strength, *angle).map_err(|e| field("medium", e.to_string()))?;
                return pushforward_medium(phi, domain).map_err(|e| field("medium", e.to_string()));
            }
            MediumSpec::Vacuum => MediumCoefficients::vacuum(),
        };
        raw.certify(&domain_samples(domain, 24)).map_err(|e| field("medium", e.to_string()))
    }

    pub fn incident(&self) -> Result<IncidentField<f64>, RunError> {
        let spec = self.incident.as_ref().ok_or_else(|| field("incident", "this scenario needs an incident field"))?;
        let real = |a: f64| num_complex::Complex64::new(a, 0.0);
        let inc = match *spec {
            IncidentSpec::PlaneWave { kappa, angle, amplitude } => {
                IncidentField::plane_wave(kappa, Point::from_angle(angle)).map(|f| f.scaled(real(amplitude)))
            }
            IncidentSpec::CircularMode { m, kappa, amplitude } => {
                IncidentField::circular_mode(m, kappa).map(|f| f.scaled(real(amplitude)))
            }
            IncidentSpec::SectorMode { m, ell, k, amplitude } => {
                IncidentField::sector_mode(m, ell, k).map(|f| f.scaled(real(amplitude)))
            }
            IncidentSpec::HarmonicPower { alpha } => IncidentField::harmonic_power(alpha),
        };
        inc.map_err(|e| field("incident", e.to_string()))
    }
}
