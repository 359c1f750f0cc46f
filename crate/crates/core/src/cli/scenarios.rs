use std::f64::consts::PI;
use std::time::Instant;

use serde::Serialize;
use toml::Table;

use super::config::{IncidentSpec, MediumSpec, RunConfig};
use super::report::{LevelReport, Output, RunReport, Timing};
use super::RunError;
use crate::diagnostics::{
    acf_functional, ball_average, bernoulli_trace, convexity_gap, dyadic_radii, flux_jump_check, friedland_hayman_phi,
    linear_growth_probe, negative_part_decay, nondegeneracy_trace, phi_log_branch, positivity_scan, sector_parameters,
    slope_extract, verify_nonradiating, AnalyticField, FemScalarField, NonradiatingReport, RadialProfile, Reduction,
    ScalarField, SlopeReport, SlopeVerdict,
};
use crate::farfield::{min_angles, near_to_far_with, rellich_consistency, FarFieldPattern};
use crate::geometry::vtk::write_vtk;
use crate::geometry::{build_mesh, DomainKind, DomainSpec, Mesh2D, Region};
use crate::incident::IncidentField;
use crate::media::{extend_to_freespace, MediumCoefficients};
use crate::solver::{disk_series_solution, solve_with_stats, ComplexField, PmlParams, TransmissionProblem};
use crate::Point;

/// A built-in scenario.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct ScenarioInfo {
    pub name: &'static str,
    pub anchor: &'static str,
    pub summary: &'static str,
    /// Wavenumber fixed by the scenario; `None` when set by the incident field.
    pub kappa: Option<f64>,
    pub solver: bool,
    pub probes: &'static [&'static str],
    #[serde(skip)]
    defaults: &'static str,
}

impl ScenarioInfo {
    /// Default configuration as a TOML table.
    pub fn defaults(&self) -> Table {
        self.defaults.parse().expect("built-in scenario defaults are valid TOML")
    }
}

const SECTOR: &str = r#"
scenario = "nonscatter-sector"
[domain]
kind = "sector"
m = 2
ell = 1
radius = 1.0
[medium]
kind = "isotropic"
a = 2.0
rho = 2.0
[incident]
kind = "sector_mode"
m = 2
ell = 1
k = 1
amplitude = 2.0
[mesh]
h = 0.1
levels = 3
[truncation]
radius = 2.0
pml_width = 1.2235
extraction_radius = 1.5
[diagnostics]
r_max = 0.4
center = [0.0, 0.0]
slope_point = [0.5, 0.0]
slope_radius = 0.2
positivity_delta = 0.05
"#;

const PUSHFORWARD: &str = r#"
scenario = "pushforward-polygon"
[domain]
kind = "square"
side = 1.0
offset = [-0.5, -0.5]
[medium]
kind = "pushforward"
strength = 0.5
angle = 0.3
[incident]
kind = "plane_wave"
kappa = 2.0
angle = 0.0
[mesh]
h = 0.2
levels = 3
[truncation]
radius = 2.0
pml_width = 1.5708
extraction_radius = 1.5
"#;

const BERNOULLI: &str = r#"
scenario = "bernoulli-power"
[incident]
kind = "harmonic_power"
alpha = 1.5
[diagnostics]
r_max = 0.4
center = [0.0, 0.0]
"#;

const DISK: &str = r#"
scenario = "disk-benchmark"
[domain]
kind = "disk"
radius = 1.0
[medium]
kind = "isotropic"
a = 2.0
rho = 2.0
[incident]
kind = "plane_wave"
kappa = 1.0
angle = 0.0
[mesh]
h = 0.3141592653589793
levels = 3
[truncation]
radius = 3.0
pml_width = 3.141592653589793
extraction_radius = 2.5
angles = 64
"#;

const SQUARE: &str = r#"
scenario = "scatter-square"
[domain]
kind = "square"
side = 1.0
offset = [-0.5, -0.5]
[medium]
kind = "isotropic"
a = 2.0
rho = 2.0
[incident]
kind = "plane_wave"
kappa = 2.0
angle = 0.0
[mesh]
h = 0.3141592653589793
levels = 3
[truncation]
radius = 2.0
pml_width = 1.5707963267948966
extraction_radius = 1.5
"#;

const ACF: &str = r#"
scenario = "acf-suite"
[diagnostics]
r_max = 0.5
"#;

const NONRADIATING: &str = r#"
scenario = "nonradiating-check"
[domain]
kind = "sector"
m = 2
ell = 1
radius = 1.0
[medium]
kind = "isotropic"
a = 2.0
rho = 2.0
[incident]
kind = "sector_mode"
m = 2
ell = 1
k = 1
amplitude = 2.0
[mesh]
h = 0.05
levels = 2
[truncation]
radius = 2.0
pml_width = 1.2235
extraction_radius = 1.5
"#;

static CATALOG: [ScenarioInfo; 7] = [
    ScenarioInfo {
        name: "nonscatter-sector",
        anchor: "Example 1.4: sector of angle ell*pi/m is non-scattering for J_m(alpha_k r) sin(m theta)",
        summary: "A = a Id, rho = a on a sector, incident a w; far field vanishes under refinement",
        kappa: None,
        solver: true,
        probes: &["nondegeneracy", "bernoulli", "flux", "growth", "slope", "positivity"],
        defaults: SECTOR,
    },
    ScenarioInfo {
        name: "pushforward-polygon",
        anchor: "Example 1.5: pushforward medium of a boundary-fixing diffeomorphism is invisible",
        summary: "pushforward of the Laplacian by a bump map of a convex polygon; trace vanishes at corners",
        kappa: None,
        solver: true,
        probes: &["nondegeneracy", "flux"],
        defaults: PUSHFORWARD,
    },
    ScenarioInfo {
        name: "bernoulli-power",
        anchor: "Example 1.6: Re(z^alpha) solves a Bernoulli problem in a wedge of angle pi/alpha",
        summary: "harmonic wedge solution; normal derivative alpha r^(alpha-1) on the legs, no solver stage",
        kappa: Some(0.0),
        solver: false,
        probes: &["bernoulli", "growth", "decay", "ball_average"],
        defaults: BERNOULLI,
    },
    ScenarioInfo {
        name: "disk-benchmark",
        anchor: "penetrable disk under plane-wave incidence against the mode-matching series",
        summary: "far-field error and flux mismatch under refinement for a = rho = 2, kappa = 1",
        kappa: None,
        solver: true,
        probes: &["flux"],
        defaults: DISK,
    },
    ScenarioInfo {
        name: "scatter-square",
        anchor: "Theorem 1.1: corners conditionally always scatter",
        summary: "square with A = 2 Id, rho = 2 under a plane wave; far field stays away from zero",
        kappa: None,
        solver: true,
        probes: &["nondegeneracy", "flux"],
        defaults: SQUARE,
    },
    ScenarioInfo {
        name: "acf-suite",
        anchor: "Lemma 2.5 and Appendix A: monotonicity functional and the Friedland-Hayman bound",
        summary: "closed-form checks of the ACF functional, growth and decay probes, slopes and phi",
        kappa: None,
        solver: false,
        probes: &["acf", "ball_average", "growth", "decay", "subharmonic", "slope", "phi"],
        defaults: ACF,
    },
    ScenarioInfo {
        name: "nonradiating-check",
        anchor: "Theorem 1.3: nonradiating sources from non-scattering configurations",
        summary: "residuals of (w, g, h) built from the non-scattering sector and a perturbed g",
        kappa: None,
        solver: true,
        probes: &["nonradiating"],
        defaults: NONRADIATING,
    },
];

pub fn catalog() -> &'static [ScenarioInfo] {
    &CATALOG
}

pub fn find_scenario(name: &str) -> Result<&'static ScenarioInfo, RunError> {
    CATALOG.iter().find(|s| s.name == name).ok_or_else(|| RunError::Field {
        field: "scenario".into(),
        message: format!(
            "unknown scenario `{name}`; known: {}",
            CATALOG.iter().map(|s| s.name).collect::<Vec<_>>().join(", ")
        ),
    })
}

fn field_err(path: &str, message: impl Into<String>) -> RunError {
    RunError::Field { field: path.into(), message: message.into() }
}

pub(super) fn run(info: &ScenarioInfo, cfg: &RunConfig, report: &mut RunReport, out: &Output) -> Result<(), RunError> {
    for (i, p) in cfg.diagnostics.probes.iter().enumerate() {
        if !info.probes.contains(&p.as_str()) {
            return Err(field_err(
                &format!("diagnostics.probes[{i}]"),
                format!("`{p}` is not offered by {}; available: {}", info.name, info.probes.join(", ")),
            ));
        }
    }
    let ctx = Ctx { cfg, out };
    match info.name {
        "nonscatter-sector" => nonscatter_sector(&ctx, report),
        "pushforward-polygon" => pushforward_polygon(&ctx, report),
        "bernoulli-power" => bernoulli_power(&ctx, report),
        "disk-benchmark" => disk_benchmark(&ctx, report),
        "scatter-square" => scatter_square(&ctx, report),
        "acf-suite" => acf_suite(&ctx, report),
        "nonradiating-check" => nonradiating_check(&ctx, report),
        other => Err(RunError::Internal(format!("no pipeline for {other}"))),
    }
}

struct Ctx<'a> {
    cfg: &'a RunConfig,
    out: &'a Output,
}

impl Ctx<'_> {
    fn wants(&self, probe: &str) -> bool {
        let p = &self.cfg.diagnostics.probes;
        p.is_empty() || p.iter().any(|q| q == probe)
    }

    fn r_max(&self, default: f64) -> f64 {
        self.cfg.diagnostics.r_max.unwrap_or(default)
    }

    fn center(&self) -> [f64; 2] {
        self.cfg.diagnostics.center.unwrap_or([0.0, 0.0])
    }

    fn reduction(&self) -> Reduction {
        self.cfg.diagnostics.reduction
    }

    fn profile(&self, name: &str, p: &RadialProfile) -> Result<(), RunError> {
        Ok(self.out.profile(name, p)?)
    }
}

/// One refinement level handed to the per-level diagnostics.
struct Level<'a, 'm> {
    index: usize,
    last: bool,
    mesh: &'m Mesh2D,
    u: &'a ComplexField<'m>,
}

struct Setup {
    domain: DomainSpec,
    medium: MediumCoefficients<f64>,
    incident: IncidentField<f64>,
}

fn setup(cfg: &RunConfig) -> Result<Setup, RunError> {
    let incident = cfg.incident()?;
    if !(incident.kappa > 0.0) {
        return Err(field_err("incident", "the solver needs an incident field with a positive wavenumber"));
    }
    Ok(Setup { domain: cfg.require_domain()?.clone(), medium: cfg.medium()?, incident })
}

fn ratios(v: &[f64]) -> Vec<f64> {
    v.windows(2).map(|w| w[0] / w[1]).collect()
}

/// Mesh, solve, far field and Rellich report on every level, then `per_level`.
fn study(
    ctx: &Ctx<'_>,
    s: &Setup,
    report: &mut RunReport,
    reference: Option<&FarFieldPattern>,
    mut per_level: impl FnMut(&Level<'_, '_>, &mut RunReport) -> Result<(), RunError>,
) -> Result<(), RunError> {
    let cfg = ctx.cfg;
    let ms = cfg.require_mesh()?;
    let tr = cfg.require_truncation()?;
    let problem = TransmissionProblem::new(
        extend_to_freespace(s.medium.clone(), &s.domain),
        s.incident,
        tr.radius,
        PmlParams::new(tr.pml_width),
    )?;
    let rc = s.domain.circumradius();
    let annulus = tr.rellich_annulus.map(|a| (a[0], a[1])).unwrap_or(((1.1 * rc).min(0.5 * (rc + tr.radius)), tr.radius));
    let n_angles = tr.angles.unwrap_or_else(|| min_angles(s.incident.kappa, tr.extraction_radius).max(64));
    let mut patterns: Vec<(usize, FarFieldPattern)> = Vec::new();
    for level in 0..ms.levels {
        let h = ms.level_h(level);
        let mut timing = Timing::default();
        let t = Instant::now();
        let mesh = build_mesh(&s.domain, h, tr.radius, tr.pml_width, ms.corner_grading)?;
        timing.mesh_s = t.elapsed().as_secs_f64();
        let t = Instant::now();
        let (u, stats) = solve_with_stats(&problem, &mesh)?;
        timing.solve_s = t.elapsed().as_secs_f64();
        let t = Instant::now();
        let ff = near_to_far_with(&u, tr.extraction_radius, n_angles)?;
        let rellich = rellich_consistency(&u, &ff, annulus)?;
        let farfield_error = reference.map(|r| ff.relative_error(r)).transpose()?;
        timing.farfield_s = t.elapsed().as_secs_f64();
        let re: Vec<f64> = u.values.iter().map(|z| z.re).collect();
        let im: Vec<f64> = u.values.iter().map(|z| z.im).collect();
        let abs: Vec<f64> = u.values.iter().map(|z| z.norm()).collect();
        ctx.out.write_with(&format!("field_{level}.vtk"), |f| {
            write_vtk(f, &mesh, &[("u_sc_re", &re), ("u_sc_im", &im), ("u_sc_abs", &abs)])
        })?;
        report.levels.push(LevelReport {
            level,
            h,
            mesh: mesh.stats(),
            solver: stats,
            farfield_norm: ff.norm(),
            farfield_error,
            rellich,
            timing,
        });
        patterns.push((level, ff));
        ctx.out.farfield(&patterns)?;
        let t = Instant::now();
        per_level(&Level { index: level, last: level + 1 == ms.levels, mesh: &mesh, u: &u }, report)?;
        if let Some(l) = report.levels.last_mut() {
            l.timing.diagnostics_s = t.elapsed().as_secs_f64();
        }
    }
    let norms: Vec<f64> = report.levels.iter().map(|l| l.farfield_norm).collect();
    let ext: Vec<f64> = report.levels.iter().map(|l| l.rellich.exterior_l2).collect();
    report.convergence.insert("farfield_norm_ratio".into(), ratios(&norms));
    report.convergence.insert("exterior_l2_ratio".into(), ratios(&ext));
    let errs: Vec<f64> = report.levels.iter().filter_map(|l| l.farfield_error).collect();
    if errs.len() == report.levels.len() {
        report.convergence.insert("farfield_error_ratio".into(), ratios(&errs));
    }
    Ok(())
}

#[derive(Serialize)]
struct FluxLevel {
    level: usize,
    h: f64,
    exclusion: f64,
    absolute: f64,
    reference: f64,
    relative: Option<f64>,
    max_pointwise: f64,
}

fn flux_level(lv: &Level<'_, '_>, s: &Setup) -> Result<FluxLevel, RunError> {
    let r = flux_jump_check(lv.u, &s.incident, &s.medium, None)?;
    Ok(FluxLevel {
        level: lv.index,
        h: lv.mesh.h,
        exclusion: r.exclusion,
        absolute: r.absolute,
        reference: r.reference,
        relative: r.relative,
        max_pointwise: r.max_pointwise,
    })
}

fn decreasing(v: &[f64], factor: f64) -> bool {
    v.len() >= 2 && v.windows(2).all(|w| w[0] >= factor * w[1])
}

fn fmt_list(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:.4e}")).collect::<Vec<_>>().join(", ")
}

/// `a` when the medium is `a Id` with `rho = a`.
fn matched_contrast(cfg: &RunConfig) -> Option<f64> {
    match cfg.medium {
        Some(MediumSpec::Isotropic { a, rho }) if a == rho => Some(a),
        _ => None,
    }
}

/// Scattered field `(1/a - 1) u_inc` inside the domain and zero outside.
fn sector_scattered(s: &Setup, a: f64, red: Reduction) -> AnalyticField {
    let c = 1.0 / a - 1.0;
    let (d1, d2) = (s.domain.clone(), s.domain.clone());
    let (i1, i2) = (s.incident, s.incident);
    let inside = |d: &DomainSpec, p: Point| d.contains(p) || d.boundary_distance(p).0 < 1e-12;
    AnalyticField::planar(
        move |p| if inside(&d1, p) { red.apply(i1.value(p).unwrap_or_default() * c) } else { 0.0 },
        move |p| {
            if inside(&d2, p) {
                let g = i2.gradient(p).unwrap_or_default();
                [red.apply(g[0] * c), red.apply(g[1] * c)]
            } else {
                [0.0, 0.0]
            }
        },
    )
}

fn inward_normal(domain: &DomainSpec, x: Point) -> Point {
    let (_, i, t) = domain.boundary_distance(x);
    domain.pieces()[i].normal_at(t)
}

/// `A^{-1} (Id - A) grad u_inc`, reduced.
fn slope_vector(s: &Setup, red: Reduction) -> impl Fn(Point) -> [f64; 2] + '_ {
    move |x: Point| {
        let (Ok((a, _)), Ok(g)) = (s.medium.eval(x), s.incident.gradient(x)) else {
            return [f64::NAN; 2];
        };
        let gu = Point::new(red.apply(g[0]), red.apply(g[1]));
        let v = gu - a.apply(gu);
        match a.inverse() {
            Some(ai) => {
                let w = ai.apply(v);
                [w.x, w.y]
            }
            None => [f64::NAN; 2],
        }
    }
}

fn nondegeneracy_block(ctx: &Ctx<'_>, s: &Setup, report: &mut RunReport) -> Result<crate::diagnostics::NondegeneracyReport, RunError> {
    let d = &ctx.cfg.diagnostics;
    let rep = nondegeneracy_trace(&s.medium, &s.incident, &s.domain, d.trace_samples, d.corner_radius)?;
    for (i, c) in rep.corners.iter().enumerate() {
        ctx.profile(&format!("corner{i}_incoming"), &c.approach[0])?;
        ctx.profile(&format!("corner{i}_outgoing"), &c.approach[1])?;
    }
    report.diagnostic("nondegeneracy", &rep)?;
    Ok(rep)
}

fn nonscatter_sector(ctx: &Ctx<'_>, report: &mut RunReport) -> Result<(), RunError> {
    let cfg = ctx.cfg;
    let s = setup(cfg)?;
    let (m, ell, k) = sector_parameters(&s.incident).map_err(|e| field_err("incident", e.to_string()))?;
    let red = ctx.reduction();
    let contrast = matched_contrast(cfg);

    if ctx.wants("nondegeneracy") {
        let rep = nondegeneracy_block(ctx, &s, report)?;
        let apex = Point::new(s.domain.offset[0], s.domain.offset[1]);
        let target = (m - 1) as f64;
        match rep.corners.iter().find(|c| Point::new(c.point[0], c.point[1]).dist(apex) < 1e-12) {
            Some(c) => {
                let e = [c.approach[0].exponent, c.approach[1].exponent];
                let ok = e.iter().all(|x| (x - target).abs() <= 0.1);
                report.check("corner_vanishing_rate", ok, format!("exponents {e:?}, expected {target} +- 0.1"));
            }
            None => report.check("corner_vanishing_rate", false, "apex corner not found"),
        }
    }
    if ctx.wants("bernoulli") {
        let b = bernoulli_trace(m, ell, k, 32, 1e-3, 0.5)?;
        report.check(
            "bernoulli_exact",
            b.max_exact_deviation <= 1e-10,
            format!("max deviation {:.3e}", b.max_exact_deviation),
        );
        report.check(
            "bernoulli_asymptote",
            b.max_asymptote_deviation <= 0.02,
            format!("max deviation {:.3e} for |x| <= {}", b.max_asymptote_deviation, b.small_radius),
        );
        report.check(
            "bernoulli_sign",
            b.changes_sign == (ell % 2 == 0),
            format!("changes sign: {}, ell = {ell}", b.changes_sign),
        );
        report.diagnostic("bernoulli", &b)?;
    }
    let analytic = contrast.map(|a| sector_scattered(&s, a, red));
    let r_max = ctx.r_max(0.4);
    let center = ctx.center();
    let slope_point = cfg.diagnostics.slope_point.map(|p| Point::new(p[0], p[1]));
    let slope_radius = cfg.diagnostics.slope_radius.unwrap_or(0.2);

    if ctx.wants("growth") {
        if let Some(w) = &analytic {
            let g = linear_growth_probe(w, &center, &dyadic_radii(r_max))?;
            ctx.profile("linear_growth_exact", &g.profile)?;
            report.diagnostic("linear_growth_exact", &g)?;
        }
    }
    if ctx.wants("slope") {
        if let (Some(w), Some(p)) = (&analytic, slope_point) {
            let nu = inward_normal(&s.domain, p);
            let v = slope_vector(&s, red);
            let sl = slope_extract(w, p, nu, &s.medium, &v, slope_radius)?;
            report.check(
                "slope_gauge_reference",
                sl.verdict == SlopeVerdict::Conclusive && sl.gap <= 0.05,
                format!("beta {:.6}, reference {:.6}, gap {:.3e}", sl.beta, sl.reference, sl.gap),
            );
            report.diagnostic("slope_exact", &sl)?;
        }
    }
    if ctx.wants("positivity") {
        if let (Some(a), Some(p)) = (contrast, slope_point) {
            let sign = (1.0 - a).signum();
            let dom = s.domain.clone();
            let inc = s.incident;
            let c = 1.0 / a - 1.0;
            let w = AnalyticField::planar(
                move |x| if dom.contains(x) { sign * red.apply(inc.value(x).unwrap_or_default() * c) } else { 0.0 },
                |_| [0.0, 0.0],
            );
            let delta = cfg.diagnostics.positivity_delta.unwrap_or(0.05);
            let rep = positivity_scan(&w, &s.domain, delta, Some((p, 0.25)), 64)?;
            report.check("positivity", rep.positive, format!("minimum {:.3e} at {:?}", rep.minimum, rep.witness));
            report.diagnostic("positivity", &rep)?;
        }
    }

    let mut flux = Vec::new();
    let mut fem_slope: Option<SlopeReport> = None;
    study(ctx, &s, report, None, |lv, report| {
        if ctx.wants("flux") {
            flux.push(flux_level(lv, &s)?);
        }
        if lv.last {
            let w = FemScalarField::new(lv.u, red, &[Region::Interior]);
            if ctx.wants("growth") {
                let g = linear_growth_probe(&w, &center, &dyadic_radii(r_max))?;
                ctx.profile("linear_growth_fem", &g.profile)?;
                report.check(
                    "fem_lipschitz_growth",
                    g.verdict == "lipschitz_consistent",
                    format!("exponent {:.3}", g.profile.exponent),
                );
                report.diagnostic("linear_growth_fem", &g)?;
            }
            if let (true, Some(p)) = (ctx.wants("slope"), slope_point) {
                let nu = inward_normal(&s.domain, p);
                let v = slope_vector(&s, red);
                fem_slope = Some(slope_extract(&w, p, nu, &s.medium, &v, slope_radius)?);
            }
        }
        Ok(())
    })?;
    if let Some(sl) = fem_slope {
        report.diagnostic("slope_fem", &sl)?;
    }
    if ctx.wants("flux") {
        report.diagnostic("flux", &flux)?;
    }
    let norms: Vec<f64> = report.levels.iter().map(|l| l.farfield_norm).collect();
    let ext: Vec<f64> = report.levels.iter().map(|l| l.rellich.exterior_l2).collect();
    report.check("farfield_decay", decreasing(&norms, 1.5), format!("far-field norms {}", fmt_list(&norms)));
    report.check(
        "rellich_codecay",
        decreasing(&ext, 1.0) && decreasing(&norms, 1.0),
        format!("exterior L2 {}", fmt_list(&ext)),
    );
    Ok(())
}

fn pushforward_polygon(ctx: &Ctx<'_>, report: &mut RunReport) -> Result<(), RunError> {
    let s = setup(ctx.cfg)?;
    if ctx.wants("nondegeneracy") {
        let rep = nondegeneracy_block(ctx, &s, report)?;
        let worst = rep.corners.iter().flat_map(|c| c.one_sided).fold(0.0f64, |m, v| m.max(v.abs()));
        report.check(
            "corner_trace_zero",
            !rep.corners.is_empty() && worst <= 1e-6,
            format!("max |trace| over {} corners: {worst:.3e}", rep.corners.len()),
        );
    }
    let mut flux = Vec::new();
    study(ctx, &s, report, None, |lv, _| {
        if ctx.wants("flux") {
            flux.push(flux_level(lv, &s)?);
        }
        Ok(())
    })?;
    if ctx.wants("flux") {
        report.diagnostic("flux", &flux)?;
    }
    let norms: Vec<f64> = report.levels.iter().map(|l| l.farfield_norm).collect();
    report.check("farfield_decay", decreasing(&norms, 1.5), format!("far-field norms {}", fmt_list(&norms)));
    Ok(())
}

fn disk_reference(cfg: &RunConfig, s: &Setup, n: usize) -> Option<FarFieldPattern> {
    let (DomainKind::Disk { radius }, Some(MediumSpec::Isotropic { a, rho }), Some(IncidentSpec::PlaneWave { angle, amplitude, .. })) =
        (&s.domain.kind, &cfg.medium, &cfg.incident)
    else {
        return None;
    };
    if s.domain.offset != [0.0, 0.0] {
        return None;
    }
    let series = disk_series_solution(*a, *rho, *radius, s.incident.kappa, Point::from_angle(*angle)).ok()?;
    let mut p = series.pattern(n);
    p.values.iter_mut().for_each(|v| *v *= *amplitude);
    Some(p)
}

fn disk_benchmark(ctx: &Ctx<'_>, report: &mut RunReport) -> Result<(), RunError> {
    let cfg = ctx.cfg;
    let s = setup(cfg)?;
    let tr = cfg.require_truncation()?;
    let n = tr.angles.unwrap_or_else(|| min_angles(s.incident.kappa, tr.extraction_radius).max(64));
    let reference = disk_reference(cfg, &s, n);
    let mut flux = Vec::new();
    study(ctx, &s, report, reference.as_ref(), |lv, _| {
        if ctx.wants("flux") {
            flux.push(flux_level(lv, &s)?);
        }
        Ok(())
    })?;
    if ctx.wants("flux") {
        let rel: Vec<f64> = flux.iter().map(|f| f.relative.unwrap_or(f64::NAN)).collect();
        report.check(
            "flux_mismatch",
            rel.first().is_some_and(|r| *r <= 0.05) && decreasing(&rel, 1.0),
            format!("relative L2 mismatch {}", fmt_list(&rel)),
        );
        report.diagnostic("flux", &flux)?;
    }
    if reference.is_some() {
        let errs: Vec<f64> = report.levels.iter().filter_map(|l| l.farfield_error).collect();
        report.check(
            "farfield_error",
            errs.first().is_some_and(|e| *e <= 0.05) && decreasing(&errs, 1.5),
            format!("relative errors {}", fmt_list(&errs)),
        );
    }
    Ok(())
}

fn scatter_square(ctx: &Ctx<'_>, report: &mut RunReport) -> Result<(), RunError> {
    let s = setup(ctx.cfg)?;
    if ctx.wants("nondegeneracy") {
        nondegeneracy_block(ctx, &s, report)?;
    }
    let mut flux = Vec::new();
    study(ctx, &s, report, None, |lv, _| {
        if ctx.wants("flux") {
            flux.push(flux_level(lv, &s)?);
        }
        Ok(())
    })?;
    if ctx.wants("flux") {
        report.diagnostic("flux", &flux)?;
    }
    let norms: Vec<f64> = report.levels.iter().map(|l| l.farfield_norm).collect();
    let amp = s.incident.amplitude.norm();
    let above = norms.iter().all(|n| *n > 0.05 * amp);
    let stable = norms.len() >= 2 && {
        let (a, b) = (norms[norms.len() - 2], norms[norms.len() - 1]);
        (b / a - 1.0).abs() <= 0.1
    };
    report.check("farfield_persists", above && stable, format!("far-field norms {}", fmt_list(&norms)));
    Ok(())
}

#[derive(Serialize)]
struct NonradiatingLevel {
    level: usize,
    h: f64,
    kappa_h: f64,
    fem: NonradiatingReport,
    fem_perturbed: NonradiatingReport,
    analytic: NonradiatingReport,
    analytic_perturbed: NonradiatingReport,
    /// Perturbed boundary residual over the unperturbed `||g||`.
    perturbation_ratio: f64,
}

fn nonradiating_check(ctx: &Ctx<'_>, report: &mut RunReport) -> Result<(), RunError> {
    let cfg = ctx.cfg;
    let s = setup(cfg)?;
    let a = matched_contrast(cfg)
        .ok_or_else(|| field_err("medium", "the nonradiating triple needs an isotropic medium with a = rho"))?;
    sector_parameters(&s.incident).map_err(|e| field_err("incident", e.to_string()))?;
    let red = ctx.reduction();
    let exact = sector_scattered(&s, a, red);
    let factor = cfg.diagnostics.perturbation;
    let dom = s.domain.clone();
    let g = |x: Point| {
        let nu = inward_normal(&dom, x);
        let gr = exact.gradient([x.x, x.y, 0.0]).unwrap_or([0.0; 3]);
        gr[0] * nu.x + gr[1] * nu.y
    };
    let wrong = |x: Point| factor * g(x);
    let zero = |_: Point| 0.0;
    let kappa = s.incident.kappa;
    let mut levels = Vec::new();
    study(ctx, &s, report, None, |lv, _| {
        if !ctx.wants("nonradiating") {
            return Ok(());
        }
        let w = FemScalarField::new(lv.u, red, &[Region::Interior]);
        let fem = verify_nonradiating(&w, &g, &zero, &s.medium, kappa, lv.mesh)?;
        let fem_perturbed = verify_nonradiating(&w, &wrong, &zero, &s.medium, kappa, lv.mesh)?;
        let analytic = verify_nonradiating(&exact, &g, &zero, &s.medium, kappa, lv.mesh)?;
        let analytic_perturbed = verify_nonradiating(&exact, &wrong, &zero, &s.medium, kappa, lv.mesh)?;
        levels.push(NonradiatingLevel {
            level: lv.index,
            h: lv.mesh.h,
            kappa_h: kappa * lv.mesh.h,
            perturbation_ratio: fem_perturbed.boundary_normal / fem.g_norm,
            fem,
            fem_perturbed,
            analytic,
            analytic_perturbed,
        });
        Ok(())
    })?;
    if let Some(last) = levels.last() {
        let tol = last.kappa_h * last.kappa_h;
        let f = &last.fem;
        let rel = [f.boundary_normal / f.g_norm, f.interior / f.g_norm, f.exterior_sup / s.incident.amplitude.norm()];
        report.check(
            "nonradiating_residuals",
            rel.iter().all(|r| *r <= tol),
            format!(
                "boundary {:.3e}, interior {:.3e}, exterior {:.3e} against (kappa h)^2 = {tol:.3e}",
                rel[0], rel[1], rel[2]
            ),
        );
        let expected = (factor - 1.0).abs();
        report.check(
            "nonradiating_perturbation",
            (last.perturbation_ratio - expected).abs() <= 0.02,
            format!("ratio {:.4}, expected {expected:.2} +- 0.02", last.perturbation_ratio),
        );
        let an = &last.analytic;
        report.check(
            "nonradiating_exact_boundary",
            an.boundary_normal <= 1e-10 * an.g_norm && an.exterior_sup == 0.0,
            format!("boundary {:.3e}, exterior {:.3e}", an.boundary_normal, an.exterior_sup),
        );
    }
    if ctx.wants("nonradiating") {
        report.diagnostic("nonradiating", &levels)?;
    }
    Ok(())
}

/// The Bernoulli wedge `|theta| < pi / (2 alpha)` with `w = Re(z^alpha)` inside and zero outside.
fn wedge_field(inc: IncidentField<f64>, alpha: f64) -> AnalyticField {
    let half = PI / (2.0 * alpha);
    let inside = move |p: Point| p.norm() > 0.0 && p.angle().abs() < half;
    AnalyticField::planar(
        move |p| if inside(p) { inc.value(p).map_or(0.0, |z| z.re) } else { 0.0 },
        move |p| {
            if inside(p) {
                inc.gradient(p).map_or([0.0; 2], |g| [g[0].re, g[1].re])
            } else {
                [0.0, 0.0]
            }
        },
    )
}

#[derive(Serialize)]
struct LegTrace {
    leg: &'static str,
    normal: [f64; 2],
    profile: RadialProfile,
    max_relative_deviation: f64,
}

fn bernoulli_power(ctx: &Ctx<'_>, report: &mut RunReport) -> Result<(), RunError> {
    let cfg = ctx.cfg;
    let inc = cfg.incident()?;
    let Some(IncidentSpec::HarmonicPower { alpha }) = cfg.incident else {
        return Err(field_err("incident", "bernoulli-power needs a harmonic_power incident field"));
    };
    report.diagnostic("kappa", inc.kappa)?;
    let w = wedge_field(inc, alpha);
    let r_max = ctx.r_max(0.4);
    let radii = dyadic_radii(r_max);
    let center = ctx.center();
    if ctx.wants("bernoulli") {
        let half = PI / (2.0 * alpha);
        let mut legs = Vec::new();
        for (leg, sgn) in [("upper", 1.0), ("lower", -1.0)] {
            let dir = Point::from_angle(sgn * half);
            let nu = Point::new(half.sin(), -sgn * half.cos());
            let mut vals = Vec::new();
            let mut dev: f64 = 0.0;
            for &r in &radii {
                let g = inc.gradient(dir.scale(r))?;
                let dn = g[0].re * nu.x + g[1].re * nu.y;
                dev = dev.max((dn / (alpha * r.powf(alpha - 1.0)) - 1.0).abs());
                vals.push(dn);
            }
            let profile = RadialProfile::new(&format!("bernoulli_{leg}"), &[0.0, 0.0], radii.clone(), vals)?;
            ctx.profile(&format!("bernoulli_{leg}"), &profile)?;
            legs.push(LegTrace { leg, normal: [nu.x, nu.y], profile, max_relative_deviation: dev });
        }
        let ok = legs.iter().all(|l| l.max_relative_deviation <= 1e-10 && (l.profile.exponent - (alpha - 1.0)).abs() <= 1e-8);
        let worst = legs.iter().map(|l| l.max_relative_deviation).fold(0.0, f64::max);
        report.check("bernoulli_flux", ok, format!("d_nu w = alpha r^(alpha-1) to {worst:.3e}"));
        report.diagnostic("bernoulli", &legs)?;
    }
    if ctx.wants("growth") {
        let g = linear_growth_probe(&w, &center, &radii)?;
        ctx.profile("linear_growth", &g.profile)?;
        let expect = if alpha - 1.0 < crate::diagnostics::GROWTH_THRESHOLD { "super_lipschitz" } else { "lipschitz_consistent" };
        report.check("growth_verdict", g.verdict == expect, format!("{} with exponent {:.4}", g.verdict, g.profile.exponent));
        report.diagnostic("linear_growth", &g)?;
    }
    if ctx.wants("decay") {
        let d = negative_part_decay(&w, &center, &radii)?;
        ctx.profile("negative_part_decay", &d.profile)?;
        report.check("negative_part_zero", d.profile.is_identically_zero(), d.verdict.clone());
        report.diagnostic("negative_part_decay", &d)?;
    }
    if ctx.wants("ball_average") {
        let b = ball_average(&w, &center, &radii)?;
        ctx.profile("ball_mean", &b.mean)?;
        ctx.profile("ball_positive_l2", &b.positive_l2)?;
        report.check(
            "ball_average_exponent",
            (b.mean.exponent - alpha).abs() <= 0.02,
            format!("exponent {:.4}, expected {alpha}", b.mean.exponent),
        );
        report.diagnostic("ball_average", &b)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct PhiChecks {
    branch_point_log: f64,
    branch_point_linear: f64,
    at_half: f64,
    surface_identity_at_0_1: f64,
    pairs: usize,
    min_convexity_gap: f64,
}

fn acf_suite(ctx: &Ctx<'_>, report: &mut RunReport) -> Result<(), RunError> {
    let r_max = ctx.r_max(0.5);
    let radii = dyadic_radii(r_max);
    let o3 = [0.0, 0.0, 0.0];
    let o2 = [0.0, 0.0];
    if ctx.wants("acf") {
        let x1 = AnalyticField::new(3, |x| x[0], |_| [1.0, 0.0, 0.0]);
        let p = acf_functional(&x1, &o3, &radii, 3)?;
        let dev = p.values.iter().map(|v| (v / (PI * PI) - 1.0).abs()).fold(0.0, f64::max);
        report.check("acf_linear", dev <= 0.01, format!("max relative deviation from pi^2: {dev:.3e}"));
        ctx.profile("acf_linear", &p)?;
        report.diagnostic("acf_linear", &p)?;

        let x1x2 = AnalyticField::new(3, |x| x[0] * x[1], |x| [x[1], x[0], 0.0]);
        let p = acf_functional(&x1x2, &o3, &radii, 3)?;
        let pre = p.prefactor / (PI * PI / 9.0) - 1.0;
        report.check(
            "acf_bilinear",
            (p.exponent - 4.0).abs() <= 0.1 && pre.abs() <= 0.02,
            format!("exponent {:.4}, prefactor deviation {pre:.3e}", p.exponent),
        );
        ctx.profile("acf_bilinear", &p)?;
        report.diagnostic("acf_bilinear", &p)?;

        let lift = AnalyticField::planar(|p| p.x, |_| [1.0, 0.0]);
        let p = acf_functional(&lift, &o2, &radii, 3)?;
        let dev = p.values.iter().map(|v| (v / (PI * PI) - 1.0).abs()).fold(0.0, f64::max);
        report.check("acf_planar_lift", dev <= 0.01, format!("max relative deviation from pi^2: {dev:.3e}"));
        ctx.profile("acf_planar_lift", &p)?;
        report.diagnostic("acf_planar_lift", &p)?;

        let sq = AnalyticField::new(3, |x| x[0] * x[0] + x[1] * x[1], |x| [2.0 * x[0], 2.0 * x[1], 0.0]);
        let p = acf_functional(&sq, &o3, &radii, 3)?;
        report.check("acf_nonnegative", p.is_identically_zero(), "w = |x'|^2");
        ctx.profile("acf_nonnegative", &p)?;
        report.diagnostic("acf_nonnegative", &p)?;
    }
    let half = AnalyticField::planar(|p| p.y.max(0.0), |p| if p.y > 0.0 { [0.0, 1.0] } else { [0.0, 0.0] });
    if ctx.wants("ball_average") {
        let b = ball_average(&half, &o2, &radii)?;
        let pre = b.mean.prefactor / (2.0 / (3.0 * PI)) - 1.0;
        report.check(
            "ball_average_half_plane",
            (b.mean.exponent - 1.0).abs() <= 0.02 && pre.abs() <= 0.01,
            format!("exponent {:.5}, prefactor deviation {pre:.3e}", b.mean.exponent),
        );
        ctx.profile("ball_mean", &b.mean)?;
        ctx.profile("ball_positive_l2", &b.positive_l2)?;
        report.diagnostic("ball_average", &b)?;
    }
    if ctx.wants("growth") {
        let g = linear_growth_probe(&half, &o2, &radii)?;
        let flat = g.profile.values.iter().all(|v| (v - 1.0).abs() <= 1e-12);
        report.check("growth_half_plane", flat && g.verdict == "lipschitz_consistent", g.verdict.clone());
        ctx.profile("linear_growth", &g.profile)?;
        report.diagnostic("linear_growth", &g)?;
        let root = AnalyticField::planar(
            |p| p.norm().sqrt(),
            |p| {
                let r = p.norm().max(1e-300);
                [0.5 * p.x / r.powf(1.5), 0.5 * p.y / r.powf(1.5)]
            },
        );
        let g = linear_growth_probe(&root, &o2, &radii)?;
        report.check(
            "growth_square_root",
            g.verdict == "super_lipschitz",
            format!("{} with exponent {:.4}", g.verdict, g.profile.exponent),
        );
        ctx.profile("linear_growth_sqrt", &g.profile)?;
        report.diagnostic("linear_growth_sqrt", &g)?;
    }
    if ctx.wants("decay") {
        let d = negative_part_decay(&half, &o2, &radii)?;
        report.check("decay_nonnegative", d.profile.is_identically_zero(), d.verdict.clone());
        ctx.profile("negative_part_decay", &d.profile)?;
        report.diagnostic("negative_part_decay", &d)?;
        let lin = AnalyticField::planar(|p| p.y, |_| [0.0, 1.0]);
        let d = negative_part_decay(&lin, &o2, &radii)?;
        let flat = d.profile.values.iter().all(|v| (v - 1.0).abs() <= 1e-12);
        report.check("decay_linear", flat && d.verdict == "no_decay", d.verdict.clone());
        ctx.profile("negative_part_decay_linear", &d.profile)?;
        report.diagnostic("negative_part_decay_linear", &d)?;
    }
    if ctx.wants("subharmonic") {
        let sq = AnalyticField::planar(|p| p.norm_sqr(), |p| [2.0 * p.x, 2.0 * p.y]);
        let harm = AnalyticField::planar(|p| p.x.exp() * p.y.cos(), |p| [p.x.exp() * p.y.cos(), -p.x.exp() * p.y.sin()]);
        let a = ball_average(&sq, &o2, &radii)?;
        let b = ball_average(&harm, &o2, &radii)?;
        let exact = a.mean.values.iter().zip(&radii).map(|(v, r)| (v / (r * r / 2.0) - 1.0).abs()).fold(0.0, f64::max);
        report.check(
            "subharmonic_monotone",
            a.mean.is_nondecreasing(1e-12) && b.mean.is_nondecreasing(1e-12) && exact <= 1e-10,
            format!("|x|^2 average within {exact:.3e} of r^2/2"),
        );
        ctx.profile("subharmonic_square", &a.mean)?;
        ctx.profile("subharmonic_exp_cos", &b.mean)?;
        report.diagnostic("subharmonic_square", &a.mean)?;
        report.diagnostic("subharmonic_exp_cos", &b.mean)?;
    }
    if ctx.wants("slope") {
        let nu = Point::from_angle(0.7);
        let med = MediumCoefficients::isotropic(1.0, 1.0);
        let v = move |_: Point| [3.0 * nu.x, 3.0 * nu.y];
        let ramp = AnalyticField::planar(
            move |p| 3.0 * p.dot(nu).max(0.0),
            move |p| if p.dot(nu) > 0.0 { [3.0 * nu.x, 3.0 * nu.y] } else { [0.0, 0.0] },
        );
        let s = slope_extract(&ramp, Point::zero(), nu, &med, &v, r_max)?;
        report.check("slope_ramp", (s.beta - 3.0).abs() <= 1e-8, format!("beta {:.12}", s.beta));
        report.diagnostic("slope_ramp", &s)?;
        let bent = AnalyticField::planar(
            move |p| p.dot(nu).max(0.0) + p.norm().powf(1.5),
            move |p| {
                let h = if p.dot(nu) > 0.0 { 1.0 } else { 0.0 };
                let c = 1.5 * p.norm().sqrt();
                [h * nu.x + c * p.x / p.norm().max(1e-300), h * nu.y + c * p.y / p.norm().max(1e-300)]
            },
        );
        let unit = move |_: Point| [nu.x, nu.y];
        let s = slope_extract(&bent, Point::zero(), nu, &med, &unit, r_max)?;
        report.check("slope_perturbed_ramp", (s.beta - 1.0).abs() <= 0.05, format!("beta {:.6}", s.beta));
        report.diagnostic("slope_perturbed_ramp", &s)?;
    }
    if ctx.wants("phi") {
        let n = 100;
        let grid = |i: usize| (i as f64 + 0.5) / n as f64;
        let mut min_gap = f64::INFINITY;
        for i in 0..n {
            for j in 0..n {
                min_gap = min_gap.min(convexity_gap(grid(i), grid(j))?);
            }
        }
        let c = PhiChecks {
            branch_point_log: phi_log_branch(0.25),
            branch_point_linear: friedland_hayman_phi(0.25)?,
            at_half: friedland_hayman_phi(0.5)?,
            surface_identity_at_0_1: 2.0 * friedland_hayman_phi(0.45)?,
            pairs: n * n,
            min_convexity_gap: min_gap,
        };
        report.check(
            "phi",
            c.branch_point_log == 1.5 && c.branch_point_linear == 1.5 && c.at_half == 1.0 && min_gap >= -1e-12,
            format!("min convexity gap {min_gap:.3e}"),
        );
        report.diagnostic("phi", &c)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn catalog_has_the_seven_builtins_with_valid_defaults() {
        assert_eq!(catalog().len(), 7);
        for s in catalog() {
            assert!(!s.anchor.is_empty());
            let cfg = RunConfig::from_table(s.defaults()).unwrap();
            assert_eq!(cfg.scenario, s.name);
        }
        let b = find_scenario("bernoulli-power").unwrap();
        assert_eq!(b.kappa, Some(0.0));
        assert!(!b.solver);
        assert!(find_scenario("nope").is_err());
    }
}
