use serde::Serialize;

use super::field::ScalarField;
use super::traces::interface_points;
use crate::error::{Error, Result};
use crate::geometry::{EdgeLabel, Mesh2D, Region};
use crate::media::MediumCoefficients;
use crate::quadrature::triangle_rule;
use crate::solver::hat_gradients;
use crate::Point;

#[derive(Clone, Copy, Debug, Serialize)]
pub struct NonradiatingReport {
    /// Mesh-weighted norm of the weak residual of `div(A grad w) + kappa^2 rho w - h`.
    pub interior: f64,
    /// `sup |w|` over exterior mesh vertices inside the truncation circle.
    pub exterior_sup: f64,
    /// `||(d_nu w)_int - g||` on the boundary.
    pub boundary_normal: f64,
    /// `||(nu.A grad w)_int - g||` on the boundary.
    pub boundary_conormal: f64,
    pub g_norm: f64,
    pub exclusion: f64,
}

fn at(w: &dyn ScalarField, x: Point) -> Result<(f64, Point)> {
    let p = [x.x, x.y, 0.0];
    let v = w.value(p);
    let g = w.gradient(p);
    match (v, g) {
        (Some(v), Some(g)) => Ok((v, Point::new(g[0], g[1]))),
        _ => Err(Error::Config(format!("field is not defined at ({}, {})", x.x, x.y))),
    }
}

/// Check whether `w` solves `div(A grad w) + kappa^2 rho w = h` in the scatterer,
/// vanishes outside it and has interior flux `g` on its boundary. The gradient of
/// `w` should be the interior one at boundary points. Corners are excluded from
/// the boundary norms within `3h`.
pub fn verify_nonradiating(
    w: &dyn ScalarField,
    g: &dyn Fn(Point) -> f64,
    h: &dyn Fn(Point) -> f64,
    medium: &MediumCoefficients<f64>,
    kappa: f64,
    mesh: &Mesh2D,
) -> Result<NonradiatingReport> {
    let k2 = kappa * kappa;
    let nv = mesh.vertices.len();
    let mut on_boundary = vec![false; nv];
    for e in mesh.edges_with(EdgeLabel::Interface) {
        on_boundary[e.v[0]] = true;
        on_boundary[e.v[1]] = true;
    }
    let mut r = vec![0.0; nv];
    let mut mass = vec![0.0; nv];
    let mut size = vec![0.0f64; nv];
    for (t, tri) in mesh.triangles.iter().enumerate() {
        if mesh.regions[t] != Region::Interior {
            continue;
        }
        let p = mesh.corners(t);
        let area = mesh.area(t);
        let gp = hat_gradients(p);
        for (l, wq) in triangle_rule() {
            let x = p[0] * l[0] + p[1] * l[1] + p[2] * l[2];
            let (a, rho) = medium.eval(x)?;
            let (u, gu) = at(w, x)?;
            let agu = a.apply(gu);
            let f = h(x);
            for i in 0..3 {
                r[tri[i]] += (agu.dot(gp[i]) - k2 * rho * u * l[i] + f * l[i]) * wq * area;
            }
        }
        for i in 0..3 {
            mass[tri[i]] += area / 3.0;
            size[tri[i]] = size[tri[i]].max(p[i].dist(p[(i + 1) % 3]));
        }
    }
    let interior = (0..nv)
        .filter(|&v| mass[v] > 0.0 && !on_boundary[v])
        .map(|v| size[v] * size[v] * r[v] * r[v] / mass[v])
        .sum::<f64>()
        .sqrt();

    let vt = mesh.vertex_triangles();
    let mut exterior_sup: f64 = 0.0;
    for (v, x) in mesh.vertices.iter().enumerate() {
        let outside = !vt[v].is_empty() && vt[v].iter().all(|&t| mesh.regions[t] == Region::Exterior);
        if outside && x.norm() < mesh.truncation_radius {
            if let Some(val) = w.value([x.x, x.y, 0.0]) {
                exterior_sup = exterior_sup.max(val.abs());
            }
        }
    }

    let exclusion = 3.0 * mesh.h;
    let (mut bn, mut bc, mut gn) = (0.0, 0.0, 0.0);
    for (bp, _, _) in interface_points(mesh, exclusion) {
        let (_, gu) = at(w, bp.x)?;
        let (a, _) = medium.eval(bp.x)?;
        let gv = g(bp.x);
        bn += (gu.dot(bp.nu) - gv).powi(2) * bp.weight;
        bc += (a.apply(gu).dot(bp.nu) - gv).powi(2) * bp.weight;
        gn += gv * gv * bp.weight;
    }
    Ok(NonradiatingReport {
        interior,
        exterior_sup,
        boundary_normal: bn.sqrt(),
        boundary_conormal: bc.sqrt(),
        g_norm: gn.sqrt(),
        exclusion,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagnostics::field::AnalyticField;
    use crate::geometry::{build_mesh, DomainSpec, DEFAULT_CORNER_GRADING};
    use crate::incident::IncidentField;

    #[test]
    fn zero_triple() {
        let d = DomainSpec::square(1.0).with_offset([-0.5, -0.5]);
        let mesh = build_mesh(&d, 0.2, 1.2, 0.5, DEFAULT_CORNER_GRADING).unwrap();
        let w = AnalyticField::planar(|_| 0.0, |_| [0.0, 0.0]);
        let rep = verify_nonradiating(&w, &|_| 0.0, &|_| 0.0, &MediumCoefficients::isotropic(2.0, 3.0), 1.0, &mesh)
            .unwrap();
        assert_eq!((rep.interior, rep.exterior_sup, rep.boundary_normal, rep.boundary_conormal), (0.0, 0.0, 0.0, 0.0));
    }

    #[test]
    fn analytic_sector_triple() {
        let a = 2.0;
        let d = DomainSpec::sector(2, 1, 1.0);
        let mesh = build_mesh(&d, 0.05, 1.3, 0.5, DEFAULT_CORNER_GRADING).unwrap();
        let wm = IncidentField::sector_mode(2, 1, 1).unwrap();
        let kappa = wm.kappa;
        let dom = d.clone();
        let inside = move |p: Point| dom.contains(p) || dom.boundary_distance(p).0 < 1e-12;
        let (i1, i2) = (inside.clone(), inside);
        let w1 = wm;
        let w = AnalyticField::planar(
            move |p| if i1(p) { (1.0 - a) * w1.value(p).unwrap().re } else { 0.0 },
            move |p| {
                let g = wm.gradient(p).unwrap();
                if i2(p) { [(1.0 - a) * g[0].re, (1.0 - a) * g[1].re] } else { [0.0, 0.0] }
            },
        );
        let gfun = |p: Point| {
            let (_, i, t) = d.boundary_distance(p);
            let nu = d.pieces()[i].normal_at(t);
            let g = wm.gradient(p).unwrap();
            (1.0 - a) * (g[0].re * nu.x + g[1].re * nu.y)
        };
        let med = MediumCoefficients::isotropic(a, a);
        let rep = verify_nonradiating(&w, &gfun, &|_| 0.0, &med, kappa, &mesh).unwrap();
        assert!(rep.exterior_sup == 0.0);
        assert!(rep.boundary_normal < 1e-10 * rep.g_norm, "{rep:?}");
        assert!((rep.boundary_conormal - (a - 1.0) * rep.g_norm).abs() < 1e-9, "{rep:?}");
        assert!(rep.interior < 1e-3, "{rep:?}");
        let wrong = |p: Point| 1.1 * gfun(p);
        let bad = verify_nonradiating(&w, &wrong, &|_| 0.0, &med, kappa, &mesh).unwrap();
        assert!((bad.boundary_normal / rep.g_norm - 0.1).abs() < 1e-9, "{bad:?}");
    }
}
