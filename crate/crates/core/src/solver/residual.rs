use num_complex::Complex64;
use serde::Serialize;

use super::assemble::hat_gradients;
use super::field::ComplexField;
use crate::error::Result;
use crate::geometry::{EdgeLabel, Mesh2D, Region};
use crate::incident::IncidentField;
use crate::media::MediumCoefficients;
use crate::quadrature::{gauss_interval, triangle_rule};

type C = Complex64;

const ZERO: C = C::new(0.0, 0.0);

/// Discrete residuals of the interior transmission system for a total field.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct ItepResidual {
    /// Mesh-weighted norm of the Galerkin residual of `div(A grad u) + kappa^2 rho u`
    /// against hat functions vanishing on the boundary.
    pub interior: f64,
    /// `||u - u_inc||` in `L^2` of the boundary.
    pub trace: f64,
    /// `||nu.A grad u - d_nu u_inc||` in `L^2` of the boundary, from one-sided recovered gradients.
    pub conormal: f64,
}

pub fn residual_itep(
    u_to: &ComplexField<'_>,
    u_inc: &IncidentField<f64>,
    medium: &MediumCoefficients<f64>,
    mesh: &Mesh2D,
) -> Result<ItepResidual> {
    let k2 = u_inc.kappa * u_inc.kappa;
    let nv = mesh.vertices.len();
    let mut on_boundary = vec![false; nv];
    for e in mesh.edges_with(EdgeLabel::Interface) {
        on_boundary[e.v[0]] = true;
        on_boundary[e.v[1]] = true;
    }
    let mut r = vec![ZERO; nv];
    let mut mass = vec![0.0; nv];
    let mut size = vec![0.0f64; nv];
    let rule = triangle_rule();
    for (t, tri) in mesh.triangles.iter().enumerate() {
        if mesh.regions[t] != Region::Interior {
            continue;
        }
        let p = mesh.corners(t);
        let area = mesh.area(t);
        let g = hat_gradients(p);
        let gu = u_to.triangle_gradient(t);
        for (l, w) in rule {
            let x = p[0] * l[0] + p[1] * l[1] + p[2] * l[2];
            let (a, rho) = medium.eval(x)?;
            let u = u_to.at(t, l);
            let agu = [gu[0] * a.xx + gu[1] * a.xy, gu[0] * a.xy + gu[1] * a.yy];
            for i in 0..3 {
                let flux = agu[0] * g[i].x + agu[1] * g[i].y;
                r[tri[i]] += (flux - u * (k2 * rho * l[i])) * (w * area);
            }
        }
        for i in 0..3 {
            mass[tri[i]] += area / 3.0;
            size[tri[i]] = size[tri[i]].max(p[i].dist(p[(i + 1) % 3]));
        }
    }
    let interior = (0..nv)
        .filter(|&v| mass[v] > 0.0 && !on_boundary[v])
        .map(|v| size[v] * size[v] * r[v].norm_sqr() / mass[v])
        .sum::<f64>()
        .sqrt();

    let rec = u_to.recover_gradients(&[Region::Interior]);
    let vt = mesh.vertex_triangles();
    let pieces = mesh.domain.pieces();
    let (mut trace, mut conormal) = (0.0, 0.0);
    for e in mesh.edges_with(EdgeLabel::Interface) {
        let [v0, v1] = e.v;
        let Some(&t) = vt[v0].iter().find(|&&t| mesh.regions[t] == Region::Interior && mesh.triangles[t].contains(&v1)) else {
            continue;
        };
        let tri = mesh.triangles[t];
        let (a, b) = (mesh.vertices[v0], mesh.vertices[v1]);
        for (s, w) in gauss_interval::<f64>(4, 0.0, 1.0) {
            let x = a + (b - a) * s;
            let mut bary = [0.0; 3];
            for k in 0..3 {
                if tri[k] == v0 {
                    bary[k] = 1.0 - s;
                } else if tri[k] == v1 {
                    bary[k] = s;
                }
            }
            let ds = w * a.dist(b);
            let (ui, gi) = u_inc.eval(x)?;
            trace += (u_to.at(t, bary) - ui).norm_sqr() * ds;
            let (piece, tt) = pieces
                .iter()
                .map(|pc| (pc, pc.project(x)))
                .min_by(|p, q| p.1 .1.total_cmp(&q.1 .1))
                .map(|(pc, (tt, _))| (pc, tt))
                .expect("domain has boundary pieces");
            let nu = piece.normal_at(tt);
            let (am, _) = medium.eval(x)?;
            let g = rec.at(t, bary);
            let an = am.apply(nu);
            let lhs = g[0] * an.x + g[1] * an.y;
            let rhs = gi[0] * nu.x + gi[1] * nu.y;
            conormal += (lhs - rhs).norm_sqr() * ds;
        }
    }
    Ok(ItepResidual { interior, trace: trace.sqrt(), conormal: conormal.sqrt() })
}
