use num_complex::Complex64;
use rayon::prelude::*;

use super::sparse::{solve_direct, CsrMatrix, SolveStats};
use super::{TransmissionProblem, SOLVE_TOLERANCE};
use crate::error::Result;
use crate::geometry::{Mesh2D, Region};
use crate::quadrature::triangle_rule;
use crate::scalar::Sym2;
use crate::Point;

type C = Complex64;

const ZERO: C = C::new(0.0, 0.0);

/// Galerkin system for the unknown vertex values (outer-circle vertices excluded).
#[derive(Clone, Debug)]
pub struct LinearSystem {
    pub matrix: CsrMatrix,
    pub rhs: Vec<C>,
    /// Unknown index of each vertex, `None` on the outer circle.
    pub dof: Vec<Option<usize>>,
    pub coords: Vec<Point>,
}

impl LinearSystem {
    pub fn solve(&self) -> Result<(Vec<C>, SolveStats)> {
        solve_direct(&self.matrix, &self.rhs, &self.coords, SOLVE_TOLERANCE)
    }

    /// Vertex values from unknowns, with zeros on the outer circle.
    pub fn expand(&self, x: &[C]) -> Vec<C> {
        self.dof.iter().map(|d| d.map_or(ZERO, |k| x[k])).collect()
    }
}

struct Element {
    k: [[C; 3]; 3],
    f: [C; 3],
}

/// Gradients of the three hat functions, constant on the triangle.
pub(crate) fn hat_gradients(p: [Point; 3]) -> [Point; 3] {
    let det = (p[1] - p[0]).cross(p[2] - p[0]);
    [
        (p[1] - p[2]).perp() * (-1.0 / det),
        (p[2] - p[0]).perp() * (-1.0 / det),
        (p[0] - p[1]).perp() * (-1.0 / det),
    ]
}

/// Complex symmetric tensor.
#[derive(Clone, Copy)]
struct CSym {
    xx: C,
    xy: C,
    yy: C,
}

impl CSym {
    fn form(&self, a: Point, b: Point) -> C {
        self.xx * (a.x * b.x) + self.xy * (a.x * b.y + a.y * b.x) + self.yy * (a.y * b.y)
    }

    fn real(s: Sym2<f64>) -> Self {
        Self { xx: s.xx.into(), xy: s.xy.into(), yy: s.yy.into() }
    }
}

/// Stretched tensor and mass factor at `x` for the radial layer.
fn pml_coefficients(problem: &TransmissionProblem, x: Point) -> (CSym, C) {
    let r = x.norm();
    let rr = problem.truncation_radius;
    if !problem.pml.enabled || r <= rr {
        return (CSym::real(Sym2::identity()), C::new(1.0, 0.0));
    }
    let w = problem.pml.width;
    let s0 = problem.pml.strength();
    let d = r - rr;
    let sigma = s0 * (d / w).powi(2);
    let sigma_bar = s0 * d.powi(3) / (3.0 * w * w * r);
    let sr = C::new(1.0, sigma / problem.kappa);
    let st = C::new(1.0, sigma_bar / problem.kappa);
    let (er, et) = (sr.inv() * st, st.inv() * sr);
    let (c, s) = (x.x / r, x.y / r);
    let t = CSym {
        xx: er * (c * c) + et * (s * s),
        xy: (er - et) * (c * s),
        yy: er * (s * s) + et * (c * c),
    };
    (t, sr * st)
}

fn element(problem: &TransmissionProblem, mesh: &Mesh2D, t: usize) -> Result<Element> {
    let p = mesh.corners(t);
    let area = mesh.area(t);
    let g = hat_gradients(p);
    let k2 = problem.kappa * problem.kappa;
    let mut e = Element { k: [[ZERO; 3]; 3], f: [ZERO; 3] };
    for (l, wq) in triangle_rule() {
        let x = p[0] * l[0] + p[1] * l[1] + p[2] * l[2];
        let w = wq * area;
        let (a, mass) = match mesh.regions[t] {
            Region::Interior => {
                let (a, rho) = problem.medium.medium.eval(x)?;
                let da = a.sub(&Sym2::identity());
                let drho = rho - 1.0;
                if da != Sym2::scalar(0.0) || drho != 0.0 {
                    let (u, gu) = problem.incident.eval(x)?;
                    for i in 0..3 {
                        let flux = (gu[0] * (da.xx * g[i].x + da.xy * g[i].y)) + (gu[1] * (da.xy * g[i].x + da.yy * g[i].y));
                        e.f[i] += (-flux + u * (k2 * drho * l[i])) * w;
                    }
                }
                (CSym::real(a), C::new(rho, 0.0))
            }
            Region::Exterior => (CSym::real(Sym2::identity()), C::new(1.0, 0.0)),
            Region::Pml => pml_coefficients(problem, x),
        };
        if let Some(src) = &problem.source {
            let f = (src.0)(x);
            for i in 0..3 {
                e.f[i] += f * (l[i] * w);
            }
        }
        for i in 0..3 {
            for j in 0..3 {
                e.k[i][j] += (a.form(g[i], g[j]) - mass * (k2 * l[i] * l[j])) * w;
            }
        }
    }
    Ok(e)
}

/// Assemble the PML-stretched Galerkin system for the scattered field.
///
/// Element contributions are computed in parallel and summed in a fixed order,
/// so the matrix does not depend on the thread count.
pub fn assemble(problem: &TransmissionProblem, mesh: &Mesh2D) -> Result<LinearSystem> {
    problem.validate()?;
    problem.check_mesh(mesh)?;
    let on_outer = mesh.truncation_vertices();
    let mut dof = vec![None; mesh.vertices.len()];
    let mut coords = Vec::new();
    for (v, &outer) in on_outer.iter().enumerate() {
        if !outer {
            dof[v] = Some(coords.len());
            coords.push(mesh.vertices[v]);
        }
    }
    let n = coords.len();
    let elems: Vec<Element> = (0..mesh.triangles.len())
        .into_par_iter()
        .map(|t| element(problem, mesh, t))
        .collect::<Result<_>>()?;
    let mut trip = Vec::with_capacity(9 * elems.len());
    let mut rhs = vec![ZERO; n];
    for (tri, e) in mesh.triangles.iter().zip(&elems) {
        for i in 0..3 {
            let Some(di) = dof[tri[i]] else { continue };
            rhs[di] += e.f[i];
            for j in 0..3 {
                if let Some(dj) = dof[tri[j]] {
                    trip.push((di, dj, e.k[i][j]));
                }
            }
        }
    }
    Ok(LinearSystem { matrix: CsrMatrix::from_triplets(n, trip), rhs, dof, coords })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_mesh, DomainSpec, DEFAULT_CORNER_GRADING};
    use crate::incident::IncidentField;
    use crate::media::{extend_to_freespace, MediumCoefficients};
    use crate::solver::PmlParams;
    use crate::Error;

    fn setup(a: f64, rho: f64) -> (TransmissionProblem, Mesh2D) {
        let d = DomainSpec::square(1.0).with_offset([-0.5, -0.5]);
        let med = MediumCoefficients::isotropic(a, rho).certify(&[Point::new(0.0, 0.0)]).unwrap();
        let inc = IncidentField::plane_wave(2.0, Point::new(0.6, 0.8)).unwrap();
        let p = TransmissionProblem::new(extend_to_freespace(med, &d), inc, 1.2, PmlParams::new(0.6)).unwrap();
        let mesh = build_mesh(&d, 0.2, 1.2, 0.6, DEFAULT_CORNER_GRADING).unwrap();
        (p, mesh)
    }

    #[test]
    fn zero_contrast_gives_zero_load() {
        let (p, mesh) = setup(1.0, 1.0);
        let sys = assemble(&p, &mesh).unwrap();
        assert!(sys.rhs.iter().all(|v| *v == ZERO));
        let (x, _) = sys.solve().unwrap();
        assert!(x.iter().all(|v| v.norm() <= 1e-10));
    }

    #[test]
    fn matrix_is_complex_symmetric() {
        let (p, mesh) = setup(2.0, 3.0);
        let sys = assemble(&p, &mesh).unwrap();
        assert_eq!(sys.matrix.symmetry_defect(), 0.0);
        assert!(sys.rhs.iter().any(|v| v.norm() > 0.0));
    }

    #[test]
    fn stiffness_rows_annihilate_constants() {
        let (mut p, mesh) = setup(2.0, 3.0);
        p.pml.enabled = false;
        p.kappa = 1e-300;
        p.incident.kappa = 1e-300;
        p.allow_underresolved = true;
        let sys = assemble(&p, &mesh).unwrap();
        let on_outer = mesh.truncation_vertices();
        let adj = mesh.vertex_neighbors();
        for (v, d) in sys.dof.iter().enumerate() {
            let Some(r) = *d else { continue };
            if adj[v].iter().any(|&w| on_outer[w]) {
                continue;
            }
            let s: C = (sys.matrix.row_ptr[r]..sys.matrix.row_ptr[r + 1]).map(|k| sys.matrix.val[k]).sum();
            assert!(s.norm() < 1e-12, "row {r}: {s}");
        }
    }

    #[test]
    fn underresolved_mesh_is_rejected() {
        let (mut p, mesh) = setup(2.0, 2.0);
        p.kappa = 5.0;
        p.incident.kappa = 5.0;
        assert!(matches!(assemble(&p, &mesh), Err(Error::Config(_))));
        p.allow_underresolved = true;
        assert!(assemble(&p, &mesh).is_ok());
    }

    #[test]
    fn mismatched_mesh_is_rejected() {
        let (p, _) = setup(2.0, 2.0);
        let other = build_mesh(&DomainSpec::disk(0.5), 0.2, 1.2, 0.6, DEFAULT_CORNER_GRADING).unwrap();
        assert!(matches!(assemble(&p, &other), Err(Error::Config(_))));
    }

    #[test]
    fn assembly_is_independent_of_thread_count() {
        let (p, mesh) = setup(2.0, 3.0);
        let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let four = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
        let a = one.install(|| assemble(&p, &mesh).unwrap());
        let b = four.install(|| assemble(&p, &mesh).unwrap());
        assert_eq!(a.matrix.val, b.matrix.val);
        assert_eq!(a.rhs, b.rhs);
    }
}
