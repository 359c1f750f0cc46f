use std::f64::consts::PI;

use num_complex::Complex64;

use cornerlab::farfield::{near_to_far_with, rellich_consistency, FarFieldPattern};
use cornerlab::geometry::{build_mesh, DomainSpec, Mesh2D, Region, DEFAULT_CORNER_GRADING};
use cornerlab::incident::IncidentField;
use cornerlab::media::{extend_to_freespace, MediumCoefficients};
use cornerlab::solver::{assemble, disk_series_solution, solve, PmlParams, TransmissionProblem};
use cornerlab::specfun::{bessel_j, bessel_j_zero};
use cornerlab::Point;

const LAMBDA: f64 = 2.0 * PI;

fn disk_problem(rr: f64, width: f64, inc: IncidentField<f64>) -> TransmissionProblem {
    let d = DomainSpec::disk(1.0);
    let med = MediumCoefficients::isotropic(2.0, 2.0).certify(&[Point::zero()]).unwrap();
    TransmissionProblem::new(extend_to_freespace(med, &d), inc, rr, PmlParams::new(width)).unwrap()
}

fn plane(angle: f64) -> IncidentField<f64> {
    IncidentField::plane_wave(1.0, Point::from_angle(angle)).unwrap()
}

fn disk_far_field(h: f64, width: f64, re: f64) -> FarFieldPattern {
    let p = disk_problem(3.0, width, plane(0.0));
    let mesh = build_mesh(p.domain(), h, 3.0, width, DEFAULT_CORNER_GRADING).unwrap();
    let u = solve(&p, &mesh).unwrap();
    near_to_far_with(&u, re, 64).unwrap()
}

#[test]
fn disk_far_field_converges_to_series() {
    let series = disk_series_solution(2.0, 2.0, 1.0, 1.0, Point::new(1.0, 0.0)).unwrap().pattern(64);
    let errs: Vec<f64> = [20.0, 40.0, 80.0]
        .iter()
        .map(|n| disk_far_field(LAMBDA / n, LAMBDA / 2.0, 2.5).relative_error(&series).unwrap())
        .collect();
    assert!(errs[0] <= 0.05, "{errs:?}");
    assert!(errs[0] / errs[1] >= 1.5 && errs[1] / errs[2] >= 1.5, "{errs:?}");
}

#[test]
fn disk_near_field_matches_series() {
    let series = disk_series_solution(2.0, 2.0, 1.0, 1.0, Point::new(1.0, 0.0)).unwrap();
    let mut prev = f64::INFINITY;
    for n in [20.0, 40.0] {
        let p = disk_problem(3.0, LAMBDA / 2.0, plane(0.0));
        let mesh = build_mesh(p.domain(), LAMBDA / n, 3.0, LAMBDA / 2.0, DEFAULT_CORNER_GRADING).unwrap();
        let u = solve(&p, &mesh).unwrap();
        let keep = |t: usize| mesh.regions[t] != Region::Pml;
        let rel = u.l2_error_where(|x| series.scattered(x).0, keep) / u.l2_norm_where(keep);
        assert!(rel <= 0.05 && rel < prev, "{rel}");
        prev = rel;
    }
}

#[test]
fn pml_width_and_extraction_radius_do_not_matter() {
    let h = LAMBDA / 40.0;
    let a = disk_far_field(h, LAMBDA / 2.0, 2.5);
    let b = disk_far_field(h, LAMBDA, 2.5);
    assert!((a.norm() - b.norm()).abs() < 0.005 * b.norm());
    let c = disk_far_field(h, LAMBDA / 2.0, 2.0);
    assert!(a.relative_error(&c).unwrap() < 0.01);
}

#[test]
fn mirror_symmetry_of_the_disk_pattern() {
    let ff = disk_far_field(LAMBDA / 20.0, LAMBDA / 2.0, 2.5);
    let n = ff.len();
    for k in 1..n {
        let (a, b) = (ff.values[k].norm(), ff.values[n - k].norm());
        assert!((a - b).abs() < 0.02 * ff.norm() / (2.0 * PI).sqrt(), "{k} {a} {b}");
    }
}

#[test]
fn solve_is_linear_in_the_incident_field() {
    let h = LAMBDA / 20.0;
    let (s1, s2) = (Complex64::new(0.7, -0.2), Complex64::new(-1.1, 0.4));
    let p1 = disk_problem(3.0, LAMBDA / 2.0, plane(0.3).scaled(s1));
    let p2 = disk_problem(3.0, LAMBDA / 2.0, plane(2.0).scaled(s2));
    let mesh = build_mesh(p1.domain(), h, 3.0, LAMBDA / 2.0, DEFAULT_CORNER_GRADING).unwrap();
    let (u1, u2) = (solve(&p1, &mesh).unwrap(), solve(&p2, &mesh).unwrap());
    // The superposed incident wave loads the system with the sum of both loads.
    let mut sys = assemble(&p1, &mesh).unwrap();
    let load2 = assemble(&p2, &mesh).unwrap().rhs;
    sys.rhs.iter_mut().zip(&load2).for_each(|(a, b)| *a += b);
    let (x, _) = sys.solve().unwrap();
    let both = sys.expand(&x);
    let sum = u1.add(&u2).unwrap();
    let diff = both.iter().zip(&sum.values).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
    assert!(diff <= 1e-9 * sum.max_abs(), "{diff}");
}

#[test]
fn manufactured_bessel_solution_converges_at_second_order() {
    let kappa = 1.0;
    let j01 = bessel_j_zero::<f64>(0, 1).unwrap();
    let (rr, outer) = (1.6, j01 / kappa);
    let d = DomainSpec::disk(1.0);
    let med = MediumCoefficients::isotropic(1.0, 2.0).certify(&[Point::zero()]).unwrap();
    let inc = plane(0.0).scaled(Complex64::new(0.0, 0.0));
    let p = TransmissionProblem::new(extend_to_freespace(med, &d), inc, rr, PmlParams::disabled(outer - rr))
        .unwrap()
        .with_source(move |x| {
            if x.norm() < 1.0 {
                Complex64::new(-kappa * kappa * bessel_j(0, kappa * x.norm()).unwrap(), 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        });
    let exact = |x: Point| Complex64::new(bessel_j(0, kappa * x.norm()).unwrap(), 0.0);
    let mut hs = Vec::new();
    let mut errs = Vec::new();
    for h in [0.2, 0.1, 0.05] {
        let mesh: Mesh2D = build_mesh(&d, h, rr, outer - rr, DEFAULT_CORNER_GRADING).unwrap();
        let u = solve(&p, &mesh).unwrap();
        hs.push(h);
        errs.push(u.l2_error_where(exact, |_| true));
    }
    let order = |i: usize| (errs[i] / errs[i + 1]).ln() / (hs[i] / hs[i + 1]).ln();
    assert!(order(0) >= 1.8 && order(1) >= 1.8, "{errs:?}");
}

#[test]
fn zero_field_rellich_report_is_flagged() {
    let p = disk_problem(3.0, LAMBDA / 2.0, plane(0.0));
    let mesh = build_mesh(p.domain(), LAMBDA / 10.0, 3.0, LAMBDA / 2.0, DEFAULT_CORNER_GRADING).unwrap();
    let z = cornerlab::solver::ComplexField::zeros(&mesh, 1.0);
    let ff = near_to_far_with(&z, 2.5, 64).unwrap();
    let r = rellich_consistency(&z, &ff, (1.5, 3.0)).unwrap();
    assert_eq!((r.exterior_l2, r.farfield_norm), (0.0, 0.0));
    assert!(r.ratio.is_nan());
}
