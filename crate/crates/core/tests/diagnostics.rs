use cornerlab::diagnostics::*;
use cornerlab::geometry::{build_mesh, DomainSpec, Region, DEFAULT_CORNER_GRADING};
use cornerlab::incident::IncidentField;
use cornerlab::media::{extend_to_freespace, MediumCoefficients};
use cornerlab::solver::{solve, PmlParams, TransmissionProblem};
use cornerlab::Point;
use num_complex::Complex64;
use proptest::prelude::*;

const LAMBDA: f64 = 2.0 * std::f64::consts::PI;

fn bilinear(c: [f64; 3], s: f64) -> AnalyticField {
    AnalyticField::new(
        3,
        move |x| s * (c[0] * x[0] + c[1] * x[1] + c[2] * x[0] * x[1]),
        move |x| [s * (c[0] + c[2] * x[1]), s * (c[1] + c[2] * x[0]), 0.0],
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn acf_sign_symmetry_and_scaling(
        c0 in -2.0f64..2.0, c1 in -2.0f64..2.0, c2 in 0.5f64..2.0,
        x in -0.3f64..0.3, y in -0.3f64..0.3,
    ) {
        let c = [c0, c1, c2];
        let x0 = [x, y, 0.0];
        let radii = dyadic_radii(0.4);
        let base = acf_functional(&bilinear(c, 1.0), &x0, &radii, 3).unwrap();
        let flipped = acf_functional(&bilinear(c, -1.0), &x0, &radii, 3).unwrap();
        let scaled = acf_functional(&bilinear(c, 3.0), &x0, &radii, 3).unwrap();
        for i in 0..radii.len() {
            let b = base.values[i];
            prop_assert!((flipped.values[i] - b).abs() <= 1e-10 * b.abs().max(1e-300));
            prop_assert!((scaled.values[i] - 81.0 * b).abs() <= 1e-10 * (81.0 * b).abs().max(1e-300));
        }
    }

    #[test]
    fn subharmonic_averages_do_not_decrease(x in -2.0f64..2.0, y in -2.0f64..2.0, r_max in 0.1f64..1.5) {
        let radii = dyadic_radii(r_max);
        let sq = AnalyticField::planar(|p| p.x * p.x + p.y * p.y, |p| [2.0 * p.x, 2.0 * p.y]);
        let harm = AnalyticField::planar(|p| p.x.exp() * p.y.cos(), |p| [p.x.exp() * p.y.cos(), -p.x.exp() * p.y.sin()]);
        for w in [&sq, &harm] {
            let avg = ball_average(w, &[x, y], &radii).unwrap();
            prop_assert!(avg.mean.is_nondecreasing(1e-12), "{:?}", avg.mean.values);
        }
    }

    #[test]
    fn slope_is_linear_in_the_field(beta in -4.0f64..4.0, angle in 0.0f64..std::f64::consts::TAU, bump in 0.0f64..1.0) {
        let nu = Point::new(angle.cos(), angle.sin());
        let field = move |s: f64| {
            AnalyticField::planar(
                move |p| s * (beta * p.dot(nu).max(0.0) + bump * p.norm_sqr()),
                move |p| {
                    let h = if p.dot(nu) > 0.0 { beta } else { 0.0 };
                    [s * (h * nu.x + 2.0 * bump * p.x), s * (h * nu.y + 2.0 * bump * p.y)]
                },
            )
        };
        let med = MediumCoefficients::isotropic(1.0, 1.0);
        let v = move |_: Point| [nu.x, nu.y];
        let one = slope_extract(&field(1.0), Point::zero(), nu, &med, &v, 0.4).unwrap();
        let two = slope_extract(&field(2.0), Point::zero(), nu, &med, &v, 0.4).unwrap();
        prop_assert!((two.beta - 2.0 * one.beta).abs() <= 1e-10 * (1.0 + one.beta.abs()));
        prop_assert!((one.beta - beta).abs() <= 1e-8 * (1.0 + beta.abs()));
    }

    #[test]
    fn negative_part_vanishes_on_nonnegative_fields(
        a in -3.0f64..3.0, b in -3.0f64..3.0, c in -1.0f64..1.0,
        x in -1.0f64..1.0, y in -1.0f64..1.0,
    ) {
        let w = AnalyticField::planar(
            move |p| (a * p.x + b * p.y + c).max(0.0),
            move |p| if a * p.x + b * p.y + c > 0.0 { [a, b] } else { [0.0, 0.0] },
        );
        let radii = dyadic_radii(0.5);
        let neg = negative_part_decay(&w, &[x, y], &radii).unwrap();
        let growth = linear_growth_probe(&w, &[x, y], &radii).unwrap();
        prop_assert!(neg.profile.is_identically_zero());
        prop_assert!(growth.profile.values.iter().all(|v| *v >= 0.0));
    }
}

#[test]
fn disk_flux_mismatch_is_small_and_improves() {
    let d = DomainSpec::disk(1.0);
    let med = MediumCoefficients::isotropic(2.0, 2.0).certify(&[Point::zero()]).unwrap();
    let inc = IncidentField::plane_wave(1.0, Point::new(1.0, 0.0)).unwrap();
    let p = TransmissionProblem::new(extend_to_freespace(med.clone(), &d), inc, 3.0, PmlParams::new(LAMBDA / 2.0))
        .unwrap();
    let mut prev = f64::INFINITY;
    for n in [20.0, 40.0] {
        let mesh = build_mesh(&d, LAMBDA / n, 3.0, LAMBDA / 2.0, DEFAULT_CORNER_GRADING).unwrap();
        let u = solve(&p, &mesh).unwrap();
        let rel = flux_jump_check(&u, &inc, &med, None).unwrap().relative.unwrap();
        assert!(rel <= 0.05 && rel < prev, "lambda/{n}: {rel}");
        prev = rel;
    }
}

#[test]
fn zero_contrast_flux_is_absolute_zero() {
    let d = DomainSpec::disk(1.0);
    let med = MediumCoefficients::isotropic(1.0, 1.0).certify(&[Point::zero()]).unwrap();
    let inc = IncidentField::plane_wave(1.0, Point::new(1.0, 0.0)).unwrap();
    let p = TransmissionProblem::new(extend_to_freespace(med.clone(), &d), inc, 2.0, PmlParams::new(LAMBDA / 2.0))
        .unwrap();
    let mesh = build_mesh(&d, LAMBDA / 10.0, 2.0, LAMBDA / 2.0, DEFAULT_CORNER_GRADING).unwrap();
    let u = solve(&p, &mesh).unwrap();
    let r = flux_jump_check(&u, &inc, &med, None).unwrap();
    assert!(r.reference == 0.0 && r.relative.is_none() && r.absolute < 1e-10, "{r:?}");
}

#[test]
fn fem_sector_is_nonradiating() {
    let a = 2.0;
    let d = DomainSpec::sector(2, 1, 1.0);
    let wm = IncidentField::sector_mode(2, 1, 1).unwrap();
    let inc = wm.scaled(Complex64::new(a, 0.0));
    let lam = LAMBDA / inc.kappa;
    let med = MediumCoefficients::isotropic(a, a).certify(&[Point::zero()]).unwrap();
    let p = TransmissionProblem::new(extend_to_freespace(med.clone(), &d), inc, 2.0, PmlParams::new(lam)).unwrap();
    let mesh = build_mesh(&d, 0.05, 2.0, lam, DEFAULT_CORNER_GRADING).unwrap();
    let u = solve(&p, &mesh).unwrap();
    let w = FemScalarField::new(&u, Reduction::Real, &[Region::Interior]);
    let dd = d.clone();
    let g = move |x: Point| {
        let (_, i, t) = dd.boundary_distance(x);
        let nu = dd.pieces()[i].normal_at(t);
        let gr = wm.gradient(x).unwrap();
        (1.0 - a) * (gr[0].re * nu.x + gr[1].re * nu.y)
    };
    let rep = verify_nonradiating(&w, &g, &|_| 0.0, &med, inc.kappa, &mesh).unwrap();
    assert!(rep.boundary_normal < 0.03 * rep.g_norm, "{rep:?}");
    assert!(rep.exterior_sup < 0.01 && rep.interior < 0.05, "{rep:?}");
    let wrong = |x: Point| 1.1 * g(x);
    let bad = verify_nonradiating(&w, &wrong, &|_| 0.0, &med, inc.kappa, &mesh).unwrap();
    let ratio = bad.boundary_normal / rep.g_norm;
    assert!((ratio - 0.1).abs() <= 0.02, "{ratio}");
}
