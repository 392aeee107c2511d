//! Acceptance suite: one test per criterion, each printing a single
//! PASS/FAIL line with the pinned tolerances.

use bpp_lab::barrier::{admissible_epsilon, annulus_samples, residual_check, Barrier};
use bpp_lab::cases::{self, CaseId, CaseStudy, ZeroOrder};
use bpp_lab::fdlab::{csmp_check, hopf_quotient, solve_dirichlet, Grid};
use bpp_lab::geometry::{
    chain_ratio, cone_chain, falsify_outward_ball, order_certificate, outward_ball_search,
    BallSearchOutcome, Omega, SingularSet, SingularSetScene, TestSet,
};
use bpp_lab::operator::{adversarial_coefficients, family_by_name, growth_check, Domain};
use bpp_lab::quad::graded_integral;
use bpp_lab::weight::{tabulate, RadialWeight};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn report(criterion: usize, pass: bool, what: &str) {
    println!(
        "criterion {criterion}: {} - {what}",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "criterion {criterion} failed: {what}");
}

#[test]
fn criterion_1_barrier_suite() {
    let start = std::time::Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut pass = true;
    for trial in 0..20 {
        let n = 1 + trial % 3;
        let r: f64 = rng.gen_range(0.5..4.0);
        let m: f64 = rng.gen_range(0.5..2.0);
        let weight = if trial % 2 == 0 {
            RadialWeight::constant(rng.gen_range(0.5..5.0), r).unwrap()
        } else {
            RadialWeight::power(rng.gen_range(0.5..3.0), rng.gen_range(0.2..0.8), r).unwrap()
        };
        let eps = admissible_epsilon(n, r, &weight).unwrap();
        let b = Barrier::new(n, r, eps, m, weight.clone()).unwrap();

        // Boundary values of v on the two spheres.
        let outer: Vec<f64> = (0..n).map(|i| if i == 0 { r } else { 0.0 }).collect();
        // Nudge the inner point a hair inside so the rounded norm cannot
        // land above the inner sphere.
        let inner_r = (r - eps) * (1.0 - 1e-14);
        let inner: Vec<f64> = (0..n).map(|i| if i == 0 { inner_r } else { 0.0 }).collect();
        let v_outer = b.eval(&outer).unwrap().v;
        let v_inner = b.eval(&inner).unwrap().v;
        if !(v_outer.abs() <= 1e-12 && (v_inner - m).abs() <= 1e-12) {
            eprintln!("trial {trial}: boundary v_outer={v_outer:e} v_inner-m={:e}", v_inner - m);
        }
        pass &= v_outer.abs() <= 1e-12 && (v_inner - m).abs() <= 1e-12;

        // Residual against the saturating coefficients at 10^4 samples.
        let domain = Domain::Annulus {
            center: vec![0.0; n],
            r_inner: r - eps,
            r_outer: r,
        };
        let coeffs = adversarial_coefficients(n, domain, &weight);
        let samples = annulus_samples(&b, 10_000, &mut rng);
        let res = residual_check(&b, &coeffs, &samples, 1e-8).unwrap();
        if !res.pass {
            eprintln!("trial {trial}: residual min {:e}", res.min_residual);
        }
        pass &= res.pass;

        // Normal derivative against an independent quadrature of f(eps).
        let k = b.k();
        let i2 = graded_integral(|t| weight.eval(t).unwrap() * (eps - t), eps, 1e-11, 64)
            .unwrap();
        let f_quad = eps + k * i2;
        if (b.f_at_eps() - f_quad).abs() > 1e-10 * (1.0 + f_quad) {
            eprintln!("trial {trial}: f(eps) {:e} vs quad {:e}", b.f_at_eps(), f_quad);
        }
        pass &= (b.f_at_eps() - f_quad).abs() <= 1e-10 * (1.0 + f_quad);
        pass &= (b.normal_derivative() + m / b.f_at_eps()).abs() <= 1e-12;
    }
    let elapsed = start.elapsed().as_secs_f64();
    pass &= elapsed <= 60.0;
    report(
        1,
        pass,
        &format!("barrier conclusions for 20 random configs (<= 1e-12 boundary, residual >= -1e-8 at 1e4 samples, f(eps) to 1e-10) in {elapsed:.1}s"),
    );
}

#[test]
fn criterion_2_quadrature_oracle() {
    let mut pass = true;
    // Forced-quadrature path: tabulated interpolant of 2 d^{-1/2}.
    let power = RadialWeight::power(2.0, 0.5, 1.0).unwrap();
    let tab = tabulate(&power, 1e-7, 8000).unwrap();
    let i1 = tab.integrate_first(0.5).unwrap();
    pass &= (i1 - 2.0 * 2f64.sqrt()).abs() / (2.0 * 2f64.sqrt()) <= 1e-6;
    for &r in &[0.1f64, 0.25, 0.5, 0.9] {
        // I1 closed form 2 c sqrt(r) (the 4 sqrt(r) c/2 pattern), I2 from
        // the Fubini reduction.
        let exact_i1 = 4.0 * r.sqrt() * (2.0 / 2.0);
        let exact_i2 = 2.0 * r.powf(1.5) / (0.5 * 1.5);
        let q1 = tab.integrate_first(r).unwrap();
        let q2 = tab.integrate_second(r).unwrap();
        pass &= (q1 - exact_i1).abs() / exact_i1 <= 1e-6;
        pass &= (q2 - exact_i2).abs() / exact_i2 <= 1e-6;
    }
    report(2, pass, "forced-quadrature I1/I2 match closed forms to rel 1e-6 (incl. 2sqrt(2) oracle)");
}

#[test]
fn criterion_3_growth_certificates() {
    let mut pass = true;
    let weight = RadialWeight::power(2.0, 0.5, 1.0).unwrap();
    let domain = Domain::Ball {
        center: vec![0.0, 0.0],
        radius: 1.0,
    };
    let adv = adversarial_coefficients(2, domain.clone(), &weight);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let cert = growth_check(&adv, &weight, 3000, &mut rng).unwrap();
    pass &= cert.pass();
    // The family saturates the b and c bounds: margins pinned at zero.
    pass &= cert.b_bound.worst_margin.abs() <= 1e-12;
    pass &= cert.c_bound.worst_margin.abs() <= 1e-12;
    pass &= cert.ellipticity_lower.worst_margin.abs() <= 1e-12;

    let bad = family_by_name("c-violating", 2, domain, &weight).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let bad_cert = growth_check(&bad, &weight, 3000, &mut rng).unwrap();
    pass &= !bad_cert.c_bound.pass;
    // d^{-3/2} growth leaves the allowance far behind near the boundary.
    pass &= bad_cert.c_bound.worst_margin < -1e3;
    report(3, pass, "adversarial margins |.| <= 1e-12; c = -Lambda/d^1.5 fails with margin < -1e3");
}

fn square_scene(singular: SingularSet, test_set: TestSet) -> SingularSetScene {
    SingularSetScene::new(
        Omega::Square {
            n: 2,
            half_width: 1.0,
        },
        singular,
        test_set,
    )
    .unwrap()
}

#[test]
fn criterion_4_geometry_suite() {
    let mut pass = true;
    pass &= (chain_ratio(std::f64::consts::FRAC_PI_2) - 0.8).abs() == 0.0
        || (chain_ratio(std::f64::consts::FRAC_PI_2) - 0.8).abs() < f64::EPSILON;
    pass &= (chain_ratio(std::f64::consts::FRAC_PI_6) - 0.875).abs() < f64::EPSILON;
    for theta in [
        std::f64::consts::FRAC_PI_6,
        std::f64::consts::FRAC_PI_4,
        std::f64::consts::FRAC_PI_3,
    ] {
        let chain = cone_chain(&[0.0, 0.0], &[1.0, 0.0], theta, 0.2, 10).unwrap();
        for w in chain.balls.windows(2) {
            let gap = (w[0].0.iter().zip(&w[1].0).map(|(a, b)| (a - b) * (a - b)).sum::<f64>())
                .sqrt()
                + w[0].1 / 3.0
                - 2.0 * w[1].1 / 3.0;
            pass &= gap.abs() <= 1e-12;
        }
    }
    pass &= order_certificate(0.8, 100.0, 2, &[]).unwrap().finite_order_bound == 26;

    let origin = TestSet::Points {
        points: vec![vec![0.0, 0.0]],
    };
    let found_scenes = [
        square_scene(
            SingularSet::FinitePoints {
                points: vec![vec![0.5, 0.5], vec![-0.5, 0.5]],
            },
            TestSet::Points {
                points: vec![vec![0.0, -0.5]],
            },
        ),
        square_scene(SingularSet::HalfCross, origin.clone()),
    ];
    for scene in &found_scenes {
        pass &= matches!(
            outward_ball_search(scene, 0.05).unwrap(),
            BallSearchOutcome::Found { .. }
        );
    }
    let falsified_scenes = [
        square_scene(SingularSet::AxisCross, origin),
        square_scene(SingularSet::LineFamily, TestSet::LeftStrip { x1_max: 0.0 }),
    ];
    for scene in &falsified_scenes {
        for h in [0.1, 0.05, 0.01] {
            pass &= falsify_outward_ball(scene, h).unwrap().falsified_at_resolution;
        }
    }
    report(4, pass, "kappa values exact, nesting <= 1e-12, m* = 26, outward ball found/falsified per scene");
}

#[test]
fn criterion_5_fd_suite() {
    let mut pass = true;
    let center = [0.0, 0.0];
    let weight = RadialWeight::power(2.0, 0.5, 0.2).unwrap();
    let domain = Domain::Annulus {
        center: center.to_vec(),
        r_inner: 0.8,
        r_outer: 1.0,
    };
    let dom_c = domain.clone();
    let w = weight.clone();
    let coeffs = bpp_lab::operator::OperatorCoefficients::new(
        2,
        |_| DMatrix::identity(2, 2),
        |_| DVector::zeros(2),
        move |x| {
            let d = dom_c.growth_distance(x).max(1e-300);
            -w.eval_clamped(d) / d
        },
        domain,
    );
    let grid = Grid::polar_annulus(&center, 0.8, 1.0, 24, 32, 0.9).unwrap();

    // Discrete maximum principle with the max forced to the inner circle.
    let u = solve_dirichlet(
        &coeffs,
        &grid,
        &|x: &[f64]| {
            if (x[0] * x[0] + x[1] * x[1]).sqrt() < 0.9 {
                1.0
            } else {
                0.0
            }
        },
        &|_| 0.0,
    )
    .unwrap();
    let rep = csmp_check(&u, 1e-12);
    pass &= rep.strict && rep.boundary_max - rep.interior_max > 0.0;

    // Hopf quotient at the outer-boundary maximum.
    let u_out = solve_dirichlet(
        &coeffs,
        &grid,
        &|x: &[f64]| {
            if (x[0] * x[0] + x[1] * x[1]).sqrt() > 0.9 {
                1.0
            } else {
                0.0
            }
        },
        &|_| 0.0,
    )
    .unwrap();
    let hopf = hopf_quotient(
        &|y: &[f64]| u_out.interpolate(y),
        &[1.0, 0.0],
        &[1.0, 0.0],
        &[0.02, 0.01, 0.005],
    )
    .unwrap();
    pass &= hopf.positive && hopf.quotients.iter().all(|&(_, q)| q > 0.0);

    // Convergent reference: the quotient of the exact barrier recovers
    // its normal derivative.
    let bw = RadialWeight::constant(1.0, 2.0).unwrap();
    let barrier = Barrier::new(2, 2.0, 1e-3, 1.0, bw).unwrap();
    let hs: Vec<f64> = (1..=5).map(|k| 2e-4 * 0.5f64.powi(k)).collect();
    let brep = hopf_quotient(
        &|y: &[f64]| barrier.eval(y).map(|bv| bv.v),
        &[2.0, 0.0],
        &[1.0, 0.0],
        &hs,
    )
    .unwrap();
    let nd = barrier.normal_derivative();
    pass &= (brep.extrapolated - nd).abs() <= 1e-4 * nd.abs();

    // ex2_12 boundary quotient decays like h^{1/2}.
    let sqrt_case = hopf_quotient(
        &|y: &[f64]| Ok(2.0 * y[0].max(0.0).powf(1.5)),
        &[0.0],
        &[-1.0],
        &[0.04, 0.02, 0.01, 0.005, 0.0025],
    )
    .unwrap();
    let slope = sqrt_case.log_slope.unwrap();
    pass &= !sqrt_case.positive && (slope - 0.5).abs() <= 0.05;
    report(5, pass, "discrete maximum principle strict, Hopf quotient positive (and convergent on the barrier), ex2_12 exponent 0.5 +/- 0.05");
}

#[test]
fn criterion_6_counterexample_suite() {
    let mut pass = true;
    for id in CaseId::all() {
        let case = CaseStudy::instantiate(id);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        match cases::verify(&case, 2000, &mut rng) {
            Ok(rep) => {
                pass &= rep.all_match;
                for check in &rep.checks {
                    if check.name == "normal_derivatives_equal" {
                        // margin = -|du - dv|.
                        pass &= check.margin >= -1e-8;
                    }
                }
            }
            Err(e) => {
                println!("criterion 6: case {:?} errored: {e}", id);
                pass = false;
            }
        }
    }
    // The printed Hessian identity for the exponential witness against
    // finite differences.
    let ex34 = CaseStudy::instantiate(CaseId::Ex3_4);
    for &r in &[0.91, 0.93, 0.95] {
        for &th in &[0.0f64, 0.7, 2.1] {
            let x = [r * th.cos(), r * th.sin()];
            pass &= cases::hessian_fd_agreement(&ex34.v, &x, 1e-4) <= 1e-6;
        }
    }
    report(6, pass, "four cases match expected hypothesis/conclusion pattern; Hessian identity matches FD to rel 1e-6");
}

#[test]
fn criterion_7_order_estimator_calibration() {
    let mut pass = true;
    let distances: Vec<f64> = (0..20).map(|j| 0.5 * 0.8f64.powi(j)).collect();
    match cases::zero_order_estimate(&|d| d * d * d, &distances)
        .unwrap()
        .order
    {
        ZeroOrder::Finite(p) => pass &= (p - 3.0).abs() <= 0.05,
        _ => pass = false,
    }
    match cases::zero_order_estimate(&|d| d.powf(1.5), &distances)
        .unwrap()
        .order
    {
        ZeroOrder::Finite(p) => pass &= (p - 1.5).abs() <= 0.05,
        _ => pass = false,
    }
    pass &= matches!(
        cases::zero_order_estimate(&|d| (-1.0 / d).exp(), &distances)
            .unwrap()
            .order,
        ZeroOrder::NumericallyInfinite
    );
    report(7, pass, "order estimator: 3.00 +/- 0.05 on d^3, 1.50 +/- 0.05 on d^3/2, numerically infinite on exp(-1/d)");
}

#[test]
fn criterion_8_deterministic_reports() {
    let bin = env!("CARGO_BIN_EXE_bpp-lab");
    let dir = std::env::temp_dir();
    let mut pass = true;
    let runs: [(&str, Vec<&str>); 2] = [
        (
            "barrier",
            vec![
                "barrier", "--n", "2", "--r", "2", "--weight", "power:1,0.5", "--samples",
                "4000", "--seed", "7",
            ],
        ),
        ("case", vec!["case", "ex2_9", "--seed", "7"]),
    ];
    for (name, args) in &runs {
        let mut outputs = Vec::new();
        for rep in 0..2 {
            let path = dir.join(format!("bpp-acceptance-{name}-{rep}.json"));
            let status = std::process::Command::new(bin)
                .args(args.iter())
                .arg("--json")
                .arg(&path)
                .stdout(std::process::Stdio::null())
                .status()
                .expect("binary runs");
            pass &= status.success();
            outputs.push(std::fs::read(&path).expect("report written"));
            let _ = std::fs::remove_file(&path);
        }
        pass &= outputs[0] == outputs[1] && !outputs[0].is_empty();
    }
    report(8, pass, "identical seeded runs produce byte-identical JSON reports");
}
