use std::f64::consts::PI;

use mlc::dec::{ConformalMetric, DiscreteForm};
use mlc::mesh::{generate_genus, EdgeLengthMetric, TriMesh};
use mlc::solver::inputs::{build_beta, build_cubic, BetaSpec, CubicSpec};
use mlc::solver::{
    minimize, route_agreement, solve, Functional, ProblemData, Route, Sign, SolveOptions, SubstitutedData,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn surface(genus: usize) -> (TriMesh, EdgeLengthMetric) {
    generate_genus(genus, 0).unwrap()
}

/// Root of `e^{2u} − 1 − 2b e^{−4u}`, increasing in `u`.
fn bisect_constant(b: f64) -> f64 {
    let f = |u: f64| (2.0 * u).exp() - 1.0 - 2.0 * b * (-4.0 * u).exp();
    let (mut lo, mut hi) = (-5.0, 5.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

fn constant_solution(mesh: &TriMesh, bg: &EdgeLengthMetric, b: f64) -> Vec<f64> {
    let sub = SubstitutedData::constant(mesh, -1.0, -1.0, b).unwrap();
    let f = Functional::substituted(mesh, bg, &sub);
    minimize(&f, vec![0.0; mesh.n_vertices()], 1e-12, 100).unwrap().u
}

#[test]
fn constant_coefficients_match_bisection() {
    let (m, g) = surface(2);
    for b in [0.0, 0.5, 2.0] {
        let expected = bisect_constant(b);
        let u = constant_solution(&m, &g, b);
        let err = u.iter().map(|x| (x - expected).abs()).fold(0.0, f64::max);
        assert!(err <= 1e-9, "b = {b}: error {err:e}");
    }
}

fn problem(genus: usize, case: usize) -> ProblemData {
    let (m, g) = surface(genus);
    let metric = ConformalMetric::flat(&m, g.clone());
    let n = m.n_vertices();
    match case {
        0 => ProblemData::new(m.clone(), g, DiscreteForm::zeros(&m, 1), vec![0.0; n], Sign::Spacelike).unwrap(),
        1 => {
            let spec = BetaSpec {
                harmonic: vec![0.8, -0.5],
                exact: 0.3,
                ..Default::default()
            };
            let beta = build_beta(&m, &metric, &spec, 1, 1e-13).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(7);
            let tau = (0..n).map(|_| rng.gen_range(0.0..0.05)).collect();
            ProblemData::new(m, g, beta, tau, Sign::Spacelike).unwrap()
        }
        _ => {
            let spec = BetaSpec {
                harmonic: vec![0.0, 0.6, 0.4],
                exact: 0.0,
                ..Default::default()
            };
            let beta = build_beta(&m, &metric, &spec, 2, 1e-13).unwrap();
            let cubic = build_cubic(
                &m,
                &metric,
                &beta,
                &CubicSpec {
                    norm_sq: 1.5,
                    project: true,
                },
                3,
            )
            .unwrap();
            ProblemData::with_cubic(m, g, beta, &cubic, Sign::Spacelike).unwrap()
        }
    }
}

#[test]
fn area_identity_and_bound() {
    for genus in [2, 3] {
        let chi = 2.0 - 2.0 * genus as f64;
        for case in 0..3 {
            let data = problem(genus, case);
            let r = solve(&data, &SolveOptions::default()).unwrap();
            println!(
                "genus {genus} case {case}: area {:.6} |C|² {:.6} identity {:e} gb {:e} iters {}",
                r.area, r.cubic_norm_sq, r.area_identity_residual, r.gb_residual, r.iterations
            );
            assert!(r.area_identity_residual <= 1e-8 * r.area.max(1.0));
            assert!(r.area >= -2.0 * PI * chi - 1e-8);
            assert!(r.gb_residual <= 1e-6);
            let expected = 4.0 * PI * chi - 4.0 * r.cubic_norm_sq;
            assert!((r.minmax_value - expected).abs() <= 1e-6, "{} vs {expected}", r.minmax_value);
            assert!(r.energy_log.windows(2).all(|w| w[1] <= w[0]));
        }
    }
}

#[test]
fn trivial_data_gives_topological_minmax() {
    let data = problem(2, 0);
    let r = solve(&data, &SolveOptions::default()).unwrap();
    assert!((r.minmax_value + 8.0 * PI).abs() <= 1e-10);
    assert_eq!(r.cubic_norm_sq, 0.0);
}

#[test]
fn random_starts_converge_to_one_minimizer() {
    let data = problem(2, 1);
    let reference = solve(&data, &SolveOptions::default()).unwrap().u;
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let n = data.mesh.n_vertices();
    for _ in 0..20 {
        let start: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let opts = SolveOptions {
            initial: Some(start),
            ..Default::default()
        };
        let u = solve(&data, &opts).unwrap().u;
        let d = u.iter().zip(&reference).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(d <= 1e-6, "{d:e}");
    }
}

#[test]
fn hessian_dominates_dirichlet_energy() {
    let data = problem(2, 1);
    let f = Functional::direct(&data);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let n = data.mesh.n_vertices();
    for _ in 0..10 {
        let u: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let hv = f.hessian_apply(&u, &v);
        let lv = f.stiffness().mul(&v);
        let quad: f64 = v.iter().zip(&hv).map(|(a, b)| a * b).sum();
        let dirichlet: f64 = v.iter().zip(&lv).map(|(a, b)| a * b).sum();
        assert!(quad > 0.0 && quad >= dirichlet);
    }
}

#[test]
fn gradient_matches_finite_differences() {
    for route in [Route::Direct, Route::Hodge] {
        let data = problem(2, 1);
        let f = match route {
            Route::Direct => Functional::direct(&data),
            Route::Hodge => {
                let sub = SubstitutedData::from_problem(&data, 1e-13).unwrap();
                Functional::substituted(&data.mesh, &data.background, &sub)
            }
        };
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let n = data.mesh.n_vertices();
        let u: Vec<f64> = (0..n).map(|_| rng.gen_range(-0.5..0.5)).collect();
        let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let g = f.gradient(&u);
        let exact: f64 = g.iter().zip(&v).map(|(a, b)| a * b).sum();
        let h = 1e-5;
        let plus: Vec<f64> = u.iter().zip(&v).map(|(a, b)| a + h * b).collect();
        let minus: Vec<f64> = u.iter().zip(&v).map(|(a, b)| a - h * b).collect();
        let fd = (f.value(&plus) - f.value(&minus)) / (2.0 * h);
        let rel = (fd - exact).abs() / exact.abs();
        assert!(rel <= 1e-6, "{route:?}: {rel:e}");
    }
}

#[test]
fn routes_agree() {
    for case in 0..3 {
        let data = problem(2, case);
        let opts = SolveOptions::default();
        let d = route_agreement(&data, &opts).unwrap();
        assert!(d <= 10.0 * opts.tol, "case {case}: {d:e}");
    }
}

#[test]
fn report_json_has_exact_keys() {
    let r = solve(&problem(2, 0), &SolveOptions::default()).unwrap();
    let v: serde_json::Value = serde_json::from_str(&r.to_json()).unwrap();
    let mut keys: Vec<&str> = v.as_object().unwrap().keys().map(|s| s.as_str()).collect();
    keys.sort();
    assert_eq!(
        keys,
        [
            "area",
            "area_identity_residual",
            "cubic_norm_sq",
            "energy",
            "gb_residual",
            "iterations",
            "minmax_value",
            "residual"
        ]
    );
    assert_eq!(r.to_json(), solve(&problem(2, 0), &SolveOptions::default()).unwrap().to_json());
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 12, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn constant_solution_tracks_oracle(b in 0.0f64..3.0) {
        let (m, g) = surface(2);
        let expected = bisect_constant(b);
        let u = constant_solution(&m, &g, b);
        for x in u {
            prop_assert!((x - expected).abs() <= 1e-9);
        }
    }

    #[test]
    fn area_identity_for_random_forms(c0 in -1.0f64..1.0, c1 in -1.0f64..1.0, a in -0.3f64..0.3, t in 0.0f64..0.1) {
        let (m, g) = surface(2);
        let metric = ConformalMetric::flat(&m, g.clone());
        let beta = build_beta(&m, &metric, &BetaSpec { harmonic: vec![c0, c1], exact: a, ..Default::default() }, 0, 1e-13).unwrap();
        let n = m.n_vertices();
        let data = ProblemData::new(m, g, beta, vec![t; n], Sign::Spacelike).unwrap();
        let r = solve(&data, &SolveOptions::default()).unwrap();
        prop_assert!(r.area_identity_residual <= 1e-8 * r.area);
        prop_assert!(r.area >= 4.0 * PI - 1e-8);
    }
}
