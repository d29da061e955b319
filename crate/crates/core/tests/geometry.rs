use std::f64::consts::PI;
use std::path::Path;

use mlc::dec::{d, gauss_curvature, ConformalMetric, DiscreteForm};
use mlc::hodge::{coclosed_residual, decompose, harmonic_basis, homology_generators, period};
use mlc::mesh::{flat_torus, generate_genus, icosphere, load_off, parse_off, write_off, EdgeLengthMetric, TriMesh};
use mlc::solver::inputs::{build_beta, BetaSpec};
use mlc::solver::{measure_solution, solve, ProblemData, Sign, SolveOptions};
use proptest::prelude::*;

const SHIPPED: [(&str, i64); 5] = [
    ("tetrahedron.off", 2),
    ("icosahedron.off", 2),
    ("genus1.off", 0),
    ("genus2.off", -2),
    ("genus3.off", -4),
];

fn shipped(name: &str) -> (TriMesh, EdgeLengthMetric) {
    load_off(Path::new(env!("CARGO_MANIFEST_DIR")).join("data").join(name)).unwrap()
}

fn total_curvature(mesh: &TriMesh, metric: &ConformalMetric) -> f64 {
    let geom = metric.geometry(mesh);
    gauss_curvature(mesh, metric)
        .values()
        .iter()
        .zip(&geom.vertex_area)
        .map(|(k, a)| k * a)
        .sum()
}

#[test]
fn shipped_meshes_have_expected_topology() {
    for (name, chi) in SHIPPED {
        let (m, _) = shipped(name);
        assert_eq!(m.euler_characteristic(), chi, "{name}");
        m.validate().unwrap();
    }
}

#[test]
fn off_round_trip_preserves_connectivity_and_lengths() {
    for (name, _) in SHIPPED {
        let (m, g) = shipped(name);
        let (m2, g2) = parse_off(&write_off(&m).unwrap()).unwrap();
        assert_eq!(m.faces(), m2.faces());
        for (a, b) in g.lengths().iter().zip(g2.lengths()) {
            assert!((a - b).abs() <= 1e-14 * a.max(1.0));
        }
    }
}

#[test]
fn background_gauss_bonnet_on_shipped_meshes() {
    for (name, chi) in SHIPPED {
        let (m, g) = shipped(name);
        let metric = ConformalMetric::flat(&m, g);
        let r = (total_curvature(&m, &metric) - 2.0 * PI * chi as f64).abs();
        assert!(r <= 1e-8, "{name}: {r:e}");
    }
}

#[test]
fn solved_gauss_bonnet_on_shipped_meshes() {
    for (name, chi) in SHIPPED.iter().filter(|(_, c)| *c < 0) {
        let (m, g) = shipped(name);
        let metric = ConformalMetric::flat(&m, g.clone());
        let spec = BetaSpec {
            harmonic: vec![0.2, -0.1],
            exact: 0.3,
            ..Default::default()
        };
        let beta = build_beta(&m, &metric, &spec, 1, 1e-13).unwrap();
        let tau = (0..m.n_vertices()).map(|v| 0.1 + 0.05 * (v % 3) as f64).collect();
        let data = ProblemData::new(m.clone(), g.clone(), beta, tau, Sign::Spacelike).unwrap();
        let report = solve(&data, &SolveOptions::default()).unwrap();
        assert!(report.gb_residual <= 1e-6, "{name}: {:e}", report.gb_residual);
        let solved = ConformalMetric::new(&m, g, report.u.clone()).unwrap();
        let r = (total_curvature(&m, &solved) - 2.0 * PI * *chi as f64).abs();
        assert!(r <= 1e-6, "{name}: {r:e}");
        assert_eq!(measure_solution(&data, &report.u).gb_residual, report.gb_residual);
    }
}

struct Case {
    name: &'static str,
    mesh: TriMesh,
    metric: ConformalMetric,
}

fn cases() -> Vec<Case> {
    let (s, sg) = icosphere(2).unwrap();
    let t = flat_torus(10, 8, 0.5).unwrap();
    let (g2, g2g) = generate_genus(2, 1).unwrap();
    vec![
        Case {
            name: "sphere",
            metric: ConformalMetric::flat(&s, sg),
            mesh: s,
        },
        Case {
            name: "torus",
            metric: ConformalMetric::flat(&t.mesh, t.metric.clone()),
            mesh: t.mesh,
        },
        Case {
            name: "genus-2",
            metric: ConformalMetric::flat(&g2, g2g),
            mesh: g2,
        },
    ]
}

fn check_hodge(c: &Case, beta: &DiscreteForm) {
    let (m, metric) = (&c.mesh, &c.metric);
    let geom = metric.geometry(m);
    let parts = decompose(beta, m, metric, 1e-14).unwrap();
    let recon = beta.sub(&parts.exact(m)).sub(&parts.coexact).sub(&parts.gamma).max_abs();
    assert!(recon <= 1e-8, "{}: reconstruction {recon:e}", c.name);
    let closed = d(&parts.gamma, m).unwrap().max_abs();
    assert!(closed <= 1e-8, "{}: dγ {closed:e}", c.name);
    let coclosed = coclosed_residual(&parts.gamma, m, &geom);
    assert!(coclosed <= 1e-8, "{}: δγ {coclosed:e}", c.name);
    for cycle in homology_generators(m) {
        let closed_part = beta.sub(&parts.coexact);
        let gap = (period(&parts.gamma, m, &cycle) - period(&closed_part, m, &cycle)).abs();
        assert!(gap <= 1e-8, "{}: period gap {gap:e}", c.name);
    }
}

#[test]
fn hodge_suite_on_sphere_torus_genus_two() {
    for c in cases() {
        let basis = harmonic_basis(&c.mesh, &c.metric, 1e-14).unwrap();
        assert_eq!(basis.len(), 2 * c.mesh.genus(), "{}", c.name);
        let harmonic: Vec<f64> = (0..basis.len()).map(|k| 0.5 - 0.3 * k as f64).collect();
        let spec = BetaSpec {
            harmonic,
            exact: 0.7,
            coexact: 0.4,
            generator: if basis.is_empty() { None } else { Some(0) },
        };
        let beta = build_beta(&c.mesh, &c.metric, &spec, 5, 1e-14).unwrap();
        check_hodge(&c, &beta);
    }
}

#[test]
fn exact_forms_have_no_harmonic_part() {
    for c in cases() {
        let spec = BetaSpec {
            exact: 1.0,
            ..Default::default()
        };
        let beta = build_beta(&c.mesh, &c.metric, &spec, 2, 1e-14).unwrap();
        let parts = decompose(&beta, &c.mesh, &c.metric, 1e-14).unwrap();
        assert!(parts.gamma.max_abs() <= 1e-8, "{}", c.name);
        assert!(parts.coexact.max_abs() <= 1e-8, "{}", c.name);
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 12, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn hodge_invariants_for_random_inputs(
        seed in 0u64..1000,
        h in proptest::collection::vec(-1.0f64..1.0, 4),
        exact in -1.0f64..1.0,
        coexact in -1.0f64..1.0,
    ) {
        let (m, g) = generate_genus(2, 0).unwrap();
        let c = Case { name: "genus-2 template", metric: ConformalMetric::flat(&m, g), mesh: m };
        let spec = BetaSpec { harmonic: h, exact, coexact, generator: None };
        let beta = build_beta(&c.mesh, &c.metric, &spec, seed, 1e-14).unwrap();
        check_hodge(&c, &beta);
    }
}
