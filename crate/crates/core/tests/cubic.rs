use std::f64::consts::PI;

use mlc::cubic::{
    dbar_residual, project_conformally_holomorphic, residual_matrix, residual_ratio, CubicField,
    ProjectionOptions,
};
use mlc::dec::{ConformalMetric, DiscreteForm};
use mlc::mesh::{flat_torus, generate_genus, FlatTorus};
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn torus(n: usize) -> (FlatTorus, ConformalMetric) {
    let t = flat_torus(n, n, 1.0 / n as f64).unwrap();
    let metric = ConformalMetric::flat(&t.mesh, t.metric.clone());
    (t, metric)
}

/// Smooth periodic function on the torus.
fn bump(t: &FlatTorus, v: usize) -> f64 {
    let [s, q] = t.periodic(v);
    0.3 * (2.0 * PI * s).sin() + 0.2 * (2.0 * PI * q).cos() + 0.1 * (2.0 * PI * (s + q)).sin()
}

/// Max residual of `C = e^{−2r}·c₀` paired with `β = −dr`.
fn rescaled_residual(n: usize) -> f64 {
    let (t, metric) = torus(n);
    let r: Vec<f64> = (0..t.mesh.n_vertices()).map(|v| bump(&t, v)).collect();
    let c0 = Complex64::new(0.7, 0.4);
    let coeff = r.iter().map(|r| c0 * (-2.0 * r).exp()).collect();
    let field = CubicField::new(&t.mesh, &metric, coeff).unwrap();
    let beta: Vec<f64> = t.mesh.edges().iter().map(|&[a, b]| -(r[b] - r[a])).collect();
    let beta = DiscreteForm::new(&t.mesh, 1, beta).unwrap();
    dbar_residual(&field, &beta, &t.mesh, &metric)
        .unwrap()
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max)
}

#[test]
fn rescaling_law_converges_under_refinement() {
    let coarse = rescaled_residual(16);
    let fine = rescaled_residual(32);
    let order = (coarse / fine).log2();
    println!("rescaling residual {coarse:e} -> {fine:e}, order {order:.3}");
    assert!(order >= 1.0, "observed order {order}");
}

#[test]
fn wrong_pairing_does_not_vanish() {
    // Same field with β = +dr misses the equation at first order.
    let (t, metric) = torus(32);
    let r: Vec<f64> = (0..t.mesh.n_vertices()).map(|v| bump(&t, v)).collect();
    let coeff = r.iter().map(|r| Complex64::new((-2.0 * r).exp(), 0.0)).collect();
    let field = CubicField::new(&t.mesh, &metric, coeff).unwrap();
    let beta: Vec<f64> = t.mesh.edges().iter().map(|&[a, b]| r[b] - r[a]).collect();
    let beta = DiscreteForm::new(&t.mesh, 1, beta).unwrap();
    let worst = dbar_residual(&field, &beta, &t.mesh, &metric)
        .unwrap()
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max);
    assert!(worst > 100.0 * rescaled_residual(32));
}

fn null_dimension(n: usize) -> usize {
    let (t, metric) = torus(n);
    let field = CubicField::zeros(&t.mesh, &metric);
    let beta = DiscreteForm::zeros(&t.mesh, 1);
    let dense = residual_matrix(&field, &beta, &t.mesh, &metric).unwrap();
    let nv = dense.len();
    // Real 2n × 2n form of the complex-linear operator.
    let mut a = DMatrix::<f64>::zeros(2 * nv, 2 * nv);
    for i in 0..nv {
        for j in 0..nv {
            let w = dense[i][j];
            a[(2 * i, 2 * j)] = w.re;
            a[(2 * i, 2 * j + 1)] = -w.im;
            a[(2 * i + 1, 2 * j)] = w.im;
            a[(2 * i + 1, 2 * j + 1)] = w.re;
        }
    }
    let sv = a.singular_values();
    let top = sv.max();
    sv.iter().filter(|&&s| s < 1e-10 * top).count()
}

#[test]
fn flat_torus_kernel_dimension() {
    // Lattice sizes coprime to 6: only constants (one complex dimension).
    assert_eq!(null_dimension(5), 2);
    assert_eq!(null_dimension(7), 2);
    // Plane waves with k·e ∈ {0, π} on every lattice direction (3 modes when
    // n is even) or k·e = ±2π/3 with alternating sign (2 modes when 3 | n)
    // are also annihilated by the one-ring stencil.
    assert_eq!(null_dimension(9), 2 * (1 + 2));
    assert_eq!(null_dimension(6), 2 * (1 + 3 + 2));
}

#[test]
fn projection_on_flat_torus_recovers_constant_part() {
    // 11 is coprime to 6, so constants are the whole kernel.
    let (t, metric) = torus(11);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let coeff: Vec<Complex64> = (0..t.mesh.n_vertices())
        .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect();
    let mean = coeff.iter().sum::<Complex64>() / coeff.len() as f64;
    let field = CubicField::new(&t.mesh, &metric, coeff).unwrap();
    let beta = DiscreteForm::zeros(&t.mesh, 1);
    let p = project_conformally_holomorphic(&field, &beta, &t.mesh, &metric, &ProjectionOptions::default()).unwrap();
    assert!(p.accepted);
    let r = dbar_residual(&p.field, &beta, &t.mesh, &metric).unwrap();
    assert!(r.iter().all(|z| z.norm() <= 1e-8), "{}", p.rayleigh);
    // Uniform dual areas: the constant projection is the plain mean, scaled
    // to unit norm (total area 1 · sin 60°).
    let area: f64 = 3f64.sqrt() / 2.0;
    let want = mean / (mean.norm() * area.sqrt());
    for c in p.field.coeffs() {
        assert!((c - want).norm() < 1e-8, "{c} vs {want}");
    }
}

#[test]
fn projection_fixed_point() {
    let (t, metric) = torus(7);
    let field = CubicField::new(&t.mesh, &metric, vec![Complex64::new(0.0, 2.0); t.mesh.n_vertices()]).unwrap();
    let beta = DiscreteForm::zeros(&t.mesh, 1);
    let p = project_conformally_holomorphic(&field, &beta, &t.mesh, &metric, &ProjectionOptions::default()).unwrap();
    let ratio = p.field.coeffs()[0] / field.coeffs()[0];
    for (a, b) in p.field.coeffs().iter().zip(field.coeffs()) {
        assert!((a - b * ratio).norm() < 1e-12);
    }
    assert!(residual_ratio(&p.field, &beta, &t.mesh, &metric).unwrap() < 1e-24);
}

#[test]
fn genus_two_projection_improves_under_refinement() {
    let mut rq = Vec::new();
    for s in 0..2 {
        let (m, g) = generate_genus(2, s).unwrap();
        let metric = ConformalMetric::flat(&m, g);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let coeff = (0..m.n_vertices())
            .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        let field = CubicField::new(&m, &metric, coeff).unwrap();
        let beta = DiscreteForm::zeros(&m, 1);
        let p = project_conformally_holomorphic(&field, &beta, &m, &metric, &ProjectionOptions::default()).unwrap();
        println!("genus 2, level {s}: rayleigh {:e} after {} outer iterations", p.rayleigh, p.iterations);
        rq.push(p.rayleigh);
    }
    assert!(rq[1] < rq[0]);
}
