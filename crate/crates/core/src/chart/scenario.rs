//! Built-in chart scenarios and their residual tables.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::*;
use crate::error::{MlcError, Result};
use crate::solver::Sign;

/// One row of a chart report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChartRecord {
    pub point: [f64; 2],
    pub identity: String,
    pub residual: f64,
}

pub const SCENARIOS: &[&str] = &[
    "hyperbolic-trivial",
    "sphere-round",
    "conformal-change",
    "example-levi-civita-negative",
    "example-levi-civita-positive",
    "weyl-change",
    "random-twisted",
    "flat-cubic-solution",
];

/// Acceptance threshold for an identity name.
pub fn tolerance(identity: &str) -> f64 {
    match identity {
        "levi-civita-closed-form" | "weyl-spray-tracefree" | "weyl-zero" | "cubic-twist-trace"
        | "cubic-twist-symmetry" => 1e-12,
        "ricci-constant-curvature" | "lagrangian" | "liouville-vanishes" | "liouville-extraction"
        | "conformal-change" => 1e-10,
        "schouten-curvature-form" | "weyl-ricci-change" | "weyl-trace" => 1e-9,
        _ => 1e-8,
    }
}

/// Records whose residual exceeds [`tolerance`] or is not finite.
pub fn failures(records: &[ChartRecord]) -> Vec<&ChartRecord> {
    records
        .iter()
        .filter(|r| !(r.residual <= tolerance(&r.identity)))
        .collect()
}

/// `n × n` grid on `[x0, x1] × [y0, y1]`, row by row.
pub fn grid(x: [f64; 2], y: [f64; 2], n: usize) -> Vec<[f64; 2]> {
    let step = |r: [f64; 2], i: usize| r[0] + (r[1] - r[0]) * i as f64 / (n - 1) as f64;
    (0..n)
        .flat_map(|j| (0..n).map(move |i| [step(x, i), step(y, j)]))
        .collect()
}

const GRID: usize = 5;

struct Table {
    rows: Vec<ChartRecord>,
}

impl Table {
    fn push(&mut self, p: [f64; 2], identity: &str, residual: f64) {
        self.rows.push(ChartRecord {
            point: p,
            identity: identity.to_string(),
            residual,
        });
    }
}

fn negate(t: &Tensor2) -> Tensor2 {
    t.map(|r| r.map(|x| -x))
}

fn conformal(f: Jet) -> Tensor2 {
    let w = (f.scale(2.0)).exp();
    [[w, Z], [Z, w]]
}

fn hyperbolic_metric() -> MetricFn {
    Arc::new(|_x, y| {
        let w = (y * y).recip();
        [[w, Z], [Z, w]]
    })
}

fn sphere_metric() -> MetricFn {
    Arc::new(|x, y| {
        let q = x * x + y * y + 1.0;
        let w = Jet::constant(4.0) / (q * q);
        [[w, Z], [Z, w]]
    })
}

/// Curvature-independent checks for any connection.
fn common_checks(t: &mut Table, p: [f64; 2], conn: &ConnectionField) {
    let ric = ricci(conn);
    t.push(p, "lagrangian", max_abs2(&ricci_split(&ric).anti));
    t.push(p, "schouten-curvature-form", schouten_curvature_residual(conn));
}

fn constant_curvature(name: &str, t: &mut Table, metric: MetricFn, k: f64, domain: ([f64; 2], [f64; 2])) -> Result<()> {
    let triple = ChartTriple::metric_only(metric);
    let sign = if k > 0.0 { Sign::Timelike } else { Sign::Spacelike };
    for p in grid(domain.0, domain.1, GRID) {
        let d = triple.eval(p)?;
        let lc = levi_civita(&d.g)?;
        if name == "hyperbolic-trivial" {
            let y = p[1];
            let expect = [[[0.0, -1.0 / y], [-1.0 / y, 0.0]], [[1.0 / y, 0.0], [0.0, -1.0 / y]]];
            let mut m: f64 = 0.0;
            for i in 0..2 {
                for j in 0..2 {
                    for l in 0..2 {
                        m = m.max((lc.gamma[i][j][l].value() - expect[i][j][l]).abs());
                    }
                }
            }
            t.push(p, "levi-civita-closed-form", m);
        }
        let ric = ricci(&lc);
        let kg = d.g.map(|r| r.map(|x| x.scale(k)));
        t.push(p, "ricci-constant-curvature", max_diff2(&ric, &kg));
        common_checks(t, p, &lc);
        let l = liouville(&lc);
        t.push(p, "liouville-vanishes", l[0].value().abs().max(l[1].value().abs()));
        t.push(p, "minimality", minimality_residual(&triple, sign, p)?);
        t.push(p, "trace-identity", trace_identity_residual(&triple, p)?);
    }
    Ok(())
}

fn conformal_change(t: &mut Table) -> Result<()> {
    let f = |x: Jet, y: Jet| (x.sin() * y.cos()).scale(0.3);
    let r = |x: Jet, y: Jet| (x * y).scale(0.2) + (x + y).sin().scale(0.1);
    let metric: MetricFn = Arc::new(move |x, y| conformal(f(x, y)));
    let beta: FormFn = Arc::new(move |x, y| {
        let v = r(x, y);
        [v.d(0), v.d(1)]
    });
    let triple = ChartTriple::new(metric, beta, Arc::new(|_, _| [Z, Z]));
    for p in grid([-1.0, 1.0], [-1.0, 1.0], GRID) {
        let d = triple.eval(p)?;
        let twisted = twisted_connection_at(&d)?;
        let (x, y) = Jet::point(p);
        let rescaled = conformal(f(x, y) - r(x, y));
        let lc = levi_civita(&rescaled)?;
        t.push(p, "conformal-change", twisted.max_difference(&lc));
        common_checks(t, p, &twisted);
        t.push(p, "trace-identity", trace_identity_residual(&triple, p)?);
    }
    Ok(())
}

/// `h = e^{2f}(dx² + dy²)` with closed-form curvature.
struct ExampleMetric {
    f: fn(Jet, Jet) -> Jet,
    curvature: fn(Jet, Jet) -> Jet,
    sign: Sign,
}

fn negative_example() -> ExampleMetric {
    ExampleMetric {
        f: |x, y| -y.ln() + x.sin().scale(0.1),
        // −e^{−0.2 sin x}(1 − 0.1 y² sin x)
        curvature: |x, y| -((x.sin().scale(-0.2)).exp() * (Jet::constant(1.0) - (y * y * x.sin()).scale(0.1))),
        sign: Sign::Spacelike,
    }
}

const BUMP: f64 = 0.05;

fn positive_example() -> ExampleMetric {
    ExampleMetric {
        f: |x, y| (Jet::constant(2.0) / (x * x + y * y + 1.0)).ln() + (x.sin() * y.cos()).scale(BUMP),
        // e^{−2f}(4/(1+r²)² + 2ε sin x cos y)
        curvature: |x, y| {
            let q = x * x + y * y + 1.0;
            let s = x.sin() * y.cos();
            let f = (Jet::constant(2.0) / q).ln() + s.scale(BUMP);
            (f.scale(-2.0)).exp() * (Jet::constant(4.0) / (q * q) + s.scale(2.0 * BUMP))
        },
        sign: Sign::Timelike,
    }
}

fn example(t: &mut Table, ex: ExampleMetric, domain: ([f64; 2], [f64; 2])) -> Result<()> {
    let ExampleMetric { f, curvature, sign } = ex;
    let s = sign_factor(sign);
    let h: MetricFn = Arc::new(move |x, y| conformal(f(x, y)));
    let induced: MetricFn = Arc::new(move |x, y| {
        let k = curvature(x, y).scale(s);
        conformal(f(x, y)).map(|r| r.map(|v| v * k))
    });
    let beta: FormFn = Arc::new(move |x, y| {
        let k = curvature(x, y);
        let two_k = k.scale(2.0);
        [k.d(0) / two_k, k.d(1) / two_k]
    });
    let h_triple = ChartTriple::metric_only(h);
    let triple = ChartTriple::new(induced, beta, Arc::new(|_, _| [Z, Z]));
    for p in grid(domain.0, domain.1, GRID) {
        let d = h_triple.eval(p)?;
        let lc = levi_civita(&d.g)?;
        let (x, y) = Jet::point(p);
        let k = curvature(x, y);
        // Liouville curvature of the Levi-Civita connection against −⋆dK ⊗ dμ.
        let expected = star_density(&d.g, &[k.d(0), k.d(1)])?;
        let got = liouville(&lc);
        let m = (0..2)
            .map(|a| (got[a].value() + expected[a].value()).abs())
            .fold(0.0, f64::max);
        t.push(p, "liouville-example", m);
        t.push(p, "liouville-extraction", liouville_extraction_residual(&lc));
        // β recomputed from the connection and g = ±Ric.
        let g_ind = ricci_split(&ricci(&lc)).sym.map(|r| r.map(|v| v.scale(s)));
        let b = symmetrized_trace_form(&lc, &g_ind)?;
        let bk = [k.d(0) / k.scale(2.0), k.d(1) / k.scale(2.0)];
        let m = (0..2).map(|a| (b[a].value() - bk[a].value()).abs()).fold(0.0, f64::max);
        t.push(p, "beta-example", m);
        // Twisted connection of the induced triple is the same connection.
        let twisted = twisted_connection(&triple, p)?;
        t.push(p, "conformal-change", twisted.max_difference(&lc));
        common_checks(t, p, &lc);
        t.push(p, "minimality", minimality_residual(&triple, sign, p)?);
    }
    Ok(())
}

/// `Σ a sin(p x + q y + r)` with seeded coefficients.
fn trig_terms(rng: &mut ChaCha8Rng, terms: usize, amplitude: f64) -> Vec<[f64; 4]> {
    (0..terms)
        .map(|_| {
            [
                amplitude * rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.5..1.5),
                rng.gen_range(-1.5..1.5),
                rng.gen_range(0.0..std::f64::consts::TAU),
            ]
        })
        .collect()
}

fn eval_terms(terms: &[[f64; 4]], x: Jet, y: Jet) -> Jet {
    terms
        .iter()
        .fold(Z, |acc, [a, p, q, r]| acc + (x.scale(*p) + y.scale(*q) + *r).sin().scale(*a))
}

fn random_form(rng: &mut ChaCha8Rng, amplitude: f64) -> FormFn {
    let gx = trig_terms(rng, 3, amplitude);
    let gy = trig_terms(rng, 3, amplitude);
    Arc::new(move |x, y| [eval_terms(&gx, x, y), eval_terms(&gy, x, y)])
}

fn weyl_change(t: &mut Table, seed: u64) -> Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let gamma = random_form(&mut rng, 0.5);
    let triple = ChartTriple::metric_only(hyperbolic_metric());
    for p in grid([-1.0, 1.0], [0.5, 2.0], GRID) {
        let d = triple.eval(p)?;
        let lc = levi_civita(&d.g)?;
        let (x, y) = Jet::point(p);
        let g = gamma(x, y);
        t.push(p, "weyl-zero", projective_change(&lc, &[Z, Z]).max_difference(&lc));
        t.push(p, "weyl-ricci-change", ricci_change_residual(&lc, &g));
        t.push(p, "weyl-spray-tracefree", spray_change_tracefree(&lc, &projective_change(&lc, &g)));
        t.push(p, "weyl-trace", projective_trace_residual(&triple, &g, p)?);
    }
    Ok(())
}

/// Seeded triple with a non-conformally-flat metric, closed `β` and a
/// nonconstant cubic coefficient.
pub fn random_triple(seed: u64, closed: bool) -> ChartTriple {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let f = trig_terms(&mut rng, 3, 0.3);
    let a = trig_terms(&mut rng, 2, 0.1);
    let b = trig_terms(&mut rng, 2, 0.1);
    let c = trig_terms(&mut rng, 2, 0.1);
    let metric: MetricFn = Arc::new(move |x, y| {
        let w = (eval_terms(&f, x, y).scale(2.0)).exp();
        let off = eval_terms(&b, x, y) * w;
        [
            [(eval_terms(&a, x, y) + 1.0) * w, off],
            [off, (eval_terms(&c, x, y) + 1.0) * w],
        ]
    });
    let phi = trig_terms(&mut rng, 3, 0.4);
    let constant = [rng.gen_range(-0.3..0.3), rng.gen_range(-0.3..0.3)];
    let curl = trig_terms(&mut rng, 2, 0.3);
    let beta: FormFn = Arc::new(move |x, y| {
        let v = eval_terms(&phi, x, y);
        let mut out = [v.d(0) + constant[0], v.d(1) + constant[1]];
        if !closed {
            // y·w(x, y) dx is not closed for generic w.
            out[0] += y * eval_terms(&curl, x, y);
        }
        out
    });
    let c1 = trig_terms(&mut rng, 3, 0.4);
    let c2 = trig_terms(&mut rng, 3, 0.4);
    let cubic: CubicFn = Arc::new(move |x, y| [eval_terms(&c1, x, y), eval_terms(&c2, x, y)]);
    ChartTriple::new(metric, beta, cubic)
}

fn random_twisted(t: &mut Table, seed: u64) -> Result<()> {
    let triple = random_triple(seed, true);
    let general = random_triple(seed, false);
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(1));
    let psi = trig_terms(&mut rng, 3, 0.5);
    for p in grid([-1.0, 1.0], [-1.0, 1.0], GRID) {
        let d = triple.eval(p)?;
        let conn = twisted_connection_at(&d)?;
        common_checks(t, p, &conn);
        t.push(p, "liouville-extraction", liouville_extraction_residual(&conn));
        t.push(p, "trace-identity", trace_identity_residual(&triple, p)?);
        let (tr, sym) = cubic_twist_defects(&d.g, &d.cubic);
        t.push(p, "cubic-twist-trace", tr);
        t.push(p, "cubic-twist-symmetry", sym);
        let (x, y) = Jet::point(p);
        let v = eval_terms(&psi, x, y);
        t.push(p, "weyl-trace", projective_trace_residual(&triple, &[v.d(0), v.d(1)], p)?);
        let gconn = twisted_connection(&general, p)?;
        t.push(p, "schouten-curvature-form-general", schouten_curvature_residual(&gconn));
        t.push(p, "trace-identity-general", trace_identity_residual(&general, p)?);
    }
    Ok(())
}

/// Flat metric, `β = 0` and constant `|c|² = ½`: a solution of the structure
/// equations with `Ric = −g`.
fn flat_cubic_solution(t: &mut Table, seed: u64) -> Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let phase: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
    let (s, c) = phase.sin_cos();
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let metric: MetricFn = Arc::new(|_, _| [[Jet::constant(1.0), Z], [Z, Jet::constant(1.0)]]);
    let triple = ChartTriple::new(
        metric,
        Arc::new(|_, _| [Z, Z]),
        Arc::new(move |_, _| [Jet::constant(r * c), Jet::constant(r * s)]),
    );
    for p in grid([-1.0, 1.0], [-1.0, 1.0], GRID) {
        let d = triple.eval(p)?;
        let conn = twisted_connection_at(&d)?;
        t.push(p, "ricci-constant-curvature", max_diff2(&ricci(&conn), &negate(&d.g)));
        common_checks(t, p, &conn);
        t.push(p, "liouville-extraction", liouville_extraction_residual(&conn));
        t.push(p, "minimality", minimality_residual(&triple, Sign::Spacelike, p)?);
        t.push(p, "trace-identity", trace_identity_residual(&triple, p)?);
    }
    Ok(())
}

/// Runs a named scenario; `seed` drives the randomized ones.
pub fn run_scenario(name: &str, seed: u64) -> Result<Vec<ChartRecord>> {
    let mut t = Table { rows: Vec::new() };
    match name {
        "hyperbolic-trivial" => constant_curvature(name, &mut t, hyperbolic_metric(), -1.0, ([-1.0, 1.0], [0.5, 2.0]))?,
        "sphere-round" => constant_curvature(name, &mut t, sphere_metric(), 1.0, ([-1.0, 1.0], [-1.0, 1.0]))?,
        "conformal-change" => conformal_change(&mut t)?,
        "example-levi-civita-negative" => example(&mut t, negative_example(), ([-1.0, 1.0], [0.5, 2.0]))?,
        "example-levi-civita-positive" => example(&mut t, positive_example(), ([-1.0, 1.0], [-1.0, 1.0]))?,
        "weyl-change" => weyl_change(&mut t, seed)?,
        "random-twisted" => random_twisted(&mut t, seed)?,
        "flat-cubic-solution" => flat_cubic_solution(&mut t, seed)?,
        _ => {
            return Err(MlcError::InvalidArgument(format!(
                "unknown chart scenario '{name}'; known: {}",
                SCENARIOS.join(", ")
            )))
        }
    }
    Ok(t.rows)
}
