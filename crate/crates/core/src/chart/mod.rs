//! Pointwise connection geometry on a coordinate chart with exact
//! derivatives.
//!
//! Fields are closures of the coordinate jets `(x, y)`, so every derivative
//! needed by the connection, its curvature and the covariant derivative of
//! Ricci is exact up to roundoff. Index conventions: `gamma[i][j][k] = Γⁱ_jk`
//! with `∇_{∂j}∂k = Γⁱ_jk ∂i`; `riemann[i][j][k][l] = Rⁱ_jkl` with
//! `R(∂k, ∂l)∂j = Rⁱ_jkl ∂i`; `ε¹² = ε₁₂ = 1` as a plain symbol.

pub mod jet;
pub mod scenario;

use std::sync::Arc;

pub use jet::Jet;

use crate::error::{MlcError, Result};
use crate::solver::Sign;

pub type Vector = [Jet; 2];
pub type Tensor2 = [[Jet; 2]; 2];
pub type Tensor3 = [[[Jet; 2]; 2]; 2];
pub type Tensor4 = [[[[Jet; 2]; 2]; 2]; 2];

pub type MetricFn = Arc<dyn Fn(Jet, Jet) -> Tensor2 + Send + Sync>;
pub type FormFn = Arc<dyn Fn(Jet, Jet) -> Vector + Send + Sync>;
/// `(c₁, c₂)` of the cubic field in the oriented Gram-Schmidt frame of `g`.
pub type CubicFn = Arc<dyn Fn(Jet, Jet) -> [Jet; 2] + Send + Sync>;

const Z: Jet = Jet::ZERO;
const EPS: [[f64; 2]; 2] = [[0.0, 1.0], [-1.0, 0.0]];

/// Metric, 1-form and cubic coefficient on a chart.
#[derive(Clone)]
pub struct ChartTriple {
    pub metric: MetricFn,
    pub beta: FormFn,
    pub cubic: CubicFn,
}

impl ChartTriple {
    pub fn new(metric: MetricFn, beta: FormFn, cubic: CubicFn) -> Self {
        ChartTriple { metric, beta, cubic }
    }

    /// `β = 0`, `C = 0`.
    pub fn metric_only(metric: MetricFn) -> Self {
        ChartTriple {
            metric,
            beta: Arc::new(|_, _| [Z, Z]),
            cubic: Arc::new(|_, _| [Z, Z]),
        }
    }

    pub fn eval(&self, p: [f64; 2]) -> Result<PointData> {
        let (x, y) = Jet::point(p);
        let g = (self.metric)(x, y);
        check_metric(&g, p)?;
        Ok(PointData {
            g,
            beta: (self.beta)(x, y),
            cubic: (self.cubic)(x, y),
        })
    }
}

/// Jets of a triple around one point.
#[derive(Debug, Clone, Copy)]
pub struct PointData {
    pub g: Tensor2,
    pub beta: Vector,
    pub cubic: [Jet; 2],
}

fn check_metric(g: &Tensor2, p: [f64; 2]) -> Result<()> {
    let (a, b, c) = (g[0][0].value(), g[0][1].value(), g[1][1].value());
    let sym = (g[0][1].value() - g[1][0].value()).abs();
    if !(a > 0.0) || !(a * c - b * b > 0.0) || sym > 1e-12 * (a.abs() + c.abs()) {
        return Err(MlcError::Precondition(format!(
            "metric is not symmetric positive definite at ({}, {})",
            p[0], p[1]
        )));
    }
    Ok(())
}

pub fn det(g: &Tensor2) -> Jet {
    g[0][0] * g[1][1] - g[0][1] * g[1][0]
}

pub fn inverse(g: &Tensor2) -> Result<Tensor2> {
    let d = det(g);
    if d.value().abs() < 1e-300 || !d.value().is_finite() {
        return Err(MlcError::Numerical("singular metric".into()));
    }
    let r = d.recip();
    Ok([[g[1][1] * r, -g[0][1] * r], [-g[1][0] * r, g[0][0] * r]])
}

/// Torsion-free connection coefficients at one point.
#[derive(Debug, Clone, Copy)]
pub struct ConnectionField {
    pub gamma: Tensor3,
}

impl ConnectionField {
    pub fn add(&self, delta: &Tensor3) -> Self {
        let mut gamma = self.gamma;
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    gamma[i][j][k] += delta[i][j][k];
                }
            }
        }
        ConnectionField { gamma }
    }

    /// `max |Γⁱ_jk − Γⁱ_kj|`.
    pub fn torsion(&self) -> f64 {
        let mut m: f64 = 0.0;
        for i in 0..2 {
            m = m.max((self.gamma[i][0][1].value() - self.gamma[i][1][0].value()).abs());
        }
        m
    }

    pub fn max_difference(&self, other: &Self) -> f64 {
        let mut m: f64 = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    m = m.max((self.gamma[i][j][k].value() - other.gamma[i][j][k].value()).abs());
                }
            }
        }
        m
    }
}

/// Koszul formula.
pub fn levi_civita(g: &Tensor2) -> Result<ConnectionField> {
    let gi = inverse(g)?;
    let dg = [[[g[0][0].d(0), g[0][1].d(0)], [g[1][0].d(0), g[1][1].d(0)]], [
        [g[0][0].d(1), g[0][1].d(1)],
        [g[1][0].d(1), g[1][1].d(1)],
    ]];
    // dg[k][a][b] = ∂_k g_ab
    let mut gamma = [[[Z; 2]; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                let mut s = Z;
                for l in 0..2 {
                    s += gi[i][l] * (dg[j][l][k] + dg[k][l][j] - dg[l][j][k]);
                }
                gamma[i][j][k] = s.scale(0.5);
            }
        }
    }
    Ok(ConnectionField { gamma })
}

/// Oriented Gram-Schmidt frame on `(∂x, ∂y)`: `frame[μ][a]` are the
/// coordinates of `e_a`, `coframe[a][μ]` those of `ωᵃ`.
pub fn orthonormal_frame(g: &Tensor2) -> (Tensor2, Tensor2) {
    let s11 = g[0][0].sqrt();
    let d = det(g);
    let sd = d.sqrt();
    let frame = [[s11.recip(), -g[0][1] / (s11 * sd)], [Z, s11 / sd]];
    let coframe = [[s11, g[0][1] / s11], [Z, sd / s11]];
    (frame, coframe)
}

/// `g ⊗ β♯ − β ⊗ Id − Id ⊗ β`.
pub fn conformal_twist(g: &Tensor2, beta: &Vector) -> Result<Tensor3> {
    let gi = inverse(g)?;
    let up = [gi[0][0] * beta[0] + gi[0][1] * beta[1], gi[1][0] * beta[0] + gi[1][1] * beta[1]];
    let mut t = [[[Z; 2]; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                let mut s = g[j][k] * up[i];
                if i == k {
                    s -= beta[j];
                }
                if i == j {
                    s -= beta[k];
                }
                t[i][j][k] = s;
            }
        }
    }
    Ok(t)
}

/// Frame coefficients `aⁱ_jk` of the cubic twist for `c = c₁ + i c₂`.
fn cubic_frame_coefficients(c: &[Jet; 2]) -> Tensor3 {
    let (c1, c2) = (c[0], c[1]);
    [[[c1, -c2], [-c2, -c1]], [[-c2, -c1], [-c1, c2]]]
}

/// Trace-free, `g`-symmetric `End(TΣ)`-valued 1-form `α` in coordinates,
/// `alpha[i][j][k] = αⁱ_jk`.
pub fn cubic_twist(g: &Tensor2, c: &[Jet; 2]) -> Tensor3 {
    let (e, f) = orthonormal_frame(g);
    let a = cubic_frame_coefficients(c);
    let mut out = [[[Z; 2]; 2]; 2];
    for mu in 0..2 {
        for nu in 0..2 {
            for rho in 0..2 {
                let mut s = Z;
                for i in 0..2 {
                    for j in 0..2 {
                        for k in 0..2 {
                            s += e[mu][i] * a[i][j][k] * f[j][nu] * f[k][rho];
                        }
                    }
                }
                out[mu][nu][rho] = s;
            }
        }
    }
    out
}

/// `|α|²_g = 4(c₁² + c₂²)`.
pub fn cubic_norm_sq(c: &[Jet; 2]) -> Jet {
    (c[0] * c[0] + c[1] * c[1]).scale(4.0)
}

/// Levi-Civita of `g` plus the conformal twist by `β` and the cubic twist.
pub fn twisted_connection_at(data: &PointData) -> Result<ConnectionField> {
    let lc = levi_civita(&data.g)?;
    Ok(lc
        .add(&conformal_twist(&data.g, &data.beta)?)
        .add(&cubic_twist(&data.g, &data.cubic)))
}

pub fn twisted_connection(triple: &ChartTriple, p: [f64; 2]) -> Result<ConnectionField> {
    twisted_connection_at(&triple.eval(p)?)
}

pub fn riemann(conn: &ConnectionField) -> Tensor4 {
    let g = &conn.gamma;
    let dg: [Tensor3; 2] = [0, 1].map(|ax| g.map(|a| a.map(|b| b.map(|c| c.d(ax)))));
    let mut r = [[[[Z; 2]; 2]; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                for l in 0..2 {
                    let mut s = dg[k][i][l][j] - dg[l][i][k][j];
                    for m in 0..2 {
                        s += g[i][k][m] * g[m][l][j] - g[i][l][m] * g[m][k][j];
                    }
                    r[i][j][k][l] = s;
                }
            }
        }
    }
    r
}

/// `Ric(X, Y) = tr(Z ↦ R(Z, X)Y)`, i.e. `Ric_ab = Rⁱ_bia`. Not symmetric in
/// general.
pub fn ricci(conn: &ConnectionField) -> Tensor2 {
    let r = riemann(conn);
    let mut ric = [[Z; 2]; 2];
    for a in 0..2 {
        for b in 0..2 {
            ric[a][b] = r[0][b][0][a] + r[1][b][1][a];
        }
    }
    ric
}

pub fn transpose(t: &Tensor2) -> Tensor2 {
    [[t[0][0], t[1][0]], [t[0][1], t[1][1]]]
}

/// Symmetric part, antisymmetric part and `Ric⁺ − Ric⁻/3`.
#[derive(Debug, Clone, Copy)]
pub struct RicciSplit {
    pub sym: Tensor2,
    pub anti: Tensor2,
    pub schouten: Tensor2,
}

pub fn ricci_split(ric: &Tensor2) -> RicciSplit {
    let mut sym = [[Z; 2]; 2];
    let mut anti = [[Z; 2]; 2];
    let mut schouten = [[Z; 2]; 2];
    for a in 0..2 {
        for b in 0..2 {
            sym[a][b] = (ric[a][b] + ric[b][a]).scale(0.5);
            anti[a][b] = (ric[a][b] - ric[b][a]).scale(0.5);
            schouten[a][b] = sym[a][b] - anti[a][b].scale(1.0 / 3.0);
        }
    }
    RicciSplit { sym, anti, schouten }
}

pub fn max_abs2(t: &Tensor2) -> f64 {
    t.iter().flatten().map(|x| x.value().abs()).fold(0.0, f64::max)
}

pub fn max_diff2(a: &Tensor2, b: &Tensor2) -> f64 {
    let mut m: f64 = 0.0;
    for i in 0..2 {
        for j in 0..2 {
            m = m.max((a[i][j].value() - b[i][j].value()).abs());
        }
    }
    m
}

/// `∇_k T_ij`, stored as `[i][j][k]`.
pub fn covariant_derivative(conn: &ConnectionField, t: &Tensor2) -> Tensor3 {
    let g = &conn.gamma;
    let mut out = [[[Z; 2]; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                let mut s = t[i][j].d(k);
                for m in 0..2 {
                    s -= g[m][k][i] * t[m][j] + g[m][k][j] * t[i][m];
                }
                out[i][j][k] = s;
            }
        }
    }
    out
}

/// Coordinate density `Λ` of the Liouville curvature, `λ = Λ_a dxᵃ ⊗ dx∧dy`,
/// from `Λ_i = εʲᵏ ∇_k Ric_ij`. Meaningful for Lagrangian connections.
pub fn liouville(conn: &ConnectionField) -> Vector {
    let ric = ricci_split(&ricci(conn)).sym;
    let nr = covariant_derivative(conn, &ric);
    [0, 1].map(|i| nr[i][0][1] - nr[i][1][0])
}

/// `√det g · ⋆β` in coordinates, with `⋆(dx) = dy` for the Euclidean metric.
pub fn star_density(g: &Tensor2, beta: &Vector) -> Result<Vector> {
    let gi = inverse(g)?;
    let d = det(g);
    let up = [gi[0][0] * beta[0] + gi[0][1] * beta[1], gi[1][0] * beta[0] + gi[1][1] * beta[1]];
    Ok([-(d * up[1]), d * up[0]])
}

/// `(1/√det g) ∂_a(√det g gᵃᵇ β_b)`.
pub fn divergence(g: &Tensor2, beta: &Vector) -> Result<Jet> {
    let gi = inverse(g)?;
    let sd = det(g).sqrt();
    let flux = [0, 1].map(|a| sd * (gi[a][0] * beta[0] + gi[a][1] * beta[1]));
    Ok((flux[0].d(0) + flux[1].d(1)) / sd)
}

/// Gauss curvature as half the trace of the Levi-Civita Ricci tensor.
pub fn gauss_curvature(g: &Tensor2) -> Result<Jet> {
    Ok(trace(g, &ricci(&levi_civita(g)?))?.scale(0.5))
}

pub fn trace(g: &Tensor2, t: &Tensor2) -> Result<Jet> {
    let gi = inverse(g)?;
    let mut s = Z;
    for a in 0..2 {
        for b in 0..2 {
            s += gi[a][b] * t[a][b];
        }
    }
    Ok(s)
}

/// `(3/8) tr_g Sym ∇g` for a connection and a metric.
pub fn symmetrized_trace_form(conn: &ConnectionField, g: &Tensor2) -> Result<Vector> {
    let gi = inverse(g)?;
    let ng = covariant_derivative(conn, g); // ng[i][j][k] = ∇_k g_ij
    let mut out = [Z; 2];
    for (k, o) in out.iter_mut().enumerate() {
        let mut s = Z;
        for i in 0..2 {
            for j in 0..2 {
                s += gi[i][j] * (ng[i][j][k] + ng[j][k][i].scale(2.0));
            }
        }
        *o = s.scale(3.0 / 8.0 / 3.0);
    }
    Ok(out)
}

/// `+1` for timelike (`g = Ric`), `−1` for spacelike (`g = −Ric`).
pub fn sign_factor(sign: Sign) -> f64 {
    match sign {
        Sign::Timelike => 1.0,
        Sign::Spacelike => -1.0,
    }
}

/// Induced-metric mismatch allowed before minimality is evaluated.
pub const INDUCED_METRIC_TOL: f64 = 1e-6;

/// `max_a |Λ_a + 2s·(√det g ⋆β)_a|` for the twisted connection of the
/// triple, where `g = s·Ric` is the induced metric and `β = (3/8)tr_g Sym ∇g`
/// is recomputed from the connection.
pub fn minimality_residual(triple: &ChartTriple, sign: Sign, p: [f64; 2]) -> Result<f64> {
    let data = triple.eval(p)?;
    let conn = twisted_connection_at(&data)?;
    let s = sign_factor(sign);
    let ric = ricci_split(&ricci(&conn));
    let induced = ric.sym.map(|r| r.map(|x| x.scale(s)));
    let mismatch = max_diff2(&induced, &data.g).max(max_abs2(&ric.anti));
    if mismatch > INDUCED_METRIC_TOL {
        return Err(MlcError::Precondition(format!(
            "induced metric differs from the triple's metric by {mismatch:e} at ({}, {})",
            p[0], p[1]
        )));
    }
    check_metric(&induced, p)?;
    let beta = symmetrized_trace_form(&conn, &induced)?;
    let lambda = liouville(&conn);
    let star = star_density(&induced, &beta)?;
    Ok((0..2)
        .map(|a| (lambda[a].value() + 2.0 * s * star[a].value()).abs())
        .fold(0.0, f64::max))
}

/// `∇ + γ ⊗ Id + Id ⊗ γ`.
pub fn projective_change(conn: &ConnectionField, gamma: &Vector) -> ConnectionField {
    let mut delta = [[[Z; 2]; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                let mut s = Z;
                if i == k {
                    s += gamma[j];
                }
                if i == j {
                    s += gamma[k];
                }
                delta[i][j][k] = s;
            }
        }
    }
    conn.add(&delta)
}

/// Residual of `Ric(∇) = Ric(∇') + γ² − Sym ∇'γ + 3 dγ` with
/// `dγ_ab = ½(∂_aγ_b − ∂_bγ_a)`, evaluated on the transposed Ricci tensors.
pub fn ricci_change_residual(base: &ConnectionField, gamma: &Vector) -> f64 {
    let changed = projective_change(base, gamma);
    let r1 = transpose(&ricci(&changed));
    let r0 = transpose(&ricci(base));
    let ng = {
        let mut t = [[Z; 2]; 2];
        for a in 0..2 {
            for b in 0..2 {
                let mut s = gamma[b].d(a);
                for m in 0..2 {
                    s -= base.gamma[m][a][b] * gamma[m];
                }
                t[a][b] = s; // ∇'_a γ_b
            }
        }
        t
    };
    let mut m: f64 = 0.0;
    for a in 0..2 {
        for b in 0..2 {
            let sym = (ng[a][b] + ng[b][a]).scale(0.5);
            let dg = (gamma[b].d(a) - gamma[a].d(b)).scale(0.5);
            let rhs = r0[a][b] + gamma[a] * gamma[b] - sym + dg.scale(3.0);
            m = m.max((r1[a][b].value() - rhs.value()).abs());
        }
    }
    m
}

/// Trace-free part of the coefficient change `ΔΓⁱ_jk − (δⁱ_j ΔΓᵐ_mk + δⁱ_k ΔΓᵐ_mj)/3`.
pub fn spray_change_tracefree(base: &ConnectionField, changed: &ConnectionField) -> f64 {
    let mut d = [[[0.0; 2]; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                d[i][j][k] = changed.gamma[i][j][k].value() - base.gamma[i][j][k].value();
            }
        }
    }
    let tr = |k: usize| d[0][0][k] + d[1][1][k];
    let mut m: f64 = 0.0;
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                let mut t = d[i][j][k];
                if i == j {
                    t -= tr(k) / 3.0;
                }
                if i == k {
                    t -= tr(j) / 3.0;
                }
                m = m.max(t.abs());
            }
        }
    }
    m
}

/// `tr_g Ric(∇') − 2K_g − 2 div β♯ + |α|²_g` for the twisted connection.
pub fn trace_identity_residual(triple: &ChartTriple, p: [f64; 2]) -> Result<f64> {
    let data = triple.eval(p)?;
    let conn = twisted_connection_at(&data)?;
    let lhs = trace(&data.g, &ricci(&conn))?;
    let k = gauss_curvature(&data.g)?;
    let div = divergence(&data.g, &data.beta)?;
    let rhs = k.scale(2.0) + div.scale(2.0) - cubic_norm_sq(&data.cubic);
    Ok((lhs.value() - rhs.value()).abs())
}

/// `tr_g Ric(∇' + γ) − tr_g Ric(∇') − |γ|²_g + div γ♯`: the trace of the
/// projective family grows by `|γ|²` up to a divergence.
pub fn projective_trace_residual(triple: &ChartTriple, gamma: &Vector, p: [f64; 2]) -> Result<f64> {
    let data = triple.eval(p)?;
    let conn = twisted_connection_at(&data)?;
    let changed = projective_change(&conn, gamma);
    let gi = inverse(&data.g)?;
    let norm = {
        let mut s = Z;
        for a in 0..2 {
            for b in 0..2 {
                s += gi[a][b] * gamma[a] * gamma[b];
            }
        }
        s
    };
    let t1 = trace(&data.g, &ricci(&changed))?;
    let t0 = trace(&data.g, &ricci(&conn))?;
    let div = divergence(&data.g, gamma)?;
    Ok((t1 - t0 - norm + div).value().abs())
}

/// `max |Rⁱ_j12 − (δⁱ_1 S_2j − δⁱ_2 S_1j − δⁱ_j (S_12 − S_21))|` with `S`
/// the Schouten tensor of the transposed Ricci tensor.
pub fn schouten_curvature_residual(conn: &ConnectionField) -> f64 {
    let r = riemann(conn);
    let s = ricci_split(&transpose(&ricci(conn))).schouten;
    let anti = s[0][1].value() - s[1][0].value();
    let mut m: f64 = 0.0;
    for i in 0..2 {
        for j in 0..2 {
            let mut expected = 0.0;
            if i == 0 {
                expected += s[1][j].value();
            }
            if i == 1 {
                expected -= s[0][j].value();
            }
            if i == j {
                expected -= anti;
            }
            m = m.max((r[i][j][0][1].value() - expected).abs());
        }
    }
    m
}

/// Largest asymmetry of `∇_k Ric_ij − (Λ_i ε_jk + Λ_j ε_ik)/3`.
pub fn liouville_extraction_residual(conn: &ConnectionField) -> f64 {
    let ric = ricci_split(&ricci(conn)).sym;
    let nr = covariant_derivative(conn, &ric);
    let l = liouville(conn);
    let mut t = [[[0.0; 2]; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                t[i][j][k] = nr[i][j][k].value() - (l[i].value() * EPS[j][k] + l[j].value() * EPS[i][k]) / 3.0;
            }
        }
    }
    let mut m: f64 = 0.0;
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                m = m.max((t[i][j][k] - t[j][i][k]).abs());
                m = m.max((t[i][j][k] - t[i][k][j]).abs());
                m = m.max((t[i][j][k] - t[k][j][i]).abs());
            }
        }
    }
    m
}

/// Largest of `|tr α(X)|` and the asymmetry of `g(α(X)Y, Z)`.
pub fn cubic_twist_defects(g: &Tensor2, c: &[Jet; 2]) -> (f64, f64) {
    let a = cubic_twist(g, c);
    let trace = (0..2)
        .map(|j| (a[0][j][0] + a[1][j][1]).value().abs())
        .fold(0.0, f64::max);
    let mut low = [[[0.0; 2]; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                low[i][j][k] = (0..2).map(|m| g[i][m].value() * a[m][j][k].value()).sum();
            }
        }
    }
    let mut asym: f64 = 0.0;
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                asym = asym
                    .max((low[i][j][k] - low[j][i][k]).abs())
                    .max((low[i][j][k] - low[i][k][j]).abs());
            }
        }
    }
    (trace, asym)
}
