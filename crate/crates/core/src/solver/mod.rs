//! Conformal-factor solver for the coupled curvature equation
//!
//! `−Δ₀u = −K₀ + δ₀β − e^{2u} + 2τ e^{−4u}`
//!
//! posed as the minimization of a strictly convex functional on vertex
//! values. Two formulations are provided: the direct one in `u`, and the
//! substituted one in `u' = u − v` after writing `β = γ + dv`.

pub mod inputs;

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::cubic::{norm_sq, CubicField};
use crate::dec::{
    codifferential_values, d1, spd_solve_with, stiffness_matrix, CgOptions, ConformalMetric, CsrMatrix,
    DiscreteForm, Geometry,
};
use crate::error::{MlcError, Result};
use crate::hodge::decompose;
use crate::mesh::{EdgeLengthMetric, TriMesh};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sign {
    Spacelike,
    Timelike,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Route {
    Direct,
    Hodge,
}

/// Mesh, background metric, closed 1-form `β` and `τ = |C|²` in the
/// background metric.
#[derive(Debug, Clone)]
pub struct ProblemData {
    pub mesh: TriMesh,
    pub background: EdgeLengthMetric,
    pub beta: DiscreteForm,
    pub tau: Vec<f64>,
    pub sign: Sign,
}

/// Closedness slack on `max |dβ|`, relative to `max |β|`.
const CLOSED_TOL: f64 = 1e-9;

impl ProblemData {
    pub fn new(
        mesh: TriMesh,
        background: EdgeLengthMetric,
        beta: DiscreteForm,
        tau: Vec<f64>,
        sign: Sign,
    ) -> Result<Self> {
        beta.check(&mesh, 1)?;
        if tau.len() != mesh.n_vertices() {
            return Err(MlcError::DimensionMismatch {
                what: "tau",
                got: tau.len(),
                expected: mesh.n_vertices(),
            });
        }
        if let Some(v) = tau.iter().position(|t| !(*t >= 0.0) || !t.is_finite()) {
            return Err(MlcError::Precondition(format!("tau must be finite and non-negative (vertex {v})")));
        }
        let curl = d1(&mesh, beta.values()).iter().fold(0.0f64, |m, x| m.max(x.abs()));
        if curl > CLOSED_TOL * beta.max_abs().max(1.0) {
            return Err(MlcError::Precondition(format!("beta is not closed: max |dβ| = {curl:e}")));
        }
        Ok(ProblemData {
            mesh,
            background,
            beta,
            tau,
            sign,
        })
    }

    /// Takes `τ = |C|²` of a cubic field in the background metric.
    pub fn with_cubic(
        mesh: TriMesh,
        background: EdgeLengthMetric,
        beta: DiscreteForm,
        cubic: &CubicField,
        sign: Sign,
    ) -> Result<Self> {
        let metric = ConformalMetric::flat(&mesh, background.clone());
        let tau = norm_sq(cubic, &metric).into_values();
        Self::new(mesh, background, beta, tau, sign)
    }

    pub fn background_geometry(&self) -> Geometry {
        Geometry::new(&self.mesh, self.background.lengths())
    }

    /// Background curvature `K₀` from angle defects.
    pub fn k0(&self) -> Vec<f64> {
        let geom = self.background_geometry();
        (0..self.mesh.n_vertices())
            .map(|v| geom.angle_defect(v) / geom.vertex_area[v])
            .collect()
    }

    /// `∫(K₀ − δ₀β) dμ₀`, which must be negative for a spacelike solve.
    pub fn coercivity_integral(&self) -> f64 {
        let geom = self.background_geometry();
        let delta = codifferential_values(&self.mesh, &geom, self.beta.values());
        (0..self.mesh.n_vertices())
            .map(|v| geom.angle_defect(v) - delta[v] * geom.vertex_area[v])
            .sum()
    }

    fn check_solvable(&self) -> Result<()> {
        if self.sign == Sign::Timelike {
            return Err(MlcError::Precondition(
                "timelike data is not supported: the functional is only coercive for spacelike data".into(),
            ));
        }
        let chi = self.mesh.euler_characteristic();
        if chi >= 0 {
            return Err(MlcError::Precondition(format!(
                "spacelike solve needs negative Euler characteristic, got χ = {chi}"
            )));
        }
        let integral = self.coercivity_integral();
        if !(integral < 0.0) {
            return Err(MlcError::Precondition(format!(
                "coercivity fails: ∫(K₀ − δβ) dμ₀ = {integral:e} is not negative"
            )));
        }
        Ok(())
    }
}

/// Data after the substitution `β = γ + dv`: `κ = −e^{2v}`, `ξ = τ e^{−4v}`.
#[derive(Debug, Clone)]
pub struct SubstitutedData {
    /// Background curvature; `−1` everywhere reproduces the hyperbolic case.
    pub k0: Vec<f64>,
    pub kappa: Vec<f64>,
    pub xi: Vec<f64>,
    pub v: Vec<f64>,
    pub gamma: DiscreteForm,
}

impl SubstitutedData {
    pub fn from_problem(data: &ProblemData, hodge_tol: f64) -> Result<Self> {
        let metric = ConformalMetric::flat(&data.mesh, data.background.clone());
        let parts = decompose(&data.beta, &data.mesh, &metric, hodge_tol)?;
        let v = parts.v.into_values();
        Ok(SubstitutedData {
            k0: data.k0(),
            kappa: v.iter().map(|v| -(2.0 * v).exp()).collect(),
            xi: data.tau.iter().zip(&v).map(|(t, v)| t * (-4.0 * v).exp()).collect(),
            v,
            gamma: parts.gamma,
        })
    }

    /// Spatially constant coefficients with `v = 0`, `γ = 0`.
    pub fn constant(mesh: &TriMesh, k0: f64, kappa: f64, xi: f64) -> Result<Self> {
        if !(kappa < 0.0) || !(xi >= 0.0) {
            return Err(MlcError::Precondition("need κ < 0 and ξ ≥ 0".into()));
        }
        let n = mesh.n_vertices();
        Ok(SubstitutedData {
            k0: vec![k0; n],
            kappa: vec![kappa; n],
            xi: vec![xi; n],
            v: vec![0.0; n],
            gamma: DiscreteForm::zeros(mesh, 1),
        })
    }
}

/// `E(u) = ½ uᵀLu + Σ M (a u + p e^{2u} + q e^{−4u})` with `p > 0`, `q ≥ 0`.
#[derive(Debug, Clone)]
pub struct Functional {
    stiffness: CsrMatrix,
    mass: Vec<f64>,
    linear: Vec<f64>,
    exp2: Vec<f64>,
    exp4: Vec<f64>,
}

impl Functional {
    /// `½|du|² + (K₀ − δβ)u + ½e^{2u} + ½τe^{−4u}`.
    pub fn direct(data: &ProblemData) -> Self {
        let geom = data.background_geometry();
        let delta = codifferential_values(&data.mesh, &geom, data.beta.values());
        let k0 = data.k0();
        Functional {
            stiffness: stiffness_matrix(&data.mesh, &geom),
            linear: k0.iter().zip(&delta).map(|(k, d)| k - d).collect(),
            exp2: vec![0.5; data.mesh.n_vertices()],
            exp4: data.tau.iter().map(|t| 0.5 * t).collect(),
            mass: geom.vertex_area,
        }
    }

    /// `½(|du|² + 2K₀u − κe^{2u} + ξe^{−4u})`.
    pub fn substituted(mesh: &TriMesh, background: &EdgeLengthMetric, data: &SubstitutedData) -> Self {
        let geom = Geometry::new(mesh, background.lengths());
        Functional {
            stiffness: stiffness_matrix(mesh, &geom),
            linear: data.k0.clone(),
            exp2: data.kappa.iter().map(|k| -0.5 * k).collect(),
            exp4: data.xi.iter().map(|x| 0.5 * x).collect(),
            mass: geom.vertex_area,
        }
    }

    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    pub fn stiffness(&self) -> &CsrMatrix {
        &self.stiffness
    }

    pub fn value(&self, u: &[f64]) -> f64 {
        let lu = self.stiffness.mul(u);
        let mut e = 0.0;
        for i in 0..u.len() {
            e += 0.5 * u[i] * lu[i]
                + self.mass[i]
                    * (self.linear[i] * u[i] + self.exp2[i] * (2.0 * u[i]).exp() + self.exp4[i] * (-4.0 * u[i]).exp());
        }
        e
    }

    /// `E(u + s) − E(u)` without cancellation against the size of `E`.
    pub fn difference(&self, u: &[f64], s: &[f64]) -> f64 {
        let lu = self.stiffness.mul(u);
        let ls = self.stiffness.mul(s);
        let mut d = 0.0;
        for i in 0..u.len() {
            d += s[i] * (lu[i] + 0.5 * ls[i])
                + self.mass[i]
                    * (self.linear[i] * s[i]
                        + self.exp2[i] * (2.0 * u[i]).exp() * (2.0 * s[i]).exp_m1()
                        + self.exp4[i] * (-4.0 * u[i]).exp() * (-4.0 * s[i]).exp_m1());
        }
        d
    }

    /// Euclidean gradient (mass-weighted strong residual).
    pub fn gradient(&self, u: &[f64]) -> Vec<f64> {
        let mut g = self.stiffness.mul(u);
        for i in 0..u.len() {
            g[i] += self.mass[i]
                * (self.linear[i] + 2.0 * self.exp2[i] * (2.0 * u[i]).exp()
                    - 4.0 * self.exp4[i] * (-4.0 * u[i]).exp());
        }
        g
    }

    fn curvature_diag(&self, u: &[f64]) -> Vec<f64> {
        (0..u.len())
            .map(|i| {
                self.mass[i]
                    * (4.0 * self.exp2[i] * (2.0 * u[i]).exp() + 16.0 * self.exp4[i] * (-4.0 * u[i]).exp())
            })
            .collect()
    }

    pub fn hessian_apply(&self, u: &[f64], v: &[f64]) -> Vec<f64> {
        let mut hv = self.stiffness.mul(v);
        for (i, c) in self.curvature_diag(u).into_iter().enumerate() {
            hv[i] += c * v[i];
        }
        hv
    }

    /// `sqrt(Σ g_i² / M_i)`, the L² norm of the pointwise residual.
    pub fn residual_norm(&self, g: &[f64]) -> f64 {
        g.iter().zip(&self.mass).map(|(g, m)| g * g / m).sum::<f64>().sqrt()
    }
}

#[derive(Debug, Clone)]
pub struct SolveOptions {
    pub route: Route,
    /// Target for [`Functional::residual_norm`] of the gradient.
    pub tol: f64,
    pub max_iter: usize,
    /// Relative tolerance for the Hodge decomposition in the substituted route.
    pub hodge_tol: f64,
    /// Starting conformal factor; zero when absent.
    pub initial: Option<Vec<f64>>,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            route: Route::Direct,
            tol: 1e-10,
            max_iter: 100,
            hodge_tol: 1e-14,
            initial: None,
        }
    }
}

/// Outcome of a minimization.
#[derive(Debug, Clone)]
pub struct Minimizer {
    pub u: Vec<f64>,
    pub iterations: usize,
    pub residual: f64,
    pub energy: f64,
    /// Functional value before each step and at the end, accumulated from
    /// cancellation-free differences so it is exactly non-increasing.
    pub energy_log: Vec<f64>,
}

const ARMIJO: f64 = 1e-4;
const MAX_HALVINGS: usize = 60;

/// Damped Newton on a [`Functional`] with Armijo backtracking.
pub fn minimize(f: &Functional, initial: Vec<f64>, tol: f64, max_iter: usize) -> Result<Minimizer> {
    if !(tol > 0.0) {
        return Err(MlcError::InvalidArgument("tolerance must be positive".into()));
    }
    let n = initial.len();
    let mut u = initial;
    let mut e = f.value(&u);
    let mut g = f.gradient(&u);
    let mut res = f.residual_norm(&g);
    let mut log = vec![e];
    let mut it = 0;
    while res > tol {
        if it == max_iter {
            return Err(MlcError::IterationCap(max_iter, res));
        }
        let diag = f.curvature_diag(&u);
        let lap_diag = f.stiffness.diagonal();
        let precond: Vec<f64> = diag.iter().zip(&lap_diag).map(|(a, b)| a + b).collect();
        let rhs: Vec<f64> = g.iter().map(|x| -x).collect();
        let step = spd_solve_with(
            |x: &[f64], y: &mut [f64]| {
                f.stiffness.mul_into(x, y);
                for i in 0..n {
                    y[i] += diag[i] * x[i];
                }
            },
            &rhs,
            &CgOptions::new(1e-13).jacobi(&precond),
        )?
        .x;
        let slope: f64 = g.iter().zip(&step).map(|(a, b)| a * b).sum();
        if !(slope < 0.0) {
            return Err(MlcError::LineSearch { iteration: it });
        }
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..MAX_HALVINGS {
            let scaled: Vec<f64> = step.iter().map(|b| t * b).collect();
            let de = f.difference(&u, &scaled);
            if de.is_finite() && de <= ARMIJO * t * slope {
                let trial: Vec<f64> = u.iter().zip(&scaled).map(|(a, b)| a + b).collect();
                accepted = Some((trial, de));
                break;
            }
            t *= 0.5;
        }
        let Some((trial, de)) = accepted else {
            return Err(MlcError::LineSearch { iteration: it });
        };
        e += de;
        u = trial;
        g = f.gradient(&u);
        res = f.residual_norm(&g);
        log.push(e);
        it += 1;
    }
    Ok(Minimizer {
        energy: f.value(&u),
        u,
        iterations: it,
        residual: res,
        energy_log: log,
    })
}

/// Result of [`solve`].
#[derive(Debug, Clone)]
pub struct SolveReport {
    /// Conformal factor of `g = e^{2u} g₀`.
    pub u: Vec<f64>,
    pub iterations: usize,
    pub residual: f64,
    pub energy: f64,
    pub area: f64,
    pub cubic_norm_sq: f64,
    pub gb_residual: f64,
    pub area_identity_residual: f64,
    pub minmax_value: f64,
    pub energy_log: Vec<f64>,
}

/// Flat JSON form of a [`SolveReport`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReportJson {
    pub iterations: usize,
    pub residual: f64,
    pub energy: f64,
    pub area: f64,
    pub cubic_norm_sq: f64,
    pub gb_residual: f64,
    pub area_identity_residual: f64,
    pub minmax_value: f64,
}

impl SolveReport {
    pub fn summary(&self) -> ReportJson {
        ReportJson {
            iterations: self.iterations,
            residual: self.residual,
            energy: self.energy,
            area: self.area,
            cubic_norm_sq: self.cubic_norm_sq,
            gb_residual: self.gb_residual,
            area_identity_residual: self.area_identity_residual,
            minmax_value: self.minmax_value,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.summary()).expect("report serializes")
    }
}

/// Minimizes the functional for `data` along the chosen route and measures
/// the solution.
pub fn solve(data: &ProblemData, opts: &SolveOptions) -> Result<SolveReport> {
    data.check_solvable()?;
    let n = data.mesh.n_vertices();
    let initial = match &opts.initial {
        Some(u0) if u0.len() != n => {
            return Err(MlcError::DimensionMismatch {
                what: "initial guess",
                got: u0.len(),
                expected: n,
            })
        }
        Some(u0) => u0.clone(),
        None => vec![0.0; n],
    };
    let (u, min) = match opts.route {
        Route::Direct => {
            let f = Functional::direct(data);
            let min = minimize(&f, initial, opts.tol, opts.max_iter)?;
            (min.u.clone(), min)
        }
        Route::Hodge => {
            let sub = SubstitutedData::from_problem(data, opts.hodge_tol)?;
            let f = Functional::substituted(&data.mesh, &data.background, &sub);
            let start = initial.iter().zip(&sub.v).map(|(a, b)| a - b).collect();
            let min = minimize(&f, start, opts.tol, opts.max_iter)?;
            let u = min.u.iter().zip(&sub.v).map(|(a, b)| a + b).collect();
            (u, min)
        }
    };
    let measures = measure_solution(data, &u);
    Ok(SolveReport {
        u,
        iterations: min.iterations,
        residual: min.residual,
        energy: min.energy,
        area: measures.area,
        cubic_norm_sq: measures.cubic_norm_sq,
        gb_residual: measures.gb_residual,
        area_identity_residual: measures.area_identity_residual,
        minmax_value: measures.minmax_value,
        energy_log: min.energy_log,
    })
}

/// Integral quantities of a conformal factor.
#[derive(Debug, Clone, Copy)]
pub struct Measures {
    /// `Σ M₀ e^{2u}`.
    pub area: f64,
    /// `Σ M₀ τ e^{−4u}`, i.e. `Σ |C|²_g · M₀e^{2u}`.
    pub cubic_norm_sq: f64,
    pub gb_residual: f64,
    pub area_identity_residual: f64,
    /// `∫ tr_g Ric dμ_g = 2∫K_g dμ_g + 2∫d⋆β − 4‖C‖²`.
    pub minmax_value: f64,
}

pub fn measure_solution(data: &ProblemData, u: &[f64]) -> Measures {
    let geom0 = data.background_geometry();
    let chi = data.mesh.euler_characteristic() as f64;
    let m0 = &geom0.vertex_area;
    let area: f64 = m0.iter().zip(u).map(|(m, u)| m * (2.0 * u).exp()).sum();
    let cubic: f64 = (0..u.len()).map(|i| m0[i] * data.tau[i] * (-4.0 * u[i]).exp()).sum();

    // Curvature integral of g: angle defects when the scaled lengths still
    // form triangles, otherwise the measure implied by the discrete
    // equation, e^{2u}K_g M₀ = K₀M₀ + (Lu).
    let total_curvature = match ConformalMetric::new(&data.mesh, data.background.clone(), u.to_vec()) {
        Ok(metric) => {
            let geom = metric.geometry(&data.mesh);
            (0..u.len()).map(|v| geom.angle_defect(v)).sum::<f64>()
        }
        Err(_) => {
            let lu = stiffness_matrix(&data.mesh, &geom0).mul(u);
            (0..u.len()).map(|v| geom0.angle_defect(v) + lu[v]).sum::<f64>()
        }
    };
    let delta = codifferential_values(&data.mesh, &geom0, data.beta.values());
    let divergence: f64 = delta.iter().zip(m0).map(|(d, m)| d * m).sum();
    Measures {
        area,
        cubic_norm_sq: cubic,
        gb_residual: (total_curvature - 2.0 * PI * chi).abs(),
        area_identity_residual: (2.0 * PI * chi + area - 2.0 * cubic).abs(),
        minmax_value: 2.0 * total_curvature - 2.0 * divergence - 4.0 * cubic,
    }
}

/// `max |u_direct − u_hodge|`.
pub fn route_agreement(data: &ProblemData, opts: &SolveOptions) -> Result<f64> {
    let direct = solve(data, &SolveOptions { route: Route::Direct, ..opts.clone() })?;
    let hodge = solve(data, &SolveOptions { route: Route::Hodge, ..opts.clone() })?;
    Ok(direct
        .u
        .iter()
        .zip(&hodge.u)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::generate_genus;

    fn genus2() -> ProblemData {
        let (m, g) = generate_genus(2, 0).unwrap();
        let n = m.n_vertices();
        let beta = DiscreteForm::zeros(&m, 1);
        ProblemData::new(m, g, beta, vec![0.0; n], Sign::Spacelike).unwrap()
    }

    #[test]
    fn gradient_vanishes_at_trivial_point() {
        let data = genus2();
        let sub = SubstitutedData::constant(&data.mesh, -1.0, -1.0, 0.0).unwrap();
        let f = Functional::substituted(&data.mesh, &data.background, &sub);
        let g = f.gradient(&vec![0.0; data.mesh.n_vertices()]);
        assert!(g.iter().all(|x| x.abs() < 1e-15));
        let area: f64 = f.mass().iter().sum();
        assert!((f.value(&vec![0.0; data.mesh.n_vertices()]) - 0.5 * area).abs() < 1e-12 * area);
    }

    #[test]
    fn hessian_on_constants_is_twice_mass() {
        let data = genus2();
        let sub = SubstitutedData::constant(&data.mesh, -1.0, -1.0, 0.0).unwrap();
        let f = Functional::substituted(&data.mesh, &data.background, &sub);
        let n = data.mesh.n_vertices();
        let hv = f.hessian_apply(&vec![0.0; n], &vec![1.5; n]);
        for (h, m) in hv.iter().zip(f.mass()) {
            assert!((h - 3.0 * m).abs() < 1e-12);
        }
    }

    #[test]
    fn timelike_and_positive_characteristic_are_rejected() {
        let data = genus2();
        let timelike = ProblemData {
            sign: Sign::Timelike,
            ..data.clone()
        };
        assert!(matches!(solve(&timelike, &SolveOptions::default()), Err(MlcError::Precondition(_))));
        let (m, g) = generate_genus(0, 0).unwrap();
        let n = m.n_vertices();
        let beta = DiscreteForm::zeros(&m, 1);
        let sphere = ProblemData::new(m, g, beta, vec![0.0; n], Sign::Spacelike).unwrap();
        assert!(matches!(solve(&sphere, &SolveOptions::default()), Err(MlcError::Precondition(_))));
    }

    #[test]
    fn non_closed_beta_is_rejected() {
        let (m, g) = generate_genus(2, 0).unwrap();
        let n = m.n_vertices();
        let mut beta = vec![0.0; m.n_edges()];
        beta[0] = 1.0;
        let beta = DiscreteForm::new(&m, 1, beta).unwrap();
        assert!(ProblemData::new(m, g, beta, vec![0.0; n], Sign::Spacelike).is_err());
    }

    #[test]
    fn prescribed_curvature_solve() {
        let data = genus2();
        let r = solve(&data, &SolveOptions::default()).unwrap();
        assert!(r.residual <= 1e-10);
        assert!((r.area - 4.0 * PI).abs() < 1e-8, "{}", r.area);
        assert!(r.area_identity_residual < 1e-8);
        assert!(r.energy_log.windows(2).all(|w| w[1] <= w[0]));
    }
}
