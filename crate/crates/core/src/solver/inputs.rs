//! Reproducible construction of closed 1-forms and cubic fields from a
//! short description and a seed.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cubic::{project_conformally_holomorphic, total_norm_sq, CubicField, ProjectionOptions};
use crate::dec::{d0, d1_transpose, ConformalMetric, DiscreteForm};
use crate::error::{MlcError, Result};
use crate::hodge::{dual_cycle_form, harmonic_basis, tree_cotree};
use crate::mesh::TriMesh;

/// `β = Σ harmonic[k]·h_k + d(exact · f) + coexact · d1ᵀψ + ω_gen`, with
/// `h_k` an orthonormal harmonic basis, `f` a smooth (or, without positions,
/// seeded random) vertex function, `ψ` a seeded random face function and
/// `ω_gen` the crossing form of one tree-cotree generator's dual loop.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BetaSpec {
    #[serde(default)]
    pub harmonic: Vec<f64>,
    #[serde(default)]
    pub exact: f64,
    /// Adds a non-closed part.
    #[serde(default)]
    pub coexact: f64,
    #[serde(default)]
    pub generator: Option<usize>,
}

/// Cubic field with total squared norm `norm_sq` in the background metric.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CubicSpec {
    pub norm_sq: f64,
    /// Project the seeded random field onto the ∂̄-kernel before scaling.
    #[serde(default)]
    pub project: bool,
}

pub fn potential(mesh: &TriMesh, seed: u64) -> Vec<f64> {
    match mesh.positions() {
        Some(p) => p
            .iter()
            .map(|[x, y, z]| (0.31 * x + 0.17).sin() * (0.23 * y - 0.4).cos() + 0.3 * z)
            .collect(),
        None => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_0f_f0);
            (0..mesh.n_vertices()).map(|_| rng.gen_range(-0.5..0.5)).collect()
        }
    }
}

pub fn build_beta(mesh: &TriMesh, metric: &ConformalMetric, spec: &BetaSpec, seed: u64, tol: f64) -> Result<DiscreteForm> {
    let mut beta = vec![0.0; mesh.n_edges()];
    if spec.harmonic.iter().any(|c| *c != 0.0) {
        let basis = harmonic_basis(mesh, metric, tol)?;
        if spec.harmonic.len() > basis.len() {
            return Err(MlcError::InvalidArgument(format!(
                "{} harmonic coefficients given but the mesh has only {} harmonic forms",
                spec.harmonic.len(),
                basis.len()
            )));
        }
        for (c, h) in spec.harmonic.iter().zip(&basis) {
            for (b, x) in beta.iter_mut().zip(h.values()) {
                *b += c * x;
            }
        }
    }
    if spec.exact != 0.0 {
        let f = potential(mesh, seed);
        for (b, x) in beta.iter_mut().zip(d0(mesh, &f)) {
            *b += spec.exact * x;
        }
    }
    if spec.coexact != 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xc0_e8ac7);
        let psi: Vec<f64> = (0..mesh.n_faces()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        for (b, x) in beta.iter_mut().zip(d1_transpose(mesh, &psi)) {
            *b += spec.coexact * x;
        }
    }
    if let Some(k) = spec.generator {
        let tc = tree_cotree(mesh);
        let e = *tc.generators.get(k).ok_or_else(|| {
            MlcError::InvalidArgument(format!(
                "generator {k} requested but the mesh has {} generators",
                tc.generators.len()
            ))
        })?;
        for (b, x) in beta.iter_mut().zip(dual_cycle_form(mesh, &tc.dual_cycle(mesh, e))) {
            *b += x;
        }
    }
    DiscreteForm::new(mesh, 1, beta)
}

pub fn random_cubic(mesh: &TriMesh, metric: &ConformalMetric, seed: u64) -> Result<CubicField> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let coeff = (0..mesh.n_vertices())
        .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect();
    CubicField::new(mesh, metric, coeff)
}

pub fn build_cubic(
    mesh: &TriMesh,
    metric: &ConformalMetric,
    beta: &DiscreteForm,
    spec: &CubicSpec,
    seed: u64,
) -> Result<CubicField> {
    if !(spec.norm_sq >= 0.0) || !spec.norm_sq.is_finite() {
        return Err(MlcError::InvalidArgument("cubic norm_sq must be finite and non-negative".into()));
    }
    if spec.norm_sq == 0.0 {
        return Ok(CubicField::zeros(mesh, metric));
    }
    let mut field = random_cubic(mesh, metric, seed)?;
    if spec.project {
        let p = project_conformally_holomorphic(&field, beta, mesh, metric, &ProjectionOptions::default())?;
        if !p.accepted {
            return Err(MlcError::Numerical(format!(
                "no conformally holomorphic cubic field found (Rayleigh quotient {:e})",
                p.rayleigh
            )));
        }
        field = p.field;
    }
    let n = total_norm_sq(&field, mesh, metric);
    Ok(field.scale((spec.norm_sq / n).sqrt()))
}
