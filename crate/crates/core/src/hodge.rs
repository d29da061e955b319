//! Hodge decomposition of 1-forms into exact, co-exact and harmonic parts,
//! and a harmonic basis built from tree-cotree homology generators.

use std::collections::VecDeque;

use crate::dec::{
    codifferential_values, d0, d0_transpose, d1, d1_transpose, inner, spd_solve_with, weighted_mean,
    CgOptions, ConformalMetric, DiscreteForm, Geometry,
};
use crate::error::{MlcError, Result};
use crate::mesh::TriMesh;

/// `β = γ + dv + coexact`.
#[derive(Debug, Clone)]
pub struct HodgeParts {
    pub gamma: DiscreteForm,
    /// Exact potential with zero area-weighted mean.
    pub v: DiscreteForm,
    pub coexact: DiscreteForm,
}

impl HodgeParts {
    pub fn exact(&self, mesh: &TriMesh) -> DiscreteForm {
        DiscreteForm::new(mesh, 1, d0(mesh, self.v.values())).expect("sizes match")
    }
}

/// Solves `d0ᵀ⋆1 d0 v = d0ᵀ⋆1 ω` and returns the mean-zero potential `v`.
pub(crate) fn exact_potential(mesh: &TriMesh, geom: &Geometry, omega: &[f64], tol: f64) -> Result<Vec<f64>> {
    let w = &geom.edge_weight;
    let mut rhs = d0_transpose(mesh, &omega.iter().zip(w).map(|(o, w)| o * w).collect::<Vec<_>>());
    // The range is orthogonal to constants; strip roundoff.
    let mean = rhs.iter().sum::<f64>() / rhs.len() as f64;
    rhs.iter_mut().for_each(|r| *r -= mean);
    let diag = {
        let mut dg = vec![0.0; mesh.n_vertices()];
        for (e, &[a, b]) in mesh.edges().iter().enumerate() {
            dg[a] += w[e];
            dg[b] += w[e];
        }
        dg
    };
    let apply = |x: &[f64], y: &mut [f64]| {
        let dx: Vec<f64> = d0(mesh, x).iter().zip(w).map(|(a, w)| a * w).collect();
        y.copy_from_slice(&d0_transpose(mesh, &dx));
    };
    let out = spd_solve_with(apply, &rhs, &CgOptions::new(tol).jacobi(&diag))?;
    let mut v = out.x;
    let m = weighted_mean(&v, geom);
    v.iter_mut().for_each(|x| *x -= m);
    Ok(v)
}

/// Splits a 1-form into harmonic, exact and co-exact parts.
///
/// The exact potential solves `δ d v = δ β`; the co-exact part is
/// `⋆1⁻¹ d1ᵀ φ` with `d1 ⋆1⁻¹ d1ᵀ φ = d1 β`, which needs positive cotangent
/// weights whenever `β` is not closed.
pub fn decompose(beta: &DiscreteForm, mesh: &TriMesh, metric: &ConformalMetric, tol: f64) -> Result<HodgeParts> {
    beta.check(mesh, 1)?;
    let geom = metric.geometry(mesh);
    let v = exact_potential(mesh, &geom, beta.values(), tol)?;
    let dv = d0(mesh, &v);

    let curl = d1(mesh, beta.values());
    let curl_norm = curl.iter().map(|x| x * x).sum::<f64>().sqrt();
    let beta_norm = beta.max_abs().max(f64::MIN_POSITIVE);
    let coexact = if curl_norm <= 1e-14 * beta_norm * (mesh.n_faces() as f64).sqrt() {
        vec![0.0; mesh.n_edges()]
    } else {
        coexact_part(mesh, &geom, &curl, tol)?
    };

    let gamma: Vec<f64> = beta
        .values()
        .iter()
        .zip(&dv)
        .zip(&coexact)
        .map(|((b, e), c)| b - e - c)
        .collect();
    Ok(HodgeParts {
        gamma: DiscreteForm::new(mesh, 1, gamma)?,
        v: DiscreteForm::new(mesh, 0, v)?,
        coexact: DiscreteForm::new(mesh, 1, coexact)?,
    })
}

fn coexact_part(mesh: &TriMesh, geom: &Geometry, curl: &[f64], tol: f64) -> Result<Vec<f64>> {
    let w = &geom.edge_weight;
    if let Some(e) = w.iter().position(|&x| !(x > 0.0)) {
        return Err(MlcError::Precondition(format!(
            "co-exact solve needs positive cotangent weights; edge {e} has {:e}",
            w[e]
        )));
    }
    let inv_w: Vec<f64> = w.iter().map(|x| 1.0 / x).collect();
    let mut rhs = curl.to_vec();
    let mean = rhs.iter().sum::<f64>() / rhs.len() as f64;
    rhs.iter_mut().for_each(|r| *r -= mean);
    let mut diag = vec![0.0; mesh.n_faces()];
    for h in 0..mesh.n_halfedges() {
        diag[mesh.face(h)] += inv_w[mesh.edge(h)];
    }
    let apply = |x: &[f64], y: &mut [f64]| {
        let t: Vec<f64> = d1_transpose(mesh, x).iter().zip(&inv_w).map(|(a, b)| a * b).collect();
        y.copy_from_slice(&d1(mesh, &t));
    };
    let phi = spd_solve_with(apply, &rhs, &CgOptions::new(tol).jacobi(&diag))?.x;
    Ok(d1_transpose(mesh, &phi).iter().zip(&inv_w).map(|(a, b)| a * b).collect())
}

/// Tree-cotree decomposition: a primal spanning tree, a dual spanning tree
/// on the remaining edges, and the `2g` edges left over.
#[derive(Debug, Clone)]
pub struct TreeCotree {
    /// Halfedge from the parent to each vertex; `usize::MAX` at the root.
    pub parent_he: Vec<usize>,
    /// Halfedge through which each face was reached in the dual tree,
    /// belonging to the parent face; `usize::MAX` at the root.
    pub parent_face_he: Vec<usize>,
    pub generators: Vec<usize>,
}

pub fn tree_cotree(mesh: &TriMesh) -> TreeCotree {
    let nv = mesh.n_vertices();
    let mut in_tree = vec![false; mesh.n_edges()];
    let mut parent_he = vec![usize::MAX; nv];
    let mut seen = vec![false; nv];
    seen[0] = true;
    let mut queue = VecDeque::from([0usize]);
    while let Some(v) = queue.pop_front() {
        for h in mesh.outgoing(v) {
            let w = mesh.head(h);
            if !seen[w] {
                seen[w] = true;
                parent_he[w] = h;
                in_tree[mesh.edge(h)] = true;
                queue.push_back(w);
            }
        }
    }

    let nf = mesh.n_faces();
    let mut in_cotree = vec![false; mesh.n_edges()];
    let mut parent_face_he = vec![usize::MAX; nf];
    let mut seen = vec![false; nf];
    seen[0] = true;
    let mut queue = VecDeque::from([0usize]);
    while let Some(f) = queue.pop_front() {
        for k in 0..3 {
            let h = 3 * f + k;
            let e = mesh.edge(h);
            if in_tree[e] {
                continue;
            }
            let g = mesh.face(mesh.twin(h));
            if !seen[g] {
                seen[g] = true;
                parent_face_he[g] = h;
                in_cotree[e] = true;
                queue.push_back(g);
            }
        }
    }

    let generators = (0..mesh.n_edges())
        .filter(|&e| !in_tree[e] && !in_cotree[e])
        .collect();
    TreeCotree {
        parent_he,
        parent_face_he,
        generators,
    }
}

impl TreeCotree {
    /// Closed primal loop through generator edge `e`, as halfedges.
    pub fn primal_cycle(&self, mesh: &TriMesh, e: usize) -> Vec<usize> {
        let h = mesh.edge_halfedge(e);
        let (a, b) = (mesh.tail(h), mesh.head(h));
        let mut down = Vec::new();
        let mut v = a;
        while self.parent_he[v] != usize::MAX {
            down.push(self.parent_he[v]);
            v = mesh.tail(self.parent_he[v]);
        }
        down.reverse();
        let mut cycle = down;
        cycle.push(h);
        let mut v = b;
        while self.parent_he[v] != usize::MAX {
            cycle.push(mesh.twin(self.parent_he[v]));
            v = mesh.tail(self.parent_he[v]);
        }
        cycle
    }

    /// Closed dual loop through generator edge `e`, as the halfedges it
    /// crosses, each taken in the face the loop is leaving.
    pub fn dual_cycle(&self, mesh: &TriMesh, e: usize) -> Vec<usize> {
        let h = mesh.edge_halfedge(e);
        // Cross from face(h) to face(twin h), then return to face(h) through
        // the dual tree.
        let climb = |mut f: usize| {
            let mut path = Vec::new();
            while self.parent_face_he[f] != usize::MAX {
                path.push(self.parent_face_he[f]);
                f = mesh.face(self.parent_face_he[f]);
            }
            path
        };
        let from_a = climb(mesh.face(h));
        let from_b = climb(mesh.face(mesh.twin(h)));
        let mut cycle = vec![h];
        // face(twin h) up to the root: each step crosses parent-ward, leaving
        // the child face through the twin of the recorded halfedge.
        cycle.extend(from_b.iter().map(|&p| mesh.twin(p)));
        // root down to face(h).
        cycle.extend(from_a.iter().rev().copied());
        cycle
    }
}

/// Closed 1-form that counts signed crossings of a dual loop.
pub fn dual_cycle_form(mesh: &TriMesh, crossings: &[usize]) -> Vec<f64> {
    let mut omega = vec![0.0; mesh.n_edges()];
    for &h in crossings {
        omega[mesh.edge(h)] += mesh.edge_sign(h);
    }
    omega
}

/// Integral of a 1-form along a chain of halfedges.
pub fn period(form: &DiscreteForm, mesh: &TriMesh, cycle: &[usize]) -> f64 {
    cycle.iter().map(|&h| form.along(mesh, h)).sum()
}

/// Primal homology generators, one halfedge loop per generator.
pub fn homology_generators(mesh: &TriMesh) -> Vec<Vec<usize>> {
    let tc = tree_cotree(mesh);
    tc.generators.iter().map(|&e| tc.primal_cycle(mesh, e)).collect()
}

/// `2g` harmonic 1-forms, orthonormal in the ⋆1 inner product.
pub fn harmonic_basis(mesh: &TriMesh, metric: &ConformalMetric, tol: f64) -> Result<Vec<DiscreteForm>> {
    let geom = metric.geometry(mesh);
    let tc = tree_cotree(mesh);
    let mut basis: Vec<DiscreteForm> = Vec::with_capacity(tc.generators.len());
    for &e in &tc.generators {
        let omega = dual_cycle_form(mesh, &tc.dual_cycle(mesh, e));
        let v = exact_potential(mesh, &geom, &omega, tol)?;
        let dv = d0(mesh, &v);
        let h: Vec<f64> = omega.iter().zip(&dv).map(|(a, b)| a - b).collect();
        let mut h = DiscreteForm::new(mesh, 1, h)?;
        let scale = inner(&h, &h, &geom).sqrt();
        // Two passes of Gram-Schmidt for stability.
        for _ in 0..2 {
            for b in &basis {
                let c = inner(&h, b, &geom);
                h = h.sub(&b.scale(c));
            }
        }
        let n = inner(&h, &h, &geom).sqrt();
        if !(n > 1e-8 * scale) {
            return Err(MlcError::Numerical(format!(
                "harmonic basis is rank deficient at generator {}",
                basis.len()
            )));
        }
        basis.push(h.scale(1.0 / n));
    }
    Ok(basis)
}

/// Max-norm of `δβ` in area-normalized form, for diagnostics.
pub fn coclosed_residual(beta: &DiscreteForm, mesh: &TriMesh, geom: &Geometry) -> f64 {
    codifferential_values(mesh, geom, beta.values())
        .iter()
        .zip(&geom.vertex_area)
        .map(|(x, m)| (x * m).abs())
        .fold(0.0, f64::max)
}
