//! Discrete exterior calculus on triangle meshes.
//!
//! Primal forms live on vertices, oriented edges and faces. The diagonal
//! Hodge stars use barycentric dual areas on vertices, half-cotangent weights
//! on edges and inverse face areas on faces.

mod cg;
mod sparse;

pub use cg::{spd_solve, spd_solve_with, CgOptions, CgOutcome};
pub use sparse::CsrMatrix;

use std::f64::consts::PI;

use crate::error::{MlcError, Result};
use crate::mesh::{face_lengths, EdgeLengthMetric, TriMesh};

/// Values of a `k`-form on the `k`-simplices of a mesh, or on their duals
/// after a Hodge star.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteForm {
    degree: usize,
    dual: bool,
    values: Vec<f64>,
}

pub(crate) fn simplex_count(mesh: &TriMesh, degree: usize) -> usize {
    match degree {
        0 => mesh.n_vertices(),
        1 => mesh.n_edges(),
        _ => mesh.n_faces(),
    }
}

impl DiscreteForm {
    pub fn new(mesh: &TriMesh, degree: usize, values: Vec<f64>) -> Result<Self> {
        if degree > 2 {
            return Err(MlcError::InvalidArgument(format!("form degree {degree} on a surface")));
        }
        let expected = simplex_count(mesh, degree);
        if values.len() != expected {
            return Err(MlcError::DimensionMismatch {
                what: "form values",
                got: values.len(),
                expected,
            });
        }
        Ok(DiscreteForm {
            degree,
            dual: false,
            values,
        })
    }

    pub(crate) fn from_raw(degree: usize, values: Vec<f64>) -> Self {
        DiscreteForm {
            degree,
            dual: false,
            values,
        }
    }

    pub fn zeros(mesh: &TriMesh, degree: usize) -> Self {
        DiscreteForm {
            degree: degree.min(2),
            dual: false,
            values: vec![0.0; simplex_count(mesh, degree.min(2))],
        }
    }

    /// 0-form sampled from a function of the vertex index.
    pub fn from_vertices(mesh: &TriMesh, f: impl Fn(usize) -> f64) -> Self {
        DiscreteForm {
            degree: 0,
            dual: false,
            values: (0..mesh.n_vertices()).map(f).collect(),
        }
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    /// True for the output of a Hodge star, whose values sit on dual cells.
    pub fn is_dual(&self) -> bool {
        self.dual
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Value of a 1-form along halfedge `h`, negated against the edge
    /// orientation.
    pub fn along(&self, mesh: &TriMesh, h: usize) -> f64 {
        mesh.edge_sign(h) * self.values[mesh.edge(h)]
    }

    pub fn check(&self, mesh: &TriMesh, degree: usize) -> Result<()> {
        if self.degree != degree || self.dual {
            return Err(MlcError::InvalidArgument(format!(
                "expected a primal {degree}-form, got degree {}{}",
                self.degree,
                if self.dual { " (dual)" } else { "" }
            )));
        }
        let expected = simplex_count(mesh, degree);
        if self.values.len() != expected {
            return Err(MlcError::DimensionMismatch {
                what: "form values",
                got: self.values.len(),
                expected,
            });
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Self {
        self.zip(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.zip(other, |a, b| a - b)
    }

    pub fn scale(&self, s: f64) -> Self {
        DiscreteForm {
            values: self.values.iter().map(|v| v * s).collect(),
            ..self.clone()
        }
    }

    fn zip(&self, other: &Self, op: impl Fn(f64, f64) -> f64) -> Self {
        assert_eq!(self.degree, other.degree, "form degree mismatch");
        assert_eq!(self.values.len(), other.values.len(), "form length mismatch");
        DiscreteForm {
            degree: self.degree,
            dual: self.dual,
            values: self.values.iter().zip(&other.values).map(|(a, b)| op(*a, *b)).collect(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Rows `id,value` with a header line.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("id,value\n");
        for (i, v) in self.values.iter().enumerate() {
            out.push_str(&format!("{i},{v:?}\n"));
        }
        out
    }
}

/// Background edge lengths rescaled by a vertex conformal factor `u`:
/// `ℓ'_ij = ℓ_ij · exp((u_i + u_j) / 2)`.
#[derive(Debug, Clone)]
pub struct ConformalMetric {
    background: EdgeLengthMetric,
    u: Vec<f64>,
    lengths: Vec<f64>,
}

impl ConformalMetric {
    pub fn new(mesh: &TriMesh, background: EdgeLengthMetric, u: Vec<f64>) -> Result<Self> {
        if u.len() != mesh.n_vertices() {
            return Err(MlcError::DimensionMismatch {
                what: "conformal factor",
                got: u.len(),
                expected: mesh.n_vertices(),
            });
        }
        if u.iter().any(|x| !x.is_finite()) {
            return Err(MlcError::InvalidArgument("conformal factor is not finite".into()));
        }
        let lengths: Vec<f64> = mesh
            .edges()
            .iter()
            .enumerate()
            .map(|(e, &[a, b])| background.length(e) * (0.5 * (u[a] + u[b])).exp())
            .collect();
        for f in 0..mesh.n_faces() {
            let [a, b, c] = face_lengths(mesh, &lengths, f);
            if !(a < b + c && b < a + c && c < a + b) {
                return Err(MlcError::DegenerateFace {
                    face: f,
                    reason: format!("conformal factor breaks the triangle inequality ({a}, {b}, {c})"),
                });
            }
        }
        Ok(ConformalMetric {
            background,
            u,
            lengths,
        })
    }

    /// The background metric itself (`u ≡ 0`).
    pub fn flat(mesh: &TriMesh, background: EdgeLengthMetric) -> Self {
        let u = vec![0.0; mesh.n_vertices()];
        let lengths = background.lengths().to_vec();
        ConformalMetric {
            background,
            u,
            lengths,
        }
    }

    pub fn with_factor(&self, mesh: &TriMesh, u: Vec<f64>) -> Result<Self> {
        Self::new(mesh, self.background.clone(), u)
    }

    pub fn background(&self) -> &EdgeLengthMetric {
        &self.background
    }

    pub fn u(&self) -> &[f64] {
        &self.u
    }

    pub fn lengths(&self) -> &[f64] {
        &self.lengths
    }

    pub fn geometry(&self, mesh: &TriMesh) -> Geometry {
        Geometry::new(mesh, &self.lengths)
    }
}

/// Per-simplex measurements of a metric.
#[derive(Debug, Clone)]
pub struct Geometry {
    /// Face areas.
    pub face_area: Vec<f64>,
    /// Interior angle at corner `k` of face `f`, stored at `3f + k`.
    pub corner_angle: Vec<f64>,
    /// Cotangent of the angle opposite halfedge `h`.
    pub cot_opposite: Vec<f64>,
    /// `½(cot α + cot β)` per edge.
    pub edge_weight: Vec<f64>,
    /// Barycentric dual area per vertex.
    pub vertex_area: Vec<f64>,
    /// Sum of corner angles per vertex.
    pub angle_sum: Vec<f64>,
}

impl Geometry {
    pub fn new(mesh: &TriMesh, lengths: &[f64]) -> Self {
        let nf = mesh.n_faces();
        let mut face_area = Vec::with_capacity(nf);
        let mut corner_angle = vec![0.0; 3 * nf];
        let mut cot_opposite = vec![0.0; 3 * nf];
        let mut edge_weight = vec![0.0; mesh.n_edges()];
        let mut vertex_area = vec![0.0; mesh.n_vertices()];
        let mut angle_sum = vec![0.0; mesh.n_vertices()];
        for f in 0..nf {
            let l = face_lengths(mesh, lengths, f);
            let area = heron(l[0], l[1], l[2]);
            face_area.push(area);
            for k in 0..3 {
                // Corner k sits between halfedges k and k+2; it faces k+1.
                let (a, b, c) = (l[(k + 1) % 3], l[k], l[(k + 2) % 3]);
                let num = b * b + c * c - a * a;
                let angle = (4.0 * area).atan2(num);
                let cot = num / (4.0 * area);
                corner_angle[3 * f + k] = angle;
                let h = 3 * f + (k + 1) % 3;
                cot_opposite[h] = cot;
                edge_weight[mesh.edge(h)] += 0.5 * cot;
                let v = mesh.faces()[f][k];
                angle_sum[v] += angle;
                vertex_area[v] += area / 3.0;
            }
        }
        Geometry {
            face_area,
            corner_angle,
            cot_opposite,
            edge_weight,
            vertex_area,
            angle_sum,
        }
    }

    pub fn total_area(&self) -> f64 {
        self.face_area.iter().sum()
    }

    pub fn angle_defect(&self, v: usize) -> f64 {
        2.0 * PI - self.angle_sum[v]
    }

    pub fn min_edge_weight(&self) -> f64 {
        self.edge_weight.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// Triangle area from side lengths, in the cancellation-safe ordering.
pub fn heron(a: f64, b: f64, c: f64) -> f64 {
    let mut s = [a, b, c];
    s.sort_by(|x, y| y.total_cmp(x));
    let [a, b, c] = s;
    let p = (a + (b + c)) * (c - (a - b)) * (c + (a - b)) * (a + (b - c));
    0.25 * p.max(0.0).sqrt()
}

/// Exterior derivative of a 0- or 1-form.
pub fn d(form: &DiscreteForm, mesh: &TriMesh) -> Result<DiscreteForm> {
    if form.dual {
        return Err(MlcError::InvalidArgument("d acts on primal forms".into()));
    }
    match form.degree {
        0 => {
            form.check(mesh, 0)?;
            Ok(DiscreteForm {
                degree: 1,
                dual: false,
                values: d0(mesh, &form.values),
            })
        }
        1 => {
            form.check(mesh, 1)?;
            Ok(DiscreteForm {
                degree: 2,
                dual: false,
                values: d1(mesh, &form.values),
            })
        }
        k => Err(MlcError::InvalidArgument(format!("d of a {k}-form vanishes on a surface"))),
    }
}

pub(crate) fn d0(mesh: &TriMesh, u: &[f64]) -> Vec<f64> {
    mesh.edges().iter().map(|&[a, b]| u[b] - u[a]).collect()
}

/// Transpose of `d0`: signed sum of edge values at each vertex.
pub(crate) fn d0_transpose(mesh: &TriMesh, w: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; mesh.n_vertices()];
    for (e, &[a, b]) in mesh.edges().iter().enumerate() {
        out[a] -= w[e];
        out[b] += w[e];
    }
    out
}

pub(crate) fn d1(mesh: &TriMesh, beta: &[f64]) -> Vec<f64> {
    (0..mesh.n_faces())
        .map(|f| (0..3).map(|k| mesh.edge_sign(3 * f + k) * beta[mesh.edge(3 * f + k)]).sum())
        .collect()
}

pub(crate) fn d1_transpose(mesh: &TriMesh, phi: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; mesh.n_edges()];
    for h in 0..mesh.n_halfedges() {
        out[mesh.edge(h)] += mesh.edge_sign(h) * phi[mesh.face(h)];
    }
    out
}

/// Diagonal Hodge star; the result carries values on dual cells.
pub fn hodge_star(form: &DiscreteForm, mesh: &TriMesh, metric: &ConformalMetric) -> Result<DiscreteForm> {
    let geom = metric.geometry(mesh);
    let weights = star_weights(&geom, form.degree);
    form.check(mesh, form.degree)?;
    if form.degree == 2 && geom.face_area.iter().any(|&a| a <= 0.0) {
        return Err(MlcError::Numerical("zero face area in the 2-form star".into()));
    }
    Ok(DiscreteForm {
        degree: 2 - form.degree,
        dual: true,
        values: form.values.iter().zip(&weights).map(|(v, w)| v * w).collect(),
    })
}

/// Diagonal of the Hodge star on `degree`-forms.
pub fn star_weights(geom: &Geometry, degree: usize) -> Vec<f64> {
    match degree {
        0 => geom.vertex_area.clone(),
        1 => geom.edge_weight.clone(),
        _ => geom.face_area.iter().map(|a| 1.0 / a).collect(),
    }
}

/// `⟨a, b⟩ = Σ a_i ⋆_i b_i` for primal forms of equal degree.
pub fn inner(a: &DiscreteForm, b: &DiscreteForm, geom: &Geometry) -> f64 {
    assert_eq!(a.degree, b.degree, "inner product of forms of different degree");
    let w = star_weights(geom, a.degree);
    a.values
        .iter()
        .zip(&b.values)
        .zip(&w)
        .map(|((x, y), w)| x * y * w)
        .sum()
}

/// Codifferential of a 1-form, the adjoint of `d` for the star inner
/// products: `δβ = ⋆0⁻¹ d0ᵀ ⋆1 β`.
pub fn codifferential(beta: &DiscreteForm, mesh: &TriMesh, metric: &ConformalMetric) -> Result<DiscreteForm> {
    beta.check(mesh, 1)?;
    let geom = metric.geometry(mesh);
    Ok(DiscreteForm {
        degree: 0,
        dual: false,
        values: codifferential_values(mesh, &geom, &beta.values),
    })
}

pub(crate) fn codifferential_values(mesh: &TriMesh, geom: &Geometry, beta: &[f64]) -> Vec<f64> {
    let wb: Vec<f64> = beta.iter().zip(&geom.edge_weight).map(|(b, w)| b * w).collect();
    d0_transpose(mesh, &wb)
        .into_iter()
        .zip(&geom.vertex_area)
        .map(|(x, m)| x / m)
        .collect()
}

/// `Δu = −δ d u`, so `−Δ` is positive semidefinite.
pub fn laplacian(u: &DiscreteForm, mesh: &TriMesh, metric: &ConformalMetric) -> Result<DiscreteForm> {
    u.check(mesh, 0)?;
    let geom = metric.geometry(mesh);
    let du = d0(mesh, &u.values);
    let values = codifferential_values(mesh, &geom, &du).into_iter().map(|x| -x).collect();
    Ok(DiscreteForm {
        degree: 0,
        dual: false,
        values,
    })
}

/// Angle defect divided by dual area.
pub fn gauss_curvature(mesh: &TriMesh, metric: &ConformalMetric) -> DiscreteForm {
    let geom = metric.geometry(mesh);
    DiscreteForm {
        degree: 0,
        dual: false,
        values: (0..mesh.n_vertices())
            .map(|v| geom.angle_defect(v) / geom.vertex_area[v])
            .collect(),
    }
}

/// Cotangent stiffness matrix `d0ᵀ ⋆1 d0`.
pub fn stiffness_matrix(mesh: &TriMesh, geom: &Geometry) -> CsrMatrix {
    let mut triplets = Vec::with_capacity(4 * mesh.n_edges());
    for (e, &[a, b]) in mesh.edges().iter().enumerate() {
        let w = geom.edge_weight[e];
        triplets.push((a, a, w));
        triplets.push((b, b, w));
        triplets.push((a, b, -w));
        triplets.push((b, a, -w));
    }
    CsrMatrix::from_triplets(mesh.n_vertices(), mesh.n_vertices(), triplets)
}

/// Area-weighted mean of a 0-form.
pub fn weighted_mean(values: &[f64], geom: &Geometry) -> f64 {
    let total: f64 = geom.vertex_area.iter().sum();
    values.iter().zip(&geom.vertex_area).map(|(v, m)| v * m).sum::<f64>() / total
}
