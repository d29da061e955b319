//! Cubic differentials on meshes.
//!
//! A cubic differential is stored as one complex coefficient per vertex,
//! relative to a tangent-plane frame at that vertex: `C = c·ω³` with `ω` the
//! complex unit coframe. Frames come from intrinsic polar angles (corner
//! angles rescaled to sum to 2π) and are gauged along a spanning tree so
//! that Levi-Civita transport vanishes on tree edges.

use std::collections::VecDeque;
use std::f64::consts::PI;

use num_complex::Complex64;

use crate::dec::{spd_solve_with, CgOptions, ConformalMetric, DiscreteForm, Geometry};
use crate::error::{MlcError, Result};
use crate::mesh::TriMesh;

/// Angles that frames were built from may drift by this much before a
/// metric is considered different.
const FRAME_ANGLE_TOL: f64 = 1e-9;

#[derive(Debug, Clone)]
pub struct VertexFrames {
    corner_angle: Vec<f64>,
    /// Direction of outgoing halfedge `h` in the frame of its tail.
    direction: Vec<f64>,
    /// Rotation from the tail frame to the head frame along `h`, in `(−π, π]`.
    transport: Vec<f64>,
}

pub(crate) fn wrap_angle(a: f64) -> f64 {
    let t = a.rem_euclid(2.0 * PI);
    if t > PI {
        t - 2.0 * PI
    } else {
        t
    }
}

impl VertexFrames {
    pub fn new(mesh: &TriMesh, geom: &Geometry) -> Self {
        let nh = mesh.n_halfedges();
        // Polar angle of each outgoing halfedge, measured from vertex_halfedge.
        let mut polar = vec![0.0; nh];
        for v in 0..mesh.n_vertices() {
            let scale = 2.0 * PI / geom.angle_sum[v];
            let mut acc = 0.0;
            for h in mesh.outgoing(v) {
                polar[h] = acc;
                acc += scale * geom.corner_angle[h];
            }
        }

        let nv = mesh.n_vertices();
        let mut offset = vec![f64::NAN; nv];
        for root in 0..nv {
            if !offset[root].is_nan() {
                continue;
            }
            offset[root] = 0.0;
            let mut queue = VecDeque::from([root]);
            while let Some(i) = queue.pop_front() {
                for h in mesh.outgoing(i) {
                    let j = mesh.head(h);
                    if offset[j].is_nan() {
                        offset[j] = offset[i] + polar[mesh.twin(h)] + PI - polar[h];
                        queue.push_back(j);
                    }
                }
            }
        }

        let direction: Vec<f64> = (0..nh).map(|h| wrap_angle(polar[h] - offset[mesh.tail(h)])).collect();
        let transport = (0..nh)
            .map(|h| wrap_angle(direction[mesh.twin(h)] + PI - direction[h]))
            .collect();
        VertexFrames {
            corner_angle: geom.corner_angle.clone(),
            direction,
            transport,
        }
    }

    pub fn direction(&self, h: usize) -> f64 {
        self.direction[h]
    }

    pub fn transport(&self, h: usize) -> f64 {
        self.transport[h]
    }

    /// Net rotation of the transport around face `f`, in `(−π, π]`.
    pub fn face_holonomy(&self, f: usize) -> f64 {
        wrap_angle((0..3).map(|k| self.transport[3 * f + k]).sum())
    }

    /// Errors unless `geom` has the angles the frames were built from.
    pub fn check_matches(&self, geom: &Geometry) -> Result<()> {
        let worst = self
            .corner_angle
            .iter()
            .zip(&geom.corner_angle)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        if self.corner_angle.len() != geom.corner_angle.len() || worst > FRAME_ANGLE_TOL {
            return Err(MlcError::Precondition(format!(
                "cubic field frames were built for different angles (deviation {worst:e})"
            )));
        }
        Ok(())
    }
}

/// Per-vertex coefficients of a cubic differential with their frames.
#[derive(Debug, Clone)]
pub struct CubicField {
    coeff: Vec<Complex64>,
    frames: VertexFrames,
}

impl CubicField {
    /// Coefficients are taken relative to frames built from `metric`.
    pub fn new(mesh: &TriMesh, metric: &ConformalMetric, coeff: Vec<Complex64>) -> Result<Self> {
        if coeff.len() != mesh.n_vertices() {
            return Err(MlcError::DimensionMismatch {
                what: "cubic coefficients",
                got: coeff.len(),
                expected: mesh.n_vertices(),
            });
        }
        let frames = VertexFrames::new(mesh, &metric.geometry(mesh));
        Ok(CubicField { coeff, frames })
    }

    pub fn zeros(mesh: &TriMesh, metric: &ConformalMetric) -> Self {
        CubicField {
            coeff: vec![Complex64::new(0.0, 0.0); mesh.n_vertices()],
            frames: VertexFrames::new(mesh, &metric.geometry(mesh)),
        }
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeff
    }

    pub fn frames(&self) -> &VertexFrames {
        &self.frames
    }

    pub fn with_coeffs(&self, coeff: Vec<Complex64>) -> Self {
        assert_eq!(coeff.len(), self.coeff.len());
        CubicField {
            coeff,
            frames: self.frames.clone(),
        }
    }

    pub fn scale(&self, s: f64) -> Self {
        self.with_coeffs(self.coeff.iter().map(|c| c * s).collect())
    }

    /// Rows `id,re,im` with a header line.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("id,re,im\n");
        for (i, c) in self.coeff.iter().enumerate() {
            out.push_str(&format!("{i},{:?},{:?}\n", c.re, c.im));
        }
        out
    }
}

/// Pointwise `|C|²` for `g = e^{2u} g₀` with coefficients stored in the
/// background frames: `|c|² e^{−6u}`.
pub fn norm_sq(field: &CubicField, metric: &ConformalMetric) -> DiscreteForm {
    let values: Vec<f64> = field
        .coeff
        .iter()
        .zip(metric.u())
        .map(|(c, u)| c.norm_sqr() * (-6.0 * u).exp())
        .collect();
    DiscreteForm::from_raw(0, values)
}

/// `‖C‖² = Σ |C|² · dual area` in the metric.
pub fn total_norm_sq(field: &CubicField, mesh: &TriMesh, metric: &ConformalMetric) -> f64 {
    let geom = metric.geometry(mesh);
    norm_sq(field, metric)
        .values()
        .iter()
        .zip(&geom.vertex_area)
        .map(|(a, m)| a * m)
        .sum()
}

/// Transport angles this small are roundoff of a vanishing rotation.
const ROTATION_ROUNDOFF: f64 = 1e-13;

fn snap_rotation(a: f64) -> f64 {
    if a.abs() <= ROTATION_ROUNDOFF {
        0.0
    } else {
        a
    }
}

/// Least-squares one-ring stencil: row `i` of the residual operator
/// `c ↦ ∂̄c − B c`, where `∂̄c` is the antilinear part of the transported
/// differences and `B = β(e₁) + iβ(e₂)` is the fitted 1-form.
#[derive(Debug, Clone)]
pub(crate) struct ResidualOperator {
    rows: Vec<Vec<(usize, Complex64)>>,
    /// Same rows as `(neighbour, weight, transport)` plus the 1-form term,
    /// applied in difference form so parallel fields cancel exactly.
    stencils: Vec<(Vec<(usize, Complex64, Complex64)>, Complex64)>,
}

impl ResidualOperator {
    fn build(mesh: &TriMesh, frames: &VertexFrames, lengths: &[f64], beta: Option<&DiscreteForm>) -> Result<Self> {
        let mut rows = Vec::with_capacity(mesh.n_vertices());
        let mut stencils = Vec::with_capacity(mesh.n_vertices());
        for i in 0..mesh.n_vertices() {
            let ring: Vec<usize> = mesh.outgoing(i).collect();
            let z: Vec<Complex64> = ring
                .iter()
                .map(|&h| Complex64::from_polar(lengths[mesh.edge(h)], frames.direction[h]))
                .collect();
            let s0: f64 = z.iter().map(|z| z.norm_sqr()).sum();
            let s2: Complex64 = z.iter().map(|z| z * z).sum();
            let det = s0 * s0 - s2.norm_sqr();
            if !(det > 1e-12 * s0 * s0) {
                return Err(MlcError::Numerical(format!("one-ring fit at vertex {i} is rank deficient")));
            }
            let b = match beta {
                Some(beta) => fit_one_form(i, &ring, &z, beta, mesh)?,
                None => Complex64::new(0.0, 0.0),
            };
            let mut row = Vec::with_capacity(ring.len() + 1);
            let mut stencil = Vec::with_capacity(ring.len());
            let mut diag = -b;
            for (k, &h) in ring.iter().enumerate() {
                let w = (z[k] * s0 - z[k].conj() * s2) / det;
                let t = Complex64::from_polar(1.0, 3.0 * snap_rotation(frames.transport[h]));
                row.push((mesh.head(h), w * t));
                stencil.push((mesh.head(h), w, t));
                diag -= w;
            }
            row.push((i, diag));
            rows.push(row);
            stencils.push((stencil, b));
        }
        Ok(ResidualOperator { rows, stencils })
    }

    fn apply(&self, c: &[Complex64]) -> Vec<Complex64> {
        self.stencils
            .iter()
            .enumerate()
            .map(|(i, (stencil, b))| {
                stencil.iter().map(|&(j, w, t)| w * (t * c[j] - c[i])).sum::<Complex64>() - b * c[i]
            })
            .collect()
    }

    fn apply_adjoint(&self, r: &[Complex64], out: &mut [Complex64]) {
        out.iter_mut().for_each(|x| *x = Complex64::new(0.0, 0.0));
        for (i, row) in self.rows.iter().enumerate() {
            for &(j, w) in row {
                out[j] += w.conj() * r[i];
            }
        }
    }
}

/// Real least-squares fit `β(e) ≈ p x + q y` over the one-ring edge vectors,
/// returned as `p + iq`.
fn fit_one_form(i: usize, ring: &[usize], z: &[Complex64], beta: &DiscreteForm, mesh: &TriMesh) -> Result<Complex64> {
    let (mut sxx, mut sxy, mut syy, mut bx, mut by) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (k, &h) in ring.iter().enumerate() {
        let (x, y) = (z[k].re, z[k].im);
        let b = beta.along(mesh, h);
        sxx += x * x;
        sxy += x * y;
        syy += y * y;
        bx += b * x;
        by += b * y;
    }
    let det = sxx * syy - sxy * sxy;
    if !(det > 1e-12 * (sxx + syy).powi(2)) {
        return Err(MlcError::Numerical(format!("1-form fit at vertex {i} is rank deficient")));
    }
    Ok(Complex64::new((syy * bx - sxy * by) / det, (sxx * by - sxy * bx) / det))
}

/// Per-vertex residual of `∂̄C − (β − i⋆β)⊗C` in background-frame components.
///
/// The metric must have the angles of the frames (a constant conformal
/// factor is allowed).
pub fn dbar_residual(
    field: &CubicField,
    beta: &DiscreteForm,
    mesh: &TriMesh,
    metric: &ConformalMetric,
) -> Result<Vec<Complex64>> {
    beta.check(mesh, 1)?;
    let geom = metric.geometry(mesh);
    field.frames.check_matches(&geom)?;
    let op = ResidualOperator::build(mesh, &field.frames, metric.lengths(), Some(beta))?;
    let u = metric.u();
    let cg: Vec<Complex64> = field
        .coeff
        .iter()
        .zip(u)
        .map(|(c, u)| c * (-3.0 * u).exp())
        .collect();
    Ok(op
        .apply(&cg)
        .into_iter()
        .zip(u)
        .map(|(r, u)| r * (4.0 * u).exp())
        .collect())
}

/// `Σ |r|² · dual area / Σ |c|² · dual area`.
pub fn residual_ratio(
    field: &CubicField,
    beta: &DiscreteForm,
    mesh: &TriMesh,
    metric: &ConformalMetric,
) -> Result<f64> {
    let r = dbar_residual(field, beta, mesh, metric)?;
    let geom = metric.geometry(mesh);
    let num: f64 = r.iter().zip(&geom.vertex_area).map(|(r, m)| r.norm_sqr() * m).sum();
    let den: f64 = field.coeff.iter().zip(&geom.vertex_area).map(|(c, m)| c.norm_sqr() * m).sum();
    Ok(num / den)
}

#[derive(Debug, Clone)]
pub struct ProjectionOptions {
    /// Relative tolerance of the inner linear solves.
    pub tol: f64,
    pub max_outer: usize,
    /// Shift relative to the mean diagonal of the normal operator.
    pub shift: f64,
    /// Largest accepted Rayleigh quotient `Σ|r|²M / Σ|c|²M`.
    pub threshold: f64,
}

impl Default for ProjectionOptions {
    fn default() -> Self {
        ProjectionOptions {
            tol: 1e-10,
            max_outer: 50,
            shift: 1e-8,
            threshold: 1.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Projection {
    /// Unit-norm minimizer, or the zero field when `accepted` is false.
    pub field: CubicField,
    pub rayleigh: f64,
    pub accepted: bool,
    pub iterations: usize,
}

/// Minimizes `Σ |dbar_residual|² · dual area` over unit-norm coefficient
/// fields by shifted inverse iteration started from `initial`.
pub fn project_conformally_holomorphic(
    initial: &CubicField,
    beta: &DiscreteForm,
    mesh: &TriMesh,
    metric: &ConformalMetric,
    opts: &ProjectionOptions,
) -> Result<Projection> {
    beta.check(mesh, 1)?;
    let geom = metric.geometry(mesh);
    initial.frames.check_matches(&geom)?;
    let op = ResidualOperator::build(mesh, &initial.frames, metric.lengths(), Some(beta))?;
    let mass = &geom.vertex_area;
    let n = mesh.n_vertices();
    let u = metric.u();

    let mut diag = vec![0.0; n];
    for (i, row) in op.rows.iter().enumerate() {
        for &(j, w) in row {
            diag[j] += mass[i] * w.norm_sqr();
        }
    }
    let scale = diag.iter().sum::<f64>() / mass.iter().sum::<f64>();
    let sigma = opts.shift * scale;

    let normal_apply = |x: &[Complex64], out: &mut [Complex64]| {
        let r: Vec<Complex64> = op.apply(x).iter().zip(mass).map(|(r, m)| r * m).collect();
        op.apply_adjoint(&r, out);
    };
    let m_norm = |x: &[Complex64]| x.iter().zip(mass).map(|(c, m)| c.norm_sqr() * m).sum::<f64>().sqrt();
    let rayleigh = |x: &[Complex64]| {
        let r = op.apply(x);
        r.iter().zip(mass).map(|(r, m)| r.norm_sqr() * m).sum::<f64>() / m_norm(x).powi(2)
    };

    let mut x: Vec<Complex64> = initial.coeff.iter().zip(u).map(|(c, u)| c * (-3.0 * u).exp()).collect();
    let nx = m_norm(&x);
    if !(nx > 0.0) {
        return Err(MlcError::InvalidArgument("projection needs a nonzero initial field".into()));
    }
    x.iter_mut().for_each(|c| *c /= nx);
    let mut rq = rayleigh(&x);
    let mut iterations = 0;

    let shifted = |v: &[f64], out: &mut [f64]| {
        let xc = to_complex(v);
        let mut y = vec![Complex64::new(0.0, 0.0); n];
        normal_apply(&xc, &mut y);
        for i in 0..n {
            y[i] += xc[i] * (sigma * mass[i]);
        }
        from_complex_into(&y, out);
    };
    let mut pdiag = Vec::with_capacity(2 * n);
    for i in 0..n {
        let d = diag[i] + sigma * mass[i];
        pdiag.push(d);
        pdiag.push(d);
    }

    for it in 0..opts.max_outer {
        iterations = it + 1;
        let rhs: Vec<Complex64> = x.iter().zip(mass).map(|(c, m)| c * m).collect();
        let mut rhs_real = vec![0.0; 2 * n];
        from_complex_into(&rhs, &mut rhs_real);
        let start = {
            let mut s = vec![0.0; 2 * n];
            let guess: Vec<Complex64> = x.iter().map(|c| c / (rq + sigma)).collect();
            from_complex_into(&guess, &mut s);
            s
        };
        let solved = spd_solve_with(
            shifted,
            &rhs_real,
            &CgOptions::new(opts.tol).jacobi(&pdiag).start(start),
        )?;
        let mut y = to_complex(&solved.x);
        let ny = m_norm(&y);
        y.iter_mut().for_each(|c| *c /= ny);
        let rq_new = rayleigh(&y);
        let change = (rq_new - rq).abs();
        x = y;
        rq = rq_new;
        if change <= 1e-12 * rq.max(1e-300) + 1e-15 * scale {
            break;
        }
    }

    let accepted = rq <= opts.threshold;
    let coeff = if accepted {
        x.iter().zip(u).map(|(c, u)| c * (3.0 * u).exp()).collect()
    } else {
        vec![Complex64::new(0.0, 0.0); n]
    };
    Ok(Projection {
        field: initial.with_coeffs(coeff),
        rayleigh: rq,
        accepted,
        iterations,
    })
}

fn to_complex(v: &[f64]) -> Vec<Complex64> {
    v.chunks_exact(2).map(|p| Complex64::new(p[0], p[1])).collect()
}

fn from_complex_into(c: &[Complex64], out: &mut [f64]) {
    for (i, z) in c.iter().enumerate() {
        out[2 * i] = z.re;
        out[2 * i + 1] = z.im;
    }
}

/// Dense residual matrix, row-major, for small meshes and diagnostics.
pub fn residual_matrix(
    field: &CubicField,
    beta: &DiscreteForm,
    mesh: &TriMesh,
    metric: &ConformalMetric,
) -> Result<Vec<Vec<Complex64>>> {
    let geom = metric.geometry(mesh);
    field.frames.check_matches(&geom)?;
    let op = ResidualOperator::build(mesh, &field.frames, metric.lengths(), Some(beta))?;
    let n = mesh.n_vertices();
    let mut dense = vec![vec![Complex64::new(0.0, 0.0); n]; n];
    for (i, row) in op.rows.iter().enumerate() {
        for &(j, w) in row {
            dense[i][j] += w;
        }
    }
    Ok(dense)
}
