use crate::error::{MlcError, Result};

#[derive(Debug, Clone)]
pub struct CgOptions {
    /// Target relative residual `‖b − Ax‖ / ‖b‖`.
    pub tol: f64,
    pub max_iter: usize,
    /// Inverse diagonal for Jacobi preconditioning.
    pub inv_diag: Option<Vec<f64>>,
    /// Initial guess; zero when absent.
    pub x0: Option<Vec<f64>>,
}

impl CgOptions {
    pub fn new(tol: f64) -> Self {
        CgOptions {
            tol,
            max_iter: 0,
            inv_diag: None,
            x0: None,
        }
    }

    pub fn jacobi(mut self, diag: &[f64]) -> Self {
        self.inv_diag = Some(diag.iter().map(|&d| if d > 0.0 { 1.0 / d } else { 1.0 }).collect());
        self
    }

    pub fn max_iter(mut self, n: usize) -> Self {
        self.max_iter = n;
        self
    }

    pub fn start(mut self, x0: Vec<f64>) -> Self {
        self.x0 = Some(x0);
        self
    }
}

#[derive(Debug, Clone)]
pub struct CgOutcome {
    pub x: Vec<f64>,
    pub iterations: usize,
    pub residual: f64,
    /// Relative residual after each iteration, starting with the initial one.
    pub history: Vec<f64>,
}

/// Conjugate gradients with default options.
pub fn spd_solve<F>(apply: F, rhs: &[f64], tol: f64) -> Result<Vec<f64>>
where
    F: Fn(&[f64], &mut [f64]),
{
    spd_solve_with(apply, rhs, &CgOptions::new(tol)).map(|o| o.x)
}

/// Preconditioned conjugate gradients for a symmetric positive
/// (semi)definite operator given as `apply(x, y)` writing `y = A x`.
///
/// Fails with [`MlcError::NoConvergence`] when the iteration cap is hit and
/// with [`MlcError::Numerical`] when a search direction has non-positive
/// curvature.
pub fn spd_solve_with<F>(apply: F, rhs: &[f64], opts: &CgOptions) -> Result<CgOutcome>
where
    F: Fn(&[f64], &mut [f64]),
{
    let n = rhs.len();
    if !(opts.tol > 0.0) {
        return Err(MlcError::InvalidArgument("solver tolerance must be positive".into()));
    }
    let max_iter = if opts.max_iter == 0 { 10 * n + 100 } else { opts.max_iter };
    let bnorm = norm(rhs);
    let mut x = opts.x0.clone().unwrap_or_else(|| vec![0.0; n]);
    if x.len() != n {
        return Err(MlcError::DimensionMismatch {
            what: "initial guess",
            got: x.len(),
            expected: n,
        });
    }
    if bnorm == 0.0 {
        return Ok(CgOutcome {
            x: vec![0.0; n],
            iterations: 0,
            residual: 0.0,
            history: vec![0.0],
        });
    }

    let precondition = |r: &[f64], z: &mut [f64]| match &opts.inv_diag {
        Some(m) => z.iter_mut().zip(r).zip(m).for_each(|((z, r), m)| *z = r * m),
        None => z.copy_from_slice(r),
    };

    let mut ap = vec![0.0; n];
    apply(&x, &mut ap);
    let mut r: Vec<f64> = rhs.iter().zip(&ap).map(|(b, a)| b - a).collect();
    let mut z = vec![0.0; n];
    precondition(&r, &mut z);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut rel = norm(&r) / bnorm;
    let mut history = vec![rel];

    let mut it = 0;
    while rel > opts.tol {
        if it == max_iter {
            return Err(MlcError::NoConvergence {
                iterations: it,
                residual: rel,
                history,
            });
        }
        apply(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return Err(MlcError::Numerical(format!(
                "operator is not positive definite (pᵀAp = {pap:e} at iteration {it})"
            )));
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        precondition(&r, &mut z);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
        it += 1;
        rel = norm(&r) / bnorm;
        history.push(rel);
    }

    // Guard against drift between the recursive and the true residual.
    apply(&x, &mut ap);
    let true_rel = norm(&rhs.iter().zip(&ap).map(|(b, a)| b - a).collect::<Vec<_>>()) / bnorm;
    if true_rel > 10.0 * opts.tol && opts.x0.is_none() {
        let restart = CgOptions {
            x0: Some(x),
            ..opts.clone()
        };
        return spd_solve_with(apply, rhs, &restart);
    }
    Ok(CgOutcome {
        x,
        iterations: it,
        residual: true_rel.max(rel),
        history,
    })
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}
