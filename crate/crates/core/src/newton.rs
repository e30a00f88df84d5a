//! Damped Gauss–Newton with a pseudo-inverse step.
//!
//! The minimum-norm step moves a seed to the nearest point of a solution
//! manifold, so degenerate zero sets (circles, open regions) need no special
//! treatment.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonOptions {
    pub max_iter: usize,
    /// Stop once the residual norm is below this.
    pub tol: f64,
    /// Relative central-difference step for the Jacobian.
    pub fd_step: f64,
    /// Singular values below `rcond * sigma_max` are dropped.
    pub rcond: f64,
    pub max_backtracks: usize,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        NewtonOptions {
            max_iter: 30,
            tol: 1e-10,
            fd_step: 1e-6,
            rcond: 1e-8,
            max_backtracks: 12,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NewtonOutcome {
    pub x: Vec<f64>,
    pub residual: Vec<f64>,
    pub norm: f64,
    pub iterations: usize,
    pub converged: bool,
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

/// Solve `r(x) = 0` for `r: R^n -> R^m`.
///
/// `eval(points, k)` receives `k` stacked points of length `n` and returns the
/// `k` stacked residuals of length `m`; the stencil of each Jacobian is passed
/// in one call so evaluators can share work between its points.
pub fn solve<F>(eval: F, x0: &[f64], m: usize, opts: &NewtonOptions) -> Result<NewtonOutcome>
where
    F: Fn(&[f64], usize) -> Result<Vec<f64>>,
{
    let n = x0.len();
    let mut x = x0.to_vec();
    let mut r = eval(&x, 1)?;
    if r.len() != m {
        return Err(Error::InvalidParameter(format!(
            "residual has length {}, expected {m}",
            r.len()
        )));
    }
    let mut rn = norm(&r);
    let mut it = 0;
    while it < opts.max_iter && rn > opts.tol {
        it += 1;
        let h = opts.fd_step * (1.0 + norm(&x));
        let mut stencil = Vec::with_capacity(2 * n * n);
        for k in 0..n {
            for s in [1.0, -1.0] {
                let mut p = x.clone();
                p[k] += s * h;
                stencil.extend_from_slice(&p);
            }
        }
        let rs = eval(&stencil, 2 * n)?;
        let mut jac = DMatrix::<f64>::zeros(m, n);
        for k in 0..n {
            for i in 0..m {
                jac[(i, k)] = (rs[2 * k * m + i] - rs[(2 * k + 1) * m + i]) / (2.0 * h);
            }
        }
        if jac.iter().any(|v| !v.is_finite()) {
            return Err(Error::Differential(x));
        }
        let svd = jac.svd(true, true);
        let smax = svd.singular_values.max();
        if smax == 0.0 {
            break;
        }
        let pinv = svd
            .pseudo_inverse(opts.rcond * smax)
            .map_err(|e| Error::InvalidParameter(e.to_string()))?;
        let step = -(pinv * DVector::from_column_slice(&r));
        let mut lambda = 1.0;
        let mut accepted = false;
        for _ in 0..=opts.max_backtracks {
            let xt: Vec<f64> = x.iter().zip(step.iter()).map(|(a, d)| a + lambda * d).collect();
            let rt = eval(&xt, 1)?;
            let rtn = norm(&rt);
            if rtn < rn * (1.0 - 1e-4 * lambda) || rtn <= opts.tol {
                x = xt;
                r = rt;
                rn = rtn;
                accepted = true;
                break;
            }
            lambda *= 0.5;
        }
        if !accepted || lambda * step.norm() < 1e-15 * (1.0 + norm(&x)) {
            break;
        }
    }
    Ok(NewtonOutcome {
        converged: rn <= opts.tol,
        x,
        residual: r,
        norm: rn,
        iterations: it,
    })
}
