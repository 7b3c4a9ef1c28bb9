//! Pointwise implicit solves `x = g(x)`: damped fixed-point iteration with a
//! Newton fallback.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            tol: 1e-12,
            max_iter: 100,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub x: Vec<f64>,
    pub iters: usize,
    pub residual: f64,
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn threshold(x: &[f64], tol: f64) -> f64 {
    tol * max_abs(x).max(1.0)
}

/// Solves `x = g(x)` starting at `x0`. `jac_g` is the Jacobian of `g` and is
/// only used once the fixed-point phase stalls.
pub fn solve_fixed_point<G, Jg>(g: G, jac_g: Jg, x0: &[f64], opts: SolveOptions) -> Result<Solution>
where
    G: Fn(&[f64]) -> Result<Vec<f64>>,
    Jg: Fn(&[f64]) -> Result<DMatrix<f64>>,
{
    let mut x = x0.to_vec();
    let mut damping = 1.0;
    let mut prev = f64::INFINITY;
    let mut iters = 0;

    while iters < opts.max_iter {
        let gx = g(&x)?;
        let step: Vec<f64> = gx.iter().zip(&x).map(|(a, b)| a - b).collect();
        let r = max_abs(&step);
        if r <= threshold(&gx, opts.tol) {
            return Ok(Solution {
                x: gx,
                iters: iters + 1,
                residual: r,
            });
        }
        // also true for a NaN residual
        #[allow(clippy::neg_cmp_op_on_partial_ord)]
        if !(r < prev) {
            damping *= 0.5;
            if damping < 1.0 / 64.0 {
                break;
            }
        }
        prev = r;
        for (xi, si) in x.iter_mut().zip(&step) {
            *xi += damping * si;
        }
        iters += 1;
    }

    // Newton on F(x) = x - g(x), restarted from the initial guess.
    let n = x0.len();
    let mut x = x0.to_vec();
    let mut last = f64::INFINITY;
    for k in 0..opts.max_iter {
        let gx = g(&x)?;
        let f: Vec<f64> = x.iter().zip(&gx).map(|(a, b)| a - b).collect();
        let r = max_abs(&f);
        last = r;
        if r <= threshold(&x, opts.tol) {
            return Ok(Solution {
                x,
                iters: iters + k + 1,
                residual: r,
            });
        }
        let jac = DMatrix::identity(n, n) - jac_g(&x)?;
        let delta = jac.lu().solve(&DVector::from_vec(f)).ok_or(Error::SingularJacobian)?;
        if delta.iter().any(|v| !v.is_finite()) {
            return Err(Error::SingularJacobian);
        }
        for (xi, di) in x.iter_mut().zip(delta.iter()) {
            *xi -= di;
        }
    }
    Err(Error::NotConverged { residual: last })
}
