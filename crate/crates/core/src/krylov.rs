//! Preconditioned conjugate gradients on flat `f64` vectors.

use crate::error::{Error, Result};
use crate::par;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CgStats {
    pub iterations: usize,
    /// Final Euclidean residual norm.
    pub residual: f64,
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    par::sum_by(a.len(), |i| a[i] * b[i])
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Solves `A x = b` for symmetric positive (semi)definite `A` with a
/// symmetric positive preconditioner `M^{-1}`. Stops when `||r|| <= tol`.
///
/// `x` holds the initial guess on entry and the solution on exit.
pub fn pcg<A, M>(
    apply_a: A,
    apply_m_inv: M,
    b: &[f64],
    x: &mut [f64],
    tol: f64,
    max_iter: usize,
) -> Result<CgStats>
where
    A: Fn(&[f64]) -> Result<Vec<f64>>,
    M: Fn(&[f64]) -> Vec<f64>,
{
    let n = b.len();
    let ax = apply_a(x)?;
    let mut r: Vec<f64> = par::map_range(n, |i| b[i] - ax[i]);
    let mut rn = norm(&r);
    if rn <= tol {
        return Ok(CgStats {
            iterations: 0,
            residual: rn,
        });
    }
    let mut z = apply_m_inv(&r);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    for it in 1..=max_iter {
        let ap = apply_a(&p)?;
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return Err(Error::NonConvergence {
                iter: it,
                residual: rn,
            });
        }
        let alpha = rz / pap;
        par::for_each_indexed(x, |i, xi| *xi += alpha * p[i]);
        par::for_each_indexed(&mut r, |i, ri| *ri -= alpha * ap[i]);
        rn = norm(&r);
        if !rn.is_finite() {
            return Err(Error::NonConvergence {
                iter: it,
                residual: rn,
            });
        }
        if rn <= tol {
            return Ok(CgStats {
                iterations: it,
                residual: rn,
            });
        }
        z = apply_m_inv(&r);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        par::for_each_indexed(&mut p, |i, pi| *pi = z[i] + beta * *pi);
    }
    Err(Error::NonConvergence {
        iter: max_iter,
        residual: rn,
    })
}
