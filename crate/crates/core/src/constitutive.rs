//! Stress laws, their linearizations and the associated algebraic checks.
//!
//! The regularized power-law stress is
//!
//! ```text
//! S_delta(D) = 2 mu D + lambda tr(D) I + tau* (|D|^2 + delta^2)^((q-2)/2) D
//! ```
//!
//! with `|D|` the Frobenius norm. In one space dimension the viscous part is
//! the scalar `mu s`, i.e. `S_delta(s) = mu s + tau* (s^2 + delta^2)^((q-2)/2) s`,
//! which is the law the Bingham limit is taken from.
//!
//! All functions are pure. Evaluations that hit the singular point of the
//! nonlinear factor (`q < 2`, `|D|^2 + delta^2 = 0`) return
//! [`Error::SingularEvaluation`] instead of producing `inf`/`NaN`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Mat3 = [[f64; 3]; 3];

/// Physical and regularization constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FluidParams {
    /// Shear viscosity (Pa s), `> 0`.
    pub mu: f64,
    /// Second (Lamé) viscosity (Pa s), `2 mu + lambda > 0`.
    #[serde(rename = "lambda")]
    pub lambda_: f64,
    /// Yield stress (Pa), `>= 0`.
    pub tau_star: f64,
    /// Regularization parameter, `>= 0`.
    pub delta: f64,
    /// Power-law index, `>= 1`.
    pub q: f64,
    /// Pressure coefficient in `p = a rho^gamma`, `> 0`.
    pub a: f64,
    /// Adiabatic exponent, `> 1`.
    #[serde(rename = "gamma")]
    pub gamma_: f64,
}

impl Default for FluidParams {
    fn default() -> Self {
        Self {
            mu: 1.0,
            lambda_: 0.0,
            tau_star: 1.0,
            delta: 0.1,
            q: 1.5,
            a: 1.0,
            gamma_: 1.4,
        }
    }
}

impl FluidParams {
    /// Checks every admissibility invariant; the message names the first violated one.
    pub fn validate(&self) -> Result<()> {
        let all = [
            self.mu,
            self.lambda_,
            self.tau_star,
            self.delta,
            self.q,
            self.a,
            self.gamma_,
        ];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParams("all parameters must be finite".into()));
        }
        if self.mu <= 0.0 {
            return Err(Error::InvalidParams("mu must be > 0".into()));
        }
        if 2.0 * self.mu + self.lambda_ <= 0.0 {
            return Err(Error::InvalidParams(
                "2*mu + lambda must be > 0 (strong ellipticity condition)".into(),
            ));
        }
        if self.tau_star < 0.0 {
            return Err(Error::InvalidParams("tau_star must be >= 0".into()));
        }
        if self.delta < 0.0 {
            return Err(Error::InvalidParams("delta must be >= 0".into()));
        }
        if self.q < 1.0 {
            return Err(Error::InvalidParams("q must be >= 1".into()));
        }
        if self.a <= 0.0 {
            return Err(Error::InvalidParams("a must be > 0".into()));
        }
        if self.gamma_ <= 1.0 {
            return Err(Error::InvalidParams("gamma must be > 1".into()));
        }
        Ok(())
    }

    pub fn with_delta(mut self, delta: f64) -> Self {
        self.delta = delta;
        self
    }

    /// Pressure `a rho^gamma`, with `rho` clamped at zero.
    pub fn pressure(&self, rho: f64) -> f64 {
        self.a * rho.max(0.0).powf(self.gamma_)
    }
}

/// `mu > 0`, `2 mu + lambda > 0`, `q >= 1`, `delta >= 0`: sufficient for the
/// principal symbol of the linearized operator to be positive.
pub fn is_strongly_elliptic(p: &FluidParams) -> bool {
    p.mu > 0.0 && 2.0 * p.mu + p.lambda_ > 0.0 && p.q >= 1.0 && p.delta >= 0.0
}

/// Strong ellipticity together with `delta >= c > 0`, the extra requirement
/// for maximal `L^p` regularity of the linearized operator when `d >= 2`.
pub fn has_maximal_regularity(p: &FluidParams, c: f64) -> bool {
    is_strongly_elliptic(p) && c > 0.0 && p.delta >= c
}

/// Symmetric `d x d` tensor stored in the top-left block of a 3x3 array.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymTensor {
    dim: usize,
    m: Mat3,
}

impl SymTensor {
    pub fn zeros(dim: usize) -> Self {
        assert!((1..=3).contains(&dim), "dimension must be 1, 2 or 3");
        Self {
            dim,
            m: [[0.0; 3]; 3],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut t = Self::zeros(dim);
        for i in 0..dim {
            t.m[i][i] = 1.0;
        }
        t
    }

    pub fn diag(values: &[f64]) -> Self {
        let mut t = Self::zeros(values.len());
        for (i, v) in values.iter().enumerate() {
            t.m[i][i] = *v;
        }
        t
    }

    /// Builds from a full matrix; fails unless the `d x d` block is symmetric.
    pub fn from_matrix(dim: usize, m: &Mat3) -> Result<Self> {
        let mut t = Self::zeros(dim);
        for i in 0..dim {
            for j in 0..dim {
                let scale = 1.0 + m[i][j].abs().max(m[j][i].abs());
                if (m[i][j] - m[j][i]).abs() > 1e-12 * scale {
                    return Err(Error::InvalidField(format!(
                        "matrix is not symmetric at ({i},{j})"
                    )));
                }
                t.m[i][j] = 0.5 * (m[i][j] + m[j][i]);
            }
        }
        Ok(t)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.m[i][j]
    }

    /// Sets both `(i, j)` and `(j, i)`.
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.m[i][j] = v;
        self.m[j][i] = v;
    }

    pub fn as_matrix(&self) -> &Mat3 {
        &self.m
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.m[i][i]).sum()
    }

    pub fn frobenius_sq(&self) -> f64 {
        self.contract(self)
    }

    pub fn frobenius(&self) -> f64 {
        self.frobenius_sq().sqrt()
    }

    /// `A : B = sum_ij A_ij B_ij`.
    pub fn contract(&self, other: &SymTensor) -> f64 {
        let mut s = 0.0;
        for i in 0..self.dim {
            for j in 0..self.dim {
                s += self.m[i][j] * other.m[i][j];
            }
        }
        s
    }

    pub fn scale(&self, c: f64) -> SymTensor {
        let mut t = *self;
        for row in t.m.iter_mut() {
            for v in row.iter_mut() {
                *v *= c;
            }
        }
        t
    }

    pub fn add(&self, other: &SymTensor) -> SymTensor {
        self.axpy(1.0, other)
    }

    pub fn sub(&self, other: &SymTensor) -> SymTensor {
        self.axpy(-1.0, other)
    }

    /// `self + c * other`.
    pub fn axpy(&self, c: f64, other: &SymTensor) -> SymTensor {
        debug_assert_eq!(self.dim, other.dim);
        let mut t = *self;
        for i in 0..3 {
            for j in 0..3 {
                t.m[i][j] += c * other.m[i][j];
            }
        }
        t
    }

    /// `self * x` for a real vector.
    pub fn apply(&self, x: &[f64; 3]) -> [f64; 3] {
        let mut y = [0.0; 3];
        for i in 0..self.dim {
            for j in 0..self.dim {
                y[i] += self.m[i][j] * x[j];
            }
        }
        y
    }

    /// Number of independent components, `d (d + 1) / 2`.
    pub fn n_components(dim: usize) -> usize {
        dim * (dim + 1) / 2
    }

    /// Index pairs `(i, j)` with `i <= j`, in storage order.
    pub fn component_pairs(dim: usize) -> Vec<(usize, usize)> {
        let mut v = Vec::with_capacity(Self::n_components(dim));
        for i in 0..dim {
            for j in i..dim {
                v.push((i, j));
            }
        }
        v
    }
}

/// `D(u) = (grad_u + grad_u^T) / 2` restricted to the leading `dim x dim` block.
pub fn rate_of_strain(dim: usize, grad_u: &Mat3) -> SymTensor {
    let mut t = SymTensor::zeros(dim);
    for i in 0..dim {
        for j in 0..dim {
            t.m[i][j] = 0.5 * (grad_u[i][j] + grad_u[j][i]);
        }
    }
    t
}

fn singular(what: &str, p: &FluidParams) -> Error {
    Error::SingularEvaluation(format!(
        "{what} undefined at |D|^2 + delta^2 = 0 with q = {}",
        p.q
    ))
}

/// `B^((q-2)/2)` for `B = |D|^2 + delta^2`.
pub fn nonlinear_factor(p: &FluidParams, b: f64) -> Result<f64> {
    if b <= 0.0 {
        if p.q < 2.0 {
            return Err(singular("(|D|^2+delta^2)^((q-2)/2)", p));
        }
        return Ok(if p.q == 2.0 { 1.0 } else { 0.0 });
    }
    Ok(if p.q == 2.0 {
        1.0
    } else {
        b.powf(0.5 * (p.q - 2.0))
    })
}

/// `B^((q-4)/2)`; singular at `B = 0` for `q < 4`.
fn factor_q4(p: &FluidParams, b: f64) -> Result<f64> {
    if b <= 0.0 {
        if p.q < 4.0 {
            return Err(singular("(|D|^2+delta^2)^((q-4)/2)", p));
        }
        return Ok(if p.q == 4.0 { 1.0 } else { 0.0 });
    }
    Ok(b.powf(0.5 * (p.q - 4.0)))
}

/// `beta(B) = mu + (tau*/2) B^((q-2)/2)`.
pub fn beta_fn(p: &FluidParams, b: f64) -> Result<f64> {
    if p.tau_star == 0.0 {
        return Ok(p.mu);
    }
    Ok(p.mu + 0.5 * p.tau_star * nonlinear_factor(p, b)?)
}

/// `beta'(B) = (tau*/4) (q - 2) B^((q-4)/2)`, computed analytically.
pub fn beta_prime(p: &FluidParams, b: f64) -> Result<f64> {
    if p.tau_star == 0.0 || p.q == 2.0 {
        return Ok(0.0);
    }
    Ok(0.25 * p.tau_star * (p.q - 2.0) * factor_q4(p, b)?)
}

/// `F(A) = (|A|^2 + delta^2)^((q-2)/2) A`.
pub fn flux_f(p: &FluidParams, a: &SymTensor) -> Result<SymTensor> {
    let b = a.frobenius_sq() + p.delta * p.delta;
    Ok(a.scale(nonlinear_factor(p, b)?))
}

/// Scalar version of [`flux_f`]: `(s^2 + delta^2)^((q-2)/2) s`.
pub fn flux_f_scalar(p: &FluidParams, s: f64) -> Result<f64> {
    Ok(nonlinear_factor(p, s * s + p.delta * p.delta)? * s)
}

/// Derivative of [`flux_f_scalar`]: `B^((q-4)/2) ((q-1) s^2 + delta^2)`.
pub fn flux_f_scalar_prime(p: &FluidParams, s: f64) -> Result<f64> {
    let b = s * s + p.delta * p.delta;
    if p.q == 2.0 {
        return Ok(1.0);
    }
    Ok(factor_q4(p, b)? * ((p.q - 1.0) * s * s + p.delta * p.delta))
}

/// The regularized stress `S_delta(D)`.
pub fn stress_delta(p: &FluidParams, d: &SymTensor) -> Result<SymTensor> {
    if d.dim == 1 {
        let s = d.m[0][0];
        let tau = if p.tau_star == 0.0 {
            0.0
        } else {
            p.tau_star * flux_f_scalar(p, s)?
        };
        let mut t = SymTensor::zeros(1);
        t.m[0][0] = p.mu * s + tau;
        return Ok(t);
    }
    let mut t = d
        .scale(2.0 * p.mu)
        .axpy(p.lambda_ * d.trace(), &SymTensor::identity(d.dim));
    if p.tau_star != 0.0 {
        t = t.axpy(p.tau_star, &flux_f(p, d)?);
    }
    Ok(t)
}

/// Directional derivative `dS_delta(D)[E]` for symmetric `E`.
pub fn stress_tangent(p: &FluidParams, d: &SymTensor, e: &SymTensor) -> Result<SymTensor> {
    if d.dim == 1 {
        let s = d.m[0][0];
        let slope = if p.tau_star == 0.0 {
            p.mu
        } else {
            p.mu + p.tau_star * flux_f_scalar_prime(p, s)?
        };
        let mut t = SymTensor::zeros(1);
        t.m[0][0] = slope * e.m[0][0];
        return Ok(t);
    }
    let b = d.frobenius_sq() + p.delta * p.delta;
    let beta = beta_fn(p, b)?;
    let mut t = e
        .scale(2.0 * beta)
        .axpy(p.lambda_ * e.trace(), &SymTensor::identity(d.dim));
    let bp = beta_prime(p, b)?;
    if bp != 0.0 {
        t = t.axpy(4.0 * bp * d.contract(e), d);
    }
    Ok(t)
}

/// Outcome of the one-dimensional Bingham law.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BinghamStress {
    /// Flowing region: `mu s + tau* sign(s)`.
    Yielded(f64),
    /// `s = 0`: the stress is only constrained by `|S| < tau*`.
    Unyielded,
}

pub fn stress_bingham_1d(p: &FluidParams, s: f64) -> BinghamStress {
    if s == 0.0 {
        BinghamStress::Unyielded
    } else {
        BinghamStress::Yielded(p.mu * s + p.tau_star * s.signum())
    }
}

/// Fourth-order coefficient tensor `a[i][j][k][l]` of the quasi-linear operator
/// `[div S]_i = sum_{jkl} a_ij^kl d_k d_l u_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientTensor {
    pub dim: usize,
    pub a: [[[[f64; 3]; 3]; 3]; 3],
}

impl CoefficientTensor {
    /// Symbol matrix `A(xi)_ij = sum_kl a_ij^kl xi_k xi_l`.
    pub fn symbol_matrix(&self, xi: &[f64; 3]) -> Mat3 {
        let d = self.dim;
        let mut m = [[0.0; 3]; 3];
        for (i, row) in m.iter_mut().enumerate().take(d) {
            for (j, mij) in row.iter_mut().enumerate().take(d) {
                let mut s = 0.0;
                for k in 0..d {
                    for l in 0..d {
                        s += self.a[i][j][k][l] * xi[k] * xi[l];
                    }
                }
                *mij = s;
            }
        }
        m
    }
}

/// `a_ij^kl = beta(B) d_kl d_ij + (lambda + beta(B)) d_il d_jk + 4 beta'(B) D_ik D_jl`
/// with `B = |D|^2 + delta^2`. In 1D the single coefficient is `dS/ds`.
pub fn stress_jacobian(p: &FluidParams, d: &SymTensor) -> Result<CoefficientTensor> {
    let dim = d.dim;
    let mut a = [[[[0.0; 3]; 3]; 3]; 3];
    if dim == 1 {
        let e = SymTensor::identity(1);
        a[0][0][0][0] = stress_tangent(p, d, &e)?.m[0][0];
        return Ok(CoefficientTensor { dim, a });
    }
    let b = d.frobenius_sq() + p.delta * p.delta;
    let beta = beta_fn(p, b)?;
    let bp = beta_prime(p, b)?;
    let kron = |i: usize, j: usize| if i == j { 1.0 } else { 0.0 };
    for (i, ai) in a.iter_mut().enumerate().take(dim) {
        for (j, aij) in ai.iter_mut().enumerate().take(dim) {
            for (k, aijk) in aij.iter_mut().enumerate().take(dim) {
                for (l, v) in aijk.iter_mut().enumerate().take(dim) {
                    *v = beta * kron(k, l) * kron(i, j)
                        + (p.lambda_ + beta) * kron(i, l) * kron(j, k)
                        + 4.0 * bp * d.m[i][k] * d.m[j][l];
                }
            }
        }
    }
    Ok(CoefficientTensor { dim, a })
}

/// `(A(xi) eta, eta) = beta |xi|^2 |eta|^2 + (lambda + beta) |(xi, eta)|^2 + 4 beta' |(D xi, eta)|^2`
/// for real `xi` and complex `eta`.
pub fn symbol_form(
    p: &FluidParams,
    d: &SymTensor,
    xi: &[f64; 3],
    eta: &[Complex64; 3],
) -> Result<f64> {
    let dim = d.dim;
    let xi2: f64 = xi[..dim].iter().map(|x| x * x).sum();
    let eta2: f64 = eta[..dim].iter().map(|z| z.norm_sqr()).sum();
    let xi_eta: Complex64 = (0..dim).map(|i| eta[i] * xi[i]).sum();
    if dim == 1 {
        let c = stress_jacobian(p, d)?.a[0][0][0][0];
        return Ok(c * xi2 * eta2);
    }
    let b = d.frobenius_sq() + p.delta * p.delta;
    let beta = beta_fn(p, b)?;
    let bp = beta_prime(p, b)?;
    let dxi = d.apply(xi);
    let dxi_eta: Complex64 = (0..dim).map(|i| eta[i] * dxi[i]).sum();
    Ok(beta * xi2 * eta2 + (p.lambda_ + beta) * xi_eta.norm_sqr() + 4.0 * bp * dxi_eta.norm_sqr())
}

/// The same quadratic form assembled term by term from the coefficient tensor,
/// `sum_ij A(xi)_ij eta_j conj(eta_i)`. Returned as a complex number so the
/// caller can check that the imaginary part vanishes.
pub fn symbol_form_assembled(
    p: &FluidParams,
    d: &SymTensor,
    xi: &[f64; 3],
    eta: &[Complex64; 3],
) -> Result<Complex64> {
    let a = stress_jacobian(p, d)?;
    let m = a.symbol_matrix(xi);
    let mut s = Complex64::new(0.0, 0.0);
    for i in 0..d.dim {
        for j in 0..d.dim {
            s += m[i][j] * eta[j] * eta[i].conj();
        }
    }
    Ok(s)
}

/// `sum_ij (F(C) - F(D))_ij (C - D)_ij`; nonnegative for every `q >= 1`.
pub fn monotonicity_gap(p: &FluidParams, c: &SymTensor, d: &SymTensor) -> Result<f64> {
    let fc = flux_f(p, c)?;
    let fd = flux_f(p, d)?;
    Ok(fc.sub(&fd).contract(&c.sub(d)))
}

/// Integrand of the time-derivative dissipation functional:
/// `B^((q-4)/2) ((q-1)|D|^2 + delta^2) |E|^2` with `B = |D|^2 + delta^2`.
pub fn j_form(p: &FluidParams, d: &SymTensor, e: &SymTensor) -> Result<f64> {
    let d2 = d.frobenius_sq();
    let b = d2 + p.delta * p.delta;
    let e2 = e.frobenius_sq();
    if p.q == 2.0 {
        return Ok(e2);
    }
    Ok(factor_q4(p, b)? * ((p.q - 1.0) * d2 + p.delta * p.delta) * e2)
}
