//! Newton solver for `-div S_delta(D(u)) = f` on the torus, the associated
//! regularity checks, and the initializer that makes initial data compatible.
//!
//! The discrete operator is pseudo-spectral: strains and divergences use
//! spectral derivatives, stresses are evaluated pointwise. Because the
//! spectral derivative is skew-adjoint, the discrete operator is the gradient
//! of the discrete convex energy
//!
//! ```text
//! E(u) = sum_x h^d W(D(u)) - <f, u>,   W' = S_delta,
//! ```
//!
//! and its Jacobian is symmetric positive definite on fields without mean or
//! Nyquist content. Newton steps are computed with preconditioned CG.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::constitutive::{
    beta_fn, beta_prime, flux_f_scalar_prime, is_strongly_elliptic, rate_of_strain,
    stress_delta, stress_jacobian, FluidParams, Mat3, SymTensor,
};
use crate::error::{Error, Result};
use crate::field::{spectral, PeriodicField, PeriodicGrid, Rank};
use crate::krylov;
use crate::par;

/// Right-hand side and parameters of `-div S_delta(D(u)) = f`.
#[derive(Debug, Clone)]
pub struct EllipticProblem {
    pub params: FluidParams,
    /// Forcing with mean and Nyquist modes removed.
    pub f: PeriodicField,
}

impl EllipticProblem {
    pub fn new(params: FluidParams, f: &PeriodicField) -> Result<Self> {
        params.validate()?;
        if !is_strongly_elliptic(&params) {
            return Err(Error::InvalidParams("parameters are not strongly elliptic".into()));
        }
        if f.rank() != Rank::Vector {
            return Err(Error::InvalidField("right-hand side must be a vector field".into()));
        }
        Ok(Self {
            params,
            f: f.project_out_null_modes(),
        })
    }

    pub fn grid(&self) -> &PeriodicGrid {
        self.f.grid()
    }
}

#[derive(Debug, Clone)]
pub struct EllipticSolution {
    pub u: PeriodicField,
    /// `||-div S_delta(D(u)) - f||_{L^2}`.
    pub residual_norm: f64,
    pub newton_iters: usize,
    pub cg_iters: usize,
    /// Residual after each Newton iterate, starting with the initial guess.
    pub history: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NewtonOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub cg_max_iter: usize,
    pub max_halvings: usize,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 100,
            cg_max_iter: 5000,
            max_halvings: 40,
        }
    }
}

fn grad_matrix(grads: &[Vec<Vec<f64>>], dim: usize, i: usize) -> Mat3 {
    let mut m = [[0.0; 3]; 3];
    for (c, row) in m.iter_mut().enumerate().take(dim) {
        for (a, v) in row.iter_mut().enumerate().take(dim) {
            *v = grads[c][a][i];
        }
    }
    m
}

/// Pointwise rate of strain of a vector field.
pub fn strain_field(u: &PeriodicField) -> Vec<SymTensor> {
    let g = *u.grid();
    let d = g.dim();
    let grads = u.gradient_components();
    par::map_range(g.len(), |i| rate_of_strain(d, &grad_matrix(&grads, d, i)))
}

/// `(div T)_i = sum_j d_j T_ij` for a pointwise tensor field.
pub fn tensor_divergence(grid: &PeriodicGrid, t: &[SymTensor]) -> PeriodicField {
    let d = grid.dim();
    let comps: Vec<Vec<f64>> = (0..d)
        .map(|i| {
            let rows: Vec<Vec<f64>> = (0..d)
                .map(|j| t.iter().map(|s| s.get(i, j)).collect())
                .collect();
            let refs: Vec<&[f64]> = rows.iter().map(|r| r.as_slice()).collect();
            spectral::divergence(grid, &refs)
        })
        .collect();
    PeriodicField::from_components(*grid, Rank::Vector, comps)
        .expect("divergence has one component per axis")
}

/// Pointwise regularized stress of a velocity field.
pub fn stress_field(p: &FluidParams, u: &PeriodicField) -> Result<Vec<SymTensor>> {
    let d = strain_field(u);
    par::map_slice(&d, |di| stress_delta(p, di))
        .into_iter()
        .collect()
}

fn check_vector(u: &PeriodicField) -> Result<()> {
    if u.rank() != Rank::Vector {
        return Err(Error::InvalidField("expected a vector field".into()));
    }
    Ok(())
}

/// `-div S_delta(D(u))`.
pub fn apply_operator(p: &FluidParams, u: &PeriodicField) -> Result<PeriodicField> {
    check_vector(u)?;
    let s = stress_field(p, u)?;
    Ok(tensor_divergence(u.grid(), &s).scale(-1.0))
}

/// Discrete energy whose gradient is [`apply_operator`] minus `f`.
pub fn energy(p: &FluidParams, u: &PeriodicField, f: &PeriodicField) -> Result<f64> {
    let d = strain_field(u);
    let w = par::map_slice(&d, |di| strain_energy_density(p, di));
    let w: Vec<f64> = w.into_iter().collect::<Result<_>>()?;
    Ok(par::sum(&w) * u.grid().cell_volume() - u.dot(f))
}

/// `W(D)` with `dW/dD = S_delta(D)`.
pub fn strain_energy_density(p: &FluidParams, d: &SymTensor) -> Result<f64> {
    let d2 = d.frobenius_sq();
    let b = d2 + p.delta * p.delta;
    let visc = if d.dim() == 1 {
        0.5 * p.mu * d2
    } else {
        p.mu * d2 + 0.5 * p.lambda_ * d.trace().powi(2)
    };
    if p.tau_star == 0.0 {
        return Ok(visc);
    }
    if b <= 0.0 && p.q < 2.0 {
        // the potential itself is continuous at the singular point
        return Ok(visc);
    }
    Ok(visc + p.tau_star / p.q * b.powf(0.5 * p.q))
}

/// Pointwise coefficients of the exact linearization at `u_star`.
#[derive(Debug, Clone)]
pub struct Linearization {
    grid: PeriodicGrid,
    lambda_: f64,
    d: Vec<SymTensor>,
    /// `(beta, beta')` in `d >= 2`; `(dS/ds, 0)` in 1D.
    coef: Vec<(f64, f64)>,
}

impl Linearization {
    pub fn new(p: &FluidParams, u_star: &PeriodicField) -> Result<Self> {
        check_vector(u_star)?;
        let grid = *u_star.grid();
        let d = strain_field(u_star);
        let coef: Vec<(f64, f64)> = if grid.dim() == 1 {
            par::map_slice(&d, |di| -> Result<(f64, f64)> {
                let s = di.get(0, 0);
                let slope = if p.tau_star == 0.0 {
                    p.mu
                } else {
                    p.mu + p.tau_star * flux_f_scalar_prime(p, s)?
                };
                Ok((slope, 0.0))
            })
            .into_iter()
            .collect::<Result<_>>()?
        } else {
            par::map_slice(&d, |di| -> Result<(f64, f64)> {
                let b = di.frobenius_sq() + p.delta * p.delta;
                Ok((beta_fn(p, b)?, beta_prime(p, b)?))
            })
            .into_iter()
            .collect::<Result<_>>()?
        };
        Ok(Self {
            grid,
            lambda_: p.lambda_,
            d,
            coef,
        })
    }

    /// `C(D*) : E` at node `i`.
    fn tangent(&self, i: usize, e: &SymTensor) -> SymTensor {
        let (c0, c1) = self.coef[i];
        if self.grid.dim() == 1 {
            return e.scale(c0);
        }
        let mut t = e
            .scale(2.0 * c0)
            .axpy(self.lambda_ * e.trace(), &SymTensor::identity(self.grid.dim()));
        if c1 != 0.0 {
            let dd = &self.d[i];
            t = t.axpy(4.0 * c1 * dd.contract(e), dd);
        }
        t
    }

    /// `div (C(D(u*)) : D(v))`, the derivative of `div S_delta` at `u*` along `v`.
    pub fn apply(&self, v: &PeriodicField) -> PeriodicField {
        let e = strain_field(v);
        let t = par::map_range(self.grid.len(), |i| self.tangent(i, &e[i]));
        tensor_divergence(&self.grid, &t)
    }

    /// Largest pointwise viscosity coefficient.
    pub fn max_coefficient(&self) -> f64 {
        par::max_by(self.coef.len(), |i| self.coef[i].0)
    }

    /// Grid mean of the pointwise viscosity coefficient.
    pub fn mean_coefficient(&self) -> f64 {
        par::sum_by(self.coef.len(), |i| self.coef[i].0) / self.coef.len() as f64
    }
}

/// Exact directional derivative of `div S_delta(D(.))` at `u_star` along `v`.
/// With `tau* = 0` it reduces to `mu Lap v + (lambda + mu) grad div v`.
pub fn apply_linearized(
    p: &FluidParams,
    u_star: &PeriodicField,
    v: &PeriodicField,
) -> Result<PeriodicField> {
    check_vector(v)?;
    Ok(Linearization::new(p, u_star)?.apply(v))
}

/// Principal part in non-divergence form: `sum_{jkl} a_ij^kl(D(u*)) d_k d_l v_j`.
///
/// Satisfies `apply_quasilinear(p, u, u) = div S_delta(D(u))` exactly (up to
/// aliasing) in 1D and for the Lamé part.
pub fn apply_quasilinear(
    p: &FluidParams,
    u_star: &PeriodicField,
    v: &PeriodicField,
) -> Result<PeriodicField> {
    check_vector(v)?;
    let g = *v.grid();
    let dim = g.dim();
    let ds = strain_field(u_star);
    let coeffs: Vec<_> = par::map_slice(&ds, |di| stress_jacobian(p, di))
        .into_iter()
        .collect::<Result<_>>()?;
    // second[j][k][l] = d_k d_l v_j
    let second: Vec<Vec<Vec<Vec<f64>>>> = (0..dim)
        .map(|j| {
            let c = spectral::forward(&g, v.component(j));
            (0..dim)
                .map(|k| {
                    (0..dim)
                        .map(|l| {
                            let mut ck = c.clone();
                            spectral::differentiate(&g, &mut ck, k);
                            spectral::differentiate(&g, &mut ck, l);
                            spectral::inverse_real(&g, ck)
                        })
                        .collect()
                })
                .collect()
        })
        .collect();
    let mut comps = vec![vec![0.0; g.len()]; dim];
    for (i, comp) in comps.iter_mut().enumerate() {
        par::for_each_indexed(comp, |x, out| {
            let a = &coeffs[x].a;
            let mut s = 0.0;
            for j in 0..dim {
                for k in 0..dim {
                    for l in 0..dim {
                        s += a[i][j][k][l] * second[j][k][l][x];
                    }
                }
            }
            *out = s;
        });
    }
    PeriodicField::from_components(g, Rank::Vector, comps)
}

/// Direct spectral solve of the constant-coefficient Newtonian problem
/// `-mu Lap u - (lambda + mu) grad div u = r` (in 1D `-mu u'' = r`), with
/// the viscosities scaled by `scale`. Null modes are set to zero.
pub fn newtonian_solve(p: &FluidParams, r: &PeriodicField, scale: f64) -> PeriodicField {
    shifted_newtonian_solve(p.mu * scale, p.lambda_ * scale, 0.0, r)
}

/// Solves `a u - mu Lap u - (lambda + mu) grad div u = r` mode by mode
/// (in 1D `a u - mu u'' = r`). With `a = 0` the null modes are set to zero.
pub fn shifted_newtonian_solve(mu: f64, lam: f64, a: f64, r: &PeriodicField) -> PeriodicField {
    let g = *r.grid();
    let d = g.dim();
    let hats: Vec<Vec<Complex64>> = (0..d).map(|c| spectral::forward(&g, r.component(c))).collect();
    let mut out = vec![vec![Complex64::new(0.0, 0.0); g.len()]; d];
    let solved = par::map_range(g.len(), |i| {
        let mut u = [Complex64::new(0.0, 0.0); 3];
        let k = g.wave_vector(i);
        let k2: f64 = k[..d].iter().map(|x| x * x).sum();
        if k2 == 0.0 {
            if a > 0.0 {
                for c in 0..d {
                    u[c] = hats[c][i] / a;
                }
            }
            return u;
        }
        if d == 1 {
            u[0] = hats[0][i] / (a + mu * k2);
            return u;
        }
        let kr: Complex64 = (0..d).map(|c| hats[c][i] * k[c]).sum();
        for c in 0..d {
            let par_part = k[c] * kr / k2;
            u[c] = (hats[c][i] - par_part) / (a + mu * k2)
                + par_part / (a + (2.0 * mu + lam) * k2);
        }
        u
    });
    for (i, u) in solved.into_iter().enumerate() {
        for c in 0..d {
            out[c][i] = u[c];
        }
    }
    let comps: Vec<Vec<f64>> = out
        .into_iter()
        .map(|c| spectral::inverse_real(&g, c))
        .collect();
    PeriodicField::from_components(g, Rank::Vector, comps).expect("shape preserved")
}

fn field_like(template: &PeriodicField, values: Vec<f64>) -> PeriodicField {
    PeriodicField::new(*template.grid(), template.rank(), values).expect("shape preserved")
}

/// Newton solve from the zero initial guess.
pub fn solve(prob: &EllipticProblem, tol: f64, max_iter: usize) -> Result<EllipticSolution> {
    let opts = NewtonOptions {
        tol,
        max_iter,
        ..NewtonOptions::default()
    };
    solve_from(prob, None, &opts)
}

/// Newton solve with an optional initial guess (warm start).
pub fn solve_from(
    prob: &EllipticProblem,
    guess: Option<&PeriodicField>,
    opts: &NewtonOptions,
) -> Result<EllipticSolution> {
    if !(opts.tol > 0.0) {
        return Err(Error::InvalidParams("tolerance must be positive".into()));
    }
    let p = &prob.params;
    let f = &prob.f;
    let grid = *f.grid();
    let w = grid.cell_volume().sqrt();
    let mut u = match guess {
        Some(g0) => {
            grid.check_same(g0.grid())?;
            check_vector(g0)?;
            g0.project_out_null_modes()
        }
        None => PeriodicField::zeros(grid, Rank::Vector),
    };
    let mut r = f.sub(&apply_operator(p, &u)?)?;
    let mut rn = r.l2_norm();
    let mut history = vec![rn];
    let mut cg_total = 0;
    let mut e_cur = energy(p, &u, f)?;
    for it in 0..=opts.max_iter {
        if rn <= opts.tol {
            return Ok(EllipticSolution {
                u,
                residual_norm: rn,
                newton_iters: it,
                cg_iters: cg_total,
                history,
            });
        }
        if it == opts.max_iter {
            break;
        }
        let lin = Linearization::new(p, &u)?;
        let lin_tol = (1e-3 * rn).min(0.1 * rn * rn).max(0.1 * opts.tol);
        let mut step = vec![0.0; r.values().len()];
        let apply_j = |v: &[f64]| -> Result<Vec<f64>> {
            let vf = field_like(&u, v.to_vec());
            Ok(lin.apply(&vf).scale(-1.0).into_values())
        };
        let precond = |v: &[f64]| -> Vec<f64> {
            newtonian_solve(p, &field_like(&u, v.to_vec()), 1.0).into_values()
        };
        let st = match krylov::pcg(
            apply_j,
            precond,
            r.values(),
            &mut step,
            lin_tol / w,
            opts.cg_max_iter,
        ) {
            Ok(st) => st,
            // an inexact direction is still usable by the line search
            Err(Error::NonConvergence { iter, residual }) if residual.is_finite() => {
                log::debug!("linear solve stopped at {iter} iterations, residual {residual:e}");
                krylov::CgStats {
                    iterations: iter,
                    residual,
                }
            }
            Err(e) => return Err(e),
        };
        cg_total += st.iterations;
        let step = field_like(&u, step);
        let slope = -r.dot(&step);
        let mut alpha = 1.0;
        let mut accepted = None;
        for _ in 0..=opts.max_halvings {
            let trial = u.axpy(alpha, &step)?;
            match apply_operator(p, &trial) {
                Ok(a) => {
                    let rt = f.sub(&a)?;
                    let rtn = rt.l2_norm();
                    let et = energy(p, &trial, f)?;
                    let armijo = et <= e_cur + 1e-4 * alpha * slope;
                    if rtn.is_finite() && (rtn < rn || armijo) {
                        accepted = Some((trial, rt, rtn, et));
                        break;
                    }
                }
                Err(Error::SingularEvaluation(_)) => {}
                Err(e) => return Err(e),
            }
            alpha *= 0.5;
        }
        let Some((un, rnew, rnn, en)) = accepted else {
            return Err(Error::NonConvergence {
                iter: it + 1,
                residual: rn,
            });
        };
        log::trace!("newton {it}: residual {rnn:e}, step {alpha}, cg {}", st.iterations);
        u = un;
        r = rnew;
        rn = rnn;
        e_cur = en;
        history.push(rn);
    }
    Err(Error::NonConvergence {
        iter: opts.max_iter,
        residual: rn,
    })
}

/// Both sides of the one-dimensional `W^{2,p}` estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct W2pReport {
    pub p: f64,
    /// `(mu/p) int |u''|^p + tau* (q-1) int |u'|^2 (|u'|^2+delta^2)^((q-4)/2) |u''|^p`.
    pub lhs: f64,
    /// `(mu^(1-p)/p) int |f|^p`.
    pub rhs: f64,
    pub satisfied: bool,
    /// `||u''||_p`.
    pub d2u_norm: f64,
    /// `||f||_p / mu`.
    pub f_norm_over_mu: f64,
    /// `||u''||_p <= ||f||_p / mu`.
    pub norm_satisfied: bool,
}

pub fn verify_w2p_1d(
    p: &FluidParams,
    u: &PeriodicField,
    f: &PeriodicField,
    p_exp: f64,
) -> Result<W2pReport> {
    let g = *u.grid();
    if g.dim() != 1 {
        return Err(Error::GridMismatch("W^{2,p} check is one-dimensional".into()));
    }
    if !(p_exp > 1.0 && p_exp.is_finite()) {
        return Err(Error::InvalidParams("exponent must satisfy 1 < p < inf".into()));
    }
    let c = spectral::forward(&g, u.component(0));
    let mut c1 = c.clone();
    spectral::differentiate(&g, &mut c1, 0);
    let mut c2 = c1.clone();
    spectral::differentiate(&g, &mut c2, 0);
    let u1 = spectral::inverse_real(&g, c1);
    let u2 = spectral::inverse_real(&g, c2);
    let fv = f.component(0);
    let h = g.cell_volume();
    let int_u2 = par::sum_by(g.len(), |i| u2[i].abs().powf(p_exp)) * h;
    let mut weighted = 0.0;
    if p.tau_star != 0.0 && p.q != 1.0 {
        let terms: Vec<f64> = par::map_range(g.len(), |i| {
            let b = u1[i] * u1[i] + p.delta * p.delta;
            if b == 0.0 {
                return 0.0;
            }
            u1[i] * u1[i] * b.powf(0.5 * (p.q - 4.0)) * u2[i].abs().powf(p_exp)
        });
        weighted = par::sum(&terms) * h * p.tau_star * (p.q - 1.0);
    }
    let int_f = par::sum_by(g.len(), |i| fv[i].abs().powf(p_exp)) * h;
    let lhs = p.mu / p_exp * int_u2 + weighted;
    let rhs = p.mu.powf(1.0 - p_exp) / p_exp * int_f;
    let d2u_norm = int_u2.powf(1.0 / p_exp);
    let f_norm_over_mu = int_f.powf(1.0 / p_exp) / p.mu;
    Ok(W2pReport {
        p: p_exp,
        lhs,
        rhs,
        satisfied: lhs <= rhs * (1.0 + 1e-6),
        d2u_norm,
        f_norm_over_mu,
        norm_satisfied: d2u_norm <= f_norm_over_mu * (1.0 + 1e-6),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct H2Report {
    pub epsilon: f64,
    /// `(mu - eps) ||grad curl u||^2`.
    pub curl_term: f64,
    /// `(2 mu + lambda - eps) ||grad div u||^2`.
    pub div_term: f64,
    /// `||f||^2 / (4 eps)`.
    pub rhs_bound: f64,
    pub satisfied: bool,
}

/// `||grad w||^2` summed over components, for raw component arrays.
fn grad_sq(grid: &PeriodicGrid, comps: &[Vec<f64>]) -> f64 {
    comps
        .iter()
        .map(|c| {
            spectral::gradient(grid, c)
                .iter()
                .map(|gc| par::sum_by(gc.len(), |i| gc[i] * gc[i]))
                .sum::<f64>()
        })
        .sum::<f64>()
        * grid.cell_volume()
}

/// Components of `curl u`: one in 2D, three in 3D.
pub fn curl_components(u: &PeriodicField) -> Vec<Vec<f64>> {
    let g = *u.grid();
    let grads = u.gradient_components();
    let d = |c: usize, a: usize| &grads[c][a];
    let diff = |a: &Vec<f64>, b: &Vec<f64>| -> Vec<f64> { a.iter().zip(b).map(|(x, y)| x - y).collect() };
    match g.dim() {
        2 => vec![diff(d(1, 0), d(0, 1))],
        3 => vec![
            diff(d(2, 1), d(1, 2)),
            diff(d(0, 2), d(2, 0)),
            diff(d(1, 0), d(0, 1)),
        ],
        _ => Vec::new(),
    }
}

pub fn verify_h2(p: &FluidParams, u: &PeriodicField, f: &PeriodicField) -> Result<H2Report> {
    let g = *u.grid();
    if g.dim() < 2 {
        return Err(Error::GridMismatch("H^2 check needs dim 2 or 3".into()));
    }
    check_vector(u)?;
    let eps = 0.5 * p.mu;
    let curl = curl_components(u);
    let div = u.divergence()?.into_values();
    let curl_term = (p.mu - eps) * grad_sq(&g, &curl);
    let div_term = (2.0 * p.mu + p.lambda_ - eps) * grad_sq(&g, &[div]);
    let fn2 = f.dot(f);
    let rhs_bound = fn2 / (4.0 * eps);
    Ok(H2Report {
        epsilon: eps,
        curl_term,
        div_term,
        rhs_bound,
        satisfied: curl_term + div_term <= rhs_bound * (1.0 + 1e-6),
    })
}

/// Right-hand side `sqrt(rho0) g - a grad(rho0^gamma)` of the compatibility problem.
pub fn compat_rhs(p: &FluidParams, rho0: &PeriodicField, g: &PeriodicField) -> Result<PeriodicField> {
    rho0.grid().check_same(g.grid())?;
    check_vector(g)?;
    if rho0.rank() != Rank::Scalar {
        return Err(Error::InvalidField("density must be scalar".into()));
    }
    if rho0.min() < 0.0 {
        return Err(Error::InvalidField("initial density must be nonnegative".into()));
    }
    let pressure = rho0.map(|r| p.pressure(r));
    let gp = pressure.gradient()?;
    let n = rho0.grid().len();
    let sq = rho0.map(f64::sqrt);
    let mut out = g.clone();
    par::for_each_indexed(out.values_mut(), |i, v| {
        *v = sq.values()[i % n] * *v - gp.values()[i];
    });
    Ok(out.mean_zero_project())
}

/// Initial velocity solving `-div S_delta(D(u0)) = sqrt(rho0) g - grad p0`.
pub fn compat_init(p: &FluidParams, rho0: &PeriodicField, g: &PeriodicField) -> Result<PeriodicField> {
    Ok(compat_init_from(p, rho0, g, None, &NewtonOptions::default())?.u)
}

pub fn compat_init_from(
    p: &FluidParams,
    rho0: &PeriodicField,
    g: &PeriodicField,
    guess: Option<&PeriodicField>,
    opts: &NewtonOptions,
) -> Result<EllipticSolution> {
    let rhs = compat_rhs(p, rho0, g)?;
    let prob = EllipticProblem::new(*p, &rhs)?;
    solve_from(&prob, guess, opts)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(mu: f64, lambda_: f64, tau_star: f64, delta: f64, q: f64) -> FluidParams {
        FluidParams {
            mu,
            lambda_,
            tau_star,
            delta,
            q,
            ..FluidParams::default()
        }
    }

    #[test]
    fn operator_of_zero_and_constants() {
        let g = PeriodicGrid::standard(2, 16).unwrap();
        let p = params(1.0, 0.5, 1.0, 0.1, 1.0);
        let z = apply_operator(&p, &PeriodicField::zeros(g, Rank::Vector)).unwrap();
        assert_eq!(z.max_abs(), 0.0);
        let c = PeriodicField::vector_from_fn(g, |_| [2.0, -1.0, 0.0]);
        assert!(apply_operator(&p, &c).unwrap().max_abs() < 1e-13);
    }

    #[test]
    fn newtonian_sine_3d() {
        // -mu Lap u - (lambda+mu) grad div u for u = (sin x, 0, 0): (mu + lambda + mu) sin x
        let g = PeriodicGrid::standard(3, 8).unwrap();
        let p = params(1.0, 0.0, 0.0, 0.1, 1.0);
        let u = PeriodicField::vector_from_fn(g, |x| [x[0].sin(), 0.0, 0.0]);
        let a = apply_operator(&p, &u).unwrap();
        for i in 0..g.len() {
            let x = g.coords(i);
            assert!((a.component(0)[i] - 2.0 * x[0].sin()).abs() < 1e-12);
            assert!(a.component(1)[i].abs() < 1e-12);
        }
    }

    #[test]
    fn linearized_kills_constants() {
        let g = PeriodicGrid::standard(2, 16).unwrap();
        let p = params(1.0, 0.0, 1.0, 0.2, 1.5);
        let u = PeriodicField::vector_from_fn(g, |x| [x[1].sin(), (x[0] + x[1]).cos(), 0.0]);
        let v = PeriodicField::vector_from_fn(g, |_| [1.0, 3.0, 0.0]);
        assert!(apply_linearized(&p, &u, &v).unwrap().max_abs() < 1e-12);
    }

    #[test]
    fn zero_rhs_gives_zero() {
        let g = PeriodicGrid::standard(1, 32).unwrap();
        let prob = EllipticProblem::new(
            params(1.0, 0.0, 1.0, 0.1, 1.0),
            &PeriodicField::zeros(g, Rank::Vector),
        )
        .unwrap();
        let s = solve(&prob, 1e-10, 5).unwrap();
        assert_eq!(s.newton_iters, 0);
        assert_eq!(s.u.max_abs(), 0.0);
    }

    #[test]
    fn rejects_non_elliptic() {
        let g = PeriodicGrid::standard(1, 16).unwrap();
        let f = PeriodicField::zeros(g, Rank::Vector);
        assert!(EllipticProblem::new(params(1.0, -2.0, 1.0, 0.1, 1.0), &f).is_err());
    }

    #[test]
    fn energy_density_derivative_is_stress() {
        let p = params(0.7, 0.3, 1.2, 0.2, 1.5);
        let mut d = SymTensor::diag(&[0.3, -0.4]);
        d.set(0, 1, 0.25);
        let s = stress_delta(&p, &d).unwrap();
        let h = 1e-6;
        for (i, j) in [(0, 0), (1, 1), (0, 1)] {
            let mut e = SymTensor::zeros(2);
            e.set(i, j, 1.0);
            let fd = (strain_energy_density(&p, &d.axpy(h, &e)).unwrap()
                - strain_energy_density(&p, &d.axpy(-h, &e)).unwrap())
                / (2.0 * h);
            assert!((fd - s.contract(&e)).abs() < 1e-7);
        }
    }

    #[test]
    fn compat_init_trivial_cases() {
        let g = PeriodicGrid::standard(1, 32).unwrap();
        let p = params(1.0, 0.0, 1.0, 0.1, 1.0);
        let zero_g = PeriodicField::zeros(g, Rank::Vector);
        let u = compat_init(&p, &PeriodicField::constant(g, 1.3), &zero_g).unwrap();
        assert!(u.max_abs() < 1e-14);
        let u = compat_init(&p, &PeriodicField::constant(g, 0.0), &zero_g).unwrap();
        assert!(u.max_abs() < 1e-14);
    }
}
