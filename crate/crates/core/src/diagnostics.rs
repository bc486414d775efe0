//! Monitored quantities along a trajectory: energy ledger, the monitor
//! function `psi`, the time-derivative dissipation integrand, and the
//! distance functional used for uniqueness.

use serde::{Deserialize, Serialize};

use crate::constitutive::{j_form, nonlinear_factor, FluidParams};
use crate::elliptic::strain_field;
use crate::error::{Error, Result};
use crate::field::{lp_norm_of, PeriodicField, Rank};
use crate::par;
use crate::powerlaw::State;

/// One row of the diagnostics time series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub mass: f64,
    pub energy: f64,
    pub dissipation: f64,
    pub psi: f64,
    pub j_min: f64,
    /// Picard iterations of the step that ended at `t` (0 at the start).
    pub fp_iters: usize,
    /// Energy ledger residual of the step that ended at `t` (0 at the start).
    pub energy_residual: f64,
}

pub const CSV_HEADER: [&str; 8] = [
    "t",
    "mass",
    "energy",
    "dissipation",
    "psi",
    "j_min",
    "fp_iters",
    "energy_residual",
];

/// `1/2 int rho |u|^2`.
pub fn kinetic_energy(rho: &PeriodicField, u: &PeriodicField) -> f64 {
    let n = rho.grid().len();
    let r = rho.values();
    let uv = u.values();
    let nc = u.n_components();
    0.5 * par::sum_by(n, |i| r[i] * (0..nc).map(|c| uv[c * n + i].powi(2)).sum::<f64>())
        * rho.grid().cell_volume()
}

/// `a/(gamma-1) int rho^gamma`.
pub fn internal_energy(p: &FluidParams, rho: &PeriodicField) -> f64 {
    let r = rho.values();
    p.a / (p.gamma_ - 1.0)
        * par::sum_by(r.len(), |i| r[i].max(0.0).powf(p.gamma_))
        * rho.grid().cell_volume()
}

pub fn total_energy(p: &FluidParams, s: &State) -> f64 {
    kinetic_energy(&s.rho, &s.u) + internal_energy(p, &s.rho)
}

/// `mu ||grad u||^2 + (lambda + mu) ||div u||^2 + tau* int B^((q-2)/2) |D(u)|^2`
/// (in 1D: `mu ||u_x||^2 + tau* int B^((q-2)/2) u_x^2`).
pub fn dissipation(p: &FluidParams, u: &PeriodicField) -> Result<f64> {
    let g = *u.grid();
    let w = g.cell_volume();
    let grads = u.gradient_components();
    let grad_sq: f64 = grads
        .iter()
        .flat_map(|gc| gc.iter())
        .map(|v| par::sum_by(v.len(), |i| v[i] * v[i]))
        .sum::<f64>()
        * w;
    let mut total = p.mu * grad_sq;
    if g.dim() > 1 {
        let div = u.divergence()?;
        total += (p.lambda_ + p.mu) * div.dot(&div);
    }
    if p.tau_star != 0.0 {
        let d = strain_field(u);
        let terms: Vec<f64> = par::map_slice(&d, |di| -> Result<f64> {
            let d2 = di.frobenius_sq();
            Ok(nonlinear_factor(p, d2 + p.delta * p.delta)? * d2)
        })
        .into_iter()
        .collect::<Result<_>>()?;
        total += p.tau_star * par::sum(&terms) * w;
    }
    Ok(total)
}

/// `int rho f . u`.
pub fn forcing_work(rho: &PeriodicField, f: &PeriodicField, u: &PeriodicField) -> f64 {
    let n = rho.grid().len();
    let (r, fv, uv) = (rho.values(), f.values(), u.values());
    let nc = u.n_components();
    par::sum_by(n, |i| {
        r[i] * (0..nc).map(|c| fv[c * n + i] * uv[c * n + i]).sum::<f64>()
    }) * rho.grid().cell_volume()
}

/// `||grad u||_{L^2}^2` summed over components.
pub fn grad_l2_sq(u: &PeriodicField) -> f64 {
    u.gradient_components()
        .iter()
        .flat_map(|gc| gc.iter())
        .map(|v| par::sum_by(v.len(), |i| v[i] * v[i]))
        .sum::<f64>()
        * u.grid().cell_volume()
}

/// `psi = 1 + ||grad u||^2 + ||sqrt(rho) u_t||^2 + ||p||_{W^{1,6}}`.
pub fn psi(p: &FluidParams, s: &State, u_t: &PeriodicField) -> Result<f64> {
    s.rho.grid().check_same(u_t.grid())?;
    let pressure = s.rho.map(|r| p.pressure(r));
    let kin_t = 2.0 * kinetic_energy(&s.rho, u_t);
    Ok(1.0 + grad_l2_sq(&s.u) + kin_t + pressure.sobolev_norm(1, 6.0))
}

/// Pointwise minimum of `B^((q-4)/2) ((q-1)|D(u)|^2 + delta^2) |D(u_t)|^2`.
pub fn j_integrand_min(p: &FluidParams, u: &PeriodicField, u_t: &PeriodicField) -> Result<f64> {
    let d = strain_field(u);
    let e = strain_field(u_t);
    let vals: Vec<f64> = par::map_range(d.len(), |i| j_form(p, &d[i], &e[i]))
        .into_iter()
        .collect::<Result<_>>()?;
    Ok(vals.into_iter().fold(f64::INFINITY, f64::min))
}

/// `(s0 + s1) / 2` componentwise.
pub fn midpoint(a: &PeriodicField, b: &PeriodicField) -> Result<PeriodicField> {
    Ok(a.add(b)?.scale(0.5))
}

/// Residual of one step: `E1 - E0 + dt D(u_mid) - dt int rho_mid f_mid . u_mid`.
pub fn ledger_step(
    p: &FluidParams,
    s0: &State,
    s1: &State,
    f_mid: &PeriodicField,
) -> Result<f64> {
    let dt = s1.t - s0.t;
    let u_mid = midpoint(&s0.u, &s1.u)?;
    let rho_mid = midpoint(&s0.rho, &s1.rho)?;
    let de = total_energy(p, s1) - total_energy(p, s0);
    Ok(de + dt * dissipation(p, &u_mid)? - dt * forcing_work(&rho_mid, f_mid, &u_mid))
}

/// Per-step ledger residuals of consecutive states with forcing `f_ext(t)`.
pub fn energy_ledger<F>(states: &[State], p: &FluidParams, f_ext: F) -> Result<Vec<f64>>
where
    F: Fn(f64) -> PeriodicField,
{
    states
        .windows(2)
        .map(|w| ledger_step(p, &w[0], &w[1], &f_ext(0.5 * (w[0].t + w[1].t))))
        .collect()
}

/// `u_t` at snapshot `k` by centered differences, one-sided at the ends.
pub fn time_derivative(states: &[State], k: usize) -> Result<PeriodicField> {
    let n = states.len();
    if n < 2 {
        return Ok(PeriodicField::zeros(*states[k].u.grid(), Rank::Vector));
    }
    let (a, b) = if k == 0 {
        (0, 1)
    } else if k == n - 1 {
        (n - 2, n - 1)
    } else {
        (k - 1, k + 1)
    };
    let dt = states[b].t - states[a].t;
    Ok(states[b].u.sub(&states[a].u)?.scale(1.0 / dt))
}

/// `int rho1 |u1 - u2|^2 + ||rho1 - rho2||_{L^{3/2}}^2 + ||p1 - p2||_{L^2}^2`.
pub fn uniqueness_distance(s1: &State, s2: &State, p: &FluidParams) -> Result<f64> {
    s1.rho.grid().check_same(s2.rho.grid())?;
    let z = s1.u.sub(&s2.u)?;
    let theta = s1.rho.sub(&s2.rho)?;
    let pi = s1.rho.map(|r| p.pressure(r)).sub(&s2.rho.map(|r| p.pressure(r)))?;
    Ok(2.0 * kinetic_energy(&s1.rho, &z) + theta.lp_norm(1.5).powi(2) + pi.dot(&pi))
}

/// Integrands of the uniqueness Gronwall argument with unit constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GronwallRates {
    /// `2 ||grad ubar||_inf + ||h||_6^2 + 1/mu`, `h = f - ubar_t - ubar . grad ubar`.
    pub m: f64,
    /// `||theta||_6 + ||rho||_6^2 + ||grad rhobar||_2^2 + ||grad ubar||_inf`.
    pub n: f64,
    /// `||pi||_inf + ||p||_inf + ||grad pbar||_3 + gamma ||grad ubar||_inf`.
    pub k: f64,
}

impl GronwallRates {
    pub fn total(&self) -> f64 {
        self.m + self.n + self.k
    }
}

/// Rates for the ordered pair `(s, sbar)`; `ubar_t` is the time derivative of
/// `sbar.u` and `f` the forcing at that time.
pub fn gronwall_rates(
    p: &FluidParams,
    s: &State,
    sbar: &State,
    ubar_t: &PeriodicField,
    f: &PeriodicField,
) -> Result<GronwallRates> {
    let g = *s.rho.grid();
    g.check_same(sbar.rho.grid())?;
    let n = g.len();
    let d = g.dim();
    let grads = sbar.u.gradient_components();
    let grad_inf = par::max_by(n, |i| {
        let mut s2 = 0.0;
        for c in 0..d {
            for a in 0..d {
                s2 += grads[c][a][i].powi(2);
            }
        }
        s2.sqrt()
    });
    // h = f - ubar_t - (ubar . grad) ubar
    let ub = sbar.u.values();
    let h: Vec<f64> = par::map_range(d * n, |ci| {
        let (c, i) = (ci / n, ci % n);
        let adv: f64 = (0..d).map(|a| ub[a * n + i] * grads[c][a][i]).sum();
        f.values()[ci] - ubar_t.values()[ci] - adv
    });
    let h = PeriodicField::new(g, Rank::Vector, h)?;
    let m = 2.0 * grad_inf + h.lp_norm(6.0).powi(2) + 1.0 / p.mu;

    let theta = s.rho.sub(&sbar.rho)?;
    let grad_rhobar = sbar.rho.gradient()?;
    let nn = theta.lp_norm(6.0) + s.rho.lp_norm(6.0).powi(2) + grad_rhobar.lp_norm(2.0).powi(2) + grad_inf;

    let pr = s.rho.map(|r| p.pressure(r));
    let prbar = sbar.rho.map(|r| p.pressure(r));
    let pi = pr.sub(&prbar)?;
    let grad_pbar = prbar.gradient()?;
    let k = pi.lp_norm(f64::INFINITY)
        + pr.lp_norm(f64::INFINITY)
        + lp_norm_of(&g, &grad_pbar.modulus(), 3.0)
        + p.gamma_ * grad_inf;
    if !(m.is_finite() && nn.is_finite() && k.is_finite()) {
        return Err(Error::InvalidField("non-finite Gronwall rate".into()));
    }
    Ok(GronwallRates { m, n: nn, k })
}
