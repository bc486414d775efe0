//! Conservative transport of the density, `rho_t + div(rho u) = 0`.
//!
//! Spatial flux divergence is spectral, time stepping is the two-stage SSP
//! Runge-Kutta (Heun) scheme. The spectral divergence has no mean component,
//! so the discrete mass is invariant up to roundoff.

use serde::{Deserialize, Serialize};

use crate::constitutive::FluidParams;
use crate::error::{Error, Result};
use crate::field::{spectral, PeriodicField, Rank};
use crate::par;

/// Relative clipped mass above which a step is rejected.
pub const CLIP_TOLERANCE: f64 = 1e-8;

/// Largest stable step, `0.5 h / max|u|` (infinite for `u = 0`).
pub fn cfl_limit(u: &PeriodicField) -> f64 {
    let m = par::max_by(u.grid().len(), |i| {
        let n = u.grid().len();
        (0..u.n_components())
            .map(|c| u.values()[c * n + i].abs())
            .fold(0.0, f64::max)
    });
    if m <= 0.0 {
        f64::INFINITY
    } else {
        0.5 * u.grid().spacing() / m
    }
}

/// `div(rho u)` with spectral derivatives.
pub fn flux_divergence(rho: &PeriodicField, u: &PeriodicField) -> Vec<f64> {
    let g = *rho.grid();
    let r = rho.values();
    let fluxes: Vec<Vec<f64>> = (0..g.dim())
        .map(|c| {
            let uc = u.component(c);
            par::map_range(g.len(), |i| r[i] * uc[i])
        })
        .collect();
    let refs: Vec<&[f64]> = fluxes.iter().map(|v| v.as_slice()).collect();
    spectral::divergence(&g, &refs)
}

pub fn total_mass(rho: &PeriodicField) -> f64 {
    rho.integral()[0]
}

/// Result of one transport step.
#[derive(Debug, Clone)]
pub struct Advected {
    pub rho: PeriodicField,
    /// Mass removed from negative nodes before renormalization.
    pub clipped: f64,
}

fn check_inputs(rho: &PeriodicField, u: &PeriodicField) -> Result<()> {
    rho.grid().check_same(u.grid())?;
    if rho.rank() != Rank::Scalar || u.rank() != Rank::Vector {
        return Err(Error::InvalidField("transport needs scalar rho and vector u".into()));
    }
    Ok(())
}

/// One step with a frozen velocity.
pub fn advance_density(rho: &PeriodicField, u: &PeriodicField, dt: f64) -> Result<PeriodicField> {
    Ok(advance_density_between(rho, u, u, dt)?.rho)
}

/// One Heun step where the first stage uses `u_start` and the second `u_end`.
///
/// Negative nodes produced by dispersive ringing are clipped to zero and the
/// remaining values rescaled so the total mass is unchanged. The step fails if
/// the clipped mass exceeds [`CLIP_TOLERANCE`] of the total.
pub fn advance_density_between(
    rho: &PeriodicField,
    u_start: &PeriodicField,
    u_end: &PeriodicField,
    dt: f64,
) -> Result<Advected> {
    check_inputs(rho, u_start)?;
    check_inputs(rho, u_end)?;
    if !(dt > 0.0) {
        return Err(Error::InvalidParams("dt must be positive".into()));
    }
    let limit = cfl_limit(u_start).min(cfl_limit(u_end));
    if dt > limit * (1.0 + 1e-12) {
        return Err(Error::CflViolation { dt, limit });
    }
    let g = *rho.grid();
    let r0 = rho.values();
    let d0 = flux_divergence(rho, u_start);
    let r1 = PeriodicField::new(g, Rank::Scalar, par::map_range(g.len(), |i| r0[i] - dt * d0[i]))?;
    let d1 = flux_divergence(&r1, u_end);
    let r1v = r1.values();
    let mut out: Vec<f64> =
        par::map_range(g.len(), |i| 0.5 * r0[i] + 0.5 * (r1v[i] - dt * d1[i]));

    let mass_before = par::sum(&out);
    let negative = -par::sum_by(out.len(), |i| out[i].min(0.0));
    let mut clipped = 0.0;
    if negative > 0.0 {
        clipped = negative * g.cell_volume();
        let total = par::sum_by(r0.len(), |i| r0[i].abs()) * g.cell_volume();
        if clipped > CLIP_TOLERANCE * total {
            return Err(Error::ClippedMass { clipped, total });
        }
        par::for_each_indexed(&mut out, |_, v| *v = v.max(0.0));
        let mass_after = par::sum(&out);
        if mass_after > 0.0 {
            let s = mass_before / mass_after;
            par::for_each_indexed(&mut out, |_, v| *v *= s);
        }
        log::debug!("clipped density mass {clipped:e}");
    }
    Ok(Advected {
        rho: PeriodicField::new(g, Rank::Scalar, out)?,
        clipped,
    })
}

/// Density snapshots with their time stamps.
#[derive(Debug, Clone, Default)]
pub struct DensityPath {
    pub times: Vec<f64>,
    pub snapshots: Vec<PeriodicField>,
}

impl DensityPath {
    pub fn push(&mut self, t: f64, rho: PeriodicField) {
        self.times.push(t);
        self.snapshots.push(rho);
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundsReport {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    /// Largest amount by which a snapshot leaves its envelope.
    pub max_violation: f64,
    /// `max_violation / sup rho0`.
    pub relative_violation: f64,
}

/// Checks `inf rho0 e^{-int ||div u||_inf} <= rho <= sup rho0 e^{int ||div u||_inf}`
/// with the time integral by the trapezoidal rule over the snapshot times.
pub fn density_bounds_check(
    path: &DensityPath,
    u_path: &[PeriodicField],
    rho0: &PeriodicField,
) -> Result<BoundsReport> {
    if u_path.len() != path.len() {
        return Err(Error::GridMismatch(format!(
            "{} velocity snapshots for {} density snapshots",
            u_path.len(),
            path.len()
        )));
    }
    let div_inf: Vec<f64> = u_path
        .iter()
        .map(|u| u.divergence().map(|d| d.max_abs()))
        .collect::<Result<_>>()?;
    let (lo0, hi0) = (rho0.min(), rho0.max());
    let mut acc = 0.0;
    let mut lower = Vec::with_capacity(path.len());
    let mut upper = Vec::with_capacity(path.len());
    let mut worst: f64 = 0.0;
    for k in 0..path.len() {
        if k > 0 {
            acc += 0.5 * (div_inf[k] + div_inf[k - 1]) * (path.times[k] - path.times[k - 1]);
        }
        let lo = lo0 * (-acc).exp();
        let hi = hi0 * acc.exp();
        let r = &path.snapshots[k];
        worst = worst.max(lo - r.min()).max(r.max() - hi);
        lower.push(lo);
        upper.push(hi);
    }
    let scale = if hi0 > 0.0 { hi0 } else { 1.0 };
    Ok(BoundsReport {
        lower,
        upper,
        max_violation: worst,
        relative_violation: worst / scale,
    })
}

/// `||p_t + div(p u) + (gamma - 1) p div u||_{L^2}` at every interior snapshot,
/// with `p = a rho^gamma` and `p_t` by centered differences.
pub fn pressure_residual(
    params: &FluidParams,
    path: &DensityPath,
    u_path: &[PeriodicField],
) -> Result<Vec<f64>> {
    if u_path.len() != path.len() {
        return Err(Error::GridMismatch("velocity and density paths differ in length".into()));
    }
    let pressure: Vec<PeriodicField> = path
        .snapshots
        .iter()
        .map(|r| r.map(|v| params.pressure(v)))
        .collect();
    let mut out = Vec::new();
    for k in 1..path.len().saturating_sub(1) {
        let dt = path.times[k + 1] - path.times[k - 1];
        let pt = pressure[k + 1].sub(&pressure[k - 1])?.scale(1.0 / dt);
        let u = &u_path[k];
        let pk = &pressure[k];
        let flux = flux_divergence(pk, u);
        let div = u.divergence()?;
        let gm1 = params.gamma_ - 1.0;
        let v = par::map_range(pk.grid().len(), |i| {
            pt.values()[i] + flux[i] + gm1 * pk.values()[i] * div.values()[i]
        });
        out.push(PeriodicField::new(*pk.grid(), Rank::Scalar, v)?.l2_norm());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::PeriodicGrid;

    #[test]
    fn zero_velocity_leaves_density() {
        let g = PeriodicGrid::standard(1, 32).unwrap();
        let rho = PeriodicField::scalar_from_fn(g, |x| 1.0 + 0.5 * x[0].sin());
        let u = PeriodicField::zeros(g, Rank::Vector);
        let out = advance_density(&rho, &u, 0.1).unwrap();
        assert_eq!(out, rho);
    }

    #[test]
    fn cfl_violation() {
        let g = PeriodicGrid::standard(1, 32).unwrap();
        let rho = PeriodicField::constant(g, 1.0);
        let u = PeriodicField::vector_from_fn(g, |_| [2.0, 0.0, 0.0]);
        let lim = cfl_limit(&u);
        assert!((lim - 0.25 * g.spacing()).abs() < 1e-15);
        let err = advance_density(&rho, &u, 2.0 * lim).unwrap_err();
        assert!(matches!(err, Error::CflViolation { .. }));
    }

    #[test]
    fn mass_is_conserved_2d() {
        let g = PeriodicGrid::standard(2, 32).unwrap();
        let rho = PeriodicField::scalar_from_fn(g, |x| 1.0 + 0.3 * (x[0] + 2.0 * x[1]).cos());
        let u = PeriodicField::vector_from_fn(g, |x| [x[0].sin(), 0.5 * x[1].cos(), 0.0]);
        let m0 = total_mass(&rho);
        let out = advance_density(&rho, &u, 0.5 * cfl_limit(&u)).unwrap();
        assert!((total_mass(&out) - m0).abs() <= 1e-12 * m0);
    }

    #[test]
    fn static_envelopes() {
        let g = PeriodicGrid::standard(1, 16).unwrap();
        let rho = PeriodicField::scalar_from_fn(g, |x| 2.0 + x[0].cos());
        let mut path = DensityPath::default();
        path.push(0.0, rho.clone());
        path.push(0.5, rho.clone());
        let u = vec![PeriodicField::zeros(g, Rank::Vector); 2];
        let rep = density_bounds_check(&path, &u, &rho).unwrap();
        assert_eq!(rep.max_violation, 0.0);
        assert!((rep.lower[1] - rho.min()).abs() < 1e-15);
        assert!((rep.upper[1] - rho.max()).abs() < 1e-15);
    }
}
