//! Faedo-Galerkin time integration of the compressible power-law system
//!
//! ```text
//! rho_t + div(rho u) = 0
//! (rho u)_t + div(rho u (x) u) - div S_delta(D(u)) + grad(a rho^gamma) = rho f
//! ```
//!
//! Velocities live in the truncated Fourier space `X_m`; the density is kept
//! on the full grid. Each time step solves
//!
//! ```text
//! P_m(rho^{n+1} u^{n+1}) = P_m(rho^n u^n) + dt N(rho_mid, u_mid, f(t + dt/2))
//! ```
//!
//! by a fixed-point iteration, with `rho^{n+1}` transported by the velocity of
//! the previous iterate. Plain Picard contracts only for
//! `dt <~ rho / (viscosity m^2)`, so by default each iterate is corrected with
//! the linearized viscous operator (see [`StepOptions::linearized`]); the
//! fixed point and stopping rule are the same either way. Mass and kinetic energy enter through the mass operator
//! `M[rho] v = P_m(rho v)`, which is symmetric and bounded below by `inf rho`.

use serde::{Deserialize, Serialize};

use crate::constitutive::FluidParams;
use crate::diagnostics::{self, DiagnosticsRecord};
use crate::elliptic::{self, stress_field, tensor_divergence, Linearization, NewtonOptions};
use crate::error::{Error, Result};
use crate::field::{spectral, PeriodicField, PeriodicGrid, Rank};
use crate::krylov;
use crate::par;
use crate::transport::{self, advance_density_between};
use crate::SymTensor;

/// Velocity space: Fourier modes with `max_i |k_i| <= m`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GalerkinSpace {
    grid: PeriodicGrid,
    m: usize,
}

impl GalerkinSpace {
    pub fn new(grid: PeriodicGrid, m: usize) -> Result<Self> {
        if m == 0 || m >= grid.n() / 2 {
            return Err(Error::InvalidParams(format!(
                "retained modes m = {m} must satisfy 1 <= m < n/2 = {}",
                grid.n() / 2
            )));
        }
        Ok(Self { grid, m })
    }

    /// `m = n/4 - 1`, the largest cutoff for which `|u|^2` is resolved on the grid.
    pub fn dealiased(grid: PeriodicGrid) -> Self {
        Self {
            grid,
            m: grid.n() / 4 - 1,
        }
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn grid(&self) -> &PeriodicGrid {
        &self.grid
    }

    /// Number of retained real basis functions per component.
    pub fn dimension(&self) -> usize {
        (2 * self.m + 1).pow(self.grid.dim() as u32)
    }

    pub fn contains_mode(&self, flat: usize) -> bool {
        self.grid.max_frequency(flat) <= self.m
    }

    fn project_values(&self, v: &[f64]) -> Vec<f64> {
        let mut c = spectral::forward(&self.grid, v);
        spectral::apply_symbol(&mut c, |i| {
            if self.contains_mode(i) {
                num_complex::Complex64::new(1.0, 0.0)
            } else {
                num_complex::Complex64::new(0.0, 0.0)
            }
        });
        spectral::inverse_real(&self.grid, c)
    }

    /// Orthogonal projection `P_m`, componentwise.
    pub fn project(&self, f: &PeriodicField) -> PeriodicField {
        let comps: Vec<Vec<f64>> = (0..f.n_components())
            .map(|c| self.project_values(f.component(c)))
            .collect();
        PeriodicField::new(*f.grid(), f.rank(), comps.concat()).expect("shape preserved")
    }

    /// `||(I - P_m) f||_{L^2}`.
    pub fn leakage(&self, f: &PeriodicField) -> f64 {
        f.sub(&self.project(f)).map(|d| d.l2_norm()).unwrap_or(f64::INFINITY)
    }
}

/// Density and velocity at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct State {
    pub rho: PeriodicField,
    pub u: PeriodicField,
    pub t: f64,
}

impl State {
    pub fn new(rho: PeriodicField, u: PeriodicField, t: f64) -> Result<Self> {
        rho.grid().check_same(u.grid())?;
        if rho.rank() != Rank::Scalar || u.rank() != Rank::Vector {
            return Err(Error::InvalidField("state needs scalar rho and vector u".into()));
        }
        if rho.min() < 0.0 {
            return Err(Error::InvalidField("density must be nonnegative".into()));
        }
        Ok(Self { rho, u, t })
    }

    pub fn pressure(&self, p: &FluidParams) -> PeriodicField {
        self.rho.map(|r| p.pressure(r))
    }

    pub fn grid(&self) -> &PeriodicGrid {
        self.rho.grid()
    }
}

fn times_rho(rho: &PeriodicField, v: &PeriodicField) -> PeriodicField {
    let n = rho.grid().len();
    let r = rho.values();
    let mut out = v.clone();
    par::for_each_indexed(out.values_mut(), |i, x| *x *= r[i % n]);
    out
}

/// `M[rho] v = P_m(rho v)`.
pub fn mass_apply(space: &GalerkinSpace, rho: &PeriodicField, v: &PeriodicField) -> Result<PeriodicField> {
    rho.grid().check_same(v.grid())?;
    Ok(space.project(&times_rho(rho, v)))
}

/// Solves `M[rho] v = b` on `X_m` by CG to `||M v - b||_{L^2} <= tol`.
pub fn mass_solve(
    space: &GalerkinSpace,
    rho: &PeriodicField,
    b: &PeriodicField,
    tol: f64,
    rho_floor: f64,
) -> Result<PeriodicField> {
    rho.grid().check_same(b.grid())?;
    let inf = rho.min();
    if inf < rho_floor || inf <= 0.0 {
        return Err(Error::VacuumFloor {
            min: inf,
            floor: rho_floor,
        });
    }
    let mean = rho.mean()[0];
    let b = space.project(b);
    let shape = |v: &[f64]| PeriodicField::new(*b.grid(), b.rank(), v.to_vec()).expect("shape");
    let mut x = b.scale(1.0 / mean).into_values();
    let w = b.grid().cell_volume().sqrt();
    krylov::pcg(
        |v| Ok(mass_apply(space, rho, &shape(v))?.into_values()),
        |r| r.iter().map(|v| v / mean).collect(),
        b.values(),
        &mut x,
        tol / w,
        1000,
    )?;
    Ok(shape(&x))
}

/// `u_prev - (M[rho] - dt/2 P_m L(u_mid))^{-1} (M[rho] u_prev - rhs)`.
#[allow(clippy::too_many_arguments)]
fn linearized_update(
    space: &GalerkinSpace,
    p: &FluidParams,
    rho: &PeriodicField,
    u_prev: &PeriodicField,
    u_mid: &PeriodicField,
    rhs: &PeriodicField,
    dt: f64,
    tol: f64,
) -> Result<PeriodicField> {
    let g = *rho.grid();
    let resid = mass_apply(space, rho, u_prev)?.sub(rhs)?;
    let w = g.cell_volume().sqrt();
    let rn = resid.l2_norm();
    if rn == 0.0 {
        return Ok(u_prev.clone());
    }
    let lin = Linearization::new(p, u_mid)?;
    let half = 0.5 * dt;
    let mean_rho = rho.mean()[0];
    let visc = lin.mean_coefficient();
    let shape = |v: &[f64]| PeriodicField::new(g, Rank::Vector, v.to_vec()).expect("shape");
    let apply = |v: &[f64]| -> Result<Vec<f64>> {
        let v = shape(v);
        let mv = mass_apply(space, rho, &v)?;
        let lv = space.project(&lin.apply(&v));
        Ok(mv.axpy(-half, &lv)?.into_values())
    };
    let precond = |r: &[f64]| {
        let z = elliptic::shifted_newtonian_solve(half * visc, half * p.lambda_, mean_rho, &shape(r));
        space.project(&z).into_values()
    };
    let mut x = precond(resid.values());
    let inner = (1e-6 * rn).max(tol);
    match krylov::pcg(apply, precond, resid.values(), &mut x, inner / w, 500) {
        Ok(_) => {}
        Err(Error::NonConvergence { residual, .. }) if residual.is_finite() => {
            log::debug!("linearized correction stopped at residual {:e}", residual * w);
        }
        Err(e) => return Err(e),
    }
    u_prev.sub(&shape(&x))
}

/// `P_m [rho f - div(rho u (x) u) + div S_delta(D(u)) - grad(a rho^gamma)]`.
pub fn momentum_rhs(
    space: &GalerkinSpace,
    p: &FluidParams,
    rho: &PeriodicField,
    u: &PeriodicField,
    f_ext: &PeriodicField,
) -> Result<PeriodicField> {
    let g = *rho.grid();
    g.check_same(u.grid())?;
    g.check_same(f_ext.grid())?;
    let d = g.dim();
    let n = g.len();
    let stress = stress_field(p, u)?;
    let r = rho.values();
    let uv = u.values();
    let t: Vec<SymTensor> = par::map_range(n, |i| {
        let mut s = stress[i];
        for a in 0..d {
            for b in a..d {
                let flux = r[i] * uv[a * n + i] * uv[b * n + i];
                s.set(a, b, s.get(a, b) - flux);
            }
        }
        s
    });
    let div = tensor_divergence(&g, &t);
    let grad_p = rho.map(|x| p.pressure(x)).gradient()?;
    let body = times_rho(rho, f_ext);
    Ok(space.project(&div.add(&body)?.sub(&grad_p)?))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepOptions {
    /// Picard stops when `||u^(k) - u^(k-1)||_{L^2} <= fp_tol (1 + ||u^n||_{L^2})`.
    pub fp_tol: f64,
    pub fp_max: usize,
    /// Density floor applied under the mass operator only.
    pub rho_floor: f64,
    /// Replace the Picard update `u = M^{-1} rhs` with
    /// `u = u_prev - (M - dt/2 L)^{-1} (M u_prev - rhs)`, `L` the derivative of
    /// `P_m div S_delta` at `u_mid`.
    #[serde(default = "default_true")]
    pub linearized: bool,
}

fn default_true() -> bool {
    true
}

impl Default for StepOptions {
    fn default() -> Self {
        Self {
            fp_tol: 1e-12,
            fp_max: 50,
            rho_floor: 1e-8,
            linearized: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepInfo {
    pub fp_iters: usize,
    pub last_update: f64,
    pub clipped_mass: f64,
    /// True when the density floor was active somewhere.
    pub floored: bool,
}

/// One time step of length `dt`; `f_ext` is evaluated at `t + dt/2`.
pub fn step<F>(
    space: &GalerkinSpace,
    p: &FluidParams,
    state: &State,
    f_ext: &F,
    dt: f64,
    opts: &StepOptions,
) -> Result<(State, StepInfo)>
where
    F: Fn(f64) -> PeriodicField + ?Sized,
{
    if !(dt > 0.0) {
        return Err(Error::InvalidParams("dt must be positive".into()));
    }
    let f_mid = f_ext(state.t + 0.5 * dt);
    let base = mass_apply(space, &state.rho, &state.u)?;
    let scale = 1.0 + state.u.l2_norm();
    let tol = opts.fp_tol * scale;
    let mass_tol = 1e-3 * tol;
    let mut u_prev = state.u.clone();
    let mut last = f64::INFINITY;
    let mut prev_update = f64::INFINITY;
    let mut floored = false;
    for k in 1..=opts.fp_max {
        let adv = advance_density_between(&state.rho, &state.u, &u_prev, dt)?;
        let rho_mid = diagnostics::midpoint(&state.rho, &adv.rho)?;
        let u_mid = diagnostics::midpoint(&state.u, &u_prev)?;
        let rhs = base.axpy(dt, &momentum_rhs(space, p, &rho_mid, &u_mid, &f_mid)?)?;
        let floor = opts.rho_floor;
        if adv.rho.min() < floor {
            floored = true;
        }
        let rho_m = adv.rho.map(|r| r.max(floor));
        let u_new = if opts.linearized {
            linearized_update(space, p, &rho_m, &u_prev, &u_mid, &rhs, dt, mass_tol)?
        } else {
            mass_solve(space, &rho_m, &rhs, mass_tol, floor)?
        };
        let update = u_new.sub(&u_prev)?.l2_norm();
        if !update.is_finite() || (k > 2 && update > 2.0 * prev_update && update > tol) {
            return Err(Error::FixedPointDiverged { iter: k, delta: update });
        }
        prev_update = update;
        last = update;
        u_prev = u_new;
        if update <= tol {
            let fin = advance_density_between(&state.rho, &state.u, &u_prev, dt)?;
            let next = State {
                rho: fin.rho,
                u: u_prev,
                t: state.t + dt,
            };
            return Ok((
                next,
                StepInfo {
                    fp_iters: k,
                    last_update: update,
                    clipped_mass: fin.clipped,
                    floored,
                },
            ));
        }
    }
    Err(Error::FixedPointDiverged {
        iter: opts.fp_max,
        delta: last,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunOptions {
    pub dt: f64,
    pub t_end: f64,
    /// Snapshot every this many steps (the final state is always kept).
    pub output_every: usize,
    pub step: StepOptions,
    /// Abort with `Blowup` once `psi` exceeds this value.
    pub psi_max: f64,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            t_end: 0.1,
            output_every: 10,
            step: StepOptions::default(),
            psi_max: 1e6,
        }
    }
}

impl RunOptions {
    /// Number of uniform steps and the step actually used, `t_end / steps`.
    pub fn schedule(&self) -> (usize, f64) {
        let steps = ((self.t_end / self.dt) - 1e-9).ceil().max(1.0) as usize;
        (steps, self.t_end / steps as f64)
    }
}

/// Snapshots, per-step diagnostics and the reason a run stopped early.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub snapshots: Vec<State>,
    pub records: Vec<DiagnosticsRecord>,
    pub clipped_mass: f64,
    pub floor_hits: usize,
    pub failure: Option<Error>,
}

impl Trajectory {
    pub fn completed(&self) -> bool {
        self.failure.is_none()
    }

    pub fn last(&self) -> &State {
        self.snapshots.last().expect("trajectory holds the initial state")
    }

    pub fn into_result(self) -> Result<Trajectory> {
        match self.failure.clone() {
            Some(e) => Err(e),
            None => Ok(self),
        }
    }
}

fn make_record(
    p: &FluidParams,
    s: &State,
    u_t: &PeriodicField,
    fp_iters: usize,
    energy_residual: f64,
) -> Result<DiagnosticsRecord> {
    Ok(DiagnosticsRecord {
        t: s.t,
        mass: transport::total_mass(&s.rho),
        energy: diagnostics::total_energy(p, s),
        dissipation: diagnostics::dissipation(p, &s.u)?,
        psi: diagnostics::psi(p, s, u_t)?,
        j_min: diagnostics::j_integrand_min(p, &s.u, u_t)?,
        fp_iters,
        energy_residual,
    })
}

fn difference_quotient(a: &State, b: &State) -> Result<PeriodicField> {
    Ok(b.u.sub(&a.u)?.scale(1.0 / (b.t - a.t)))
}

/// Advances `state0` to `t_end`. Failures after the start (non-convergent
/// Picard iteration, blowup, excessive clipping) stop the run and are stored
/// in [`Trajectory::failure`] together with everything computed so far.
pub fn run<F>(
    space: &GalerkinSpace,
    p: &FluidParams,
    state0: &State,
    f_ext: F,
    opts: &RunOptions,
) -> Result<Trajectory>
where
    F: Fn(f64) -> PeriodicField,
{
    p.validate()?;
    space.grid().check_same(state0.grid())?;
    if !(opts.dt > 0.0 && opts.t_end > 0.0) || opts.output_every == 0 {
        return Err(Error::InvalidParams(
            "dt, t_end must be positive and output_every >= 1".into(),
        ));
    }
    let leak = space.leakage(&state0.u);
    let start = if leak > 1e-12 {
        log::warn!("initial velocity has {leak:e} outside the Galerkin space; projecting");
        State {
            u: space.project(&state0.u),
            ..state0.clone()
        }
    } else {
        state0.clone()
    };
    let (steps, dt) = opts.schedule();
    let mut traj = Trajectory {
        snapshots: vec![start.clone()],
        records: Vec::with_capacity(steps + 1),
        clipped_mass: 0.0,
        floor_hits: 0,
        failure: None,
    };
    let mut prev: Option<State> = None;
    let mut cur = start;
    let mut cur_iters = 0;
    let mut cur_residual = 0.0;
    for k in 0..steps {
        let (next, info) = match step(space, p, &cur, &f_ext, dt, &opts.step) {
            Ok(r) => r,
            Err(e) => {
                let u_t = match &prev {
                    Some(pv) => difference_quotient(pv, &cur)?,
                    None => PeriodicField::zeros(*cur.grid(), Rank::Vector),
                };
                traj.records.push(make_record(p, &cur, &u_t, cur_iters, cur_residual)?);
                traj.failure = Some(e);
                return Ok(traj);
            }
        };
        traj.clipped_mass += info.clipped_mass;
        traj.floor_hits += usize::from(info.floored);
        let u_t = match &prev {
            Some(pv) => next.u.sub(&pv.u)?.scale(1.0 / (next.t - pv.t)),
            None => difference_quotient(&cur, &next)?,
        };
        let rec = make_record(p, &cur, &u_t, cur_iters, cur_residual)?;
        traj.records.push(rec);
        if !(rec.psi <= opts.psi_max) {
            traj.failure = Some(Error::Blowup { t: cur.t, psi: rec.psi });
            return Ok(traj);
        }
        let f_mid = f_ext(cur.t + 0.5 * dt);
        cur_residual = diagnostics::ledger_step(p, &cur, &next, &f_mid)?;
        cur_iters = info.fp_iters;
        if (k + 1) % opts.output_every == 0 || k + 1 == steps {
            traj.snapshots.push(next.clone());
        }
        prev = Some(cur);
        cur = next;
    }
    let u_t = match &prev {
        Some(pv) => difference_quotient(pv, &cur)?,
        None => PeriodicField::zeros(*cur.grid(), Rank::Vector),
    };
    let rec = make_record(p, &cur, &u_t, cur_iters, cur_residual)?;
    traj.records.push(rec);
    if !(rec.psi <= opts.psi_max) {
        traj.failure = Some(Error::Blowup { t: cur.t, psi: rec.psi });
    }
    Ok(traj)
}

/// Builds compatible initial data with [`elliptic::compat_init_from`] and runs.
pub fn run_compatible<F>(
    space: &GalerkinSpace,
    p: &FluidParams,
    rho0: &PeriodicField,
    g: &PeriodicField,
    f_ext: F,
    opts: &RunOptions,
    newton: &NewtonOptions,
    guess: Option<&PeriodicField>,
) -> Result<(Trajectory, elliptic::EllipticSolution)>
where
    F: Fn(f64) -> PeriodicField,
{
    let init = elliptic::compat_init_from(p, rho0, g, guess, newton)?;
    let state0 = State::new(rho0.clone(), space.project(&init.u), 0.0)?;
    Ok((run(space, p, &state0, f_ext, opts)?, init))
}
