//! `delta`-continuation toward the one-dimensional Bingham limit.
//!
//! Each leg solves the regularized system with `q = 1`,
//! `S_delta = mu u_x + tau* u_x / sqrt(u_x^2 + delta^2)`, from compatible
//! initial data for that `delta`. Plugs are the grid runs where `|u_x|` falls
//! below a cutoff; on the final leg the stress is compared with the limit law
//! `|S| <= tau*` in plugs and `S = mu u_x + tau* sign(u_x)` elsewhere.

use serde::{Deserialize, Serialize};

use crate::constitutive::FluidParams;
use crate::elliptic::{self, EllipticSolution, NewtonOptions, W2pReport};
use crate::error::{Error, Result};
use crate::field::{PeriodicField, Rank};
use crate::par;
use crate::powerlaw::{self, GalerkinSpace, RunOptions, State, Trajectory};

/// Sub-threshold runs of grid nodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlugRegion {
    /// Sorted, disjoint `(x_lo, x_hi)` node coordinates inside `[0, L)`. A run
    /// through `x = 0` is reported as two intervals touching the ends.
    pub intervals: Vec<(f64, f64)>,
    pub threshold: f64,
    /// `(first node, node count)`, possibly wrapping past the last node.
    pub runs: Vec<(usize, usize)>,
    n: usize,
}

impl PlugRegion {
    pub fn is_empty(&self) -> bool {
        self.runs.is_empty()
    }

    pub fn contains_node(&self, i: usize) -> bool {
        self.runs
            .iter()
            .any(|&(s, len)| (i + self.n - s) % self.n < len)
    }

    pub fn node_count(&self) -> usize {
        self.runs.iter().map(|r| r.1).sum()
    }

    pub fn total_length(&self, h: f64) -> f64 {
        self.node_count() as f64 * h
    }
}

fn check_1d(u: &PeriodicField) -> Result<()> {
    if u.grid().dim() != 1 || u.rank() != Rank::Vector {
        return Err(Error::InvalidField("expected a 1D velocity field".into()));
    }
    Ok(())
}

fn strain_rate(u: &PeriodicField) -> Vec<f64> {
    u.derivative(0).into_values()
}

/// `max(10 delta_final, 1e-4 max|u_x|)`.
pub fn default_threshold(u: &PeriodicField, delta_final: f64) -> f64 {
    let ux = strain_rate(u);
    let m = ux.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    (10.0 * delta_final).max(1e-4 * m)
}

/// Maximal periodic runs of nodes with `|u_x| < threshold`.
pub fn detect_plugs(u: &PeriodicField, threshold: f64) -> Result<PlugRegion> {
    check_1d(u)?;
    if !(threshold > 0.0) {
        return Err(Error::InvalidParams("plug threshold must be positive".into()));
    }
    let g = *u.grid();
    let n = g.len();
    let h = g.spacing();
    let inside: Vec<bool> = strain_rate(u).iter().map(|v| v.abs() < threshold).collect();
    let mut runs = Vec::new();
    if inside.iter().all(|&b| b) {
        runs.push((0, n));
    } else if inside.iter().any(|&b| b) {
        // start scanning just after a flowing node so no run is cut in two
        let first_out = inside.iter().position(|&b| !b).expect("some node flows");
        let mut k = 0;
        while k < n {
            let i = (first_out + 1 + k) % n;
            if inside[i] {
                let mut len = 0;
                while len < n && inside[(i + len) % n] {
                    len += 1;
                }
                runs.push((i, len));
                k += len;
            } else {
                k += 1;
            }
        }
        runs.sort();
    }
    let mut intervals = Vec::new();
    for &(s, len) in &runs {
        let e = s + len - 1;
        if e < n {
            intervals.push((s as f64 * h, e as f64 * h));
        } else {
            intervals.push((0.0, (e - n) as f64 * h));
            intervals.push((s as f64 * h, (n - 1) as f64 * h));
        }
    }
    intervals.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(PlugRegion {
        intervals,
        threshold,
        runs,
        n,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct YieldReport {
    /// `max(|S_delta| - tau*, 0)` over plug nodes.
    pub max_plug_stress_excess: f64,
    /// `max |S_delta - (mu u_x + tau* sign u_x)|` over flowing nodes.
    pub max_flow_law_residual: f64,
    /// `tau* delta^2 / (2 min_flow |u_x|^2)`.
    pub flow_law_bound: f64,
    /// Smallest `|u_x|` outside the plugs (infinite if there are none).
    pub min_flow_strain: f64,
    pub plug_nodes: usize,
    pub flow_nodes: usize,
}

/// Compares the regularized stress of `u` with the Bingham law.
pub fn verify_yield(
    p: &FluidParams,
    u: &PeriodicField,
    delta_final: f64,
    plugs: &PlugRegion,
) -> Result<YieldReport> {
    check_1d(u)?;
    let ux = strain_rate(u);
    let d2 = delta_final * delta_final;
    let mut excess: f64 = 0.0;
    let mut resid: f64 = 0.0;
    let mut min_flow = f64::INFINITY;
    let mut plug_nodes = 0;
    for (i, &s) in ux.iter().enumerate() {
        let reg = if p.tau_star == 0.0 {
            0.0
        } else {
            p.tau_star * s / (s * s + d2).sqrt()
        };
        let stress = p.mu * s + reg;
        if plugs.contains_node(i) {
            plug_nodes += 1;
            excess = excess.max(stress.abs() - p.tau_star);
        } else {
            min_flow = min_flow.min(s.abs());
            let limit = p.mu * s + p.tau_star * s.signum();
            resid = resid.max((stress - limit).abs());
        }
    }
    let bound = if min_flow.is_finite() && min_flow > 0.0 {
        p.tau_star * d2 / (2.0 * min_flow * min_flow)
    } else {
        f64::INFINITY
    };
    Ok(YieldReport {
        max_plug_stress_excess: excess.max(0.0),
        max_flow_law_residual: resid,
        flow_law_bound: bound,
        min_flow_strain: min_flow,
        plug_nodes,
        flow_nodes: ux.len() - plug_nodes,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContinuationOptions {
    pub run: RunOptions,
    pub newton: NewtonOptions,
    /// Seed each compatibility solve with the previous leg's solution. Legs
    /// run one after another; without it they run concurrently.
    pub warm_start: bool,
    /// Plug cutoff; `None` uses [`default_threshold`] with the final `delta`.
    pub threshold: Option<f64>,
}

impl Default for ContinuationOptions {
    fn default() -> Self {
        Self {
            run: RunOptions::default(),
            newton: NewtonOptions::default(),
            warm_start: true,
            threshold: None,
        }
    }
}

/// Outcome of one `delta` leg.
#[derive(Debug, Clone)]
pub struct Leg {
    pub delta: f64,
    pub params: FluidParams,
    /// Compatibility solve; `None` if it failed.
    pub init: Option<EllipticSolution>,
    /// `W^{2,2}` check of the compatibility solve.
    pub w2p: Option<W2pReport>,
    pub trajectory: Option<Trajectory>,
    pub failure: Option<Error>,
    pub plugs: Option<PlugRegion>,
    pub yield_report: Option<YieldReport>,
}

impl Leg {
    pub fn completed(&self) -> bool {
        self.failure.is_none()
    }

    pub fn final_state(&self) -> Option<&State> {
        if !self.completed() {
            return None;
        }
        self.trajectory.as_ref().map(|t| t.last())
    }
}

#[derive(Debug, Clone)]
pub struct ContinuationResult {
    pub deltas: Vec<f64>,
    pub legs: Vec<Leg>,
    /// `||u_{delta_k} - u_{delta_j}||_{L^2}` at `t_end` for consecutive
    /// completed legs `(k, j)` listed in `gap_pairs`.
    pub cauchy_gaps: Vec<f64>,
    pub gap_pairs: Vec<(usize, usize)>,
    pub threshold: f64,
}

impl ContinuationResult {
    pub fn final_leg(&self) -> Option<&Leg> {
        self.legs.iter().rev().find(|l| l.completed())
    }
}

fn run_leg(
    space: &GalerkinSpace,
    p: FluidParams,
    rho0: &PeriodicField,
    g: &PeriodicField,
    f_ext: &(dyn Fn(f64) -> PeriodicField + Sync),
    opts: &ContinuationOptions,
    guess: Option<&PeriodicField>,
) -> Leg {
    let mut leg = Leg {
        delta: p.delta,
        params: p,
        init: None,
        w2p: None,
        trajectory: None,
        failure: None,
        plugs: None,
        yield_report: None,
    };
    let init = match elliptic::compat_init_from(&p, rho0, g, guess, &opts.newton) {
        Ok(s) => s,
        Err(e) => {
            log::warn!("delta = {}: compatibility solve failed: {e}", p.delta);
            leg.failure = Some(e);
            return leg;
        }
    };
    leg.w2p = elliptic::compat_rhs(&p, rho0, g)
        .and_then(|f| elliptic::verify_w2p_1d(&p, &init.u, &f, 2.0))
        .ok();
    let state0 = State::new(rho0.clone(), space.project(&init.u), 0.0);
    let traj = state0.and_then(|s| powerlaw::run(space, &p, &s, f_ext, &opts.run));
    leg.init = Some(init);
    match traj {
        Ok(t) => {
            if let Some(e) = &t.failure {
                log::warn!("delta = {}: leg failed: {e}", p.delta);
                leg.failure = Some(e.clone());
            }
            leg.trajectory = Some(t);
        }
        Err(e) => leg.failure = Some(e),
    }
    leg
}

/// Runs one leg per `delta` in `schedule` (strictly decreasing, positive).
/// Failed legs are kept with their error; they do not stop the others.
pub fn continuation(
    space: &GalerkinSpace,
    p_base: &FluidParams,
    rho0: &PeriodicField,
    g: &PeriodicField,
    f_ext: &(dyn Fn(f64) -> PeriodicField + Sync),
    schedule: &[f64],
    opts: &ContinuationOptions,
) -> Result<ContinuationResult> {
    if space.grid().dim() != 1 {
        return Err(Error::InvalidParams("continuation is one-dimensional".into()));
    }
    if schedule.is_empty() || schedule.iter().any(|d| !(*d > 0.0)) {
        return Err(Error::InvalidParams("delta schedule must be nonempty and positive".into()));
    }
    if schedule.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidParams("delta schedule must be strictly decreasing".into()));
    }
    for d in schedule {
        p_base.with_delta(*d).validate()?;
    }
    let mut legs: Vec<Leg> = if opts.warm_start {
        let mut out: Vec<Leg> = Vec::with_capacity(schedule.len());
        for &d in schedule {
            let guess = out
                .iter()
                .rev()
                .find_map(|l| l.init.as_ref().map(|s| s.u.clone()));
            out.push(run_leg(space, p_base.with_delta(d), rho0, g, f_ext, opts, guess.as_ref()));
        }
        out
    } else {
        par::map_tasks(schedule.len(), |k| {
            run_leg(space, p_base.with_delta(schedule[k]), rho0, g, f_ext, opts, None)
        })
    };

    let delta_final = *schedule.last().expect("nonempty");
    let threshold = match opts.threshold {
        Some(t) => t,
        None => legs
            .iter()
            .rev()
            .find_map(|l| l.final_state().map(|s| default_threshold(&s.u, delta_final)))
            .unwrap_or(10.0 * delta_final),
    };
    for leg in &mut legs {
        let Some(s) = leg.final_state() else { continue };
        let plugs = detect_plugs(&s.u, threshold)?;
        leg.yield_report = Some(verify_yield(&leg.params, &s.u, leg.delta, &plugs)?);
        leg.plugs = Some(plugs);
    }

    let done: Vec<usize> = (0..legs.len()).filter(|&k| legs[k].completed()).collect();
    let mut cauchy_gaps = Vec::new();
    let mut gap_pairs = Vec::new();
    for w in done.windows(2) {
        let a = legs[w[0]].final_state().expect("completed");
        let b = legs[w[1]].final_state().expect("completed");
        cauchy_gaps.push(a.u.sub(&b.u)?.l2_norm());
        gap_pairs.push((w[0], w[1]));
    }
    Ok(ContinuationResult {
        deltas: schedule.to_vec(),
        legs,
        cauchy_gaps,
        gap_pairs,
        threshold,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::PeriodicGrid;

    #[test]
    fn constant_is_one_plug() {
        let g = PeriodicGrid::standard(1, 32).unwrap();
        let u = PeriodicField::vector_from_fn(g, |_| [0.7, 0.0, 0.0]);
        let r = detect_plugs(&u, 1e-3).unwrap();
        assert_eq!(r.runs, vec![(0, 32)]);
        assert_eq!(r.intervals, vec![(0.0, 31.0 * g.spacing())]);
    }

    #[test]
    fn wrapping_run_is_split() {
        // u_x = cos x vanishes nowhere near 0, but u_x = sin x does
        let g = PeriodicGrid::standard(1, 64).unwrap();
        let u = PeriodicField::vector_from_fn(g, |x| [-x[0].cos(), 0.0, 0.0]);
        let r = detect_plugs(&u, 0.2).unwrap();
        assert_eq!(r.runs.len(), 2);
        assert!(r.contains_node(0) && r.contains_node(63) && r.contains_node(1));
        assert_eq!(r.intervals.len(), 3);
        assert_eq!(r.intervals[0].0, 0.0);
    }

    #[test]
    fn rejects_bad_schedule() {
        let g = PeriodicGrid::standard(1, 16).unwrap();
        let sp = GalerkinSpace::dealiased(g);
        let rho = PeriodicField::constant(g, 1.0);
        let z = PeriodicField::zeros(g, Rank::Vector);
        let f = |_t: f64| PeriodicField::zeros(g, Rank::Vector);
        let p = FluidParams::default();
        let o = ContinuationOptions::default();
        assert!(continuation(&sp, &p, &rho, &z, &f, &[0.1, 0.2], &o).is_err());
        assert!(continuation(&sp, &p, &rho, &z, &f, &[], &o).is_err());
    }
}
