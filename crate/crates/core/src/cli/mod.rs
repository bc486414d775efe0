//! Configuration, subcommand dispatch and run artifacts.
//!
//! Every subcommand writes into one output directory:
//!
//! - `manifest.json`: resolved config, solver decisions, versions, timings;
//! - `report.json` (elliptic) or `summary.json` (others);
//! - CSV data: `solution.csv`, `trajectory.csv`, `diagnostics.csv`, or
//!   `leg<k>_*.csv` per continuation leg.
//!
//! Data files depend only on the config and seed. Timings live in the
//! manifest alone.

mod config;

pub use config::{
    parse_config, parse_config_str, GridConfig, InitConfig, RunConfig, ScheduleConfig,
    SolverConfig, Subcommand, TimeConfig,
};

use std::fs;
use std::path::Path;
use std::time::Instant;

use serde_json::{json, Value};

use crate::bingham;
use crate::diagnostics::{DiagnosticsRecord, CSV_HEADER};
use crate::elliptic::{self, EllipticProblem};
use crate::error::{Error, Result};
use crate::field::io::{fmt_f64, write_csv};
use crate::field::{PeriodicField, PeriodicGrid, Rank};
use crate::powerlaw::{self, GalerkinSpace, State};
use crate::profiles;
use crate::transport;
use crate::verify;

/// What a dispatch produced. `failure` holds the error class and message when
/// the run itself failed after writing its artifacts.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub summary: Value,
    pub table: Option<String>,
    pub failure: Option<(String, String)>,
}

impl Outcome {
    pub fn success(&self) -> bool {
        self.failure.is_none()
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(e.to_string())
}

fn write_json(path: &Path, v: &Value) -> Result<()> {
    let mut s = serde_json::to_string_pretty(v).map_err(|e| Error::Io(e.to_string()))?;
    s.push('\n');
    fs::write(path, s)?;
    Ok(())
}

/// `t, x[, y, z], rho, u0[, u1, u2]`, one row per node per snapshot.
pub fn write_trajectory_csv(path: &Path, states: &[State]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    let Some(first) = states.first() else {
        return w.flush().map_err(Error::from);
    };
    let g = *first.grid();
    let d = g.dim();
    let mut header = vec!["t".to_string()];
    header.extend(["x", "y", "z"][..d].iter().map(|s| s.to_string()));
    header.push("rho".into());
    header.extend((0..d).map(|c| format!("u{c}")));
    w.write_record(&header).map_err(csv_err)?;
    for s in states {
        for i in 0..g.len() {
            let x = g.coords(i);
            let mut row = vec![fmt_f64(s.t)];
            row.extend(x[..d].iter().map(|&v| fmt_f64(v)));
            row.push(fmt_f64(s.rho.values()[i]));
            row.extend((0..d).map(|c| fmt_f64(s.u.component(c)[i])));
            w.write_record(&row).map_err(csv_err)?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_diagnostics_csv(path: &Path, records: &[DiagnosticsRecord]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(CSV_HEADER).map_err(csv_err)?;
    for r in records {
        w.write_record([
            fmt_f64(r.t),
            fmt_f64(r.mass),
            fmt_f64(r.energy),
            fmt_f64(r.dissipation),
            fmt_f64(r.psi),
            fmt_f64(r.j_min),
            r.fp_iters.to_string(),
            fmt_f64(r.energy_residual),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

fn forcing(cfg: &RunConfig, g: PeriodicGrid) -> PeriodicField {
    profiles::vector(&cfg.init.f_ext, g)
}

fn space_for(cfg: &RunConfig, g: PeriodicGrid) -> Result<GalerkinSpace> {
    match cfg.solver.galerkin_m {
        Some(m) => GalerkinSpace::new(g, m),
        None => Ok(GalerkinSpace::dealiased(g)),
    }
}

/// Configured `dt`, or half the CFL limit of `u0` capped at `1e-2`.
fn resolve_dt(cfg: &RunConfig, u0: &PeriodicField) -> (f64, &'static str) {
    match cfg.time.dt {
        Some(dt) => (dt, "config"),
        None => ((0.5 * transport::cfl_limit(u0)).min(1e-2), "cfl_heuristic"),
    }
}

fn common_decisions(cfg: &RunConfig) -> Value {
    json!({
        "rho_floor": cfg.solver.rho_floor,
        "psi_max": cfg.solver.psi_max,
        "fixed_point": if cfg.solver.linearized { "linearized_correction" } else { "picard" },
        "time_quadrature": "midpoint",
        "transport": "heun_spectral_flux",
        "clip_tolerance": transport::CLIP_TOLERANCE,
        "u_t_reconstruction": "centered_differences_one_sided_at_ends",
        "elliptic_null_modes": "mean_and_nyquist_removed",
    })
}

struct Ran {
    summary: Value,
    decisions: Value,
    failure: Option<Error>,
    table: Option<String>,
}

fn run_elliptic(cfg: &RunConfig, out: &Path) -> Result<Ran> {
    let g = cfg.grid()?;
    let p = cfg.params;
    let exact = cfg.init.u0.as_ref().map(|u| profiles::vector(u, g));
    let f = match &exact {
        Some(u) => elliptic::apply_operator(&p, u)?,
        None => forcing(cfg, g),
    };
    let prob = EllipticProblem::new(p, &f)?;
    let sol = elliptic::solve_from(&prob, None, &cfg.newton())?;
    write_csv(&sol.u, &out.join("solution.csv"))?;
    let w2p = if g.dim() == 1 {
        let reports: Vec<_> = [2.0, 4.0, 6.0]
            .iter()
            .map(|&e| elliptic::verify_w2p_1d(&p, &sol.u, &prob.f, e))
            .collect::<Result<_>>()?;
        let all = reports.iter().all(|r| r.satisfied && r.norm_satisfied);
        json!({ "satisfied": all, "exponents": reports })
    } else {
        Value::Null
    };
    let h2 = if g.dim() >= 2 {
        serde_json::to_value(elliptic::verify_h2(&p, &sol.u, &prob.f)?).unwrap_or(Value::Null)
    } else {
        Value::Null
    };
    let error = match &exact {
        Some(u) => json!(sol.u.sub(&u.project_out_null_modes())?.max_abs()),
        None => Value::Null,
    };
    Ok(Ran {
        summary: json!({
            "params": p,
            "n": g.n(),
            "dim": g.dim(),
            "residual": sol.residual_norm,
            "newton_iters": sol.newton_iters,
            "cg_iters": sol.cg_iters,
            "max_error_vs_exact": error,
            "w2p_check": w2p,
            "h2_check": h2,
        }),
        decisions: json!({
            "newton_tol": cfg.solver.newton_tol,
            "forcing": if exact.is_some() { "manufactured_from_u0" } else { "f_ext" },
            "elliptic_null_modes": "mean_and_nyquist_removed",
            "w2p_exponents": [2.0, 4.0, 6.0],
            "h2_epsilon": "mu/2",
        }),
        failure: None,
        table: None,
    })
}

fn initial_state(cfg: &RunConfig, space: &GalerkinSpace) -> Result<(State, &'static str)> {
    let g = *space.grid();
    let rho0 = cfg.init.rho0.scalar(g);
    let (u0, source) = if let Some(gp) = &cfg.init.g {
        let gf = profiles::vector(gp, g);
        let sol = elliptic::compat_init_from(&cfg.params, &rho0, &gf, None, &cfg.newton())?;
        (space.project(&sol.u), "compatibility_solve")
    } else if let Some(up) = &cfg.init.u0 {
        (space.project(&profiles::vector(up, g)), "u0_projected")
    } else {
        (PeriodicField::zeros(g, Rank::Vector), "rest")
    };
    Ok((State::new(rho0, u0, 0.0)?, source))
}

fn run_powerlaw(cfg: &RunConfig, out: &Path) -> Result<Ran> {
    let g = cfg.grid()?;
    let space = space_for(cfg, g)?;
    let (s0, source) = initial_state(cfg, &space)?;
    let (dt, dt_source) = resolve_dt(cfg, &s0.u);
    let f = forcing(cfg, g);
    let traj = powerlaw::run(&space, &cfg.params, &s0, |_| f.clone(), &cfg.run_options(dt))?;
    write_trajectory_csv(&out.join("trajectory.csv"), &traj.snapshots)?;
    write_diagnostics_csv(&out.join("diagnostics.csv"), &traj.records)?;
    let m0 = traj.records.first().map(|r| r.mass).unwrap_or(0.0);
    let mass_drift = traj
        .records
        .iter()
        .map(|r| (r.mass - m0).abs() / m0.abs().max(f64::MIN_POSITIVE))
        .fold(0.0, f64::max);
    let max_residual = traj
        .records
        .iter()
        .map(|r| r.energy_residual.abs())
        .fold(0.0, f64::max);
    let (steps, dt_used) = cfg.run_options(dt).schedule();
    let mut decisions = common_decisions(cfg);
    decisions["dt"] = json!(dt_used);
    decisions["dt_source"] = json!(dt_source);
    decisions["steps"] = json!(steps);
    decisions["galerkin_m"] = json!(space.m());
    decisions["initial_velocity"] = json!(source);
    Ok(Ran {
        summary: json!({
            "completed": traj.completed(),
            "failure": traj.failure.as_ref().map(|e| e.to_string()),
            "t_final": traj.last().t,
            "records": traj.records.len(),
            "snapshots": traj.snapshots.len(),
            "relative_mass_drift": mass_drift,
            "max_abs_energy_residual": max_residual,
            "clipped_mass": traj.clipped_mass,
            "floor_hits": traj.floor_hits,
        }),
        decisions,
        failure: traj.failure.clone(),
        table: None,
    })
}

fn run_bingham(cfg: &RunConfig, out: &Path) -> Result<Ran> {
    let g = cfg.grid()?;
    if g.dim() != 1 {
        return Err(Error::Config {
            path: "grid.dim".into(),
            reason: "bingham runs are one-dimensional".into(),
        });
    }
    let space = space_for(cfg, g)?;
    let rho0 = cfg.init.rho0.scalar(g);
    let gp = cfg.init.g.as_ref().unwrap_or(&cfg.init.f_ext);
    let gf = profiles::vector(gp, g);
    let f = forcing(cfg, g);
    let deltas = &cfg.schedule.deltas;
    let (dt, dt_source) = match cfg.time.dt {
        Some(dt) => (dt, "config"),
        None => {
            let p0 = cfg.params.with_delta(deltas[0]);
            let u0 = elliptic::compat_init_from(&p0, &rho0, &gf, None, &cfg.newton())?.u;
            resolve_dt(cfg, &space.project(&u0))
        }
    };
    let f_ext = move |_t: f64| f.clone();
    let res = bingham::continuation(
        &space,
        &cfg.params,
        &rho0,
        &gf,
        &f_ext,
        deltas,
        &cfg.continuation(dt),
    )?;
    let mut legs = Vec::new();
    for (k, leg) in res.legs.iter().enumerate() {
        if let Some(t) = &leg.trajectory {
            write_trajectory_csv(&out.join(format!("leg{k}_trajectory.csv")), &t.snapshots)?;
            write_diagnostics_csv(&out.join(format!("leg{k}_diagnostics.csv")), &t.records)?;
        }
        let gap = res
            .gap_pairs
            .iter()
            .position(|&(_, j)| j == k)
            .map(|i| res.cauchy_gaps[i]);
        legs.push(json!({
            "delta": leg.delta,
            "completed": leg.completed(),
            "failure": leg.failure.as_ref().map(|e| e.to_string()),
            "cauchy_gap": gap,
            "plug_intervals": leg.plugs.as_ref().map(|p| p.intervals.clone()),
            "plug_stress_excess": leg.yield_report.map(|y| y.max_plug_stress_excess),
            "flow_law_residual": leg.yield_report.map(|y| y.max_flow_law_residual),
            "flow_law_bound": leg.yield_report.map(|y| y.flow_law_bound),
            "w2p_check": leg.w2p,
        }));
    }
    let failure = if res.final_leg().is_none() {
        res.legs.last().and_then(|l| l.failure.clone())
    } else {
        None
    };
    let mut decisions = common_decisions(cfg);
    decisions["dt"] = json!(cfg.run_options(dt).schedule().1);
    decisions["dt_source"] = json!(dt_source);
    decisions["galerkin_m"] = json!(space.m());
    decisions["plug_threshold"] = json!(res.threshold);
    decisions["plug_threshold_source"] =
        json!(if cfg.schedule.plug_threshold.is_some() { "config" } else { "max(10 delta_final, 1e-4 max|u_x|)" });
    decisions["warm_start"] = json!(cfg.schedule.warm_start);
    decisions["compat_data"] = json!(if cfg.init.g.is_some() { "g" } else { "f_ext" });
    Ok(Ran {
        summary: json!({
            "deltas": res.deltas,
            "cauchy_gaps": res.cauchy_gaps,
            "plug_threshold": res.threshold,
            "legs": legs,
        }),
        decisions,
        failure,
        table: None,
    })
}

fn run_verify(cfg: &RunConfig) -> Result<Ran> {
    let checks = verify::run_suite(cfg.seed);
    let passed = checks.iter().all(|c| c.passed);
    let table = verify::format_table(&checks);
    let failure = (!passed).then(|| Error::InvalidField("property suite failed".into()));
    Ok(Ran {
        summary: json!({ "seed": cfg.seed, "passed": passed, "checks": checks }),
        decisions: json!({ "seed": cfg.seed }),
        failure,
        table: Some(table),
    })
}

/// Runs `sub` with `cfg`, writing artifacts into `out`.
pub fn dispatch(sub: Subcommand, cfg: &RunConfig, out: &Path) -> Result<Outcome> {
    if let Some(s) = cfg.subcommand {
        if s != sub {
            return Err(Error::Config {
                path: "subcommand".into(),
                reason: format!("config is for `{}`, invoked as `{}`", s.name(), sub.name()),
            });
        }
    }
    cfg.validate()?;
    fs::create_dir_all(out)?;
    let start = Instant::now();
    let ran = match sub {
        Subcommand::Elliptic => run_elliptic(cfg, out)?,
        Subcommand::Powerlaw => run_powerlaw(cfg, out)?,
        Subcommand::Bingham => run_bingham(cfg, out)?,
        Subcommand::Verify => run_verify(cfg)?,
    };
    let wall = start.elapsed().as_secs_f64();
    let summary_name = if sub == Subcommand::Elliptic { "report.json" } else { "summary.json" };
    write_json(&out.join(summary_name), &ran.summary)?;
    let mut echo = cfg.clone();
    echo.subcommand = Some(sub);
    let failure = ran.failure.map(|e| {
        let class = if sub == Subcommand::Verify { "VerifyFailed" } else { e.class() };
        (class.to_string(), e.to_string())
    });
    let manifest = json!({
        "program": "viscoplast",
        "version": env!("CARGO_PKG_VERSION"),
        "parallel": cfg!(feature = "parallel"),
        "subcommand": sub.name(),
        "config": echo,
        "decisions": ran.decisions,
        "status": if failure.is_none() { "ok" } else { "failed" },
        "error_class": failure.as_ref().map(|f| f.0.clone()),
        "timings": { "wall_seconds": wall },
    });
    write_json(&out.join("manifest.json"), &manifest)?;
    Ok(Outcome {
        summary: ran.summary,
        table: ran.table,
        failure,
    })
}
