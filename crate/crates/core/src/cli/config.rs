use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::bingham::ContinuationOptions;
use crate::constitutive::FluidParams;
use crate::elliptic::NewtonOptions;
use crate::error::{Error, Result};
use crate::field::PeriodicGrid;
use crate::powerlaw::{RunOptions, StepOptions};
use crate::profiles::Profile;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Subcommand {
    Elliptic,
    Powerlaw,
    Bingham,
    Verify,
}

impl Subcommand {
    pub fn name(self) -> &'static str {
        match self {
            Subcommand::Elliptic => "elliptic",
            Subcommand::Powerlaw => "powerlaw",
            Subcommand::Bingham => "bingham",
            Subcommand::Verify => "verify",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub dim: usize,
    pub n: usize,
    pub length: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            dim: 1,
            n: 64,
            length: std::f64::consts::TAU,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TimeConfig {
    /// `None` picks half the CFL limit of the initial velocity, capped at 1e-2.
    pub dt: Option<f64>,
    pub t_end: f64,
    pub output_every: usize,
}

impl Default for TimeConfig {
    fn default() -> Self {
        Self {
            dt: None,
            t_end: 0.1,
            output_every: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InitConfig {
    pub rho0: Profile,
    /// Compatibility data; the initial velocity is then solved for.
    pub g: Option<Vec<Profile>>,
    /// Explicit initial velocity (or the exact solution for `elliptic`).
    pub u0: Option<Vec<Profile>>,
    /// Body force per component, constant in time.
    pub f_ext: Vec<Profile>,
}

impl Default for InitConfig {
    fn default() -> Self {
        Self {
            rho0: Profile::Const { value: 1.0 },
            g: None,
            u0: None,
            f_ext: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub newton_tol: f64,
    pub newton_max_iter: usize,
    pub cg_max_iter: usize,
    pub fp_tol: f64,
    pub fp_max: usize,
    pub rho_floor: f64,
    pub psi_max: f64,
    pub linearized: bool,
    /// Galerkin cutoff; `None` is `n/4 - 1`.
    pub galerkin_m: Option<usize>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        let n = NewtonOptions::default();
        let s = StepOptions::default();
        Self {
            newton_tol: n.tol,
            newton_max_iter: n.max_iter,
            cg_max_iter: n.cg_max_iter,
            fp_tol: s.fp_tol,
            fp_max: s.fp_max,
            rho_floor: s.rho_floor,
            psi_max: RunOptions::default().psi_max,
            linearized: s.linearized,
            galerkin_m: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScheduleConfig {
    pub deltas: Vec<f64>,
    pub warm_start: bool,
    /// `None` is `max(10 delta_final, 1e-4 max|u_x|)`.
    pub plug_threshold: Option<f64>,
}

impl Default for ScheduleConfig {
    fn default() -> Self {
        Self {
            deltas: vec![0.1, 0.05, 0.025, 0.0125],
            warm_start: true,
            plug_threshold: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub subcommand: Option<Subcommand>,
    pub params: FluidParams,
    pub grid: GridConfig,
    pub time: TimeConfig,
    pub init: InitConfig,
    pub solver: SolverConfig,
    pub schedule: ScheduleConfig,
    pub output: Option<String>,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            subcommand: None,
            params: FluidParams::default(),
            grid: GridConfig::default(),
            time: TimeConfig::default(),
            init: InitConfig::default(),
            solver: SolverConfig::default(),
            schedule: ScheduleConfig::default(),
            output: None,
            seed: 0,
        }
    }
}

fn config_err(path: &str, reason: impl Into<String>) -> Error {
    Error::Config {
        path: path.into(),
        reason: reason.into(),
    }
}

impl RunConfig {
    pub fn grid(&self) -> Result<PeriodicGrid> {
        PeriodicGrid::new(self.grid.dim, self.grid.n, self.grid.length)
            .map_err(|e| config_err("grid", e.to_string()))
    }

    /// Checks everything that can be checked before solving.
    pub fn validate(&self) -> Result<()> {
        self.params.validate().map_err(|e| match e {
            Error::InvalidParams(m) => {
                let field = m.split_whitespace().next().unwrap_or("");
                let known = ["mu", "lambda", "tau_star", "delta", "q", "a", "gamma"];
                let path = if known.contains(&field) {
                    format!("params.{field}")
                } else {
                    "params".to_string()
                };
                config_err(&path, m)
            }
            other => other,
        })?;
        self.grid()?;
        if let Some(dt) = self.time.dt {
            if !(dt > 0.0 && dt.is_finite()) {
                return Err(config_err("time.dt", "must be positive"));
            }
        }
        if !(self.time.t_end > 0.0 && self.time.t_end.is_finite()) {
            return Err(config_err("time.t_end", "must be positive"));
        }
        if self.time.output_every == 0 {
            return Err(config_err("time.output_every", "must be >= 1"));
        }
        if self.init.g.is_some() && self.init.u0.is_some() {
            return Err(config_err("init", "give either g or u0, not both"));
        }
        for (name, v) in [
            ("solver.newton_tol", self.solver.newton_tol),
            ("solver.fp_tol", self.solver.fp_tol),
            ("solver.rho_floor", self.solver.rho_floor),
            ("solver.psi_max", self.solver.psi_max),
        ] {
            if !(v > 0.0) {
                return Err(config_err(name, "must be positive"));
            }
        }
        if let Some(m) = self.solver.galerkin_m {
            if m == 0 || m >= self.grid.n / 2 {
                return Err(config_err("solver.galerkin_m", "must satisfy 1 <= m < n/2"));
            }
        }
        let d = &self.schedule.deltas;
        if d.is_empty() || d.iter().any(|x| !(*x > 0.0)) {
            return Err(config_err("schedule.deltas", "must be nonempty and positive"));
        }
        if d.windows(2).any(|w| w[1] >= w[0]) {
            return Err(config_err("schedule.deltas", "must be strictly decreasing"));
        }
        if let Some(t) = self.schedule.plug_threshold {
            if !(t > 0.0) {
                return Err(config_err("schedule.plug_threshold", "must be positive"));
            }
        }
        Ok(())
    }

    pub fn newton(&self) -> NewtonOptions {
        NewtonOptions {
            tol: self.solver.newton_tol,
            max_iter: self.solver.newton_max_iter,
            cg_max_iter: self.solver.cg_max_iter,
            ..NewtonOptions::default()
        }
    }

    pub fn step(&self) -> StepOptions {
        StepOptions {
            fp_tol: self.solver.fp_tol,
            fp_max: self.solver.fp_max,
            rho_floor: self.solver.rho_floor,
            linearized: self.solver.linearized,
        }
    }

    pub fn run_options(&self, dt: f64) -> RunOptions {
        RunOptions {
            dt,
            t_end: self.time.t_end,
            output_every: self.time.output_every,
            step: self.step(),
            psi_max: self.solver.psi_max,
        }
    }

    pub fn continuation(&self, dt: f64) -> ContinuationOptions {
        ContinuationOptions {
            run: self.run_options(dt),
            newton: self.newton(),
            warm_start: self.schedule.warm_start,
            threshold: self.schedule.plug_threshold,
        }
    }
}

/// Parses JSON text; errors name the offending field path.
pub fn parse_config_str(text: &str) -> Result<RunConfig> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let cfg: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        config_err(&path, e.into_inner().to_string())
    })?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn parse_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| config_err(&path.display().to_string(), e.to_string()))?;
    parse_config_str(&text)
}
