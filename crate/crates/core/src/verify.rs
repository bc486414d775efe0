//! Property suite behind the `verify` subcommand.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::constitutive::{
    monotonicity_gap, stress_delta, stress_tangent, symbol_form, symbol_form_assembled,
    FluidParams, SymTensor,
};
use crate::diagnostics;
use crate::elliptic::{self, EllipticProblem};
use crate::error::Result;
use crate::field::{PeriodicField, PeriodicGrid, Rank};
use crate::powerlaw::{self, GalerkinSpace, RunOptions, State};
use crate::transport;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    /// Worst measured value.
    pub measured: f64,
    /// Threshold the value is compared against.
    pub tolerance: f64,
}

impl Check {
    fn at_most(name: &str, measured: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            passed: measured <= tolerance,
            measured,
            tolerance,
        }
    }

    fn at_least(name: &str, measured: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            passed: measured >= tolerance,
            measured,
            tolerance,
        }
    }

    fn failed(name: &str, err: crate::Error) -> Self {
        log::error!("{name}: {err}");
        Self {
            name: name.into(),
            passed: false,
            measured: f64::NAN,
            tolerance: f64::NAN,
        }
    }
}

/// Random symmetric tensor with entries in `[-scale, scale]`.
pub fn random_sym<R: Rng>(rng: &mut R, dim: usize, scale: f64) -> SymTensor {
    let mut t = SymTensor::zeros(dim);
    for i in 0..dim {
        for j in i..dim {
            t.set(i, j, rng.gen_range(-scale..=scale));
        }
    }
    t
}

fn monotonicity<R: Rng>(rng: &mut R, samples: usize) -> Result<f64> {
    let mut worst = f64::INFINITY;
    for k in 0..samples {
        let q = [1.0, 1.25, 2.0, 3.0][k % 4];
        let delta = [0.0, 0.1][(k / 4) % 2];
        let p = FluidParams {
            q,
            delta,
            ..FluidParams::default()
        };
        let dim = 1 + k % 3;
        let c = random_sym(rng, dim, 2.0);
        let d = random_sym(rng, dim, 2.0);
        worst = worst.min(monotonicity_gap(&p, &c, &d)?);
    }
    Ok(worst)
}

fn symbol<R: Rng>(rng: &mut R, samples: usize) -> Result<(f64, f64)> {
    let mut min_form = f64::INFINITY;
    let mut max_imag: f64 = 0.0;
    for k in 0..samples {
        let dim = 2 + k % 2;
        let mu = rng.gen_range(0.1..2.0);
        let p = FluidParams {
            mu,
            lambda_: rng.gen_range(-1.9 * mu..2.0),
            q: rng.gen_range(1.0..3.0),
            delta: rng.gen_range(0.01..1.0),
            tau_star: rng.gen_range(0.0..2.0),
            ..FluidParams::default()
        };
        let d = random_sym(rng, dim, 2.0);
        let mut xi = [0.0; 3];
        let mut eta = [Complex64::new(0.0, 0.0); 3];
        for a in 0..dim {
            xi[a] = rng.gen_range(-1.0..1.0);
            eta[a] = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        }
        let xn = xi.iter().map(|x| x * x).sum::<f64>().sqrt();
        let en = eta.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        xi.iter_mut().for_each(|x| *x /= xn);
        eta.iter_mut().for_each(|z| *z /= en);
        min_form = min_form.min(symbol_form(&p, &d, &xi, &eta)?);
        max_imag = max_imag.max(symbol_form_assembled(&p, &d, &xi, &eta)?.im.abs());
    }
    Ok((min_form, max_imag))
}

fn tangent_consistency<R: Rng>(rng: &mut R, samples: usize) -> Result<f64> {
    let mut worst: f64 = 0.0;
    let h = 1e-6;
    for k in 0..samples {
        let dim = 1 + k % 3;
        let p = FluidParams {
            q: [1.0, 1.5, 3.0][k % 3],
            lambda_: 0.3,
            ..FluidParams::default()
        };
        let d = random_sym(rng, dim, 1.0);
        let e = random_sym(rng, dim, 1.0);
        let plus = stress_delta(&p, &d.axpy(h, &e))?;
        let minus = stress_delta(&p, &d.axpy(-h, &e))?;
        let fd = plus.sub(&minus).scale(0.5 / h);
        let exact = stress_tangent(&p, &d, &e)?;
        worst = worst.max(fd.sub(&exact).frobenius() / (1.0 + exact.frobenius()));
    }
    Ok(worst)
}

fn manufactured_1d() -> Result<(f64, bool)> {
    let g = PeriodicGrid::standard(1, 128)?;
    let p = FluidParams {
        q: 1.5,
        delta: 0.05,
        ..FluidParams::default()
    };
    let exact = PeriodicField::vector_from_fn(g, |x| [x[0].sin() + 0.3 * (2.0 * x[0]).cos(), 0.0, 0.0]);
    let f = elliptic::apply_operator(&p, &exact)?;
    let sol = elliptic::solve(&EllipticProblem::new(p, &f)?, 1e-10, 100)?;
    let err = sol.u.sub(&exact)?.max_abs();
    let w2p = elliptic::verify_w2p_1d(&p, &sol.u, &f, 4.0)?;
    Ok((err, w2p.satisfied && w2p.norm_satisfied))
}

fn h2_2d() -> Result<bool> {
    let g = PeriodicGrid::standard(2, 16)?;
    let p = FluidParams {
        tau_star: 0.0,
        lambda_: 0.5,
        ..FluidParams::default()
    };
    let f = PeriodicField::vector_from_fn(g, |x| [x[1].sin(), (x[0] + x[1]).cos(), 0.0]);
    let sol = elliptic::solve(&EllipticProblem::new(p, &f)?, 1e-10, 20)?;
    Ok(elliptic::verify_h2(&p, &sol.u, &f)?.satisfied)
}

fn transport_mass() -> Result<f64> {
    let g = PeriodicGrid::standard(2, 32)?;
    let mut rho = PeriodicField::scalar_from_fn(g, |x| 1.0 + 0.3 * (x[0] - x[1]).sin());
    let u = PeriodicField::vector_from_fn(g, |x| [0.5 * x[1].cos(), 0.4 * x[0].sin(), 0.0]);
    let m0 = transport::total_mass(&rho);
    let dt = 0.5 * transport::cfl_limit(&u);
    for _ in 0..50 {
        rho = transport::advance_density(&rho, &u, dt)?;
    }
    Ok((transport::total_mass(&rho) - m0).abs() / m0)
}

fn short_run() -> Result<(f64, f64, f64)> {
    let g = PeriodicGrid::standard(1, 64)?;
    let space = GalerkinSpace::dealiased(g);
    let p = FluidParams {
        mu: 0.5,
        lambda_: 0.1,
        ..FluidParams::default()
    };
    let rho0 = PeriodicField::scalar_from_fn(g, |x| 1.0 + 0.2 * x[0].sin());
    let u0 = PeriodicField::vector_from_fn(g, |x| [0.5 * x[0].sin(), 0.0, 0.0]);
    let s0 = State::new(rho0, u0, 0.0)?;
    let opts = RunOptions {
        dt: 0.01,
        t_end: 0.1,
        output_every: 1,
        ..RunOptions::default()
    };
    let traj = powerlaw::run(&space, &p, &s0, |_| PeriodicField::zeros(g, Rank::Vector), &opts)?
        .into_result()?;
    let m0 = traj.records[0].mass;
    let mass = traj
        .records
        .iter()
        .map(|r| (r.mass - m0).abs() / m0)
        .fold(0.0, f64::max);
    let e0 = traj.records[0].energy;
    let growth = traj
        .records
        .windows(2)
        .map(|w| (w[1].energy - w[0].energy) / e0)
        .fold(f64::NEG_INFINITY, f64::max);
    let j_min = traj.records.iter().map(|r| r.j_min).fold(f64::INFINITY, f64::min);
    Ok((mass, growth, j_min))
}

fn self_distance() -> Result<f64> {
    let g = PeriodicGrid::standard(1, 32)?;
    let s = State::new(
        PeriodicField::scalar_from_fn(g, |x| 1.5 + x[0].cos()),
        PeriodicField::vector_from_fn(g, |x| [x[0].sin(), 0.0, 0.0]),
        0.0,
    )?;
    diagnostics::uniqueness_distance(&s, &s, &FluidParams::default())
}

/// Runs every check with the given seed for the randomized sweeps.
pub fn run_suite(seed: u64) -> Vec<Check> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    match monotonicity(&mut rng, 2000) {
        Ok(v) => out.push(Check::at_least("constitutive monotonicity gap", v, -1e-12)),
        Err(e) => out.push(Check::failed("constitutive monotonicity gap", e)),
    }
    match symbol(&mut rng, 2000) {
        Ok((m, im)) => {
            out.push(Check::at_least("ellipticity symbol minimum", m, f64::MIN_POSITIVE));
            out.push(Check::at_most("ellipticity symbol imaginary part", im, 1e-12));
        }
        Err(e) => out.push(Check::failed("ellipticity symbol", e)),
    }
    match tangent_consistency(&mut rng, 300) {
        Ok(v) => out.push(Check::at_most("stress tangent vs finite differences", v, 1e-6)),
        Err(e) => out.push(Check::failed("stress tangent vs finite differences", e)),
    }
    match manufactured_1d() {
        Ok((err, ok)) => {
            out.push(Check::at_most("1D manufactured solution error", err, 1e-9));
            out.push(Check::at_least("1D W2p bound", f64::from(u8::from(ok)), 1.0));
        }
        Err(e) => out.push(Check::failed("1D manufactured solution", e)),
    }
    match h2_2d() {
        Ok(ok) => out.push(Check::at_least("2D H2 bound", f64::from(u8::from(ok)), 1.0)),
        Err(e) => out.push(Check::failed("2D H2 bound", e)),
    }
    match transport_mass() {
        Ok(v) => out.push(Check::at_most("transport mass drift", v, 1e-12)),
        Err(e) => out.push(Check::failed("transport mass drift", e)),
    }
    match short_run() {
        Ok((mass, growth, j_min)) => {
            out.push(Check::at_most("run mass drift", mass, 1e-8));
            out.push(Check::at_most("run energy growth per step", growth, 1e-8));
            out.push(Check::at_least("run j_min", j_min, -1e-10));
        }
        Err(e) => out.push(Check::failed("short power-law run", e)),
    }
    match self_distance() {
        Ok(v) => out.push(Check::at_most("uniqueness distance to self", v, 0.0)),
        Err(e) => out.push(Check::failed("uniqueness distance to self", e)),
    }
    out
}

/// Fixed-width pass/fail table.
pub fn format_table(checks: &[Check]) -> String {
    let w = checks.iter().map(|c| c.name.len()).max().unwrap_or(0);
    let mut s = String::new();
    for c in checks {
        let tag = if c.passed { "PASS" } else { "FAIL" };
        s.push_str(&format!(
            "{tag}  {:<w$}  {:>12.4e}  (limit {:.1e})\n",
            c.name, c.measured, c.tolerance
        ));
    }
    s
}
