mod common;

use rand::Rng;
use viscoplast::transport::*;
use viscoplast::{Error, FluidParams, PeriodicField, Rank};

use common::{grid, rng};

fn advect(rho0: &PeriodicField, u: &PeriodicField, t_end: f64, dt: f64, keep: bool) -> (PeriodicField, DensityPath) {
    let steps = (t_end / dt).round() as usize;
    let mut rho = rho0.clone();
    let mut path = DensityPath::default();
    path.push(0.0, rho.clone());
    for k in 0..steps {
        rho = advance_density(&rho, u, dt).unwrap();
        if keep {
            path.push((k + 1) as f64 * dt, rho.clone());
        }
    }
    (rho, path)
}

fn bump(x: f64) -> f64 {
    1.0 + 0.5 * (x.cos() - 1.0).exp()
}

#[test]
fn constant_velocity_translates() {
    let g = grid(1, 128);
    let c = 0.8;
    let rho0 = PeriodicField::scalar_from_fn(g, |x| bump(x[0]));
    let u = PeriodicField::vector_from_fn(g, |_| [c, 0.0, 0.0]);
    let t = 1.0;
    let err = |dt: f64| {
        let (rho, _) = advect(&rho0, &u, t, dt, false);
        (0..g.len()).map(|i| (rho.values()[i] - bump(g.coords(i)[0] - c * t)).abs()).fold(0.0, f64::max)
    };
    let (e1, e2) = (err(0.02), err(0.01));
    assert!(e1 < 1e-3, "{e1}");
    let order = (e1 / e2).log2();
    assert!(order > 1.8, "order {order}");
}

#[test]
fn stationary_flow_matches_characteristics() {
    let g = grid(1, 128);
    let u_fn = |x: f64| 0.3 * x.sin() + 0.1 * (2.0 * x).cos();
    let du_fn = |x: f64| 0.3 * x.cos() - 0.2 * (2.0 * x).sin();
    let rho_fn = |x: f64| 1.0 + 0.2 * x.cos();
    let rho0 = PeriodicField::scalar_from_fn(g, |x| rho_fn(x[0]));
    let u = PeriodicField::vector_from_fn(g, |x| [u_fn(x[0]), 0.0, 0.0]);
    let t = 0.5;
    let (rho, _) = advect(&rho0, &u, t, 1e-3, false);
    for i in 0..g.len() {
        let exact = common::characteristics_1d(u_fn, du_fn, rho_fn, g.coords(i)[0], t, 2000);
        assert!((rho.values()[i] - exact).abs() < 1e-6, "node {i}: {} vs {exact}", rho.values()[i]);
    }
}

#[test]
fn mass_is_conserved_for_random_inputs() {
    let mut r = rng(40);
    for dim in 1..=3 {
        let n = [64, 24, 10][dim - 1];
        let g = grid(dim, n);
        let a: f64 = r.gen_range(0.1..0.5);
        let ph: f64 = r.gen_range(0.0..6.0);
        let rho = PeriodicField::scalar_from_fn(g, |x| 1.0 + a * (x[0] + ph).sin() * x[dim - 1].cos());
        let u = PeriodicField::vector_from_fn(g, |x| [(x[dim - 1]).sin(), 0.5 * x[0].cos(), 0.2 * (x[0] + x[1]).sin()]);
        let dt = 0.5 * cfl_limit(&u);
        let m0 = total_mass(&rho);
        let out = advance_density(&rho, &u, dt).unwrap();
        assert!((total_mass(&out) - m0).abs() <= 1e-12 * m0);
    }
}

#[test]
fn step_beyond_cfl_is_rejected() {
    let g = grid(1, 32);
    let rho = PeriodicField::constant(g, 1.0);
    let u = PeriodicField::vector_from_fn(g, |x| [2.0 * x[0].sin(), 0.0, 0.0]);
    let dt = 2.0 * cfl_limit(&u);
    assert!(matches!(advance_density(&rho, &u, dt), Err(Error::CflViolation { .. })));
}

#[test]
fn envelopes_for_rest_and_solenoidal_flows() {
    let g = grid(2, 32);
    let rho0 = PeriodicField::scalar_from_fn(g, |x| 1.0 + 0.3 * x[0].sin());
    let z = PeriodicField::zeros(g, Rank::Vector);
    let (_, path) = advect(&rho0, &z, 0.1, 0.01, true);
    let rep = density_bounds_check(&path, &vec![z; path.len()], &rho0).unwrap();
    assert_eq!(rep.max_violation, 0.0);
    assert!((rep.lower[5] - rho0.min()).abs() < 1e-15 && (rep.upper[5] - rho0.max()).abs() < 1e-15);

    let c = PeriodicField::constant(g, 2.0);
    let shear = PeriodicField::vector_from_fn(g, |x| [x[1].sin(), 0.0, 0.0]);
    let (_, path) = advect(&c, &shear, 0.2, 0.02, true);
    let rep = density_bounds_check(&path, &vec![shear; path.len()], &c).unwrap();
    assert!(rep.max_violation <= 1e-12);
    assert!(path.snapshots.iter().all(|r| (r.max() - 2.0).abs() < 1e-12 && (r.min() - 2.0).abs() < 1e-12));
}

#[test]
fn compressive_flow_stays_in_envelope() {
    let g = grid(1, 128);
    let rho0 = PeriodicField::scalar_from_fn(g, |x| 1.0 + 0.1 * (2.0 * x[0]).cos());
    let u = PeriodicField::vector_from_fn(g, |x| [-0.5 * x[0].sin(), 0.0, 0.0]);
    let (_, path) = advect(&rho0, &u, 1.0, 5e-3, true);
    let us = vec![u; path.len()];
    let rep = density_bounds_check(&path, &us, &rho0).unwrap();
    assert!(rep.relative_violation <= 1e-3, "{rep:?}");
}

#[test]
fn pressure_equation_residual() {
    let g = grid(1, 64);
    let p = FluidParams::default();
    let rho0 = PeriodicField::scalar_from_fn(g, |x| 1.0 + 0.3 * x[0].cos());
    let z = PeriodicField::zeros(g, Rank::Vector);
    let (_, path) = advect(&rho0, &z, 0.05, 0.01, true);
    let res = pressure_residual(&p, &path, &vec![z; path.len()]).unwrap();
    assert!(res.iter().all(|r| *r <= 1e-12));

    let u = PeriodicField::vector_from_fn(g, |x| [0.4 * x[0].sin(), 0.0, 0.0]);
    let worst = |dt: f64| {
        let (_, path) = advect(&rho0, &u, 0.2, dt, true);
        let res = pressure_residual(&p, &path, &vec![u.clone(); path.len()]).unwrap();
        res.into_iter().fold(0.0, f64::max)
    };
    let (a, b, c) = (worst(0.02), worst(0.01), worst(0.005));
    assert!((a / b).log2() > 1.8 && (b / c).log2() > 1.8, "{a} {b} {c}");
}
