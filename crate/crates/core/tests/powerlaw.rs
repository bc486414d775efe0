mod common;

use rand::Rng;
use viscoplast::cli::write_trajectory_csv;
use viscoplast::field::spectral;
use viscoplast::powerlaw::*;
use viscoplast::{Error, FluidParams, PeriodicField, Rank};

use common::{grid, rng};

fn params(mu: f64, lambda_: f64, tau_star: f64, delta: f64, q: f64) -> FluidParams {
    FluidParams {
        mu,
        lambda_,
        tau_star,
        delta,
        q,
        a: 1.0,
        gamma_: 1.4,
    }
}

fn random_field(dim: usize, n: usize, rank: Rank, seed: u64) -> PeriodicField {
    let g = grid(dim, n);
    let mut r = rng(seed);
    let v = (0..rank.components(dim) * g.len()).map(|_| r.gen_range(-1.0..1.0)).collect();
    PeriodicField::new(g, rank, v).unwrap()
}

#[test]
fn projection_keeps_exactly_the_retained_modes() {
    let g = grid(2, 16);
    let space = GalerkinSpace::new(g, 3).unwrap();
    let f = random_field(2, 16, Rank::Vector, 50);
    let pf = space.project(&f);
    for c in 0..2 {
        let before = spectral::forward(&g, f.component(c));
        let after = spectral::forward(&g, pf.component(c));
        for i in 0..g.len() {
            let idx = g.multi_index(i);
            let inside = (0..2).all(|a| g.frequency(idx[a]).unsigned_abs() <= 3);
            let expect = if inside { before[i] } else { 0.0.into() };
            assert!((after[i] - expect).norm() < 1e-10);
        }
    }
    assert!(space.project(&pf).sub(&pf).unwrap().max_abs() < 1e-14);
    let h = random_field(2, 16, Rank::Vector, 51);
    assert!((pf.dot(&h) - f.dot(&space.project(&h))).abs() < 1e-10);
    assert!(space.leakage(&pf) < 1e-14);
    assert!(space.leakage(&f) > 0.1);
    assert!(GalerkinSpace::new(g, 8).is_err());
    assert_eq!(GalerkinSpace::dealiased(g).m(), 3);
}

#[test]
fn mass_operator_scaling() {
    let g = grid(1, 32);
    let space = GalerkinSpace::dealiased(g);
    let v = space.project(&random_field(1, 32, Rank::Vector, 52));
    let one = mass_apply(&space, &PeriodicField::constant(g, 1.0), &v).unwrap();
    assert!(one.sub(&v).unwrap().max_abs() < 1e-14);
    let three = mass_apply(&space, &PeriodicField::constant(g, 3.0), &v).unwrap();
    assert!(three.sub(&v.scale(3.0)).unwrap().max_abs() < 1e-13);
    let half = mass_solve(&space, &PeriodicField::constant(g, 2.0), &v, 1e-13, 1e-8).unwrap();
    assert!(half.sub(&v.scale(0.5)).unwrap().max_abs() < 1e-12);
}

#[test]
fn mass_operator_rayleigh_quotient() {
    let g = grid(2, 16);
    let space = GalerkinSpace::dealiased(g);
    let rho = PeriodicField::scalar_from_fn(g, |x| 1.0 + 0.6 * (x[0] + x[1]).sin() * x[1].cos());
    let min = rho.min();
    for s in 0..50 {
        let v = space.project(&random_field(2, 16, Rank::Vector, 100 + s));
        let q = mass_apply(&space, &rho, &v).unwrap().dot(&v) / v.dot(&v);
        assert!(q >= min - 1e-8, "{q} < {min}");
    }
}

#[test]
fn mass_solve_roundtrip() {
    let g = grid(2, 16);
    let space = GalerkinSpace::dealiased(g);
    let mut r = rng(53);
    let vals: Vec<f64> = (0..g.len()).map(|_| r.gen_range(0.5..2.0)).collect();
    let rho = PeriodicField::new(g, Rank::Scalar, vals).unwrap();
    let b = space.project(&random_field(2, 16, Rank::Vector, 54));
    let v = mass_solve(&space, &rho, &b, 1e-11, 1e-8).unwrap();
    assert!(mass_apply(&space, &rho, &v).unwrap().sub(&b).unwrap().l2_norm() <= 1e-11);
    assert!(space.leakage(&v) < 1e-12);
    let vac = PeriodicField::constant(g, 0.0);
    assert!(matches!(mass_solve(&space, &vac, &b, 1e-11, 1e-8), Err(Error::VacuumFloor { .. })));
}

#[test]
fn momentum_rhs_examples() {
    let g = grid(2, 32);
    let space = GalerkinSpace::dealiased(g);
    let p = params(0.7, 0.4, 0.0, 0.1, 1.5);
    let rho = PeriodicField::constant(g, 1.5);
    let z = PeriodicField::zeros(g, Rank::Vector);
    assert!(momentum_rhs(&space, &p, &rho, &z, &z).unwrap().max_abs() < 1e-13);

    let f = PeriodicField::vector_from_fn(g, |x| [x[1].cos(), (2.0 * x[0]).sin() + 0.5, 0.0]);
    let n = momentum_rhs(&space, &p, &rho, &z, &f).unwrap();
    assert!(n.sub(&space.project(&f.scale(1.5))).unwrap().max_abs() < 1e-13);

    // shear flow u = (sin y, 0): no convective term, viscous term -mu sin y
    let rho = PeriodicField::constant(g, 1.0);
    let u = PeriodicField::vector_from_fn(g, |x| [x[1].sin(), 0.0, 0.0]);
    let n = momentum_rhs(&space, &p, &rho, &u, &z).unwrap();
    for i in 0..g.len() {
        assert!((n.component(0)[i] + 0.7 * g.coords(i)[1].sin()).abs() < 1e-12);
        assert!(n.component(1)[i].abs() < 1e-12);
    }
}

#[test]
fn rest_state_is_an_equilibrium() {
    let g = grid(2, 16);
    let space = GalerkinSpace::dealiased(g);
    let p = params(1.0, 0.0, 1.0, 0.1, 1.5);
    let s0 = State::new(PeriodicField::constant(g, 1.3), PeriodicField::zeros(g, Rank::Vector), 0.0).unwrap();
    let z = PeriodicField::zeros(g, Rank::Vector);
    let (s1, _) = step(&space, &p, &s0, &|_: f64| z.clone(), 0.01, &StepOptions::default()).unwrap();
    assert!(s1.u.max_abs() < 1e-12);
    assert!(s1.rho.sub(&s0.rho).unwrap().max_abs() < 1e-12);
    let opts = RunOptions { dt: 0.01, t_end: 0.1, output_every: 2, ..RunOptions::default() };
    let traj = run(&space, &p, &s0, |_| z.clone(), &opts).unwrap();
    assert!(traj.completed());
    assert_eq!(traj.snapshots.len(), 6);
    for s in &traj.snapshots {
        assert!(s.u.max_abs() < 1e-12);
    }
}

fn smooth_state(dim: usize, n: usize) -> (GalerkinSpace, State) {
    let g = grid(dim, n);
    let space = GalerkinSpace::dealiased(g);
    let rho = PeriodicField::scalar_from_fn(g, |x| 1.0 + 0.2 * (x[0] - x[1]).cos());
    let u = space.project(&PeriodicField::vector_from_fn(g, |x| [x[0].sin() + 0.3 * x[1].cos(), 0.5 * x[0].cos(), 0.0]));
    (space, State::new(rho, u, 0.0).unwrap())
}

#[test]
fn velocity_stays_in_galerkin_space() {
    let (space, s0) = smooth_state(2, 32);
    let p = params(0.5, 0.0, 1.0, 0.1, 1.2);
    let f = PeriodicField::vector_from_fn(*space.grid(), |x| [x[1].sin(), 0.0, 0.0]);
    let opts = RunOptions { dt: 0.01, t_end: 0.05, output_every: 1, ..RunOptions::default() };
    let traj = run(&space, &p, &s0, |_| f.clone(), &opts).unwrap();
    assert!(traj.completed());
    for s in &traj.snapshots {
        assert!(space.leakage(&s.u) < 1e-12);
    }
}

#[test]
fn second_order_in_time() {
    let (space, s0) = smooth_state(1, 64);
    let p = params(0.5, 0.0, 1.0, 0.2, 1.5);
    let z = PeriodicField::zeros(*space.grid(), Rank::Vector);
    let at = |dt: f64| {
        let opts = RunOptions { dt, t_end: 0.2, output_every: 1000, ..RunOptions::default() };
        run(&space, &p, &s0, |_| z.clone(), &opts).unwrap().last().u.clone()
    };
    let (a, b, c) = (at(0.02), at(0.01), at(0.005));
    let e1 = a.sub(&b).unwrap().l2_norm();
    let e2 = b.sub(&c).unwrap().l2_norm();
    let order = (e1 / e2).log2();
    assert!(order > 1.8, "{e1} {e2} order {order}");
}

#[test]
fn linearized_and_plain_iterations_agree() {
    let (space, s0) = smooth_state(1, 32);
    let p = params(1.0, 0.0, 1.0, 0.2, 1.5);
    let z = PeriodicField::zeros(*space.grid(), Rank::Vector);
    let f = |_: f64| z.clone();
    let lin = StepOptions::default();
    let plain = StepOptions { linearized: false, ..lin };
    let (a, ia) = step(&space, &p, &s0, &f, 1e-3, &lin).unwrap();
    let (b, ib) = step(&space, &p, &s0, &f, 1e-3, &plain).unwrap();
    assert!(a.u.sub(&b.u).unwrap().max_abs() < 1e-10);
    assert!(ia.fp_iters <= ib.fp_iters);
}

#[test]
fn guard_failures_are_reported() {
    let (space, s0) = smooth_state(1, 32);
    let p = params(0.5, 0.0, 1.0, 0.1, 1.5);
    let z = PeriodicField::zeros(*space.grid(), Rank::Vector);
    let opts = RunOptions { dt: 0.01, t_end: 0.1, output_every: 1, psi_max: 1.0001, ..RunOptions::default() };
    let traj = run(&space, &p, &s0, |_| z.clone(), &opts).unwrap();
    assert!(matches!(traj.failure, Some(Error::Blowup { .. })));
    assert!(!traj.snapshots.is_empty());
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.csv");
    write_trajectory_csv(&path, &traj.snapshots).unwrap();
    let rows = csv::Reader::from_path(&path).unwrap().records().count();
    assert_eq!(rows, traj.snapshots.len() * 32);
    assert!(traj.clone().into_result().is_err());

    let opts = StepOptions { fp_max: 1, fp_tol: 1e-15, ..StepOptions::default() };
    let r = step(&space, &p, &s0, &|_: f64| z.clone(), 0.01, &opts);
    assert!(matches!(r, Err(Error::FixedPointDiverged { .. })));
}
