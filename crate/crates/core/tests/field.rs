mod common;

use std::f64::consts::{PI, TAU};

use rand::Rng;
use viscoplast::field::{io, spectral};
use viscoplast::{PeriodicField, Rank};

use common::{grid, rng};

#[test]
fn derivative_of_sine_is_exact() {
    let g = grid(1, 32);
    let f = PeriodicField::scalar_from_fn(g, |x| x[0].sin());
    let d = f.derivative(0);
    for i in 0..g.len() {
        assert!((d.values()[i] - g.coords(i)[0].cos()).abs() <= 1e-12);
    }
    let c = PeriodicField::constant(g, 3.0);
    assert!(c.derivative(0).max_abs() < 1e-14);
}

#[test]
fn derivative_agrees_with_direct_transform() {
    let g = grid(1, 48);
    let mut r = rng(11);
    let v: Vec<f64> = (0..48).map(|_| r.gen_range(-1.0..1.0)).collect();
    let fast = spectral::derivative(&g, &v, 0);
    let slow = common::dft_derivative_1d(&v, TAU);
    for (a, b) in fast.iter().zip(&slow) {
        assert!((a - b).abs() < 1e-10, "{a} vs {b}");
    }
}

#[test]
fn gradient_of_product_mode() {
    let g = grid(2, 32);
    let f = PeriodicField::scalar_from_fn(g, |x| (3.0 * x[0]).sin() * (2.0 * x[1]).cos());
    let grad = f.gradient().unwrap();
    for i in 0..g.len() {
        let x = g.coords(i);
        let gx = 3.0 * (3.0 * x[0]).cos() * (2.0 * x[1]).cos();
        let gy = -2.0 * (3.0 * x[0]).sin() * (2.0 * x[1]).sin();
        assert!((grad.component(0)[i] - gx).abs() < 1e-10);
        assert!((grad.component(1)[i] - gy).abs() < 1e-10);
    }
}

#[test]
fn mixed_partials_commute() {
    let g = grid(3, 16);
    let f = PeriodicField::scalar_from_fn(g, |x| (x[0] + 2.0 * x[1]).sin() * (x[2] - x[0]).cos());
    for (a, b) in [(0, 1), (0, 2), (1, 2)] {
        let ab = f.derivative(a).derivative(b);
        let ba = f.derivative(b).derivative(a);
        assert!(ab.sub(&ba).unwrap().max_abs() < 1e-11);
    }
}

#[test]
fn integration_by_parts_holds_discretely() {
    let g = grid(2, 24);
    let mut r = rng(12);
    let f = PeriodicField::scalar_from_fn(g, |x| (x[0]).sin() + 0.3 * (2.0 * x[1] + x[0]).cos());
    let phases: Vec<f64> = (0..3).map(|_| r.gen_range(0.0..TAU)).collect();
    let h = PeriodicField::scalar_from_fn(g, |x| (x[1] + phases[0]).cos() * (x[0] + phases[1]).sin() + phases[2]);
    for axis in 0..2 {
        let lhs = f.derivative(axis).dot(&h);
        let rhs = -f.dot(&h.derivative(axis));
        assert!((lhs - rhs).abs() < 1e-11);
    }
}

#[test]
fn lp_norm_examples() {
    let g = grid(1, 64);
    let c = PeriodicField::constant(g, -2.0);
    for p in [1.0, 2.0, 6.0] {
        assert!((c.lp_norm(p) - 2.0 * TAU.powf(1.0 / p)).abs() < 1e-12);
    }
    let s = PeriodicField::scalar_from_fn(g, |x| x[0].sin());
    assert!((s.lp_norm(2.0) - PI.sqrt()).abs() < 1e-10);
    let h = g.spacing();
    assert!((s.lp_norm(f64::INFINITY) - 1.0).abs() <= h * h);
}

#[test]
fn sobolev_norm_examples() {
    let g = grid(2, 32);
    let c = PeriodicField::constant(g, 1.5);
    assert!((c.sobolev_norm(1, 6.0) - 1.5 * TAU.powf(2.0 / 6.0)).abs() < 1e-12);
    let g1 = grid(1, 32);
    let s = PeriodicField::scalar_from_fn(g1, |x| x[0].sin());
    assert!((s.sobolev_norm(1, 2.0) - TAU.sqrt()).abs() < 1e-10);
    let v = PeriodicField::scalar_from_fn(g1, |x| (2.0 * x[0]).cos() + 0.2);
    for p in [1.5, 2.0, 4.0] {
        assert!((v.sobolev_norm(0, p) - v.lp_norm(p)).abs() < 1e-14);
    }
}

#[test]
fn mean_zero_projection() {
    let g = grid(1, 32);
    assert!(PeriodicField::constant(g, 5.0).mean_zero_project().max_abs() < 1e-14);
    let f = PeriodicField::scalar_from_fn(g, |x| x[0].sin() + 3.0).mean_zero_project();
    for i in 0..g.len() {
        assert!((f.values()[i] - g.coords(i)[0].sin()).abs() < 1e-14);
    }
    let g3 = grid(3, 8);
    let mut r = rng(13);
    let v: Vec<f64> = (0..3 * g3.len()).map(|_| r.gen_range(-1.0..4.0)).collect();
    let z = PeriodicField::new(g3, Rank::Vector, v).unwrap().mean_zero_project();
    for m in z.mean() {
        assert!(m.abs() <= 1e-14);
    }
}

#[test]
fn csv_and_binary_roundtrip() {
    let dir = tempfile::tempdir().unwrap();
    let g = grid(2, 8);
    let mut r = rng(14);
    let v: Vec<f64> = (0..2 * g.len()).map(|_| r.gen_range(-1e3..1e3) / 7.0).collect();
    let f = PeriodicField::new(g, Rank::Vector, v).unwrap();
    let csv = dir.path().join("u.csv");
    io::write_csv(&f, &csv).unwrap();
    let back = io::read_csv(&csv).unwrap();
    assert_eq!(back.values(), f.values());
    let bin = dir.path().join("u.bin");
    io::write_binary(&f, &bin).unwrap();
    let back = io::read_binary(&bin).unwrap();
    assert_eq!(back.values(), f.values());
    assert_eq!(back.grid(), f.grid());
}

#[test]
fn mismatched_grids_are_rejected() {
    let a = PeriodicField::constant(grid(1, 16), 1.0);
    let b = PeriodicField::constant(grid(1, 32), 1.0);
    assert!(a.sub(&b).is_err());
}
