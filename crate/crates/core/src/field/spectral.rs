//! FFT plumbing on a [`PeriodicGrid`].
//!
//! Forward transforms are unnormalized; [`inverse_real`] applies `1 / n^dim`.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::grid::PeriodicGrid;
use crate::par;

type Plan = Arc<dyn Fft<f64>>;

fn plan(n: usize, inverse: bool) -> Plan {
    static PLANS: OnceLock<Mutex<HashMap<(usize, bool), Plan>>> = OnceLock::new();
    let cache = PLANS.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().unwrap_or_else(|e| e.into_inner());
    guard
        .entry((n, inverse))
        .or_insert_with(|| {
            let mut planner = FftPlanner::new();
            if inverse {
                planner.plan_fft_inverse(n)
            } else {
                planner.plan_fft_forward(n)
            }
        })
        .clone()
}

/// In-place multidimensional transform, one axis at a time.
pub fn fft_in_place(grid: &PeriodicGrid, data: &mut [Complex64], inverse: bool) {
    let n = grid.n();
    let total = grid.len();
    debug_assert_eq!(data.len(), total);
    let fft = plan(n, inverse);
    for axis in 0..grid.dim() {
        let s = grid.stride(axis);
        if s == 1 {
            par::for_each_chunk(data, n, |line| fft.process(line));
            continue;
        }
        let lines = total / n;
        let base = |l: usize| (l / s) * s * n + l % s;
        let src: &[Complex64] = data;
        let transformed = par::map_range(lines, |l| {
            let b = base(l);
            let mut buf: Vec<Complex64> = (0..n).map(|j| src[b + j * s]).collect();
            fft.process(&mut buf);
            buf
        });
        for (l, buf) in transformed.into_iter().enumerate() {
            let b = base(l);
            for (j, v) in buf.into_iter().enumerate() {
                data[b + j * s] = v;
            }
        }
    }
}

pub fn forward(grid: &PeriodicGrid, values: &[f64]) -> Vec<Complex64> {
    let mut c: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fft_in_place(grid, &mut c, false);
    c
}

/// Inverse transform, normalized, keeping the real part.
pub fn inverse_real(grid: &PeriodicGrid, mut coeffs: Vec<Complex64>) -> Vec<f64> {
    fft_in_place(grid, &mut coeffs, true);
    let scale = 1.0 / grid.len() as f64;
    par::map_slice(&coeffs, |z| z.re * scale)
}

/// Multiplies every coefficient by `symbol(flat_index)`.
pub fn apply_symbol<F>(coeffs: &mut [Complex64], symbol: F)
where
    F: Fn(usize) -> Complex64 + Sync + Send,
{
    par::for_each_indexed(coeffs, |i, z| *z *= symbol(i));
}

/// Spectral first derivative of a real array along `axis`.
pub fn derivative(grid: &PeriodicGrid, values: &[f64], axis: usize) -> Vec<f64> {
    let mut c = forward(grid, values);
    differentiate(grid, &mut c, axis);
    inverse_real(grid, c)
}

/// Multiplies coefficients by `i k_axis` in place.
pub fn differentiate(grid: &PeriodicGrid, coeffs: &mut [Complex64], axis: usize) {
    apply_symbol(coeffs, |i| {
        Complex64::new(0.0, grid.wave_vector(i)[axis])
    });
}

/// All first derivatives of a real array from a single forward transform.
pub fn gradient(grid: &PeriodicGrid, values: &[f64]) -> Vec<Vec<f64>> {
    let c = forward(grid, values);
    (0..grid.dim())
        .map(|axis| {
            let mut ca = c.clone();
            differentiate(grid, &mut ca, axis);
            inverse_real(grid, ca)
        })
        .collect()
}

/// `sum_j d_j rows[j]` with one inverse transform.
pub fn divergence(grid: &PeriodicGrid, rows: &[&[f64]]) -> Vec<f64> {
    let mut acc = vec![Complex64::new(0.0, 0.0); grid.len()];
    for (axis, r) in rows.iter().enumerate() {
        let mut c = forward(grid, r);
        differentiate(grid, &mut c, axis);
        par::for_each_indexed(&mut acc, |i, a| *a += c[i]);
    }
    inverse_real(grid, acc)
}

/// Removes the mean and Nyquist combinations (the kernel of every derivative).
pub fn project_out_null_modes(grid: &PeriodicGrid, values: &[f64]) -> Vec<f64> {
    let mut c = forward(grid, values);
    apply_symbol(&mut c, |i| {
        if grid.is_null_mode(i) {
            Complex64::new(0.0, 0.0)
        } else {
            Complex64::new(1.0, 0.0)
        }
    });
    inverse_real(grid, c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn roundtrip_3d() {
        let g = PeriodicGrid::standard(3, 8).unwrap();
        let v: Vec<f64> = (0..g.len()).map(|i| ((i * 37 % 101) as f64).sin()).collect();
        let back = inverse_real(&g, forward(&g, &v));
        for (a, b) in v.iter().zip(&back) {
            assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn derivative_of_sine() {
        let g = PeriodicGrid::standard(1, 32).unwrap();
        let v: Vec<f64> = (0..32).map(|i| g.coords(i)[0].sin()).collect();
        let d = derivative(&g, &v, 0);
        for i in 0..32 {
            assert!((d[i] - g.coords(i)[0].cos()).abs() < 1e-12);
        }
    }

    #[test]
    fn derivative_on_nonstandard_length() {
        let g = PeriodicGrid::new(2, 16, 1.0).unwrap();
        let v: Vec<f64> = (0..g.len())
            .map(|i| (2.0 * PI * g.coords(i)[1]).sin())
            .collect();
        let d = derivative(&g, &v, 1);
        for i in 0..g.len() {
            let expect = 2.0 * PI * (2.0 * PI * g.coords(i)[1]).cos();
            assert!((d[i] - expect).abs() < 1e-11);
        }
    }
}
