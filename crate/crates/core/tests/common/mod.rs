//! Independent reference implementations shared by the integration tests.
#![allow(dead_code)]

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use viscoplast::field::spectral;
use viscoplast::{PeriodicField, PeriodicGrid, Rank, SymTensor};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_sym(rng: &mut impl Rng, dim: usize, scale: f64) -> SymTensor {
    let mut t = SymTensor::zeros(dim);
    for i in 0..dim {
        for j in i..dim {
            t.set(i, j, rng.gen_range(-scale..=scale));
        }
    }
    t
}

/// Derivative of the trigonometric interpolant by a direct O(n^2) DFT.
pub fn dft_derivative_1d(values: &[f64], length: f64) -> Vec<f64> {
    let n = values.len();
    let tau = std::f64::consts::TAU;
    let coef: Vec<Complex64> = (0..n)
        .map(|k| {
            (0..n)
                .map(|j| values[j] * Complex64::from_polar(1.0, -tau * (k * j) as f64 / n as f64))
                .sum::<Complex64>()
        })
        .collect();
    (0..n)
        .map(|j| {
            let mut s = Complex64::new(0.0, 0.0);
            for (k, c) in coef.iter().enumerate() {
                let kk = if k < n / 2 {
                    k as f64
                } else if k == n / 2 {
                    0.0
                } else {
                    k as f64 - n as f64
                };
                let w = Complex64::new(0.0, kk * tau / length);
                s += c * w * Complex64::from_polar(1.0, tau * (k * j) as f64 / n as f64);
            }
            s.re / n as f64
        })
        .collect()
}

/// Gaussian elimination with partial pivoting on a small complex system.
pub fn solve_dense(mut a: Vec<Vec<Complex64>>, mut b: Vec<Complex64>) -> Vec<Complex64> {
    let n = b.len();
    for c in 0..n {
        let piv = (c..n)
            .max_by(|&i, &j| a[i][c].norm().total_cmp(&a[j][c].norm()))
            .unwrap();
        a.swap(c, piv);
        b.swap(c, piv);
        for r in c + 1..n {
            let f = a[r][c] / a[c][c];
            for k in c..n {
                let v = a[c][k];
                a[r][k] -= f * v;
            }
            let v = b[c];
            b[r] -= f * v;
        }
    }
    let mut x = vec![Complex64::new(0.0, 0.0); n];
    for r in (0..n).rev() {
        let mut s = b[r];
        for k in r + 1..n {
            s -= a[r][k] * x[k];
        }
        x[r] = s / a[r][r];
    }
    x
}

/// Solves `-mu Lap u - (lambda + mu) grad div u = f` (1D: `-mu u'' = f`) by
/// assembling and inverting the symbol matrix mode by mode. Mean and Nyquist
/// modes are zeroed.
pub fn lame_oracle(f: &PeriodicField, mu: f64, lambda: f64) -> PeriodicField {
    let g = *f.grid();
    let d = g.dim();
    let hats: Vec<Vec<Complex64>> = (0..d).map(|c| spectral::forward(&g, f.component(c))).collect();
    let mut out = vec![vec![Complex64::new(0.0, 0.0); g.len()]; d];
    for i in 0..g.len() {
        if g.is_null_mode(i) {
            continue;
        }
        let k = g.wave_vector(i);
        let k2: f64 = k[..d].iter().map(|x| x * x).sum();
        let mut a = vec![vec![Complex64::new(0.0, 0.0); d]; d];
        for r in 0..d {
            for c in 0..d {
                let mut v = if d == 1 { 0.0 } else { (lambda + mu) * k[r] * k[c] };
                if r == c {
                    v += mu * k2;
                }
                a[r][c] = Complex64::new(v, 0.0);
            }
        }
        let rhs: Vec<Complex64> = (0..d).map(|c| hats[c][i]).collect();
        let x = solve_dense(a, rhs);
        for c in 0..d {
            out[c][i] = x[c];
        }
    }
    let comps = out.into_iter().map(|c| spectral::inverse_real(&g, c)).collect();
    PeriodicField::from_components(g, Rank::Vector, comps).unwrap()
}

/// Fourth-order central difference on a periodic array.
pub fn fd_dx(v: &[f64], h: f64) -> Vec<f64> {
    let n = v.len();
    (0..n)
        .map(|i| {
            let a = v[(i + n - 2) % n];
            let b = v[(i + n - 1) % n];
            let c = v[(i + 1) % n];
            let e = v[(i + 2) % n];
            (a - 8.0 * b + 8.0 * c - e) / (12.0 * h)
        })
        .collect()
}

/// Explicit finite-difference solver for the 1D compressible Navier-Stokes
/// equations `rho_t + (rho u)_x = 0`, `(rho u)_t + (rho u^2 + a rho^gamma)_x =
/// (mu u_x)_x + rho f` in conservative variables with RK4 in time.
pub struct FdNavierStokes {
    pub n: usize,
    pub length: f64,
    pub mu: f64,
    pub a: f64,
    pub gamma: f64,
}

impl FdNavierStokes {
    fn rhs(&self, rho: &[f64], m: &[f64], f: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let h = self.length / self.n as f64;
        let u: Vec<f64> = rho.iter().zip(m).map(|(r, m)| m / r).collect();
        let ux = fd_dx(&u, h);
        let flux_m: Vec<f64> = (0..self.n)
            .map(|i| m[i] * u[i] + self.a * rho[i].powf(self.gamma) - self.mu * ux[i])
            .collect();
        let dr = fd_dx(m, h);
        let dm = fd_dx(&flux_m, h);
        (
            dr.iter().map(|v| -v).collect(),
            (0..self.n).map(|i| -dm[i] + rho[i] * f[i]).collect(),
        )
    }

    /// Returns `(rho, u)` at `t_end`.
    pub fn run(&self, rho0: &[f64], u0: &[f64], f: &[f64], t_end: f64, dt: f64) -> (Vec<f64>, Vec<f64>) {
        let steps = (t_end / dt).ceil() as usize;
        let dt = t_end / steps as f64;
        let mut rho = rho0.to_vec();
        let mut m: Vec<f64> = rho0.iter().zip(u0).map(|(r, u)| r * u).collect();
        let axpy = |x: &[f64], c: f64, y: &[f64]| -> Vec<f64> {
            x.iter().zip(y).map(|(a, b)| a + c * b).collect()
        };
        for _ in 0..steps {
            let (k1r, k1m) = self.rhs(&rho, &m, f);
            let (k2r, k2m) = self.rhs(&axpy(&rho, 0.5 * dt, &k1r), &axpy(&m, 0.5 * dt, &k1m), f);
            let (k3r, k3m) = self.rhs(&axpy(&rho, 0.5 * dt, &k2r), &axpy(&m, 0.5 * dt, &k2m), f);
            let (k4r, k4m) = self.rhs(&axpy(&rho, dt, &k3r), &axpy(&m, dt, &k3m), f);
            for i in 0..self.n {
                rho[i] += dt / 6.0 * (k1r[i] + 2.0 * k2r[i] + 2.0 * k3r[i] + k4r[i]);
                m[i] += dt / 6.0 * (k1m[i] + 2.0 * k2m[i] + 2.0 * k3m[i] + k4m[i]);
            }
        }
        let u = rho.iter().zip(&m).map(|(r, m)| m / r).collect();
        (rho, u)
    }
}

/// Conservative 1D transport by characteristics: for a stationary velocity
/// `u(x)`, `rho(x, t) = rho0(X) J` where `X` is the foot of the characteristic
/// through `x` and `J = dX/dx` obeys `J' = u'(X) J` backwards in time.
pub fn characteristics_1d<U, DU, R>(u: U, du: DU, rho0: R, x: f64, t: f64, steps: usize) -> f64
where
    U: Fn(f64) -> f64,
    DU: Fn(f64) -> f64,
    R: Fn(f64) -> f64,
{
    let h = -t / steps as f64;
    let (mut y, mut j) = (x, 1.0f64);
    let f = |y: f64, j: f64| (u(y), du(y) * j);
    for _ in 0..steps {
        let (a1, b1) = f(y, j);
        let (a2, b2) = f(y + 0.5 * h * a1, j + 0.5 * h * b1);
        let (a3, b3) = f(y + 0.5 * h * a2, j + 0.5 * h * b2);
        let (a4, b4) = f(y + h * a3, j + h * b3);
        y += h / 6.0 * (a1 + 2.0 * a2 + 2.0 * a3 + a4);
        j += h / 6.0 * (b1 + 2.0 * b2 + 2.0 * b3 + b4);
    }
    rho0(y) * j
}

pub fn grid(dim: usize, n: usize) -> PeriodicGrid {
    PeriodicGrid::standard(dim, n).unwrap()
}

pub fn l2_diff(a: &[f64], b: &[f64], cell: f64) -> f64 {
    (a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>() * cell).sqrt()
}
