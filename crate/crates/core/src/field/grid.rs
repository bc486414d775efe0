use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform periodic grid with `n` points per axis on `[0, length)^dim`.
///
/// Flat indices are row-major with axis 0 slowest.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeriodicGrid {
    dim: usize,
    n: usize,
    length: f64,
}

impl PeriodicGrid {
    pub fn new(dim: usize, n: usize, length: f64) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(Error::InvalidField(format!("dim must be 1, 2 or 3, got {dim}")));
        }
        if n < 8 || n % 2 != 0 {
            return Err(Error::InvalidField(format!(
                "n must be even and >= 8, got {n}"
            )));
        }
        if !(length.is_finite() && length > 0.0) {
            return Err(Error::InvalidField(format!(
                "length must be positive, got {length}"
            )));
        }
        Ok(Self { dim, n, length })
    }

    /// Grid on the standard `2 pi` torus.
    pub fn standard(dim: usize, n: usize) -> Result<Self> {
        Self::new(dim, n, 2.0 * std::f64::consts::PI)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn spacing(&self) -> f64 {
        self.length / self.n as f64
    }

    /// Total number of nodes, `n^dim`.
    pub fn len(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Quadrature weight of one node, `h^dim`.
    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.dim as i32)
    }

    pub fn volume(&self) -> f64 {
        self.length.powi(self.dim as i32)
    }

    /// Distance between consecutive flat indices along `axis`.
    pub fn stride(&self, axis: usize) -> usize {
        self.n.pow((self.dim - 1 - axis) as u32)
    }

    pub fn multi_index(&self, flat: usize) -> [usize; 3] {
        let mut idx = [0usize; 3];
        let mut r = flat;
        for a in (0..self.dim).rev() {
            idx[a] = r % self.n;
            r /= self.n;
        }
        idx
    }

    pub fn flat_index(&self, idx: &[usize; 3]) -> usize {
        let mut f = 0;
        for &i in idx.iter().take(self.dim) {
            f = f * self.n + i;
        }
        f
    }

    /// Node coordinates; unused trailing entries are zero.
    pub fn coords(&self, flat: usize) -> [f64; 3] {
        let idx = self.multi_index(flat);
        let h = self.spacing();
        let mut x = [0.0; 3];
        for a in 0..self.dim {
            x[a] = idx[a] as f64 * h;
        }
        x
    }

    /// Signed integer frequency of FFT index `j`, in `(-n/2, n/2]`.
    pub fn frequency(&self, j: usize) -> i64 {
        if j <= self.n / 2 {
            j as i64
        } else {
            j as i64 - self.n as i64
        }
    }

    /// Wavenumber used for differentiation; the Nyquist mode maps to zero.
    pub fn wavenumber(&self, j: usize) -> f64 {
        if j == self.n / 2 {
            0.0
        } else {
            2.0 * std::f64::consts::PI / self.length * self.frequency(j) as f64
        }
    }

    /// Differentiation wave vector of a flat spectral index.
    pub fn wave_vector(&self, flat: usize) -> [f64; 3] {
        let idx = self.multi_index(flat);
        let mut k = [0.0; 3];
        for a in 0..self.dim {
            k[a] = self.wavenumber(idx[a]);
        }
        k
    }

    /// Modes annihilated by every spectral derivative: the mean and the
    /// Nyquist combinations.
    pub fn is_null_mode(&self, flat: usize) -> bool {
        let idx = self.multi_index(flat);
        idx[..self.dim].iter().all(|&j| j == 0 || j == self.n / 2)
    }

    /// Largest integer frequency magnitude over all axes; Nyquist counts as `n/2`.
    pub fn max_frequency(&self, flat: usize) -> usize {
        let idx = self.multi_index(flat);
        idx[..self.dim]
            .iter()
            .map(|&j| self.frequency(j).unsigned_abs() as usize)
            .max()
            .unwrap_or(0)
    }

    pub fn check_same(&self, other: &PeriodicGrid) -> Result<()> {
        if self != other {
            return Err(Error::GridMismatch(format!(
                "({}D, n={}, L={}) vs ({}D, n={}, L={})",
                self.dim, self.n, self.length, other.dim, other.n, other.length
            )));
        }
        Ok(())
    }
}
