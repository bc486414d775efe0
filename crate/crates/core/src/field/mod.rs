//! Sampled fields on uniform periodic grids: derivatives, quadrature and norms.

pub mod grid;
pub mod io;
pub mod spectral;

pub use grid::PeriodicGrid;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par;

/// Tensor rank of a field. Symmetric tensors are stored in full `d x d` form.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rank {
    Scalar,
    Vector,
    SymTensor,
}

impl Rank {
    pub fn components(self, dim: usize) -> usize {
        match self {
            Rank::Scalar => 1,
            Rank::Vector => dim,
            Rank::SymTensor => dim * dim,
        }
    }

    pub fn code(self) -> u32 {
        match self {
            Rank::Scalar => 0,
            Rank::Vector => 1,
            Rank::SymTensor => 2,
        }
    }

    pub fn from_code(c: u32) -> Option<Rank> {
        match c {
            0 => Some(Rank::Scalar),
            1 => Some(Rank::Vector),
            2 => Some(Rank::SymTensor),
            _ => None,
        }
    }
}

/// Node values of a scalar, vector or tensor field, component-major.
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicField {
    grid: PeriodicGrid,
    rank: Rank,
    values: Vec<f64>,
}

impl PeriodicField {
    pub fn new(grid: PeriodicGrid, rank: Rank, values: Vec<f64>) -> Result<Self> {
        let expect = grid.len() * rank.components(grid.dim());
        if values.len() != expect {
            return Err(Error::InvalidField(format!(
                "expected {expect} values, got {}",
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidField(format!("non-finite sample at index {i}")));
        }
        Ok(Self { grid, rank, values })
    }

    pub fn zeros(grid: PeriodicGrid, rank: Rank) -> Self {
        let len = grid.len() * rank.components(grid.dim());
        Self {
            grid,
            rank,
            values: vec![0.0; len],
        }
    }

    pub fn constant(grid: PeriodicGrid, c: f64) -> Self {
        Self {
            grid,
            rank: Rank::Scalar,
            values: vec![c; grid.len()],
        }
    }

    pub fn scalar_from_fn<F>(grid: PeriodicGrid, f: F) -> Self
    where
        F: Fn(&[f64; 3]) -> f64 + Sync + Send,
    {
        let values = par::map_range(grid.len(), |i| f(&grid.coords(i)));
        Self {
            grid,
            rank: Rank::Scalar,
            values,
        }
    }

    /// Vector field; only the first `dim` entries of `f`'s output are used.
    pub fn vector_from_fn<F>(grid: PeriodicGrid, f: F) -> Self
    where
        F: Fn(&[f64; 3]) -> [f64; 3] + Sync + Send,
    {
        let d = grid.dim();
        let pts = par::map_range(grid.len(), |i| f(&grid.coords(i)));
        let mut values = Vec::with_capacity(d * grid.len());
        for c in 0..d {
            values.extend(pts.iter().map(|v| v[c]));
        }
        Self {
            grid,
            rank: Rank::Vector,
            values,
        }
    }

    pub fn from_components(grid: PeriodicGrid, rank: Rank, comps: Vec<Vec<f64>>) -> Result<Self> {
        if comps.len() != rank.components(grid.dim()) {
            return Err(Error::InvalidField(format!(
                "expected {} components, got {}",
                rank.components(grid.dim()),
                comps.len()
            )));
        }
        Self::new(grid, rank, comps.concat())
    }

    pub fn grid(&self) -> &PeriodicGrid {
        &self.grid
    }

    pub fn rank(&self) -> Rank {
        self.rank
    }

    pub fn n_components(&self) -> usize {
        self.rank.components(self.grid.dim())
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn component(&self, c: usize) -> &[f64] {
        let n = self.grid.len();
        &self.values[c * n..(c + 1) * n]
    }

    pub fn component_mut(&mut self, c: usize) -> &mut [f64] {
        let n = self.grid.len();
        &mut self.values[c * n..(c + 1) * n]
    }

    pub fn components(&self) -> Vec<&[f64]> {
        (0..self.n_components()).map(|c| self.component(c)).collect()
    }

    fn same_shape(&self, other: &PeriodicField) -> Result<()> {
        self.grid.check_same(&other.grid)?;
        if self.rank != other.rank {
            return Err(Error::GridMismatch(format!(
                "rank {:?} vs {:?}",
                self.rank, other.rank
            )));
        }
        Ok(())
    }

    pub fn map<F>(&self, f: F) -> PeriodicField
    where
        F: Fn(f64) -> f64 + Sync + Send,
    {
        PeriodicField {
            grid: self.grid,
            rank: self.rank,
            values: par::map_slice(&self.values, |&v| f(v)),
        }
    }

    pub fn scale(&self, c: f64) -> PeriodicField {
        self.map(|v| c * v)
    }

    /// `self + c * other`.
    pub fn axpy(&self, c: f64, other: &PeriodicField) -> Result<PeriodicField> {
        self.same_shape(other)?;
        let values = par::map_range(self.values.len(), |i| self.values[i] + c * other.values[i]);
        Ok(PeriodicField {
            grid: self.grid,
            rank: self.rank,
            values,
        })
    }

    pub fn add(&self, other: &PeriodicField) -> Result<PeriodicField> {
        self.axpy(1.0, other)
    }

    pub fn sub(&self, other: &PeriodicField) -> Result<PeriodicField> {
        self.axpy(-1.0, other)
    }

    /// Spectral derivative of every component along `axis`.
    pub fn derivative(&self, axis: usize) -> PeriodicField {
        assert!(axis < self.grid.dim(), "axis out of range");
        let comps: Vec<Vec<f64>> = (0..self.n_components())
            .map(|c| spectral::derivative(&self.grid, self.component(c), axis))
            .collect();
        PeriodicField {
            grid: self.grid,
            rank: self.rank,
            values: comps.concat(),
        }
    }

    /// `grad[c][a] = d_a (component c)`.
    pub fn gradient_components(&self) -> Vec<Vec<Vec<f64>>> {
        (0..self.n_components())
            .map(|c| spectral::gradient(&self.grid, self.component(c)))
            .collect()
    }

    /// Gradient of a scalar field as a vector field.
    pub fn gradient(&self) -> Result<PeriodicField> {
        if self.rank != Rank::Scalar {
            return Err(Error::InvalidField("gradient needs a scalar field".into()));
        }
        let g = spectral::gradient(&self.grid, &self.values);
        Ok(PeriodicField {
            grid: self.grid,
            rank: Rank::Vector,
            values: g.concat(),
        })
    }

    /// Divergence of a vector field.
    pub fn divergence(&self) -> Result<PeriodicField> {
        if self.rank != Rank::Vector {
            return Err(Error::InvalidField("divergence needs a vector field".into()));
        }
        let rows = self.components();
        Ok(PeriodicField {
            grid: self.grid,
            rank: Rank::Scalar,
            values: spectral::divergence(&self.grid, &rows),
        })
    }

    /// Pointwise Euclidean / Frobenius modulus.
    pub fn modulus(&self) -> Vec<f64> {
        let nc = self.n_components();
        if nc == 1 {
            return par::map_slice(&self.values, |v| v.abs());
        }
        let n = self.grid.len();
        par::map_range(n, |i| {
            (0..nc)
                .map(|c| self.values[c * n + i].powi(2))
                .sum::<f64>()
                .sqrt()
        })
    }

    /// Rectangle-rule `L^p` norm of the pointwise modulus; `p = inf` gives the max.
    pub fn lp_norm(&self, p: f64) -> f64 {
        lp_norm_of(&self.grid, &self.modulus(), p)
    }

    pub fn l2_norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    /// `W^{k,p}` norm: `(sum_{|alpha| <= k} ||d^alpha f||_p^p)^(1/p)` over multi-indices.
    pub fn sobolev_norm(&self, k: usize, p: f64) -> f64 {
        let mut terms = vec![self.lp_norm(p)];
        if k >= 1 {
            let d = self.grid.dim();
            let firsts: Vec<PeriodicField> = (0..d).map(|a| self.derivative(a)).collect();
            for f in &firsts {
                terms.push(f.lp_norm(p));
            }
            if k >= 2 {
                for a in 0..d {
                    for b in a..d {
                        terms.push(firsts[a].derivative(b).lp_norm(p));
                    }
                }
            }
            assert!(k <= 2, "sobolev_norm supports k <= 2");
        }
        if p.is_infinite() {
            terms.into_iter().fold(0.0, f64::max)
        } else {
            terms.iter().map(|t| t.powf(p)).sum::<f64>().powf(1.0 / p)
        }
    }

    /// Grid mean of every component.
    pub fn mean(&self) -> Vec<f64> {
        let n = self.grid.len() as f64;
        (0..self.n_components())
            .map(|c| par::sum(self.component(c)) / n)
            .collect()
    }

    /// `sum over nodes * h^d` of every component.
    pub fn integral(&self) -> Vec<f64> {
        let w = self.grid.cell_volume();
        (0..self.n_components())
            .map(|c| par::sum(self.component(c)) * w)
            .collect()
    }

    pub fn mean_zero_project(&self) -> PeriodicField {
        let means = self.mean();
        let n = self.grid.len();
        let mut out = self.clone();
        par::for_each_indexed(&mut out.values, |i, v| *v -= means[i / n]);
        out
    }

    /// Discrete `L^2` inner product, `h^d sum_i f_i g_i` over all components.
    pub fn dot(&self, other: &PeriodicField) -> f64 {
        debug_assert_eq!(self.values.len(), other.values.len());
        par::sum_by(self.values.len(), |i| self.values[i] * other.values[i]) * self.grid.cell_volume()
    }

    pub fn max_abs(&self) -> f64 {
        par::max_by(self.values.len(), |i| self.values[i].abs())
    }

    pub fn min(&self) -> f64 {
        par::min_by(self.values.len(), |i| self.values[i])
    }

    pub fn max(&self) -> f64 {
        par::max_by(self.values.len(), |i| self.values[i])
    }

    /// Componentwise removal of the mean and Nyquist modes.
    pub fn project_out_null_modes(&self) -> PeriodicField {
        let comps: Vec<Vec<f64>> = (0..self.n_components())
            .map(|c| spectral::project_out_null_modes(&self.grid, self.component(c)))
            .collect();
        PeriodicField {
            grid: self.grid,
            rank: self.rank,
            values: comps.concat(),
        }
    }
}

/// Rectangle-rule `L^p` norm of raw node values.
pub fn lp_norm_of(grid: &PeriodicGrid, values: &[f64], p: f64) -> f64 {
    if p.is_infinite() {
        return par::max_by(values.len(), |i| values[i].abs()).max(0.0);
    }
    let w = grid.cell_volume();
    if p == 2.0 {
        return (par::sum_by(values.len(), |i| values[i] * values[i]) * w).sqrt();
    }
    (par::sum_by(values.len(), |i| values[i].abs().powf(p)) * w).powf(1.0 / p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn g1(n: usize) -> PeriodicGrid {
        PeriodicGrid::standard(1, n).unwrap()
    }

    #[test]
    fn constructor_validates() {
        let g = g1(8);
        assert!(PeriodicField::new(g, Rank::Scalar, vec![0.0; 7]).is_err());
        let mut v = vec![0.0; 8];
        v[3] = f64::NAN;
        assert!(PeriodicField::new(g, Rank::Scalar, v).is_err());
    }

    #[test]
    fn constant_norms() {
        let g = g1(16);
        let f = PeriodicField::constant(g, -3.0);
        for p in [1.0, 2.0, 6.0] {
            let expect = 3.0 * (2.0 * PI).powf(1.0 / p);
            assert!((f.lp_norm(p) - expect).abs() < 1e-12);
        }
        assert_eq!(f.lp_norm(f64::INFINITY), 3.0);
        let expect = 3.0 * (2.0 * PI).powf(1.0 / 6.0);
        assert!((f.sobolev_norm(1, 6.0) - expect).abs() < 1e-12);
    }

    #[test]
    fn sine_norms() {
        let f = PeriodicField::scalar_from_fn(g1(64), |x| x[0].sin());
        assert!((f.lp_norm(2.0) - PI.sqrt()).abs() < 1e-10);
        assert!((f.sobolev_norm(1, 2.0) - (2.0 * PI).sqrt()).abs() < 1e-10);
        assert_eq!(f.sobolev_norm(0, 3.0), f.lp_norm(3.0));
        assert!((f.lp_norm(f64::INFINITY) - 1.0).abs() < f.grid().spacing().powi(2));
    }

    #[test]
    fn projection() {
        let f = PeriodicField::scalar_from_fn(g1(32), |x| x[0].sin() + 3.0);
        let p = f.mean_zero_project();
        for i in 0..32 {
            let x = p.grid().coords(i)[0];
            assert!((p.values()[i] - x.sin()).abs() < 1e-14);
        }
        let z = PeriodicField::constant(g1(8), 5.0).mean_zero_project();
        assert_eq!(z.max_abs(), 0.0);
    }

    #[test]
    fn mixed_gradient_2d() {
        let g = PeriodicGrid::standard(2, 32).unwrap();
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
    fn vector_divergence() {
        let g = PeriodicGrid::standard(3, 16).unwrap();
        let u = PeriodicField::vector_from_fn(g, |x| [x[0].sin(), (2.0 * x[1]).cos(), x[2].sin()]);
        let div = u.divergence().unwrap();
        for i in 0..g.len() {
            let x = g.coords(i);
            let e = x[0].cos() - 2.0 * (2.0 * x[1]).sin() + x[2].cos();
            assert!((div.values()[i] - e).abs() < 1e-11);
        }
    }

    #[test]
    fn modulus_of_vector() {
        let g = PeriodicGrid::standard(2, 8).unwrap();
        let u = PeriodicField::vector_from_fn(g, |_| [3.0, 4.0, 0.0]);
        assert!(u.modulus().iter().all(|&m| (m - 5.0).abs() < 1e-15));
    }
}
