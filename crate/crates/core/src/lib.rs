//! Numerical laboratory for compressible power-law and Bingham fluids on
//! periodic domains.
//!
//! The crate is organized bottom-up:
//!
//! - [`constitutive`]: stress laws, linearizations, ellipticity symbol.
//! - [`field`]: periodic grids, spectral derivatives, norms, I/O.
//! - [`elliptic`]: Newton solver for `-div S_delta(D(u)) = f` and regularity checks.
//! - [`transport`]: conservative density transport.
//! - [`powerlaw`]: Galerkin time integrator with a per-step fixed-point iteration.
//! - [`diagnostics`]: energy ledger, monitor function, uniqueness distance.
//! - [`bingham`]: `delta`-continuation toward the Bingham limit in 1D.
//! - [`cli`]: configuration, dispatch and run artifacts.
//! - [`profiles`], [`verify`]: analytic profile registry and the property suite.

pub mod bingham;
pub mod cli;
pub mod constitutive;
pub mod diagnostics;
pub mod elliptic;
pub mod error;
pub mod field;
pub mod krylov;
pub mod par;
pub mod powerlaw;
pub mod profiles;
pub mod transport;
pub mod verify;

pub use constitutive::{FluidParams, SymTensor};
pub use error::{Error, Result};
pub use field::{PeriodicField, PeriodicGrid, Rank};
