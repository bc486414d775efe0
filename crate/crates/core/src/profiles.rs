//! Named analytic profiles for initial data and forcing.
//!
//! Wave vectors are integers in units of `2 pi / L`, so every profile is
//! periodic on the grid.

use serde::{Deserialize, Serialize};

use crate::field::{PeriodicField, PeriodicGrid, Rank};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "profile", rename_all = "snake_case", deny_unknown_fields)]
pub enum Profile {
    Const {
        value: f64,
    },
    /// `base + amplitude sin(k . x + phase)`.
    SineBump {
        #[serde(default)]
        base: f64,
        #[serde(default = "one")]
        amplitude: f64,
        #[serde(default = "first_axis")]
        wave: [i32; 3],
        #[serde(default)]
        phase: f64,
    },
    /// `base + a1 sin(k1 . x) + a2 cos(k2 . x)`.
    TwoMode {
        #[serde(default)]
        base: f64,
        a1: f64,
        #[serde(default = "first_axis")]
        k1: [i32; 3],
        a2: f64,
        #[serde(default = "second_mode")]
        k2: [i32; 3],
    },
}

fn one() -> f64 {
    1.0
}

fn first_axis() -> [i32; 3] {
    [1, 0, 0]
}

fn second_mode() -> [i32; 3] {
    [2, 0, 0]
}

/// Names accepted in the `profile` field.
pub const REGISTRY: [&str; 3] = ["const", "sine_bump", "two_mode"];

fn phase(grid: &PeriodicGrid, k: &[i32; 3], x: &[f64; 3]) -> f64 {
    let s = std::f64::consts::TAU / grid.length();
    (0..grid.dim()).map(|a| k[a] as f64 * s * x[a]).sum()
}

impl Profile {
    pub fn name(&self) -> &'static str {
        match self {
            Profile::Const { .. } => REGISTRY[0],
            Profile::SineBump { .. } => REGISTRY[1],
            Profile::TwoMode { .. } => REGISTRY[2],
        }
    }

    pub fn eval(&self, grid: &PeriodicGrid, x: &[f64; 3]) -> f64 {
        match self {
            Profile::Const { value } => *value,
            Profile::SineBump {
                base,
                amplitude,
                wave,
                phase: ph,
            } => base + amplitude * (phase(grid, wave, x) + ph).sin(),
            Profile::TwoMode { base, a1, k1, a2, k2 } => {
                base + a1 * phase(grid, k1, x).sin() + a2 * phase(grid, k2, x).cos()
            }
        }
    }

    pub fn scalar(&self, grid: PeriodicGrid) -> PeriodicField {
        PeriodicField::scalar_from_fn(grid, |x| self.eval(&grid, &x))
    }
}

/// One profile per velocity component; missing components are zero.
pub fn vector(profiles: &[Profile], grid: PeriodicGrid) -> PeriodicField {
    let comps: Vec<Vec<f64>> = (0..grid.dim())
        .map(|c| match profiles.get(c) {
            Some(p) => p.scalar(grid).into_values(),
            None => vec![0.0; grid.len()],
        })
        .collect();
    PeriodicField::from_components(grid, Rank::Vector, comps).expect("one component per axis")
}
