use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::spectral::{Grid, GridFunction};

/// Steepness of the erf bridge.
pub const BRIDGE_STEEPNESS: f64 = 5.0;

/// Smooth monotone step from 0 at `t ≤ 0` to 1 at `t ≥ 1`, flat to all orders at both ends.
pub fn smooth_step(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else if t >= 1.0 {
        1.0
    } else {
        0.5 * (1.0 + libm::erf(BRIDGE_STEEPNESS * (t - 0.5) / (t * (1.0 - t)).sqrt()))
    }
}

/// Radial profile equal to 1 on `r ≤ r1` and 0 on `r ≥ r2`.
pub fn radial_profile(r: f64, r1: f64, r2: f64) -> f64 {
    1.0 - smooth_step((r - r1) / (r2 - r1))
}

/// Radial cutoff `φ` with `φ ≡ 1` on `|x| ≤ r1` and `φ ≡ 0` on `|x| ≥ r2`.
#[derive(Clone, Debug)]
pub struct Cutoff {
    pub phi: GridFunction,
    pub r1: f64,
    pub r2: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CutoffRadii {
    pub r1: f64,
    pub r2: f64,
}

impl CutoffRadii {
    /// Widest transition that fits the grid: just outside the ball to just inside the torus.
    pub fn default_for(grid: &Grid) -> CutoffRadii {
        let r = grid.radius();
        let half = grid.length() / 2.0;
        CutoffRadii { r1: r + (half - r) / 40.0, r2: half * 0.97 }
    }
}

pub fn build_cutoff(grid: &Grid, r1: f64, r2: f64) -> Result<Cutoff> {
    let half = grid.length() / 2.0;
    if !(grid.radius() < r1 && r1 < r2 && r2 < half) {
        return Err(LabError::InvalidCutoff(format!(
            "need R = {} < r1 = {r1} < r2 = {r2} < L/2 = {half}",
            grid.radius()
        )));
    }
    let phi = GridFunction::from_real_fn(grid, |x| {
        let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        radial_profile(r, r1, r2)
    });
    Ok(Cutoff { phi, r1, r2 })
}

impl Cutoff {
    pub fn default_for(grid: &Grid) -> Result<Cutoff> {
        let r = CutoffRadii::default_for(grid);
        build_cutoff(grid, r.r1, r.r2)
    }

    pub fn grid(&self) -> &Grid {
        self.phi.grid()
    }

    /// `1 − φ`.
    pub fn complement(&self) -> GridFunction {
        let one = GridFunction::from_fn(self.grid(), |_| Complex64::new(1.0, 0.0));
        one.sub(&self.phi).expect("same grid")
    }

    /// Largest `|φ̂|` on the outer shell of the lattice (any `|k_i| = N/2`) relative to `φ̂(0)`.
    pub fn nyquist_tail(&self) -> f64 {
        let grid = self.grid();
        let spec = self.phi.to_spectral();
        let half = grid.n() as i64 / 2;
        let mut k = vec![0i64; grid.d()];
        let mut tail: f64 = 0.0;
        for (flat, v) in spec.values().iter().enumerate() {
            grid.frequency_index(flat, &mut k);
            if k.iter().any(|&ki| ki == -half) {
                tail = tail.max(v.norm());
            }
        }
        let zero = grid.flat_of_frequency(&vec![0; grid.d()]).expect("zero mode");
        tail / spec.values()[zero].norm()
    }
}
