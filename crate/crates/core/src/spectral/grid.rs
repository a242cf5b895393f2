use std::fmt;
use std::sync::{Arc, OnceLock};

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};

/// Torus discretization parameters: `[-L/2, L/2)^d` sampled with `n` points per axis,
/// with the domain ball of radius `radius` centered at the origin.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub d: usize,
    pub n: usize,
    pub length: f64,
    pub radius: f64,
}

impl GridSpec {
    pub fn validate(&self) -> Result<()> {
        if self.d == 0 {
            return Err(LabError::InvalidGrid("dimension must be positive".into()));
        }
        if self.n < 8 || !self.n.is_power_of_two() {
            return Err(LabError::InvalidGrid(format!(
                "N = {} must be a power of two and at least 8",
                self.n
            )));
        }
        if !(self.length.is_finite() && self.length > 0.0) {
            return Err(LabError::InvalidGrid(format!("box length {} must be positive", self.length)));
        }
        if !(self.radius.is_finite() && self.radius > 0.0) {
            return Err(LabError::InvalidGrid(format!("radius {} must be positive", self.radius)));
        }
        let limit = self.length / 2.0 - self.length / 8.0;
        if self.radius >= limit {
            return Err(LabError::InvalidGrid(format!(
                "ball radius {} does not fit: need R < {limit}",
                self.radius
            )));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.n.pow(self.d as u32)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Lattice spacing `2π/L` of the frequency grid.
    pub fn dual_spacing(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.length
    }

    pub fn spacing(&self) -> f64 {
        self.length / self.n as f64
    }
}

pub(crate) struct GridInner {
    pub(crate) spec: GridSpec,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    /// Signed integer frequency index per FFT slot along one axis.
    pub(crate) index: Vec<i64>,
    /// Physical coordinate per slot along one axis.
    pub(crate) coords: Vec<f64>,
    padded: OnceLock<Grid>,
}

/// Shared handle to a grid with precomputed transform plans.
///
/// Cloning is cheap. Plans are immutable and may be used from many threads.
#[derive(Clone)]
pub struct Grid(pub(crate) Arc<GridInner>);

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_tuple("Grid").field(&self.0.spec).finish()
    }
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0) || self.0.spec == other.0.spec
    }
}

/// Validates `spec` and builds the transform plans for it.
pub fn make_grid(d: usize, n: usize, length: f64, radius: f64) -> Result<Grid> {
    let spec = GridSpec { d, n, length, radius };
    spec.validate()?;
    Ok(Grid::build(spec))
}

impl Grid {
    pub fn from_spec(spec: GridSpec) -> Result<Grid> {
        spec.validate()?;
        Ok(Grid::build(spec))
    }

    /// Builds without validation; used for the 3N/2 padding grids.
    fn build(spec: GridSpec) -> Grid {
        let n = spec.n;
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(n);
        let inv = planner.plan_fft_inverse(n);
        let half = (n / 2) as i64;
        let index = (0..n as i64).map(|j| if j < half { j } else { j - n as i64 }).collect();
        let h = spec.length / n as f64;
        let coords = (0..n).map(|j| -spec.length / 2.0 + j as f64 * h).collect();
        Grid(Arc::new(GridInner { spec, fwd, inv, index, coords, padded: OnceLock::new() }))
    }

    pub fn spec(&self) -> &GridSpec {
        &self.0.spec
    }

    pub fn d(&self) -> usize {
        self.0.spec.d
    }

    pub fn n(&self) -> usize {
        self.0.spec.n
    }

    pub fn len(&self) -> usize {
        self.0.spec.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn length(&self) -> f64 {
        self.0.spec.length
    }

    pub fn radius(&self) -> f64 {
        self.0.spec.radius
    }

    /// Signed integer index `k` of FFT slot `j` (frequency `2πk/L`).
    pub fn signed_index(&self, slot: usize) -> i64 {
        self.0.index[slot]
    }

    /// Slot for a signed index, or `None` outside `[-N/2, N/2)`.
    pub fn slot_of(&self, k: i64) -> Option<usize> {
        let n = self.n() as i64;
        if k < -n / 2 || k >= n / 2 {
            None
        } else {
            Some(k.rem_euclid(n) as usize)
        }
    }

    pub fn coords(&self) -> &[f64] {
        &self.0.coords
    }

    /// Flat row-major offset of a multi-index of slots.
    pub fn flat(&self, slots: &[usize]) -> usize {
        slots.iter().fold(0, |acc, &s| acc * self.n() + s)
    }

    /// Flat offset of a signed frequency multi-index, if it lies on the lattice.
    pub fn flat_of_frequency(&self, k: &[i64]) -> Option<usize> {
        let mut acc = 0;
        for &ki in k {
            acc = acc * self.n() + self.slot_of(ki)?;
        }
        Some(acc)
    }

    /// Grid with `3N/2` points per axis on the same torus, used for dealiased products.
    pub fn padded(&self) -> &Grid {
        self.0.padded.get_or_init(|| {
            let mut spec = self.0.spec;
            spec.n = 3 * spec.n / 2;
            Grid::build(spec)
        })
    }

    /// Visits every lattice point with its frequency vector `ξ`.
    pub fn for_each_frequency(&self, mut f: impl FnMut(usize, &[f64])) {
        let dk = self.spec().dual_spacing();
        let table: Vec<f64> = self.0.index.iter().map(|&k| k as f64 * dk).collect();
        self.walk(&table, &mut f);
    }

    /// Visits every grid point with its physical coordinate `x`.
    pub fn for_each_point(&self, mut f: impl FnMut(usize, &[f64])) {
        let table = self.0.coords.clone();
        self.walk(&table, &mut f);
    }

    /// Signed frequency index multi-index of a flat offset.
    pub fn frequency_index(&self, flat: usize, out: &mut [i64]) {
        let n = self.n();
        let mut rem = flat;
        for slot in out.iter_mut().rev() {
            *slot = self.0.index[rem % n];
            rem /= n;
        }
    }

    fn walk(&self, table: &[f64], f: &mut impl FnMut(usize, &[f64])) {
        let d = self.d();
        let n = self.n();
        let mut idx = vec![0usize; d];
        let mut v: Vec<f64> = vec![table[0]; d];
        for flat in 0..self.len() {
            f(flat, &v);
            let mut axis = d;
            while axis > 0 {
                axis -= 1;
                idx[axis] += 1;
                if idx[axis] < n {
                    v[axis] = table[idx[axis]];
                    break;
                }
                idx[axis] = 0;
                v[axis] = table[0];
            }
        }
    }

    /// Unnormalized multi-dimensional DFT in place (`inverse` selects the sign).
    pub(crate) fn dft(&self, data: &mut [Complex64], inverse: bool) {
        let n = self.n();
        let d = self.d();
        let plan = if inverse { &self.0.inv } else { &self.0.fwd };
        let mut scratch = vec![Complex64::default(); plan.get_inplace_scratch_len()];
        // last axis is contiguous
        plan.process_with_scratch(data, &mut scratch);
        let mut buf = Vec::new();
        for axis in (0..d.saturating_sub(1)).rev() {
            let stride = n.pow((d - 1 - axis) as u32);
            let block = stride * n;
            buf.resize(block, Complex64::default());
            for chunk in data.chunks_mut(block) {
                for i in 0..n {
                    for j in 0..stride {
                        buf[j * n + i] = chunk[i * stride + j];
                    }
                }
                plan.process_with_scratch(&mut buf, &mut scratch);
                for i in 0..n {
                    for j in 0..stride {
                        chunk[i * stride + j] = buf[j * n + i];
                    }
                }
            }
        }
    }

    /// `(-1)^{Σ slot}` for each flat index, applied in place.
    pub(crate) fn checkerboard(&self, data: &mut [Complex64], scale: f64) {
        let n = self.n();
        let d = self.d();
        if !n.is_multiple_of(2) {
            unreachable!("grids always have even N");
        }
        for (flat, v) in data.iter_mut().enumerate() {
            let mut rem = flat;
            let mut parity = 0;
            for _ in 0..d {
                parity += rem % n;
                rem /= n;
            }
            *v *= if parity % 2 == 0 { scale } else { -scale };
        }
    }
}
