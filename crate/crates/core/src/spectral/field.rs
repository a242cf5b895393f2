use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::grid::Grid;
use crate::error::{LabError, Result};

/// Which representation a [`GridFunction`] currently holds.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Repr {
    Physical,
    Spectral,
}

/// Complex field on the torus lattice, held either as point values or as Fourier
/// coefficients `f̂(ξ) = (L/N)^d Σ_x e^{-ix·ξ} f(x)`.
#[derive(Clone, Debug)]
pub struct GridFunction {
    grid: Grid,
    repr: Repr,
    values: Vec<Complex64>,
}

impl GridFunction {
    pub fn zeros(grid: &Grid, repr: Repr) -> Self {
        GridFunction { grid: grid.clone(), repr, values: vec![Complex64::default(); grid.len()] }
    }

    pub fn from_values(grid: &Grid, repr: Repr, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(LabError::InvalidArgument(format!(
                "expected {} values, got {}",
                grid.len(),
                values.len()
            )));
        }
        Ok(GridFunction { grid: grid.clone(), repr, values })
    }

    /// Samples `f` at the grid points.
    pub fn from_fn(grid: &Grid, f: impl Fn(&[f64]) -> Complex64) -> Self {
        let mut values = vec![Complex64::default(); grid.len()];
        grid.for_each_point(|i, x| values[i] = f(x));
        GridFunction { grid: grid.clone(), repr: Repr::Physical, values }
    }

    /// Real-valued convenience wrapper around [`GridFunction::from_fn`].
    pub fn from_real_fn(grid: &Grid, f: impl Fn(&[f64]) -> f64) -> Self {
        Self::from_fn(grid, |x| Complex64::new(f(x), 0.0))
    }

    /// Fills the spectrum from a function of the frequency vector.
    pub fn from_spectrum_fn(grid: &Grid, f: impl Fn(&[f64]) -> Complex64) -> Self {
        let mut values = vec![Complex64::default(); grid.len()];
        grid.for_each_frequency(|i, xi| values[i] = f(xi));
        GridFunction { grid: grid.clone(), repr: Repr::Spectral, values }
    }

    /// The plane wave `amp·e^{ix·ξ}` for the signed lattice index `k`.
    pub fn plane_wave(grid: &Grid, k: &[i64], amp: Complex64) -> Result<Self> {
        let flat = grid.flat_of_frequency(k).ok_or_else(|| {
            LabError::InvalidArgument(format!("frequency {k:?} is not on the lattice"))
        })?;
        let mut out = GridFunction::zeros(grid, Repr::Spectral);
        out.values[flat] = amp * grid.length().powi(grid.d() as i32);
        Ok(out)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn repr(&self) -> Repr {
        self.repr
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn into_spectral(mut self) -> Self {
        if self.repr == Repr::Physical {
            let g = &self.grid;
            g.dft(&mut self.values, false);
            let scale = g.spec().spacing().powi(g.d() as i32);
            g.checkerboard(&mut self.values, scale);
            self.repr = Repr::Spectral;
        }
        self
    }

    pub fn into_physical(mut self) -> Self {
        if self.repr == Repr::Spectral {
            let g = &self.grid;
            let scale = g.length().powi(-(g.d() as i32));
            g.checkerboard(&mut self.values, scale);
            g.dft(&mut self.values, true);
            self.repr = Repr::Physical;
        }
        self
    }

    pub fn to_spectral(&self) -> Self {
        self.clone().into_spectral()
    }

    pub fn to_physical(&self) -> Self {
        self.clone().into_physical()
    }

    pub fn into_repr(self, repr: Repr) -> Self {
        match repr {
            Repr::Physical => self.into_physical(),
            Repr::Spectral => self.into_spectral(),
        }
    }

    pub fn check_same_grid(&self, other: &GridFunction) -> Result<()> {
        if self.grid != other.grid {
            return Err(LabError::GridMismatch);
        }
        Ok(())
    }

    /// `self + c·other`, returned in the representation of `self`.
    pub fn axpy(&self, c: Complex64, other: &GridFunction) -> Result<Self> {
        self.check_same_grid(other)?;
        let other = other.clone().into_repr(self.repr);
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a + c * b).collect();
        Ok(GridFunction { grid: self.grid.clone(), repr: self.repr, values })
    }

    pub fn add(&self, other: &GridFunction) -> Result<Self> {
        self.axpy(Complex64::new(1.0, 0.0), other)
    }

    pub fn sub(&self, other: &GridFunction) -> Result<Self> {
        self.axpy(Complex64::new(-1.0, 0.0), other)
    }

    pub fn scale(mut self, c: Complex64) -> Self {
        for v in &mut self.values {
            *v *= c;
        }
        self
    }

    /// Pointwise product on the grid, without dealiasing.
    pub fn mul_pointwise(&self, other: &GridFunction) -> Result<Self> {
        self.check_same_grid(other)?;
        let a = self.to_physical();
        let b = other.to_physical();
        let values = a.values.iter().zip(&b.values).map(|(x, y)| x * y).collect();
        Ok(GridFunction { grid: self.grid.clone(), repr: Repr::Physical, values })
    }

    /// Largest point value magnitude.
    pub fn sup_norm(&self) -> f64 {
        let p = self.to_physical();
        p.values.iter().fold(0.0, |m, v| m.max(v.norm()))
    }

    /// Largest point value magnitude over grid points inside the ball `|x| ≤ r`.
    pub fn sup_norm_in_ball(&self, r: f64) -> f64 {
        let p = self.to_physical();
        let mut m: f64 = 0.0;
        self.grid.for_each_point(|i, x| {
            if x.iter().map(|c| c * c).sum::<f64>() <= r * r {
                m = m.max(p.values[i].norm());
            }
        });
        m
    }

    /// Physical quadrature `((L/N)^d Σ|f|²)^{1/2}`.
    pub fn l2_norm(&self) -> f64 {
        let p = self.to_physical();
        let w = self.grid.spec().spacing().powi(self.grid.d() as i32);
        (w * p.values.iter().map(|v| v.norm_sqr()).sum::<f64>()).sqrt()
    }

    /// Spectral `ℓ²` norm with the quadrature weight `L^{-d}`.
    pub fn spectral_l2_norm(&self) -> f64 {
        let s = self.to_spectral();
        let w = self.grid.length().powi(-(self.grid.d() as i32));
        (w * s.values.iter().map(|v| v.norm_sqr()).sum::<f64>()).sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.re.is_finite() && v.im.is_finite())
    }

    /// Fourier coefficient at a signed lattice index.
    pub fn coefficient(&self, k: &[i64]) -> Option<Complex64> {
        let flat = self.grid.flat_of_frequency(k)?;
        Some(self.to_spectral().values[flat])
    }
}
