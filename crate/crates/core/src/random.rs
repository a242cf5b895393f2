//! Seeded random test fields.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::spectral::{Grid, GridFunction, Repr};

pub type LabRng = ChaCha8Rng;

pub fn rng(seed: u64) -> LabRng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn complex_normal(rng: &mut impl Rng) -> Complex64 {
    Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

/// Complex Gaussian spectrum on the modes with `max_i |k_i| < band`, all others zero.
pub fn bandlimited(grid: &Grid, band: i64, rng: &mut impl Rng) -> GridFunction {
    let d = grid.d();
    let mut k = vec![0i64; d];
    let mut out = GridFunction::zeros(grid, Repr::Spectral);
    let vals = out.values_mut();
    for (flat, v) in vals.iter_mut().enumerate() {
        grid.frequency_index(flat, &mut k);
        if k.iter().all(|&ki| ki.abs() < band) {
            *v = complex_normal(rng);
        }
    }
    out
}

/// Same as [`bandlimited`] but normalized to unit physical `L²` norm.
pub fn unit_bandlimited(grid: &Grid, band: i64, rng: &mut impl Rng) -> GridFunction {
    let u = bandlimited(grid, band, rng);
    let n = u.l2_norm();
    u.scale(Complex64::new(1.0 / n, 0.0))
}

/// Uniform point on the unit sphere of `ℝ^d`.
pub fn unit_vector(d: usize, rng: &mut impl Rng) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-8 {
            return v.into_iter().map(|x| x / n).collect();
        }
    }
}
