use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::field::{GridFunction, Repr};
use super::grid::Grid;
use crate::error::{LabError, Result};

/// Multi-index `α` with `|α| = Σ α_i`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MultiIndex(pub Vec<u32>);

impl MultiIndex {
    pub fn zero(d: usize) -> Self {
        MultiIndex(vec![0; d])
    }

    /// Unit index `e_axis`.
    pub fn unit(d: usize, axis: usize) -> Self {
        let mut v = vec![0; d];
        v[axis] = 1;
        MultiIndex(v)
    }

    pub fn order(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn plus(&self, other: &MultiIndex) -> MultiIndex {
        MultiIndex(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    /// `α! = Π α_i!`
    pub fn factorial(&self) -> f64 {
        self.0.iter().map(|&a| (1..=a).map(f64::from).product::<f64>()).product()
    }

    /// `v^α` for a complex vector.
    pub fn power(&self, v: &[Complex64]) -> Complex64 {
        self.0.iter().zip(v).fold(Complex64::new(1.0, 0.0), |acc, (&a, &x)| acc * x.powu(a))
    }

    /// `x^α` for a real vector.
    pub fn power_real(&self, x: &[f64]) -> f64 {
        self.0.iter().zip(x).map(|(&a, &v)| v.powi(a as i32)).product()
    }

    /// All multi-indices of dimension `d` with order exactly `k`.
    pub fn all_of_order(d: usize, k: u32) -> Vec<MultiIndex> {
        fn rec(d: usize, k: u32, prefix: &mut Vec<u32>, out: &mut Vec<MultiIndex>) {
            if prefix.len() + 1 == d {
                prefix.push(k);
                out.push(MultiIndex(prefix.clone()));
                prefix.pop();
                return;
            }
            for a in (0..=k).rev() {
                prefix.push(a);
                rec(d, k - a, prefix, out);
                prefix.pop();
            }
        }
        let mut out = Vec::new();
        if d > 0 {
            rec(d, k, &mut Vec::new(), &mut out);
        }
        out
    }

    /// All `(β₁, β₂)` with `β₁ + β₂ = self`.
    pub fn splits(&self) -> Vec<(MultiIndex, MultiIndex)> {
        let mut out = vec![(Vec::new(), Vec::new())];
        for &a in &self.0 {
            let mut next = Vec::new();
            for (l, r) in &out {
                for b in 0..=a {
                    let mut l2: Vec<u32> = l.clone();
                    let mut r2: Vec<u32> = r.clone();
                    l2.push(b);
                    r2.push(a - b);
                    next.push((l2, r2));
                }
            }
            out = next;
        }
        out.into_iter().map(|(l, r)| (MultiIndex(l), MultiIndex(r))).collect()
    }
}

/// `û'(ξ) = m(ξ)·û(ξ)`; the result is spectral.
pub fn apply_multiplier(u: &GridFunction, m: impl Fn(&[f64]) -> Complex64) -> Result<GridFunction> {
    let mut out = u.to_spectral();
    let mut bad = None;
    {
        let vals = out.values_mut();
        u.grid().for_each_frequency(|i, xi| {
            let w = m(xi);
            if !(w.re.is_finite() && w.im.is_finite()) {
                bad.get_or_insert_with(|| xi.to_vec());
            }
            vals[i] *= w;
        });
    }
    if let Some(xi) = bad {
        return Err(LabError::NonFinite(format!("multiplier at ξ = {xi:?}")));
    }
    Ok(out)
}

/// `D^α u` with `D = -i∇`, i.e. the multiplier `ξ^α`.
pub fn derivative(u: &GridFunction, alpha: &MultiIndex) -> Result<GridFunction> {
    if alpha.dim() != u.grid().d() {
        return Err(LabError::InvalidArgument("multi-index dimension mismatch".into()));
    }
    if alpha.order() == 0 {
        return Ok(u.to_spectral());
    }
    apply_multiplier(u, |xi| Complex64::new(alpha.power_real(xi), 0.0))
}

/// Copies a spectrum onto the 3N/2 padded lattice at the same signed frequencies.
pub(crate) fn pad_spectrum(u: &GridFunction) -> GridFunction {
    let grid = u.grid();
    let padded = grid.padded();
    let spec = u.to_spectral();
    let mut out = GridFunction::zeros(padded, Repr::Spectral);
    let n = grid.n();
    let d = grid.d();
    let mut k = vec![0i64; d];
    let dst = out.values_mut();
    for (flat, v) in spec.values().iter().enumerate() {
        grid.frequency_index(flat, &mut k);
        let target = padded.flat_of_frequency(&k).expect("padded lattice contains the base lattice");
        dst[target] = *v;
    }
    debug_assert_eq!(n * 3 / 2, padded.n());
    out
}

/// Restricts a padded spectrum back to the base lattice.
pub(crate) fn truncate_spectrum(grid: &Grid, padded: &GridFunction) -> GridFunction {
    let spec = padded.to_spectral();
    let mut out = GridFunction::zeros(grid, Repr::Spectral);
    let mut k = vec![0i64; grid.d()];
    let dst = out.values_mut();
    for (flat, slot) in dst.iter_mut().enumerate() {
        grid.frequency_index(flat, &mut k);
        *slot = spec.values()[padded.grid().flat_of_frequency(&k).expect("base lattice inside padded")];
    }
    out
}

/// Pointwise product computed on the 3N/2 grid and truncated to the base lattice.
///
/// Every retained coefficient of the product of two lattice trigonometric polynomials is exact.
pub fn multiply_dealiased(u: &GridFunction, v: &GridFunction) -> Result<GridFunction> {
    u.check_same_grid(v)?;
    let a = pad_spectrum(u).into_physical();
    let b = pad_spectrum(v).into_physical();
    let prod = a.mul_pointwise(&b)?;
    Ok(truncate_spectrum(u.grid(), &prod))
}

/// Bilinear pairing `∫ u v dx` (no conjugation), exact for the lattice trigonometric polynomials.
pub fn pairing(u: &GridFunction, v: &GridFunction) -> Result<Complex64> {
    u.check_same_grid(v)?;
    let a = u.to_physical();
    let b = v.to_physical();
    let w = u.grid().spec().spacing().powi(u.grid().d() as i32);
    Ok(a.values().iter().zip(b.values()).map(|(x, y)| x * y).sum::<Complex64>() * w)
}

/// Sesquilinear inner product `∫ u v̄ dx`.
pub fn inner(u: &GridFunction, v: &GridFunction) -> Result<Complex64> {
    u.check_same_grid(v)?;
    let a = u.to_physical();
    let b = v.to_physical();
    let w = u.grid().spec().spacing().powi(u.grid().d() as i32);
    Ok(a.values().iter().zip(b.values()).map(|(x, y)| x * y.conj()).sum::<Complex64>() * w)
}

/// `(L^{-d} Σ ⟨ξ⟩^{2s} |û|²)^{1/2}`.
pub fn sobolev_norm(u: &GridFunction, s: f64) -> f64 {
    let spec = u.to_spectral();
    let w = u.grid().length().powi(-(u.grid().d() as i32));
    let mut acc = 0.0;
    u.grid().for_each_frequency(|i, xi| {
        let jap = 1.0 + xi.iter().map(|x| x * x).sum::<f64>();
        acc += jap.powf(s) * spec.values()[i].norm_sqr();
    });
    (w * acc).sqrt()
}

/// Grid estimates of `sup|f|` and the Hölder quotient.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HolderData {
    pub sup: f64,
    pub quotient: f64,
}

/// Sup norm and the Hölder quotient over nearest-neighbour and two-step pairs along each
/// axis. Pairs that would wrap across the torus boundary are skipped.
pub fn holder_data(f: &GridFunction, theta: f64) -> Result<HolderData> {
    if f.repr() != Repr::Physical {
        return Err(LabError::InvalidArgument("holder_data needs a physical field".into()));
    }
    if !(theta > 0.0 && theta <= 1.0) {
        return Err(LabError::InvalidArgument(format!("Hölder exponent {theta} not in (0, 1]")));
    }
    let grid = f.grid();
    let n = grid.n();
    let d = grid.d();
    let dx = grid.spec().spacing();
    let vals = f.values();
    let sup = vals.iter().fold(0.0f64, |m, v| m.max(v.norm()));
    let mut quotient: f64 = 0.0;
    for axis in 0..d {
        let stride = n.pow((d - 1 - axis) as u32);
        for (flat, v) in vals.iter().enumerate() {
            let pos = (flat / stride) % n;
            for step in 1..=2 {
                if pos + step < n {
                    let w = vals[flat + step * stride];
                    let q = (v - w).norm() / (step as f64 * dx).powf(theta);
                    quotient = quotient.max(q);
                }
            }
        }
    }
    Ok(HolderData { sup, quotient })
}

/// Gaussian split `f = f_h + f^h` with diagnostics.
#[derive(Clone, Debug)]
pub struct MollifiedSplit {
    pub smooth: GridFunction,
    pub rough: GridFunction,
    /// `max_j ‖D_j f_h‖_∞`
    pub smooth_gradient_sup: f64,
    /// `‖f^h‖_∞`
    pub rough_sup: f64,
    /// Reference scales `h^{θ-1}` and `h^θ`.
    pub gradient_scale: f64,
    pub rough_scale: f64,
}

/// Gaussian mollification at scale `h` (multiplier `e^{-h²|ξ|²/2}`).
pub fn mollify_split(f: &GridFunction, h: f64, theta: f64) -> Result<MollifiedSplit> {
    if !(h > 0.0 && h <= 1.0) {
        return Err(LabError::InvalidArgument(format!("mollification scale {h} not in (0, 1]")));
    }
    let smooth = apply_multiplier(f, |xi| {
        let r2: f64 = xi.iter().map(|x| x * x).sum();
        Complex64::new((-0.5 * h * h * r2).exp(), 0.0)
    })?;
    let rough = f.to_spectral().sub(&smooth)?;
    let d = f.grid().d();
    let mut smooth_gradient_sup: f64 = 0.0;
    for axis in 0..d {
        let g = derivative(&smooth, &MultiIndex::unit(d, axis))?;
        smooth_gradient_sup = smooth_gradient_sup.max(g.sup_norm());
    }
    let rough_sup = rough.sup_norm();
    Ok(MollifiedSplit {
        smooth: smooth.into_physical(),
        rough: rough.into_physical(),
        smooth_gradient_sup,
        rough_sup,
        gradient_scale: h.powf(theta - 1.0),
        rough_scale: h.powf(theta),
    })
}
