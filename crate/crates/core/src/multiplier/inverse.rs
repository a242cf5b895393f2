use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::cutoff::Cutoff;
use crate::error::{LabError, Result};
use crate::spectral::{Grid, GridFunction};
use crate::symbol::{p_symbol, Zeta};

/// Relative threshold: modes with `|P(hξ)| < CLAMP_FACTOR·h` are treated as zeros.
pub const CLAMP_FACTOR: f64 = 1e-8;
/// Largest admissible fraction of clamped lattice modes.
pub const CLAMP_LIMIT: f64 = 1e-3;

/// Bookkeeping for modes removed from the division by `P`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClampReport {
    pub clamped: usize,
    pub threshold: f64,
    /// Signed lattice indices of the clamped modes.
    pub modes: Vec<Vec<i64>>,
}

/// `P(hD)^{-1}`, `I_φ` and `J_φ` for a fixed `(h, ζ, φ)`.
///
/// Lattice zeros of `P` cannot be divided by. Before dividing, the data `g` is corrected to
/// `g − Σ_k c_k (1−φ) e^{ix·ξ_k}` with `c` chosen so the corrected data vanishes at every
/// clamped mode `ξ_k`. The correction is supported where `φ < 1`, so `P(hD) I_φ u = u` still
/// holds exactly wherever `φ ≡ 1`.
pub struct ConjugatedInverse {
    grid: Grid,
    h: f64,
    zeta: Zeta,
    phi: GridFunction,
    p: Vec<Complex64>,
    clamped: Vec<usize>,
    report: ClampReport,
    chi_hat: Vec<Complex64>,
    system: Option<(DMatrix<Complex64>, DMatrix<Complex64>)>,
}

impl std::fmt::Debug for ConjugatedInverse {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ConjugatedInverse").field("h", &self.h).field("clamped", &self.report.clamped).finish()
    }
}

impl ConjugatedInverse {
    pub fn new(h: f64, zeta: &Zeta, cutoff: &Cutoff) -> Result<Self> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(LabError::InvalidArgument(format!("h = {h} must be positive")));
        }
        let grid = cutoff.grid().clone();
        if zeta.0.len() != grid.d() {
            return Err(LabError::InvalidArgument("ζ dimension differs from grid".into()));
        }
        let threshold = CLAMP_FACTOR * h;
        let mut p = vec![Complex64::default(); grid.len()];
        let mut clamped = Vec::new();
        grid.for_each_frequency(|i, xi| {
            p[i] = p_symbol(zeta, h, xi);
            if p[i].norm() < threshold {
                clamped.push(i);
            }
        });
        let limit = (CLAMP_LIMIT * grid.len() as f64).floor() as usize;
        if clamped.len() > limit.max(1) {
            return Err(LabError::TooManyClamped { clamped: clamped.len(), limit });
        }
        let chi_hat = cutoff.complement().into_spectral().into_values();
        let modes = clamped
            .iter()
            .map(|&f| {
                let mut k = vec![0; grid.d()];
                grid.frequency_index(f, &mut k);
                k
            })
            .collect();
        let mut out = ConjugatedInverse {
            grid,
            h,
            zeta: zeta.clone(),
            phi: cutoff.phi.clone(),
            p,
            clamped,
            report: ClampReport { clamped: 0, threshold, modes },
            chi_hat,
            system: None,
        };
        out.report.clamped = out.clamped.len();
        if !out.clamped.is_empty() {
            let n = out.clamped.len();
            let a = DMatrix::from_fn(n, n, |j, k| out.chi_at_difference(out.clamped[j], out.clamped[k]));
            let ah = a.adjoint();
            out.system = Some((a, ah));
        }
        Ok(out)
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn zeta(&self) -> &Zeta {
        &self.zeta
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn report(&self) -> &ClampReport {
        &self.report
    }

    /// `P(hξ)` in flat lattice order.
    pub fn symbol_table(&self) -> &[Complex64] {
        &self.p
    }

    /// `(h + |P(hξ)|)` in flat lattice order.
    pub fn weight_table(&self) -> Vec<f64> {
        self.p.iter().map(|p| self.h + p.norm()).collect()
    }

    fn is_clamped(&self, flat: usize) -> bool {
        self.clamped.contains(&flat)
    }

    /// Flat index of the lattice frequency `ξ(a) − ξ(b)`, wrapped onto the lattice.
    fn difference_flat(&self, a: usize, b: usize) -> usize {
        let n = self.grid.n();
        let (mut ra, mut rb) = (a, b);
        let mut out = 0;
        let mut mul = 1;
        for _ in 0..self.grid.d() {
            let s = (ra % n + n - rb % n) % n;
            out += s * mul;
            mul *= n;
            ra /= n;
            rb /= n;
        }
        out
    }

    fn chi_at_difference(&self, a: usize, b: usize) -> Complex64 {
        self.chi_hat[self.difference_flat(a, b)]
    }

    fn solve(&self, rhs: Vec<Complex64>, adjoint: bool) -> Vec<Complex64> {
        let (a, ah) = self.system.as_ref().expect("system exists when modes are clamped");
        let m = if adjoint { ah } else { a };
        let b = nalgebra::DVector::from_vec(rhs);
        let x = m.clone().lu().solve(&b).unwrap_or_else(|| nalgebra::DVector::zeros(b.len()));
        x.iter().copied().collect()
    }

    /// Corrects spectral data so it vanishes at the clamped modes.
    fn compensate(&self, g: &mut [Complex64]) {
        if self.clamped.is_empty() {
            return;
        }
        let rhs: Vec<Complex64> = self.clamped.iter().map(|&j| g[j]).collect();
        let c = self.solve(rhs, false);
        for (flat, v) in g.iter_mut().enumerate() {
            let mut acc = Complex64::default();
            for (k, &mode) in self.clamped.iter().enumerate() {
                acc += c[k] * self.chi_hat[self.difference_flat(flat, mode)];
            }
            *v -= acc;
        }
    }

    /// Adjoint of [`Self::compensate`] in the `L²` inner product.
    fn compensate_adjoint(&self, g: &mut [Complex64]) {
        if self.clamped.is_empty() {
            return;
        }
        let w = self.grid.length().powi(-(self.grid.d() as i32));
        // y_k = ((1−φ) g)^(ξ_k) = L^{-d} Σ_η χ̂(ξ_k − η) ĝ(η)
        let y: Vec<Complex64> = self
            .clamped
            .iter()
            .map(|&mode| {
                let mut acc = Complex64::default();
                for (flat, v) in g.iter().enumerate() {
                    acc += self.chi_hat[self.difference_flat(mode, flat)].conj() * v;
                }
                acc * w
            })
            .collect();
        let z = self.solve(y, true);
        let scale = self.grid.length().powi(self.grid.d() as i32);
        for (k, &mode) in self.clamped.iter().enumerate() {
            g[mode] -= z[k] * scale;
        }
    }

    fn multiply_phi(&self, u: GridFunction) -> GridFunction {
        u.mul_pointwise(&self.phi).expect("same grid")
    }

    /// `P(hD)u` as a multiplier.
    pub fn apply_p(&self, u: &GridFunction) -> GridFunction {
        let mut s = u.to_spectral();
        s.values_mut().iter_mut().zip(&self.p).for_each(|(v, p)| *v *= p);
        s
    }

    /// Compensated `P(hD)^{-1}`; clamped modes of the output are zero.
    pub fn apply_inverse_p(&self, g: &GridFunction) -> GridFunction {
        let mut s = g.to_spectral();
        self.compensate(s.values_mut());
        for (i, v) in s.values_mut().iter_mut().enumerate() {
            *v = if self.is_clamped(i) { Complex64::default() } else { *v / self.p[i] };
        }
        s
    }

    /// `I_φ u = φ P(hD)^{-1} (φ u)`, returned in physical representation.
    pub fn apply_iphi(&self, u: &GridFunction) -> GridFunction {
        let g = self.multiply_phi(u.to_physical());
        self.multiply_phi(self.apply_inverse_p(&g).into_physical())
    }

    /// `L²` adjoint of [`Self::apply_iphi`].
    pub fn apply_iphi_adjoint(&self, v: &GridFunction) -> GridFunction {
        let mut s = self.multiply_phi(v.to_physical()).into_spectral();
        for (i, x) in s.values_mut().iter_mut().enumerate() {
            *x = if self.is_clamped(i) { Complex64::default() } else { *x / self.p[i].conj() };
        }
        self.compensate_adjoint(s.values_mut());
        self.multiply_phi(s.into_physical())
    }

    /// `J_φ u = φ |P(hD)|^{-1/2} u`; clamped modes are dropped.
    pub fn apply_jphi(&self, u: &GridFunction) -> GridFunction {
        let mut s = u.to_spectral();
        for (i, v) in s.values_mut().iter_mut().enumerate() {
            *v = if self.is_clamped(i) { Complex64::default() } else { *v / self.p[i].norm().sqrt() };
        }
        self.multiply_phi(s.into_physical())
    }

    /// `L²` adjoint of [`Self::apply_jphi`].
    pub fn apply_jphi_adjoint(&self, v: &GridFunction) -> GridFunction {
        let mut s = self.multiply_phi(v.to_physical()).into_spectral();
        for (i, x) in s.values_mut().iter_mut().enumerate() {
            *x = if self.is_clamped(i) { Complex64::default() } else { *x / self.p[i].norm().sqrt() };
        }
        s.into_physical()
    }
}

/// `P_ζ(hD) u`.
pub fn apply_p(u: &GridFunction, h: f64, zeta: &Zeta) -> GridFunction {
    let grid = u.grid().clone();
    let mut s = u.to_spectral();
    let vals = s.values_mut();
    grid.for_each_frequency(|i, xi| vals[i] *= p_symbol(zeta, h, xi));
    s
}

/// One-shot `I_φ u` with its clamp report.
pub fn apply_iphi(u: &GridFunction, h: f64, zeta: &Zeta, cutoff: &Cutoff) -> Result<(GridFunction, ClampReport)> {
    u.check_same_grid(&cutoff.phi)?;
    let op = ConjugatedInverse::new(h, zeta, cutoff)?;
    Ok((op.apply_iphi(u), op.report().clone()))
}

/// One-shot `J_φ u` with its clamp report.
pub fn apply_jphi(u: &GridFunction, h: f64, zeta: &Zeta, cutoff: &Cutoff) -> Result<(GridFunction, ClampReport)> {
    u.check_same_grid(&cutoff.phi)?;
    let op = ConjugatedInverse::new(h, zeta, cutoff)?;
    Ok((op.apply_jphi(u), op.report().clone()))
}

/// Power-iteration estimate of an operator norm `X^λ → X^μ`, given the operator, its `L²`
/// adjoint and the weight table `(h + |P|)`.
pub fn weighted_operator_norm(
    table: &[f64],
    lambda: f64,
    mu: f64,
    op: impl Fn(&GridFunction) -> GridFunction,
    adjoint: impl Fn(&GridFunction) -> GridFunction,
    start: GridFunction,
    iterations: usize,
) -> f64 {
    let weight = |u: &GridFunction, e: f64| {
        let mut s = u.to_spectral();
        if e != 0.0 {
            s.values_mut().iter_mut().zip(table).for_each(|(v, t)| *v *= t.powf(e));
        }
        s
    };
    // B = W_μ T W_λ^{-1}, B* = W_λ^{-1} T* W_μ
    let b = |x: &GridFunction| weight(&op(&weight(x, -lambda)), mu);
    let bstar = |y: &GridFunction| weight(&adjoint(&weight(y, mu)), -lambda);
    let mut x = start.into_spectral();
    let mut est = 0.0;
    for _ in 0..iterations {
        let nx = x.spectral_l2_norm();
        if nx == 0.0 {
            return 0.0;
        }
        x = x.scale(Complex64::new(1.0 / nx, 0.0));
        let y = b(&x);
        est = y.spectral_l2_norm();
        x = bstar(&y).into_spectral();
    }
    est
}
