//! `(τ,θ)` change of variables, averaged `X^{−λ}` norms and good-frequency selection.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::fit::{power_fit, LineFit};
use crate::spectral::{Grid, GridFunction};
use crate::symbol::{zeta_rot, Branch, Zeta, ZetaFrame};

/// Default midpoint quadrature size in each of `τ` and `θ`.
pub const DEFAULT_QUADRATURE: usize = 16;

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `s(τ) = √(1 − τ²|ξ₀|²/4)`.
fn s_of(frame: &ZetaFrame, tau: f64) -> f64 {
    (1.0 - tau * tau * frame.xi0_norm().powi(2) / 4.0).max(0.0).sqrt()
}

/// `(Re P(τξ)/τ², Im P(τξ)/τ²)` for `ζ¹(τ,θ)`.
pub fn cov_map(frame: &ZetaFrame, xi: &[f64], tau: f64, theta: f64) -> (f64, f64) {
    let (m1, m2) = frame.rotated(theta);
    let a1 = dot(&m1, xi);
    let a2 = dot(&m2, xi);
    let s = s_of(frame, tau);
    let z1 = dot(xi, xi) - dot(&frame.xi0, xi) + 2.0 * s * a2 / tau;
    (z1, -2.0 * a1 / tau)
}

/// `|∂(z₁,z₂)/∂(τ,θ)| = (4/τ³)(s|ξ^⊥|² + τ²|ξ₀|²(μ₂(θ)·ξ)²/(4s))`.
pub fn jacobian(frame: &ZetaFrame, xi: &[f64], tau: f64, theta: f64) -> Result<f64> {
    let max = frame.tau_max();
    if !(tau > 0.0 && tau <= max * (1.0 + 1e-12)) {
        return Err(LabError::TauOutOfRange { tau, max });
    }
    let (m1, m2) = frame.rotated(theta);
    let a1 = dot(&m1, xi);
    let a2 = dot(&m2, xi);
    let s = s_of(frame, tau);
    let c = frame.xi0_norm().powi(2) / 4.0;
    Ok(4.0 / tau.powi(3) * (s * (a1 * a1 + a2 * a2) + tau * tau * c * a2 * a2 / s))
}

/// `2|ξ^⊥|²/τ³`.
pub fn jacobian_lower_bound(frame: &ZetaFrame, xi: &[f64], tau: f64) -> f64 {
    2.0 * frame.perp_norm_sqr(xi) / tau.powi(3)
}

/// Central-difference determinant of [`cov_map`].
pub fn jacobian_fd(frame: &ZetaFrame, xi: &[f64], tau: f64, theta: f64, step: f64) -> f64 {
    let dt = step * tau;
    let (a, b) = cov_map(frame, xi, tau + dt, theta);
    let (c, d) = cov_map(frame, xi, tau - dt, theta);
    let (e, f) = cov_map(frame, xi, tau, theta + step);
    let (g, k) = cov_map(frame, xi, tau, theta - step);
    let z1t = (a - c) / (2.0 * dt);
    let z2t = (b - d) / (2.0 * dt);
    let z1h = (e - g) / (2.0 * step);
    let z2h = (f - k) / (2.0 * step);
    (z1t * z2h - z1h * z2t).abs()
}

/// Midpoint nodes of `[h, 2h] × [0, 2π)`.
pub fn quadrature_nodes(h: f64, n_tau: usize, n_theta: usize) -> Vec<(f64, f64)> {
    quadrature_nodes_offset(h, n_tau, n_theta, 0.0)
}

/// Midpoint nodes with the `θ` column shifted by `offset` cells.
pub fn quadrature_nodes_offset(h: f64, n_tau: usize, n_theta: usize, offset: f64) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(n_tau * n_theta);
    for i in 0..n_tau {
        let tau = h * (1.0 + (i as f64 + 0.5) / n_tau as f64);
        for j in 0..n_theta {
            out.push((tau, (2.0 * PI * (j as f64 + 0.5 + offset) / n_theta as f64).rem_euclid(2.0 * PI)));
        }
    }
    out
}

/// Lattice invariants `(|ξ|², ξ₀·ξ, μ₁·ξ, μ₂·ξ)` for fast evaluation of `P_{ζ^k(τ,θ)}(τξ)`.
#[derive(Clone, Debug)]
pub struct FrameTable {
    frame: ZetaFrame,
    rows: Vec<[f64; 4]>,
}

impl FrameTable {
    pub fn new(grid: &Grid, frame: &ZetaFrame) -> Self {
        let mut rows = vec![[0.0; 4]; grid.len()];
        grid.for_each_frequency(|i, xi| {
            rows[i] = [dot(xi, xi), dot(&frame.xi0, xi), dot(&frame.mu1, xi), dot(&frame.mu2, xi)];
        });
        FrameTable { frame: frame.clone(), rows }
    }

    /// Table over the support of `spec` only, with the matching compacted spectrum.
    pub fn restricted(grid: &Grid, frame: &ZetaFrame, spec: &[f64]) -> (Self, Vec<f64>) {
        let full = FrameTable::new(grid, frame);
        let (rows, compact) = full.rows.iter().zip(spec).filter(|(_, p)| **p != 0.0).map(|(r, p)| (*r, *p)).unzip();
        (FrameTable { frame: frame.clone(), rows }, compact)
    }

    /// Table over the modes where some spectrum carries more than `rel` of its total power,
    /// with every spectrum compacted to match.
    pub fn pruned(grid: &Grid, frame: &ZetaFrame, coeffs: &[CoefficientSpectra], rel: f64) -> (Self, Vec<CoefficientSpectra>) {
        let cuts: Vec<[f64; 2]> =
            coeffs.iter().map(|c| [rel * c.vector.iter().sum::<f64>(), rel * c.scalar.iter().sum::<f64>()]).collect();
        let keep: Vec<usize> = (0..grid.len())
            .filter(|&i| coeffs.iter().zip(&cuts).any(|(c, t)| c.vector[i] > t[0] || c.scalar[i] > t[1]))
            .collect();
        let full = FrameTable::new(grid, frame);
        let table = FrameTable { frame: frame.clone(), rows: keep.iter().map(|&i| full.rows[i]).collect() };
        let compact = coeffs
            .iter()
            .map(|c| CoefficientSpectra {
                vector: keep.iter().map(|&i| c.vector[i]).collect(),
                scalar: keep.iter().map(|&i| c.scalar[i]).collect(),
            })
            .collect();
        (table, compact)
    }

    pub fn frame(&self) -> &ZetaFrame {
        &self.frame
    }

    /// `τ + |P_{ζ^k(τ,θ)}(τξ)|` at every lattice point.
    pub fn weights(&self, branch: Branch, tau: f64, theta: f64) -> Vec<f64> {
        let s = s_of(&self.frame, tau);
        let (sn, cs) = theta.sin_cos();
        let sign = match branch {
            Branch::First => 1.0,
            Branch::Second => -1.0,
        };
        self.rows
            .iter()
            .map(|&[r2, b, c1, c2]| {
                let a1 = c1 * cs - c2 * sn;
                let a2 = c1 * sn + c2 * cs;
                let re = tau * tau * (r2 - b) + sign * 2.0 * tau * s * a2;
                let im = -sign * 2.0 * tau * a1;
                tau + re.hypot(im)
            })
            .collect()
    }
}

/// `L^{-d}|f̂|²` in flat order.
pub fn power_spectrum(f: &GridFunction) -> Vec<f64> {
    let q = f.grid().length().powi(-(f.grid().d() as i32));
    f.to_spectral().values().iter().map(|v| q * v.norm_sqr()).collect()
}

fn weighted(spec: &[f64], weights: &[f64], order: f64) -> f64 {
    if order == 0.0 {
        return spec.iter().sum();
    }
    let e = 2.0 * order;
    if e.fract() == 0.0 {
        let k = e as i32;
        return spec.iter().zip(weights).map(|(p, w)| p * w.powi(k)).sum();
    }
    spec.iter().zip(weights).filter(|(p, _)| **p != 0.0).map(|(p, w)| p * w.powf(e)).sum()
}

/// `(1/h)∫₀^{2π}∫_h^{2h} ‖f‖²_{X^{−λ}_{τζ^k(τ,θ)}} dτ dθ` by the midpoint rule.
pub fn average_norm(f: &GridFunction, lambda: f64, h: f64, frame: &ZetaFrame, branch: Branch, n_tau: usize, n_theta: usize) -> f64 {
    let (table, spec) = FrameTable::restricted(f.grid(), frame, &power_spectrum(f));
    average_norm_with(&table, &spec, lambda, h, branch, n_tau, n_theta)
}

pub fn average_norm_with(table: &FrameTable, spec: &[f64], lambda: f64, h: f64, branch: Branch, n_tau: usize, n_theta: usize) -> f64 {
    let nodes = quadrature_nodes(h, n_tau, n_theta);
    let w = 2.0 * PI / (n_tau * n_theta) as f64;
    nodes.iter().map(|&(tau, theta)| w * weighted(spec, &table.weights(branch, tau, theta), -lambda)).sum()
}

/// Integrand `‖f‖²_{X^{−λ}}` on the quadrature nodes, `n_theta` values per `τ` row.
pub fn integrand_grid(table: &FrameTable, spec: &[f64], lambda: f64, h: f64, branch: Branch, n_tau: usize, n_theta: usize) -> Vec<f64> {
    quadrature_nodes(h, n_tau, n_theta)
        .iter()
        .map(|&(tau, theta)| weighted(spec, &table.weights(branch, tau, theta), -lambda))
        .collect()
}

/// Power spectra of one operator's coefficients `(Σ_j |Q̂_j|², |q̂|²)`.
#[derive(Clone, Debug)]
pub struct CoefficientSpectra {
    pub vector: Vec<f64>,
    pub scalar: Vec<f64>,
}

impl CoefficientSpectra {
    pub fn new(vector: &[GridFunction], scalar: &GridFunction) -> Self {
        let mut v = vec![0.0; scalar.grid().len()];
        for q in vector {
            for (a, b) in v.iter_mut().zip(power_spectrum(q)) {
                *a += b;
            }
        }
        CoefficientSpectra { vector: v, scalar: power_spectrum(scalar) }
    }

    pub fn zero(grid: &Grid) -> Self {
        CoefficientSpectra { vector: vec![0.0; grid.len()], scalar: vec![0.0; grid.len()] }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AveragingSample {
    pub h: f64,
    pub tau: f64,
    pub theta: f64,
    pub zeta1: Zeta,
    pub zeta2: Zeta,
    pub score: f64,
    pub average_score: f64,
}

/// `S(τ,θ) = Σ_{k,ℓ} ‖q^ℓ‖²_{X^{−m/2}} + τ^{−2}‖Q^ℓ‖²_{X^{−m/2}} + τ^{−3}‖Q^ℓ‖²_{X^{(1−m)/2}}`.
pub fn score(table: &FrameTable, coeffs: &[CoefficientSpectra], m: u32, tau: f64, theta: f64) -> f64 {
    let half = m as f64 / 2.0;
    let mut s = 0.0;
    for branch in [Branch::First, Branch::Second] {
        let w = table.weights(branch, tau, theta);
        for c in coeffs {
            s += weighted(&c.scalar, &w, -half);
            if c.vector.iter().any(|v| *v != 0.0) {
                s += weighted(&c.vector, &w, -half) / (tau * tau) + weighted(&c.vector, &w, (1.0 - m as f64) / 2.0) / tau.powi(3);
            }
        }
    }
    s
}

/// Grid sample of `[h, 2h] × [0, 2π)` minimizing [`score`]; ties keep the first sample.
pub fn select_theta(table: &FrameTable, coeffs: &[CoefficientSpectra], h: f64, n_tau: usize, n_theta: usize, m: u32) -> Result<AveragingSample> {
    select_theta_offset(table, coeffs, h, n_tau, n_theta, 0.0, m)
}

/// [`select_theta`] on the `θ` grid shifted by `offset` cells.
pub fn select_theta_offset(
    table: &FrameTable,
    coeffs: &[CoefficientSpectra],
    h: f64,
    n_tau: usize,
    n_theta: usize,
    offset: f64,
    m: u32,
) -> Result<AveragingSample> {
    let mut ranked = rank_nodes(table, coeffs, h, n_tau, n_theta, offset, m)?;
    Ok(ranked.swap_remove(0))
}

/// All grid samples of `[h, 2h] × [0, 2π)` in increasing [`score`], ties in node order.
pub fn rank_nodes(
    table: &FrameTable,
    coeffs: &[CoefficientSpectra],
    h: f64,
    n_tau: usize,
    n_theta: usize,
    offset: f64,
    m: u32,
) -> Result<Vec<AveragingSample>> {
    let frame = table.frame();
    let max = frame.tau_max();
    if 2.0 * h > max * (1.0 + 1e-12) {
        return Err(LabError::TauOutOfRange { tau: 2.0 * h, max });
    }
    let nodes = quadrature_nodes_offset(h, n_tau, n_theta, offset);
    let scores = crate::par_map(&nodes, |&(t, th)| score(table, coeffs, m, t, th));
    let average_score = scores.iter().sum::<f64>() / scores.len() as f64;
    let mut order: Vec<usize> = (0..nodes.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    order
        .into_iter()
        .map(|i| {
            let (tau, theta) = nodes[i];
            Ok(AveragingSample {
                h,
                tau,
                theta,
                zeta1: zeta_rot(frame, Branch::First, tau, theta)?,
                zeta2: zeta_rot(frame, Branch::Second, tau, theta)?,
                score: scores[i],
                average_score,
            })
        })
        .collect()
}

/// One-sided slope report for the averaged norm.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SlopeReport {
    pub h: Vec<f64>,
    pub averaged: Vec<f64>,
    pub worst_fixed: Vec<f64>,
    pub averaged_fit: Option<LineFit>,
    pub worst_fit: Option<LineFit>,
    pub bound: f64,
    pub exact: bool,
    pub pass: bool,
}

/// Fits the `h`-exponent of [`average_norm`] against `−2(s+λ−1+ε)` and of the worst
/// fixed-`θ` value `max_θ (1/h)∫_h^{2h} ‖f‖² dτ` on the same quadrature.
#[allow(clippy::too_many_arguments)]
pub fn average_slope_test(
    f: &GridFunction,
    lambda: f64,
    s: f64,
    eps: f64,
    frame: &ZetaFrame,
    hs: &[f64],
    n_tau: usize,
    n_theta: usize,
) -> Result<SlopeReport> {
    if !(2.0 - 2.0 * eps <= s && s <= 2.0 * lambda) {
        return Err(LabError::WindowViolation(format!("need 2 − 2ε ≤ s ≤ 2λ, got s = {s}, λ = {lambda}, ε = {eps}")));
    }
    if hs.len() < 5 {
        return Err(LabError::Underdetermined { needed: 5, got: hs.len() });
    }
    let (table, spec) = FrameTable::restricted(f.grid(), frame, &power_spectrum(f));
    let rows = crate::par_map(hs, |&h| {
        let g = integrand_grid(&table, &spec, lambda, h, Branch::First, n_tau, n_theta);
        let avg = 2.0 * PI * g.iter().sum::<f64>() / g.len() as f64;
        let worst = (0..n_theta)
            .map(|j| 2.0 * PI * (0..n_tau).map(|i| g[i * n_theta + j]).sum::<f64>() / n_tau as f64)
            .fold(0.0, f64::max);
        (avg, worst)
    });
    let averaged: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let worst_fixed: Vec<f64> = rows.iter().map(|r| r.1).collect();
    let bound = -2.0 * (s + lambda - 1.0 + eps);
    let exact = averaged.iter().all(|v| *v == 0.0);
    let (averaged_fit, worst_fit) = if exact { (None, None) } else { (Some(power_fit(hs, &averaged)), Some(power_fit(hs, &worst_fixed))) };
    let pass = exact || averaged_fit.as_ref().is_some_and(|f| f.slope >= bound - 0.2);
    Ok(SlopeReport { h: hs.to_vec(), averaged, worst_fixed, averaged_fit, worst_fit, bound, exact, pass })
}

/// `(1/h)∫∫(τ + |P(τξ)|)^{2ε−2} dτ dθ · h^{4−4ε}⟨ξ⟩^{4−4ε}` at a continuous `ξ`.
pub fn symbol_average_normalized(frame: &ZetaFrame, xi: &[f64], h: f64, eps: f64, n_tau: usize, n_theta: usize) -> f64 {
    let nodes = quadrature_nodes(h, n_tau, n_theta);
    let w = 2.0 * PI / nodes.len() as f64;
    let acc: f64 = nodes
        .iter()
        .map(|&(tau, theta)| {
            let (z1, z2) = cov_map(frame, xi, tau, theta);
            let p = tau * tau * z1.hypot(z2);
            w * (tau + p).powf(2.0 * eps - 2.0)
        })
        .sum();
    let bracket = (1.0 + dot(xi, xi)).sqrt();
    acc * (h * bracket).powf(4.0 - 4.0 * eps)
}

/// `ζ¹ + ζ²` should equal `−iτξ₀`; returns the defect.
pub fn pair_defect(frame: &ZetaFrame, tau: f64, theta: f64) -> Result<f64> {
    let z1 = zeta_rot(frame, Branch::First, tau, theta)?;
    let z2 = zeta_rot(frame, Branch::Second, tau, theta)?;
    Ok(z1
        .0
        .iter()
        .zip(&z2.0)
        .zip(&frame.xi0)
        .map(|((a, b), x)| (a + b - Complex64::new(0.0, -tau * x)).norm())
        .fold(0.0, f64::max))
}
