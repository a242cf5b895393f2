//! Registry of numerical checks for the analysis inequalities, driven by a sweep-and-fit engine.
//!
//! Implied constants are unknown, so a check asserts either uniformity of `quantity/bound`
//! across a sweep or a one-sided fitted exponent, never an absolute constant.

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::averaging::{integrand_grid, jacobian, jacobian_fd, jacobian_lower_bound, symbol_average_normalized, FrameTable, power_spectrum};
use crate::error::{LabError, Result};
use crate::fit::power_fit;
use crate::multiplier::{smooth_multiply, ConjugatedInverse, Cutoff, Profile, ProfileKind, weighted_operator_norm};
use crate::random::{bandlimited, rng, unit_vector};
use crate::spectral::{derivative, make_grid, multiply_dealiased, pairing, sobolev_norm, Grid, GridFunction, MultiIndex};
use crate::symbol::{generic_zeta, make_frame, p_symbol, xlambda_norm, zeta_rot, Branch, XLambdaWeight, Zeta, ZetaFrame};

/// What the sweep runs over.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    H,
    Radius,
    Sample,
}

/// Reference ratio a ratio-bounded series is measured against.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Reference {
    /// One-sided: no ratio may exceed the first one by more than the spread.
    First,
    /// Two-sided: `max/min` of the ratios.
    Min,
    /// One-sided against the median, for bounds that are sharp only on part of the sweep.
    Median,
    /// Absolute: ratios themselves must stay below the spread.
    Unit,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode")]
pub enum Comparison {
    RatioBounded { spread: f64, reference: Reference },
    /// Least-squares slope of `log₂ quantity` against `log₂ axis` must be `≥ exponent − slack`.
    SlopeOneSided { exponent: f64, slack: f64 },
}

pub const DEFAULT_SPREAD: f64 = 4.0;
pub const DEFAULT_SLACK: f64 = 0.2;

/// Run-wide parameters shared by all checks.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CheckConfig {
    pub seed: u64,
    pub n: usize,
    pub length: f64,
    pub radius: f64,
    pub h: Vec<f64>,
    /// Random test functions per sweep point.
    pub samples: usize,
    pub power_iterations: usize,
    pub n_tau: usize,
    pub n_theta: usize,
    pub jacobian_samples: usize,
}

impl Default for CheckConfig {
    fn default() -> Self {
        CheckConfig {
            seed: 20240611,
            n: 64,
            length: 2.0 * std::f64::consts::PI,
            radius: 0.9,
            h: (3..8).map(|k| 2f64.powi(-k)).collect(),
            samples: 4,
            power_iterations: 16,
            n_tau: 16,
            n_theta: 16,
            jacobian_samples: 1000,
        }
    }
}

/// Evaluation context built once per run.
pub struct Context {
    pub config: CheckConfig,
    pub grid: Grid,
    pub cutoff: Cutoff,
}

impl Context {
    pub fn new(config: CheckConfig) -> Result<Self> {
        let grid = make_grid(3, config.n, config.length, config.radius)?;
        let cutoff = Cutoff::default_for(&grid)?;
        Ok(Context { config, grid, cutoff })
    }

    /// Deterministic generator for sweep point `index` of check `name`.
    fn rng(&self, name: &str, index: usize) -> crate::random::LabRng {
        let tag = name.bytes().fold(0xcbf29ce484222325u64, |h, b| (h ^ b as u64).wrapping_mul(0x100000001b3));
        rng(self.config.seed ^ tag ^ (index as u64).wrapping_mul(0x9e3779b97f4a7c15))
    }

    fn band(&self) -> i64 {
        (self.config.n / 4) as i64
    }
}

/// `(quantity, bound)` for every series at one sweep point.
pub type Evaluation = Vec<(f64, f64)>;

#[derive(Clone, Copy, Debug)]
pub struct SeriesSpec {
    pub label: &'static str,
    /// Recorded but not part of the verdict.
    pub informational: bool,
}

const fn series(label: &'static str) -> SeriesSpec {
    SeriesSpec { label, informational: false }
}

#[derive(Clone)]
pub struct CheckSpec {
    pub name: &'static str,
    pub anchor: &'static str,
    pub axis: Axis,
    pub comparison: Comparison,
    pub series: Vec<SeriesSpec>,
    pub sweep: fn(&Context) -> Vec<f64>,
    pub evaluate: fn(&Context, usize, f64) -> Result<Evaluation>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeriesReport {
    pub label: String,
    pub informational: bool,
    pub quantity: Vec<f64>,
    pub bound: Vec<f64>,
    pub ratio: Vec<f64>,
    /// Spread of the ratios, or the fitted exponent.
    pub statistic: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub name: String,
    pub anchor: String,
    pub seed: u64,
    pub axis: Axis,
    pub sweep: Vec<f64>,
    pub comparison: Comparison,
    pub series: Vec<SeriesReport>,
    pub pass: bool,
}

impl CheckReport {
    /// Worst statistic over the non-informational series.
    pub fn statistic(&self) -> f64 {
        let vals = self.series.iter().filter(|s| !s.informational).map(|s| s.statistic);
        match self.comparison {
            Comparison::RatioBounded { .. } => vals.fold(0.0, f64::max),
            Comparison::SlopeOneSided { .. } => vals.fold(f64::INFINITY, f64::min),
        }
    }
}

fn judge(comparison: &Comparison, axis: &[f64], quantity: &[f64], bound: &[f64]) -> (Vec<f64>, f64, bool) {
    let ratio: Vec<f64> = quantity.iter().zip(bound).map(|(q, b)| q / b).collect();
    let finite = ratio.iter().all(|r| r.is_finite() && *r >= 0.0);
    match *comparison {
        Comparison::RatioBounded { spread, reference } => {
            let max = ratio.iter().cloned().fold(0.0, f64::max);
            let stat = match reference {
                Reference::First => max / ratio[0],
                Reference::Min => max / ratio.iter().cloned().fold(f64::INFINITY, f64::min),
                Reference::Median => {
                    let mut sorted = ratio.clone();
                    sorted.sort_by(f64::total_cmp);
                    max / sorted[sorted.len() / 2]
                }
                Reference::Unit => max,
            };
            let stat = if max == 0.0 { 0.0 } else { stat };
            (ratio, stat, finite && stat <= spread)
        }
        Comparison::SlopeOneSided { exponent, slack } => {
            if quantity.iter().all(|q| *q == 0.0) {
                return (ratio, f64::INFINITY, true);
            }
            let positive = quantity.iter().all(|q| *q > 0.0 && q.is_finite());
            let fit = power_fit(axis, quantity);
            (ratio, fit.slope, positive && fit.slope >= exponent - slack)
        }
    }
}

/// Runs one registered check.
pub fn run_check(name: &str, ctx: &Context) -> Result<CheckReport> {
    let spec = registry().into_iter().find(|c| c.name == name).ok_or_else(|| LabError::UnknownCheck(name.to_string()))?;
    let sweep = (spec.sweep)(ctx);
    if matches!(spec.comparison, Comparison::SlopeOneSided { .. }) && sweep.len() < 5 {
        return Err(LabError::Underdetermined { needed: 5, got: sweep.len() });
    }
    let indexed: Vec<(usize, f64)> = sweep.iter().cloned().enumerate().collect();
    let evals = crate::par_map(&indexed, |&(i, p)| (spec.evaluate)(ctx, i, p));
    let evals: Vec<Evaluation> = evals.into_iter().collect::<Result<_>>()?;
    let mut series = Vec::with_capacity(spec.series.len());
    let mut pass = true;
    for (k, s) in spec.series.iter().enumerate() {
        let quantity: Vec<f64> = evals.iter().map(|e| e[k].0).collect();
        let bound: Vec<f64> = evals.iter().map(|e| e[k].1).collect();
        let (ratio, statistic, ok) = judge(&spec.comparison, &sweep, &quantity, &bound);
        if !s.informational {
            pass &= ok;
        }
        series.push(SeriesReport { label: s.label.to_string(), informational: s.informational, quantity, bound, ratio, statistic, pass: ok });
    }
    Ok(CheckReport {
        name: spec.name.to_string(),
        anchor: spec.anchor.to_string(),
        seed: ctx.config.seed,
        axis: spec.axis,
        sweep,
        comparison: spec.comparison,
        series,
        pass,
    })
}

/// `(name, anchor)` for every registered check.
pub fn list_checks() -> Vec<(&'static str, &'static str)> {
    registry().iter().map(|c| (c.name, c.anchor)).collect()
}

/// Runs the named checks, or all of them when `names` is empty.
pub fn run_checks(names: &[String], ctx: &Context) -> Result<Vec<CheckReport>> {
    let known = list_checks();
    for n in names {
        if !known.iter().any(|(k, _)| k == n) {
            return Err(LabError::UnknownCheck(n.clone()));
        }
    }
    let selected: Vec<&str> = if names.is_empty() { known.iter().map(|(k, _)| *k).collect() } else { names.iter().map(String::as_str).collect() };
    selected.iter().map(|n| run_check(n, ctx)).collect()
}

fn h_sweep(ctx: &Context) -> Vec<f64> {
    ctx.config.h.clone()
}

fn slope(exponent: f64) -> Comparison {
    Comparison::SlopeOneSided { exponent, slack: DEFAULT_SLACK }
}

const ONE_SIDED: Comparison = Comparison::RatioBounded { spread: DEFAULT_SPREAD, reference: Reference::First };
const TWO_SIDED: Comparison = Comparison::RatioBounded { spread: DEFAULT_SPREAD, reference: Reference::Min };

/// Exponent and Sobolev order shared by the SSE-type checks.
const LAMBDA: f64 = 0.5;
const S_SSE: f64 = 2.0 * LAMBDA;
/// Smoothness exponent of the characteristic-set integrals.
const S_RB: f64 = 0.5;
/// Fixed `h` of the radius sweep.
const H_RB1: f64 = 0.25;
/// Parameters of the averaged-norm checks.
const EPS: f64 = 0.2;
const S_AVG: f64 = 1.7;
const THETA_H: f64 = 0.5;

pub fn registry() -> Vec<CheckSpec> {
    vec![
        CheckSpec {
            name: "rb1",
            anchor: "∫_{B(x,r)} |ξ|^s/|P(hξ)| dξ ≲ r^{d−1}/h^{1+s} (stated with r^{d+1})",
            axis: Axis::Radius,
            comparison: ONE_SIDED,
            series: vec![series("r^(d-1)"), SeriesSpec { label: "r^(d+1)", informational: true }],
            sweep: |_| (0..5).map(|k| 2f64.powi(k - 4)).collect(),
            evaluate: eval_rb1,
        },
        CheckSpec {
            name: "rb2",
            anchor: "∫ |φ(x−ξ)||ξ|^s/|P(hξ)| dξ ≲ h^{−1−s}",
            axis: Axis::H,
            comparison: ONE_SIDED,
            series: vec![series("rb2")],
            sweep: h_sweep,
            evaluate: eval_rb2,
        },
        CheckSpec {
            name: "lemma33",
            anchor: "sup_η ∫ |φ(ξ−η)|·||P(hη)| − |P(hξ)||/|P(hξ)| dξ ≲ 1",
            axis: Axis::H,
            comparison: ONE_SIDED,
            series: vec![series("sup over η")],
            sweep: h_sweep,
            evaluate: eval_symbol_difference,
        },
        CheckSpec {
            name: "supremum",
            anchor: "sup_ξ ⟨ξ⟩^s/(h + |P(hξ)|)^λ ≲ h^{−λ−s}, 0 ≤ s ≤ 2λ",
            axis: Axis::H,
            comparison: slope(-(1.0 + 1.5)),
            series: vec![series("sup")],
            sweep: h_sweep,
            evaluate: eval_supremum,
        },
        CheckSpec {
            name: "sse1",
            anchor: "‖D^α u‖_{X^{λ₁}} ≲ h^{−|α|+λ₁−λ₂}‖u‖_{X^{λ₂}}, |α| ≤ 2(λ₂ − λ₁)",
            axis: Axis::H,
            comparison: ONE_SIDED,
            series: vec![series("sse1")],
            sweep: h_sweep,
            evaluate: eval_sse1,
        },
        CheckSpec {
            name: "sse2",
            anchor: "‖u‖_{W^{s,2}} ≲ h^{−s−λ}‖u‖_{X^λ}, 0 ≤ s ≤ 2λ",
            axis: Axis::H,
            comparison: ONE_SIDED,
            series: vec![series("sse2")],
            sweep: h_sweep,
            evaluate: eval_sse2,
        },
        CheckSpec {
            name: "sse3",
            anchor: "‖u‖_{X^{−λ}} ≲ h^{−s−λ}‖u‖_{W^{−s,2}} (dual embedding)",
            axis: Axis::H,
            comparison: ONE_SIDED,
            series: vec![series("sse3")],
            sweep: h_sweep,
            evaluate: eval_sse3,
        },
        CheckSpec {
            name: "trilinear",
            anchor: "|⟨D^α f D^β u, v⟩| ≲ h^{−2λ−|α|−|β|}‖f‖_∞‖u‖_{X^λ_{hζ₁}}‖v‖_{X^λ_{hζ₂}}",
            axis: Axis::H,
            comparison: ONE_SIDED,
            series: vec![series("trilinear")],
            sweep: h_sweep,
            evaluate: |ctx, i, h| eval_trilinear(ctx, i, h, ProfileKind::SmoothBump),
        },
        CheckSpec {
            name: "holder_gain",
            anchor: "C^θ pieces with |α| ≥ 1 gain h^θ: ≲ h^{−2λ−|α|−|β|+θ}",
            axis: Axis::H,
            comparison: Comparison::SlopeOneSided { exponent: -2.0 - 2.0 + THETA_H, slack: 0.1 },
            series: vec![series("holder")],
            sweep: h_sweep,
            evaluate: |ctx, i, h| eval_trilinear(ctx, i, h, ProfileKind::HolderBump),
        },
        CheckSpec {
            name: "smooth_mult",
            anchor: "‖uv‖_{X^λ} ≲ ‖u‖_{X^λ} for smooth bounded v",
            axis: Axis::H,
            comparison: TWO_SIDED,
            series: vec![series("modulation λ=1"), series("modulation λ=-1"), series("cutoff λ=1"), series("cutoff λ=-1")],
            sweep: h_sweep,
            evaluate: eval_smooth_mult,
        },
        CheckSpec {
            name: "jphi_norm",
            anchor: "J_φ = φ|P(hD)|^{−1/2}: X^λ → X^{λ+1/2} bounded uniformly in h",
            axis: Axis::H,
            comparison: TWO_SIDED,
            series: lambda_series(),
            sweep: h_sweep,
            evaluate: |ctx, i, h| eval_operator_norm(ctx, i, h, 0.5),
        },
        CheckSpec {
            name: "iphi_norm",
            anchor: "I_φ = φP(hD)^{−1}φ: X^λ → X^{λ+1} bounded uniformly in h",
            axis: Axis::H,
            comparison: TWO_SIDED,
            series: lambda_series(),
            sweep: h_sweep,
            evaluate: |ctx, i, h| eval_operator_norm(ctx, i, h, 1.0),
        },
        CheckSpec {
            name: "prop42",
            anchor: "(1/h)∫∫(τ + |P(τξ)|)^{2ε−2} dτ dθ ≲ 1/(h^{4−4ε}⟨ξ⟩^{4−4ε}) for h⟨ξ₀⟩² ≲ 1",
            axis: Axis::Sample,
            comparison: Comparison::RatioBounded { spread: 8.0, reference: Reference::Median },
            series: vec![series("normalized")],
            sweep: |_| (0..SYMBOL_AVERAGE_SAMPLES.len()).map(|i| i as f64).collect(),
            evaluate: eval_symbol_average,
        },
        CheckSpec {
            name: "thm43",
            anchor: "(1/h)∫∫‖f‖²_{X^{−λ}_{τζ(τ,θ)}} dτ dθ ≲ h^{−2(s+λ−1+ε)}‖f‖²_{W^{−s,2}}, 2 − 2ε ≤ s ≤ 2λ",
            axis: Axis::H,
            comparison: slope(-2.0 * (S_AVG + 1.0 - 1.0 + EPS)),
            series: vec![series("averaged"), SeriesSpec { label: "worst fixed θ", informational: true }],
            sweep: h_sweep,
            evaluate: eval_averaged_norm,
        },
        CheckSpec {
            name: "jacobian",
            anchor: "2|ξ^⊥|²/τ³ ≤ J for the change of variables (τ, θ) → P(τξ)/τ²",
            axis: Axis::Sample,
            comparison: Comparison::RatioBounded { spread: 1.0, reference: Reference::Unit },
            series: vec![series("fd relative error / 1e-6"), series("lower bound / J")],
            sweep: |ctx| (0..ctx.config.jacobian_samples).map(|i| i as f64).collect(),
            evaluate: eval_jacobian,
        },
    ]
}

fn lambda_series() -> Vec<SeriesSpec> {
    ["λ=-1", "λ=-1/2", "λ=0", "λ=1/2", "λ=1"].into_iter().map(series).collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn cross(a: &[f64], b: &[f64]) -> Vec<f64> {
    vec![a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

/// `(μ₁, μ₂, μ₁ × μ₂)` for `ζ = μ₁ + iμ₂`.
fn zeta_axes(z: &Zeta) -> [Vec<f64>; 3] {
    let (m1, m2) = (z.re(), z.im());
    let m3 = cross(&m1, &m2);
    [m1, m2, m3]
}

/// Point of the characteristic set `{P(hξ) = 0} = {μ₁·ξ = 0, |hξ + μ₂| = 1}` at angle `t`.
fn characteristic_point(z: &Zeta, h: f64, t: f64) -> Vec<f64> {
    let [_, m2, m3] = zeta_axes(z);
    (0..3).map(|j| (-m2[j] + t.cos() * m2[j] + t.sin() * m3[j]) / h).collect()
}

/// Midpoint rule for `∫ f` over the cube `c ± half` (optionally restricted to the ball).
fn cube_quadrature(c: &[f64], half: f64, m: usize, ball: bool, f: impl Fn(&[f64]) -> f64) -> f64 {
    let step = 2.0 * half / m as f64;
    let mut acc = 0.0;
    let mut x = [0.0; 3];
    for i in 0..m {
        x[0] = c[0] - half + (i as f64 + 0.5) * step;
        for j in 0..m {
            x[1] = c[1] - half + (j as f64 + 0.5) * step;
            for k in 0..m {
                x[2] = c[2] - half + (k as f64 + 0.5) * step;
                if ball && (0..3).map(|a| (x[a] - c[a]).powi(2)).sum::<f64>() > half * half {
                    continue;
                }
                acc += f(&x);
            }
        }
    }
    acc * step.powi(3)
}

fn norm(x: &[f64]) -> f64 {
    dot(x, x).sqrt()
}

fn eval_rb1(_: &Context, _: usize, r: f64) -> Result<Evaluation> {
    let z = generic_zeta(3);
    let h = H_RB1;
    let x = characteristic_point(&z, h, 1.0);
    let q = cube_quadrature(&x, r, 48, true, |xi| norm(xi).powf(S_RB) / p_symbol(&z, h, xi).norm());
    let scale = h.powf(-1.0 - S_RB);
    Ok(vec![(q, r.powi(2) * scale), (q, r.powi(4) * scale)])
}

fn gaussian(x: &[f64], c: &[f64]) -> f64 {
    (-0.5 * (0..3).map(|a| (x[a] - c[a]).powi(2)).sum::<f64>()).exp()
}

fn eval_rb2(_: &Context, _: usize, h: f64) -> Result<Evaluation> {
    let z = generic_zeta(3);
    let x = characteristic_point(&z, h, 1.0);
    let q = cube_quadrature(&x, 6.0, 48, false, |xi| gaussian(xi, &x) * norm(xi).powf(S_RB) / p_symbol(&z, h, xi).norm());
    Ok(vec![(q, h.powf(-1.0 - S_RB))])
}

fn eval_symbol_difference(ctx: &Context, i: usize, h: f64) -> Result<Evaluation> {
    let z = generic_zeta(3);
    let mut r = ctx.rng("lemma33", i);
    let mut etas = vec![characteristic_point(&z, h, 0.7), characteristic_point(&z, h, 2.9), vec![0.3, -0.2, 0.1]];
    for _ in 0..3 {
        let base = characteristic_point(&z, h, r.random_range(0.0..std::f64::consts::TAU));
        let off = unit_vector(3, &mut r);
        let len = r.random_range(0.0..3.0);
        etas.push(base.iter().zip(&off).map(|(b, o)| b + len * o).collect());
    }
    let sup = etas
        .iter()
        .map(|eta| {
            let pe = p_symbol(&z, h, eta).norm();
            cube_quadrature(eta, 6.0, 40, false, |xi| {
                let px = p_symbol(&z, h, xi).norm();
                gaussian(xi, eta) * (pe - px).abs() / px
            })
        })
        .fold(0.0, f64::max);
    Ok(vec![(sup, 1.0)])
}

fn eval_supremum(ctx: &Context, i: usize, h: f64) -> Result<Evaluation> {
    let z = generic_zeta(3);
    let (lambda, s) = (1.0, 1.5);
    let val = |xi: &[f64]| (1.0 + dot(xi, xi)).powf(s / 2.0) / (h + p_symbol(&z, h, xi).norm()).powf(lambda);
    let mut best: f64 = 0.0;
    for k in 0..512 {
        best = best.max(val(&characteristic_point(&z, h, k as f64 * std::f64::consts::TAU / 512.0)));
    }
    let mut r = ctx.rng("supremum", i);
    for _ in 0..4096 {
        let dir = unit_vector(3, &mut r);
        let len = r.random_range(0.0..3.0 / h);
        best = best.max(val(&dir.iter().map(|d| d * len).collect::<Vec<_>>()));
    }
    ctx.grid.for_each_frequency(|_, xi| best = best.max(val(xi)));
    Ok(vec![(best, h.powf(-lambda - s))])
}

fn random_fields(ctx: &Context, name: &str, i: usize) -> Vec<GridFunction> {
    let mut r = ctx.rng(name, i);
    (0..ctx.config.samples).map(|_| bandlimited(&ctx.grid, ctx.band(), &mut r)).collect()
}

fn max_ratio(fields: &[GridFunction], f: impl Fn(&GridFunction) -> f64) -> f64 {
    fields.iter().map(f).fold(0.0, f64::max)
}

fn eval_sse1(ctx: &Context, i: usize, h: f64) -> Result<Evaluation> {
    let z = generic_zeta(3);
    let alpha = MultiIndex::unit(3, 0);
    let (l1, l2) = (0.0, LAMBDA);
    let w1 = XLambdaWeight::new(h, z.clone(), l1);
    let w2 = XLambdaWeight::new(h, z, l2);
    let q = max_ratio(&random_fields(ctx, "sse1", i), |u| {
        let du = derivative(u, &alpha).expect("dimension matches");
        xlambda_norm(&du, &w1) / xlambda_norm(u, &w2)
    });
    Ok(vec![(q, h.powf(-1.0 + l1 - l2))])
}

fn eval_sse2(ctx: &Context, i: usize, h: f64) -> Result<Evaluation> {
    let w = XLambdaWeight::new(h, generic_zeta(3), LAMBDA);
    let q = max_ratio(&random_fields(ctx, "sse2", i), |u| sobolev_norm(u, S_SSE) / xlambda_norm(u, &w));
    Ok(vec![(q, h.powf(-S_SSE - LAMBDA))])
}

fn eval_sse3(ctx: &Context, i: usize, h: f64) -> Result<Evaluation> {
    let w = XLambdaWeight::new(h, generic_zeta(3), -LAMBDA);
    let q = max_ratio(&random_fields(ctx, "sse3", i), |u| xlambda_norm(u, &w) / sobolev_norm(u, -S_SSE));
    Ok(vec![(q, h.powf(-S_SSE - LAMBDA))])
}

/// A second member of the vector class, rotated away from [`generic_zeta`].
fn second_zeta() -> Zeta {
    let f = make_frame(&[0.2, -0.5, 0.8]).expect("nonzero");
    zeta_rot(&f, Branch::First, 0.1, 0.4).expect("admissible")
}

fn eval_trilinear(ctx: &Context, i: usize, h: f64, kind: ProfileKind) -> Result<Evaluation> {
    let lambda = 1.0;
    let alpha = MultiIndex(vec![1, 0, 0]);
    let beta = MultiIndex(vec![0, 1, 0]);
    let profile = Profile { kind, center: vec![0.1, 0.0, -0.05], radius: 0.7, amplitude: 1.0, theta: THETA_H };
    let f = profile.sample(&ctx.grid);
    let df = derivative(&f, &alpha)?;
    let w1 = XLambdaWeight::new(h, generic_zeta(3), lambda);
    let w2 = XLambdaWeight::new(h, second_zeta(), lambda);
    let fields = random_fields(ctx, kind_name(kind), i);
    let mut q: f64 = 0.0;
    for pair in fields.chunks(2).filter(|c| c.len() == 2) {
        let u = pair[0].clone().scale(Complex64::new(1.0 / xlambda_norm(&pair[0], &w1), 0.0));
        let v = pair[1].clone().scale(Complex64::new(1.0 / xlambda_norm(&pair[1], &w2), 0.0));
        let du = derivative(&u, &beta)?;
        q = q.max(pairing(&multiply_dealiased(&df, &du)?, &v)?.norm());
    }
    let fsup = f.to_physical().sup_norm();
    let order = (alpha.order() + beta.order()) as f64;
    Ok(vec![(q, h.powf(-2.0 * lambda - order) * fsup)])
}

fn kind_name(kind: ProfileKind) -> &'static str {
    match kind {
        ProfileKind::SmoothBump => "trilinear",
        ProfileKind::HolderBump => "holder_gain",
    }
}

fn eval_smooth_mult(ctx: &Context, i: usize, h: f64) -> Result<Evaluation> {
    let z = generic_zeta(3);
    let modulation = GridFunction::from_fn(&ctx.grid, |x| Complex64::from_polar(1.0, -x[0]));
    let fields = random_fields(ctx, "smooth_mult", i);
    let mut out = Vec::new();
    for v in [&modulation, &ctx.cutoff.phi] {
        for lambda in [1.0, -1.0] {
            let w = XLambdaWeight::new(h, z.clone(), lambda);
            let mut q: f64 = 0.0;
            for u in &fields {
                q = q.max(smooth_multiply(v, u, &w)?.1);
            }
            out.push((q, 1.0));
        }
    }
    Ok(out)
}

fn eval_operator_norm(ctx: &Context, i: usize, h: f64, gain: f64) -> Result<Evaluation> {
    let inv = ConjugatedInverse::new(h, &generic_zeta(3), &ctx.cutoff)?;
    let table = inv.weight_table();
    let mut r = ctx.rng(if gain == 1.0 { "iphi_norm" } else { "jphi_norm" }, i);
    let start = bandlimited(&ctx.grid, ctx.band(), &mut r);
    let mut out = Vec::new();
    for lambda in [-1.0, -0.5, 0.0, 0.5, 1.0] {
        let n = if gain == 1.0 {
            weighted_operator_norm(&table, lambda, lambda + gain, |u| inv.apply_iphi(u), |v| inv.apply_iphi_adjoint(v), start.clone(), ctx.config.power_iterations)
        } else {
            weighted_operator_norm(&table, lambda, lambda + gain, |u| inv.apply_jphi(u), |v| inv.apply_jphi_adjoint(v), start.clone(), ctx.config.power_iterations)
        };
        out.push((n, 1.0));
    }
    Ok(out)
}

/// `(ξ, h)` samples across the three regimes: `|ξ|` small, `|ξ|` large with `|ξ^⊥|` small,
/// and `|ξ|` large with `|ξ^⊥|` large.
const SYMBOL_AVERAGE_SAMPLES: [([f64; 3], f64); 9] = [
    ([0.3, 0.2, 0.4], 1.0 / 16.0),
    ([0.0, 1.0, 0.5], 1.0 / 32.0),
    ([0.5, -0.5, 0.0], 1.0 / 64.0),
    ([0.0, 0.0, 40.0], 1.0 / 16.0),
    ([0.5, 0.0, 90.0], 1.0 / 32.0),
    ([0.0, 1.0, 160.0], 1.0 / 64.0),
    ([30.0, 20.0, 10.0], 1.0 / 16.0),
    ([-60.0, 50.0, 5.0], 1.0 / 32.0),
    ([100.0, -90.0, 40.0], 1.0 / 64.0),
];

fn symbol_average_frame() -> ZetaFrame {
    make_frame(&[0.0, 0.0, 1.0]).expect("nonzero")
}

fn eval_symbol_average(ctx: &Context, _: usize, p: f64) -> Result<Evaluation> {
    let (xi, h) = SYMBOL_AVERAGE_SAMPLES[p as usize];
    Ok(vec![(symbol_average_normalized(&symbol_average_frame(), &xi, h, EPS, 4 * ctx.config.n_tau, 4 * ctx.config.n_theta), 1.0)])
}

/// Hölder divergence-form test coefficient `D^{(1,1,0)}` of a `C^{1/2}` bump.
pub fn holder_divergence_field(grid: &Grid) -> Result<GridFunction> {
    let profile = Profile { kind: ProfileKind::HolderBump, center: vec![0.05, -0.1, 0.0], radius: 0.8, amplitude: 1.0, theta: THETA_H };
    derivative(&profile.sample(grid), &MultiIndex(vec![1, 1, 0]))
}

fn averaging_frame() -> ZetaFrame {
    make_frame(&[0.83, 0.47, 0.31]).expect("nonzero")
}

fn eval_averaged_norm(ctx: &Context, _: usize, h: f64) -> Result<Evaluation> {
    let f = holder_divergence_field(&ctx.grid)?;
    let frame = averaging_frame();
    let (nt, nth) = (ctx.config.n_tau, ctx.config.n_theta);
    let (table, spec) = FrameTable::restricted(&ctx.grid, &frame, &power_spectrum(&f));
    let cells = integrand_grid(&table, &spec, 1.0, h, Branch::First, nt, nth);
    let tau_mean = |j: usize| 2.0 * std::f64::consts::PI * (0..nt).map(|i| cells[i * nth + j]).sum::<f64>() / nt as f64;
    let avg = (0..nth).map(tau_mean).sum::<f64>() / nth as f64;
    let worst = (0..nth).map(tau_mean).fold(0.0, f64::max);
    let wnorm = sobolev_norm(&f, -S_AVG).powi(2);
    let bound = h.powf(-2.0 * (S_AVG + 1.0 - 1.0 + EPS)) * wnorm;
    Ok(vec![(avg, bound), (worst, bound)])
}

fn eval_jacobian(ctx: &Context, i: usize, _: f64) -> Result<Evaluation> {
    let mut r = ctx.rng("jacobian", i);
    let xi0: Vec<f64> = unit_vector(3, &mut r).iter().map(|v| v * r.random_range(0.2..3.0)).collect();
    let frame = make_frame(&xi0)?;
    let xi: Vec<f64> = unit_vector(3, &mut r).iter().map(|v| v * r.random_range(0.1..20.0)).collect();
    let tau = r.random_range(0.05..1.0) * frame.tau_max().min(1.0) / 2.0;
    let theta = r.random_range(0.0..std::f64::consts::TAU);
    let j = jacobian(&frame, &xi, tau, theta)?;
    let fd = jacobian_fd(&frame, &xi, tau, theta, 1e-5);
    let lower = jacobian_lower_bound(&frame, &xi, tau);
    Ok(vec![((fd - j).abs() / j.abs(), 1e-6), (lower, j * (1.0 + 1e-12))])
}
