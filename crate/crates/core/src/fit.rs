//! Log–log slope fits and Richardson extrapolation.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    /// Root-mean-square residual of the fit.
    pub residual: f64,
}

/// Least-squares line through `(x, y)` pairs.
pub fn loglog_slope(points: &[(f64, f64)]) -> LineFit {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = my - slope * mx;
    let residual =
        (points.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum::<f64>() / n).sqrt();
    LineFit { slope, intercept, residual }
}

/// Fits `log₂ value` against `log₂ h`.
pub fn power_fit(h: &[f64], values: &[f64]) -> LineFit {
    let pts: Vec<(f64, f64)> = h.iter().zip(values).map(|(a, b)| (a.log2(), b.log2())).collect();
    loglog_slope(&pts)
}

/// Result of extrapolating `E(τ) = E₀ + c·τ^p` to `τ → 0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Extrapolation {
    pub estimate: Complex64,
    pub error_bar: f64,
    pub power: f64,
    pub residual: f64,
}

fn solve_two_term(tau: &[f64], e: &[Complex64], p: f64) -> (Complex64, Complex64, f64) {
    // least squares for E₀ + c·t with t = τ^p; real design matrix, complex data
    let t: Vec<f64> = tau.iter().map(|x| x.powf(p)).collect();
    let n = t.len() as f64;
    let mt = t.iter().sum::<f64>() / n;
    let me = e.iter().sum::<Complex64>() / n;
    let stt: f64 = t.iter().map(|x| (x - mt).powi(2)).sum();
    let ste: Complex64 = t.iter().zip(e).map(|(x, y)| (y - me) * (x - mt)).sum();
    let c = if stt > 0.0 { ste / stt } else { Complex64::default() };
    let e0 = me - c * mt;
    let res = (t.iter().zip(e).map(|(x, y)| (y - e0 - c * x).norm_sqr()).sum::<f64>() / n).sqrt();
    (e0, c, res)
}

/// Richardson-type extrapolation with the leading power fitted from the data.
///
/// The power is chosen on `[0.25, 4]` to minimize the residual. The error bar combines the
/// residual with the shift of the estimate when the coarsest sample is dropped.
pub fn richardson(tau: &[f64], values: &[Complex64]) -> Option<Extrapolation> {
    if tau.len() < 4 || tau.len() != values.len() {
        return None;
    }
    let mut order: Vec<usize> = (0..tau.len()).collect();
    order.sort_by(|&a, &b| tau[a].total_cmp(&tau[b]));
    let t: Vec<f64> = order.iter().map(|&i| tau[i]).collect();
    let e: Vec<Complex64> = order.iter().map(|&i| values[i]).collect();
    let scale = t[t.len() - 1];
    let ts: Vec<f64> = t.iter().map(|x| x / scale).collect();
    let mut best = (f64::INFINITY, 1.0);
    for i in 0..=300 {
        let p = 0.25 + 3.75 * i as f64 / 300.0;
        let (_, _, r) = solve_two_term(&ts, &e, p);
        if r < best.0 {
            best = (r, p);
        }
    }
    let p = best.1;
    let (e0, _, res) = solve_two_term(&ts, &e, p);
    let (e0_fine, _, _) = solve_two_term(&ts[..ts.len() - 1], &e[..e.len() - 1], p);
    let n = ts.len() as f64;
    let error_bar = res * (n / (n - 2.0)).sqrt() + (e0 - e0_fine).norm();
    Some(Extrapolation { estimate: e0, error_bar, power: p, residual: res })
}
