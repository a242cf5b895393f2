//! Browser bindings: frame algebra, a small decay study, and cheap registry checks.
//!
//! Results cross the boundary as JSON strings so the page needs no generated typings.

use cgolab::cgo::{decay_study, unit_amplitude, ThetaSelection};
use cgolab::estimates::{run_check, CheckConfig, Context};
use cgolab::harness::{preset_pair, Preset};
use cgolab::multiplier::Cutoff;
use cgolab::spectral::make_grid;
use cgolab::symbol::{make_frame, zeta_rot, Branch, Zeta};
use num_complex::Complex64;
use serde::Serialize;
use wasm_bindgen::prelude::*;

/// Checks cheap enough to run on the page's main thread.
pub const PAGE_CHECKS: [&str; 5] = ["rb1", "supremum", "sse1", "sse2", "jacobian"];

fn js_err(e: impl std::fmt::Display) -> JsError {
    JsError::new(&e.to_string())
}

#[derive(Serialize)]
struct FrameOut {
    mu1: Vec<f64>,
    mu2: Vec<f64>,
    zeta1: Vec<[f64; 2]>,
    zeta2: Vec<[f64; 2]>,
    /// `|ζ¹ + ζ² + iτξ₀|`
    sum_defect: f64,
    /// `max(|ζ^k·ζ^k|)`
    null_defect: f64,
    tau_max: f64,
}

fn parts(z: &Zeta) -> Vec<[f64; 2]> {
    z.0.iter().map(|c| [c.re, c.im]).collect()
}

/// Rotated complex frequencies for `ξ₀ = (x, y, z)` at `(τ, θ)`.
#[wasm_bindgen]
pub fn zeta_pair(x: f64, y: f64, z: f64, tau: f64, theta: f64) -> Result<String, JsError> {
    let frame = make_frame(&[x, y, z]).map_err(js_err)?;
    let z1 = zeta_rot(&frame, Branch::First, tau, theta).map_err(js_err)?;
    let z2 = zeta_rot(&frame, Branch::Second, tau, theta).map_err(js_err)?;
    let sum_defect = (0..3)
        .map(|j| (z1.0[j] + z2.0[j] + Complex64::new(0.0, tau * frame.xi0[j])).norm_sqr())
        .sum::<f64>()
        .sqrt();
    let out = FrameOut {
        mu1: frame.mu1.clone(),
        mu2: frame.mu2.clone(),
        null_defect: z1.self_dot().norm().max(z2.self_dot().norm()),
        zeta1: parts(&z1),
        zeta2: parts(&z2),
        sum_defect,
        tau_max: frame.tau_max(),
    };
    serde_json::to_string(&out).map_err(js_err)
}

#[derive(Serialize)]
struct DecayOut {
    h: Vec<f64>,
    tau: Vec<f64>,
    psi_norm: Vec<f64>,
    exponent: Option<f64>,
    failure: Option<String>,
}

/// `‖ψ‖_{X^1}` along five dyadic `h` for a smooth scalar bump of the given amplitude, `m = 2`.
#[wasm_bindgen]
pub fn decay(n: usize, amplitude: f64, selected: bool) -> Result<String, JsError> {
    if n != 16 && n != 32 {
        return Err(JsError::new("grid size must be 16 or 32"));
    }
    let grid = make_grid(3, n, 2.0 * std::f64::consts::PI, 0.9).map_err(js_err)?;
    let (mut c1, _) = preset_pair(Preset::BumpQ, &grid, 2).map_err(js_err)?;
    for p in &mut c1.scalar.pieces {
        p.field = p.field.clone().scale(Complex64::new(amplitude / 0.5, 0.0));
    }
    let cutoff = Cutoff::default_for(&grid).map_err(js_err)?;
    let frame = make_frame(&[1.0, 0.0, 0.0]).map_err(js_err)?;
    let hs: Vec<f64> = (3..8).map(|k| 2f64.powi(-k)).collect();
    let selection = if selected {
        ThetaSelection::Selected { n_tau: 4, n_theta: 8, theta_offset: 0.0 }
    } else {
        ThetaSelection::Fixed { theta: 0.0 }
    };
    let rep = decay_study(&c1, 2, &frame, &hs, &unit_amplitude(&grid), selection, &cutoff, &Default::default()).map_err(js_err)?;
    let out = DecayOut {
        h: rep.rows.iter().map(|r| r.h).collect(),
        tau: rep.rows.iter().map(|r| r.tau).collect(),
        psi_norm: rep.rows.iter().map(|r| r.psi_norm).collect(),
        exponent: rep.exponent(),
        failure: rep.failure.clone(),
    };
    serde_json::to_string(&out).map_err(js_err)
}

/// Names accepted by [`check`].
#[wasm_bindgen]
pub fn page_checks() -> Vec<String> {
    PAGE_CHECKS.iter().map(|s| s.to_string()).collect()
}

/// One registry check on a 16³ grid, as its JSON report.
#[wasm_bindgen]
pub fn check(name: &str, seed: u64) -> Result<String, JsError> {
    if !PAGE_CHECKS.contains(&name) {
        return Err(JsError::new(&format!("{name} is not available on the page")));
    }
    let ctx = Context::new(CheckConfig { seed, n: 16, samples: 2, jacobian_samples: 200, ..CheckConfig::default() }).map_err(js_err)?;
    let report = run_check(name, &ctx).map_err(js_err)?;
    serde_json::to_string(&report).map_err(js_err)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zeta_pair_is_consistent() {
        let v: serde_json::Value = serde_json::from_str(&zeta_pair(0.0, 0.0, 1.0, 0.1, 0.0).unwrap()).unwrap();
        assert!(v["sum_defect"].as_f64().unwrap() < 1e-12);
        assert!(v["null_defect"].as_f64().unwrap() < 1e-12);
        assert!((v["zeta1"][1][1].as_f64().unwrap() - 0.99874922).abs() < 1e-8);
    }

    #[test]
    fn decay_and_checks_run() {
        let v: serde_json::Value = serde_json::from_str(&decay(16, 0.5, false).unwrap()).unwrap();
        assert!(v["failure"].is_null(), "{v}");
        assert_eq!(v["psi_norm"].as_array().unwrap().len(), 5);
        for name in PAGE_CHECKS {
            let r: serde_json::Value = serde_json::from_str(&check(name, 1).unwrap()).unwrap();
            assert_eq!(r["name"], name);
        }
    }
}
