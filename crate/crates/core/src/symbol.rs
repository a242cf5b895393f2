//! Complex frequencies in `𝒱`, rotated frames, the conjugated symbol and `X^λ` norms.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::spectral::GridFunction;

const FRAME_TOL: f64 = 1e-12;

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Complex vector `ζ = Re ζ + i Im ζ`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Zeta(pub Vec<Complex64>);

impl Zeta {
    pub fn from_parts(re: &[f64], im: &[f64]) -> Zeta {
        Zeta(re.iter().zip(im).map(|(&a, &b)| Complex64::new(a, b)).collect())
    }

    pub fn re(&self) -> Vec<f64> {
        self.0.iter().map(|z| z.re).collect()
    }

    pub fn im(&self) -> Vec<f64> {
        self.0.iter().map(|z| z.im).collect()
    }

    /// Bilinear `ζ·ζ`.
    pub fn self_dot(&self) -> Complex64 {
        self.0.iter().map(|z| z * z).sum()
    }

    /// `ζ·ξ` for real `ξ`.
    pub fn dot_real(&self, xi: &[f64]) -> Complex64 {
        self.0.iter().zip(xi).map(|(z, x)| z * x).sum()
    }

    /// Distance from the class `𝒱`: `max(|ζ·ζ|, ||Re ζ|−1|, ||Im ζ|−1|)`.
    pub fn defect(&self) -> f64 {
        let a = self.self_dot().norm();
        let b = (norm(&self.re()) - 1.0).abs();
        let c = (norm(&self.im()) - 1.0).abs();
        a.max(b).max(c)
    }

    pub fn is_in_v(&self) -> bool {
        self.defect() <= FRAME_TOL
    }
}

/// Which member of the rotated pair `ζ¹, ζ²`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Branch {
    First,
    Second,
}

impl Branch {
    pub fn from_index(k: u8) -> Result<Branch> {
        match k {
            1 => Ok(Branch::First),
            2 => Ok(Branch::Second),
            _ => Err(LabError::InvalidArgument(format!("branch must be 1 or 2, got {k}"))),
        }
    }
}

/// `ξ₀` with an orthonormal pair `μ₁, μ₂` orthogonal to it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ZetaFrame {
    pub xi0: Vec<f64>,
    pub mu1: Vec<f64>,
    pub mu2: Vec<f64>,
}

/// Deterministic completion of `ξ₀`: Gram–Schmidt on the two standard basis vectors with the
/// smallest `|component along ξ₀|`, ties going to the lower index.
pub fn make_frame(xi0: &[f64]) -> Result<ZetaFrame> {
    let d = xi0.len();
    if d < 3 {
        return Err(LabError::InvalidFrame(format!("dimension {d} < 3")));
    }
    let n0 = norm(xi0);
    if n0 == 0.0 || !n0.is_finite() {
        return Err(LabError::InvalidFrame("ξ₀ must be nonzero".into()));
    }
    let mut axes: Vec<usize> = (0..d).collect();
    axes.sort_by(|&a, &b| xi0[a].abs().total_cmp(&xi0[b].abs()).then(a.cmp(&b)));
    let e = |i: usize| {
        let mut v = vec![0.0; d];
        v[i] = 1.0;
        v
    };
    let unit0: Vec<f64> = xi0.iter().map(|x| x / n0).collect();
    let mut basis = vec![unit0];
    for &axis in &axes[..2] {
        let mut v = e(axis);
        // two passes of modified Gram–Schmidt
        for _ in 0..2 {
            for b in &basis {
                let p = dot(&v, b);
                v.iter_mut().zip(b).for_each(|(x, y)| *x -= p * y);
            }
        }
        let nv = norm(&v);
        v.iter_mut().for_each(|x| *x /= nv);
        basis.push(v);
    }
    let mu2 = basis.pop().expect("three vectors");
    let mu1 = basis.pop().expect("three vectors");
    ZetaFrame::new(xi0.to_vec(), mu1, mu2)
}

impl ZetaFrame {
    /// Checks orthonormality of `μ₁, μ₂` and orthogonality to `ξ₀`.
    ///
    /// `ξ₀ = 0` is accepted here; it is the frame used for the zero frequency.
    pub fn new(xi0: Vec<f64>, mu1: Vec<f64>, mu2: Vec<f64>) -> Result<ZetaFrame> {
        let d = xi0.len();
        if mu1.len() != d || mu2.len() != d {
            return Err(LabError::InvalidFrame("dimension mismatch".into()));
        }
        let scale = 1.0 + norm(&xi0);
        let checks = [
            (dot(&xi0, &mu1) / scale, 0.0),
            (dot(&xi0, &mu2) / scale, 0.0),
            (dot(&mu1, &mu1), 1.0),
            (dot(&mu2, &mu2), 1.0),
            (dot(&mu1, &mu2), 0.0),
        ];
        if checks.iter().any(|(v, t)| (v - t).abs() > FRAME_TOL) {
            return Err(LabError::InvalidFrame("μ₁, μ₂ not orthonormal and orthogonal to ξ₀".into()));
        }
        Ok(ZetaFrame { xi0, mu1, mu2 })
    }

    pub fn d(&self) -> usize {
        self.xi0.len()
    }

    pub fn xi0_norm(&self) -> f64 {
        norm(&self.xi0)
    }

    /// Largest admissible `τ`: `min(1, 1/(2|ξ₀|))`.
    pub fn tau_max(&self) -> f64 {
        let n = self.xi0_norm();
        if n == 0.0 {
            1.0
        } else {
            (0.5 / n).min(1.0)
        }
    }

    /// The frame with `μ₂ → −μ₂`.
    pub fn flipped(&self) -> ZetaFrame {
        ZetaFrame { xi0: self.xi0.clone(), mu1: self.mu1.clone(), mu2: self.mu2.iter().map(|x| -x).collect() }
    }

    /// `(μ₁(θ), μ₂(θ))`, the rotation of the pair by `θ` in its plane.
    pub fn rotated(&self, theta: f64) -> (Vec<f64>, Vec<f64>) {
        let (s, c) = theta.sin_cos();
        let m1 = self.mu1.iter().zip(&self.mu2).map(|(a, b)| a * c - b * s).collect();
        let m2 = self.mu1.iter().zip(&self.mu2).map(|(a, b)| a * s + b * c).collect();
        (m1, m2)
    }

    /// Component of `ξ` orthogonal to `ξ₀` squared, `|ξ^⊥|² = (μ₁·ξ)² + (μ₂·ξ)²` in `d = 3`.
    pub fn perp_norm_sqr(&self, xi: &[f64]) -> f64 {
        dot(&self.mu1, xi).powi(2) + dot(&self.mu2, xi).powi(2)
    }

    /// `μ₁ + iμ₂`.
    pub fn zeta0(&self) -> Zeta {
        Zeta::from_parts(&self.mu1, &self.mu2)
    }
}

/// A `ζ = μ₁ + iμ₂ ∈ 𝒱` whose real and imaginary parts are not aligned with any lattice
/// direction: Gram–Schmidt of `(sin(√2(i+1)))_i` and `(cos(√3(i+1) + 1/2))_i`.
pub fn generic_zeta(d: usize) -> Zeta {
    let a: Vec<f64> = (0..d).map(|i| (2f64.sqrt() * (i + 1) as f64).sin()).collect();
    let b: Vec<f64> = (0..d).map(|i| (3f64.sqrt() * (i + 1) as f64 + 0.5).cos()).collect();
    let na = norm(&a);
    let mu1: Vec<f64> = a.iter().map(|x| x / na).collect();
    let p = dot(&b, &mu1);
    let mut mu2: Vec<f64> = b.iter().zip(&mu1).map(|(x, y)| x - p * y).collect();
    let nb = norm(&mu2);
    mu2.iter_mut().for_each(|x| *x /= nb);
    Zeta::from_parts(&mu1, &mu2)
}

/// The rotated pair `ζ^k(τ,θ)`: `ζ¹ = μ₁(θ) + i s μ₂(θ) − iτξ₀/2`,
/// `ζ² = −μ₁(θ) − i s μ₂(θ) − iτξ₀/2`, with `s = √(1 − τ²|ξ₀|²/4)`.
pub fn zeta_rot(frame: &ZetaFrame, branch: Branch, tau: f64, theta: f64) -> Result<Zeta> {
    let max = frame.tau_max();
    if !(tau > 0.0 && tau <= max * (1.0 + 1e-12)) {
        return Err(LabError::TauOutOfRange { tau, max });
    }
    Ok(zeta_rot_unchecked(frame, branch, tau, theta))
}

pub(crate) fn zeta_rot_unchecked(frame: &ZetaFrame, branch: Branch, tau: f64, theta: f64) -> Zeta {
    let (m1, m2) = frame.rotated(theta);
    let s = (1.0 - tau * tau * frame.xi0_norm().powi(2) / 4.0).max(0.0).sqrt();
    let sign = match branch {
        Branch::First => 1.0,
        Branch::Second => -1.0,
    };
    Zeta(
        (0..frame.d())
            .map(|j| Complex64::new(sign * m1[j], sign * s * m2[j] - tau * frame.xi0[j] / 2.0))
            .collect(),
    )
}

/// `P_ζ(hξ) = |hξ|² − 2iζ·(hξ)`.
pub fn p_symbol(zeta: &Zeta, h: f64, xi: &[f64]) -> Complex64 {
    let r2: f64 = xi.iter().map(|x| x * x).sum();
    let zx = zeta.dot_real(xi);
    Complex64::new(h * h * r2, 0.0) - Complex64::new(0.0, 2.0 * h) * zx
}

/// Weight `(h + |P_ζ(hξ)|)^λ`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct XLambdaWeight {
    pub h: f64,
    pub zeta: Zeta,
    pub lambda: f64,
}

impl XLambdaWeight {
    pub fn new(h: f64, zeta: Zeta, lambda: f64) -> Self {
        XLambdaWeight { h, zeta, lambda }
    }

    pub fn value(&self, xi: &[f64]) -> f64 {
        if self.lambda == 0.0 {
            return 1.0;
        }
        (self.h + p_symbol(&self.zeta, self.h, xi).norm()).powf(self.lambda)
    }

    /// `(h + |P|)` at every lattice point, in flat order.
    pub fn base_table(&self, grid: &crate::spectral::Grid) -> Vec<f64> {
        let mut out = vec![0.0; grid.len()];
        grid.for_each_frequency(|i, xi| out[i] = self.h + p_symbol(&self.zeta, self.h, xi).norm());
        out
    }
}

/// `(L^{-d} Σ |û|² (h + |P|)^{2λ})^{1/2}`.
pub fn xlambda_norm(u: &GridFunction, w: &XLambdaWeight) -> f64 {
    let s = u.to_spectral();
    let q = u.grid().length().powi(-(u.grid().d() as i32));
    let mut acc = 0.0;
    u.grid().for_each_frequency(|i, xi| acc += w.value(xi).powi(2) * s.values()[i].norm_sqr());
    (q * acc).sqrt()
}

/// Same norm with a precomputed `(h + |P|)` table.
pub fn xlambda_norm_with_table(u: &GridFunction, table: &[f64], lambda: f64) -> f64 {
    let s = u.to_spectral();
    let q = u.grid().length().powi(-(u.grid().d() as i32));
    let acc: f64 = if lambda == 0.0 {
        s.values().iter().map(|v| v.norm_sqr()).sum()
    } else {
        s.values().iter().zip(table).map(|(v, t)| v.norm_sqr() * t.powf(2.0 * lambda)).sum()
    };
    (q * acc).sqrt()
}

/// Operator and coefficient hypotheses.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProblemSpec {
    pub m: u32,
    pub d: usize,
    pub s: f64,
    pub p: f64,
    pub theta_h: f64,
    pub eps: f64,
}

impl Default for ProblemSpec {
    fn default() -> Self {
        ProblemSpec { m: 2, d: 3, s: 1.7, p: 12.0, theta_h: 0.5, eps: 0.2 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HypothesisCheck {
    pub name: String,
    pub value: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdmissibilityReport {
    pub checks: Vec<HypothesisCheck>,
    /// Exponent `t` with `1/t = 1 − m/d` (`m/d < 1/2`) or `1/t = 1/2` (`m/d > 1/2`);
    /// `None` at `m/d = 1/2`, where only `1/t > 1/2` is required.
    pub t: Option<f64>,
    pub t_prime: Option<f64>,
    /// Stored slack.
    pub eps: f64,
    /// Slack implied by `s = m/2 + 1 − (3/2)ε`.
    pub eps_from_s: f64,
    pub pass: bool,
}

pub fn check_hypotheses(ps: &ProblemSpec) -> AdmissibilityReport {
    let m = ps.m as f64;
    let d = ps.d as f64;
    let mk = |name: &str, value: f64, pass: bool| HypothesisCheck { name: name.into(), value, pass };
    let integr = 1.0 / ps.p + (ps.s - m) / d;
    let checks = vec![
        mk("m >= 2", m, ps.m >= 2),
        mk("d >= 3", d, ps.d >= 3),
        mk("p >= 2", ps.p, ps.p >= 2.0),
        mk("s < m/2 + 1", ps.s, ps.s < m / 2.0 + 1.0),
        mk("1/p + (s-m)/d < 0", integr, integr < 0.0),
        mk("0 < eps < 1/3", ps.eps, ps.eps > 0.0 && ps.eps < 1.0 / 3.0),
        mk("0 < theta_h < 1", ps.theta_h, ps.theta_h > 0.0 && ps.theta_h < 1.0),
    ];
    let ratio = m / d;
    let t = if ratio < 0.5 {
        Some(1.0 / (1.0 - ratio))
    } else if ratio > 0.5 {
        Some(2.0)
    } else {
        None
    };
    let t_prime = t.map(|t| t / (t - 1.0));
    let pass = checks.iter().all(|c| c.pass);
    AdmissibilityReport { checks, t, t_prime, eps: ps.eps, eps_from_s: (m / 2.0 + 1.0 - ps.s) * 2.0 / 3.0, pass }
}
