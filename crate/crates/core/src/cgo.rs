//! Fixed-point construction of the CGO remainder `ψ` in `L_ζ ψ = −L_ζ a`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::averaging::{select_theta_offset, CoefficientSpectra, FrameTable};
use crate::error::{LabError, Result};
use crate::fit::{power_fit, LineFit};
use crate::multiplier::{
    shifted_derivative, zeta_shift, CoefficientKind, ConjugatedInverse, Cutoff, DivergenceFormCoefficient,
};
use crate::spectral::{pad_spectrum, truncate_spectrum, Grid, GridFunction, MultiIndex, Repr};
use crate::symbol::{xlambda_norm_with_table, zeta_rot, Branch, Zeta, ZetaFrame};

/// First-order and zeroth-order coefficients `(Q, q)` of one operator.
#[derive(Clone, Debug)]
pub struct Coefficients {
    pub vector: DivergenceFormCoefficient,
    pub scalar: DivergenceFormCoefficient,
}

impl Coefficients {
    pub fn zero(grid: &Grid) -> Self {
        Coefficients {
            vector: DivergenceFormCoefficient::zero(grid, CoefficientKind::Vector),
            scalar: DivergenceFormCoefficient::zero(grid, CoefficientKind::Scalar),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.vector.is_zero() && self.scalar.is_zero()
    }

    pub fn spectra(&self) -> Result<CoefficientSpectra> {
        let v = self.vector.synthesize()?;
        let s = self.scalar.synthesize()?;
        Ok(CoefficientSpectra::new(&v.fields, &s.fields[0]))
    }
}

/// `L_ζ = P(hD)^m + h^{2m} Q·(ζ/(ih) + D) + h^{2m} q` (or its transpose) with the
/// coefficient fields held on the 3N/2 grid.
pub struct ConjugatedOperator {
    grid: Grid,
    m: u32,
    h: f64,
    shift: Vec<Complex64>,
    transpose: bool,
    vector: Option<Vec<GridFunction>>,
    scalar: Option<GridFunction>,
}

impl ConjugatedOperator {
    pub fn new(coeffs: &Coefficients, m: u32, h: f64, zeta: &Zeta, transpose: bool) -> Result<Self> {
        let grid = coeffs.scalar.grid.clone();
        let padded = |f: &GridFunction| pad_spectrum(f).into_physical();
        let vector = if coeffs.vector.is_zero() {
            None
        } else {
            Some(coeffs.vector.synthesize()?.fields.iter().map(padded).collect())
        };
        let scalar = if coeffs.scalar.is_zero() {
            None
        } else {
            Some(padded(&coeffs.scalar.synthesize()?.fields[0]))
        };
        Ok(ConjugatedOperator { grid, m, h, shift: zeta_shift(zeta, h), transpose, vector, scalar })
    }

    pub fn is_zero(&self) -> bool {
        self.vector.is_none() && self.scalar.is_none()
    }

    /// Coefficient part `Q·(ζ/(ih) + D)u + q u`, or `−(D + ζ/(ih))·(Q u) + q u` when transposed.
    pub fn coefficient_action(&self, u: &GridFunction) -> GridFunction {
        let d = self.grid.d();
        if self.is_zero() {
            return GridFunction::zeros(&self.grid, Repr::Spectral);
        }
        let up = pad_spectrum(u).into_physical();
        let mut acc = GridFunction::zeros(self.grid.padded(), Repr::Physical);
        if let Some(q) = &self.scalar {
            for ((a, x), y) in acc.values_mut().iter_mut().zip(q.values()).zip(up.values()) {
                *a += x * y;
            }
        }
        let mut out = truncate_spectrum(&self.grid, &acc);
        if let Some(qv) = &self.vector {
            if self.transpose {
                for (j, qj) in qv.iter().enumerate() {
                    let prod = qj.mul_pointwise(&up).expect("same padded grid");
                    let t = truncate_spectrum(&self.grid, &prod);
                    let dt = shifted_derivative(&t, &self.shift, &MultiIndex::unit(d, j));
                    out = out.sub(&dt).expect("same grid");
                }
            } else {
                let mut sum = GridFunction::zeros(self.grid.padded(), Repr::Physical);
                for (j, qj) in qv.iter().enumerate() {
                    let du = shifted_derivative(u, &self.shift, &MultiIndex::unit(d, j));
                    let dup = pad_spectrum(&du).into_physical();
                    for ((a, x), y) in sum.values_mut().iter_mut().zip(qj.values()).zip(dup.values()) {
                        *a += x * y;
                    }
                }
                out = out.add(&truncate_spectrum(&self.grid, &sum)).expect("same grid");
            }
        }
        out
    }

    /// `L_ζ u` (spectral).
    pub fn apply(&self, inv: &ConjugatedInverse, u: &GridFunction) -> GridFunction {
        let mut pu = u.to_spectral();
        for _ in 0..self.m {
            pu = inv.apply_p(&pu);
        }
        let h2m = self.h.powi(2 * self.m as i32);
        pu.axpy(Complex64::new(h2m, 0.0), &self.coefficient_action(u)).expect("same grid")
    }
}

/// `f = −[P(hD)^m a + h^{2m}·(coefficient action on a)]`.
pub fn rhs_from_amplitude(
    a: &GridFunction,
    coeffs: &Coefficients,
    m: u32,
    h: f64,
    zeta: &Zeta,
    transpose: bool,
    cutoff: &Cutoff,
) -> Result<GridFunction> {
    let inv = ConjugatedInverse::new(h, zeta, cutoff)?;
    let op = ConjugatedOperator::new(coeffs, m, h, zeta, transpose)?;
    Ok(op.apply(&inv, a).scale(Complex64::new(-1.0, 0.0)))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions { tol: 1e-10, max_iter: 200 }
    }
}

/// Relative interior residual below which a solution is accepted.
pub const RESIDUAL_ACCEPT: f64 = 1e-6;

/// One conjugated solve.
#[derive(Clone, Debug)]
pub struct CGOSolution {
    pub h: f64,
    pub zeta: Zeta,
    pub transpose: bool,
    pub amplitude: Option<GridFunction>,
    pub psi: GridFunction,
    pub iterations: usize,
    /// Last measured ratio of successive iterate differences.
    pub contraction_ratio: f64,
    /// `‖1_Ω (L_ζ ψ − f)‖_{X^{−m/2}}`.
    pub residual: f64,
    /// `‖1_Ω f‖_{X^{−m/2}}`.
    pub rhs_norm: f64,
    /// `‖ψ‖_{X^{m/2}}`.
    pub psi_norm: f64,
    pub clamped: usize,
}

impl CGOSolution {
    pub fn relative_residual(&self) -> f64 {
        if self.rhs_norm == 0.0 {
            self.residual
        } else {
            self.residual / self.rhs_norm
        }
    }

    pub fn accepted(&self) -> bool {
        self.relative_residual() <= RESIDUAL_ACCEPT
    }

    /// `a + ψ` (physical), or `ψ` when no amplitude is attached.
    pub fn total(&self) -> GridFunction {
        match &self.amplitude {
            Some(a) => a.add(&self.psi.to_physical()).expect("same grid").into_physical(),
            None => self.psi.to_physical(),
        }
    }
}

fn ball_mask(u: &GridFunction) -> GridFunction {
    let r = u.grid().radius();
    let mut p = u.to_physical();
    let grid = p.grid().clone();
    let vals = p.values_mut();
    grid.for_each_point(|i, x| {
        if x.iter().map(|v| v * v).sum::<f64>() > r * r {
            vals[i] = Complex64::default();
        }
    });
    p
}

/// Fixed-point solver state shared between solves with the same `(h, ζ)`.
pub struct Solver {
    pub m: u32,
    pub h: f64,
    pub zeta: Zeta,
    pub transpose: bool,
    inv: ConjugatedInverse,
    op: ConjugatedOperator,
    table: Vec<f64>,
}

impl Solver {
    pub fn new(coeffs: &Coefficients, m: u32, h: f64, zeta: &Zeta, transpose: bool, cutoff: &Cutoff) -> Result<Self> {
        let inv = ConjugatedInverse::new(h, zeta, cutoff)?;
        let op = ConjugatedOperator::new(coeffs, m, h, zeta, transpose)?;
        let table = inv.weight_table();
        Ok(Solver { m, h, zeta: zeta.clone(), transpose, inv, op, table })
    }

    pub fn inverse(&self) -> &ConjugatedInverse {
        &self.inv
    }

    pub fn operator(&self) -> &ConjugatedOperator {
        &self.op
    }

    /// `X^λ` norm for this `(h, ζ)`.
    pub fn norm(&self, u: &GridFunction, lambda: f64) -> f64 {
        xlambda_norm_with_table(u, &self.table, lambda)
    }

    /// `I_φ^m u` (physical).
    pub fn iphi_power(&self, u: &GridFunction) -> GridFunction {
        let mut v = u.to_physical();
        for _ in 0..self.m {
            v = self.inv.apply_iphi(&v);
        }
        v
    }

    pub fn rhs(&self, a: &GridFunction) -> GridFunction {
        self.op.apply(&self.inv, a).scale(Complex64::new(-1.0, 0.0))
    }

    /// Iterates `ψ ← I_φ^m f − h^{2m} I_φ^m(Tψ)` from `start` (zero by default).
    pub fn solve_from(&self, f: &GridFunction, start: Option<&GridFunction>, opts: &SolverOptions) -> Result<CGOSolution> {
        let half = self.m as f64 / 2.0;
        let base = self.iphi_power(f);
        let h2m = self.h.powi(2 * self.m as i32);
        let mut psi = match start {
            Some(s) => s.to_physical(),
            None => GridFunction::zeros(self.inv.grid(), Repr::Physical),
        };
        let mut prev_diff = f64::INFINITY;
        let mut ratio = 0.0;
        let mut growing = 0;
        let mut iterations = 0;
        loop {
            iterations += 1;
            let next = if self.op.is_zero() {
                base.clone()
            } else {
                let t = self.op.coefficient_action(&psi);
                base.axpy(Complex64::new(-h2m, 0.0), &self.iphi_power(&t)).expect("same grid")
            };
            let diff = self.norm(&next.sub(&psi).expect("same grid"), half);
            let size = self.norm(&next, half);
            if prev_diff.is_finite() && prev_diff > 0.0 {
                ratio = diff / prev_diff;
                if ratio >= 1.0 {
                    growing += 1;
                    if growing >= 3 {
                        return Err(LabError::NonContraction { h: self.h, ratio });
                    }
                } else {
                    growing = 0;
                }
            }
            psi = next;
            if diff <= opts.tol * size || diff == 0.0 {
                break;
            }
            if iterations >= opts.max_iter {
                return Err(LabError::MaxIterExceeded { h: self.h, iterations });
            }
            prev_diff = diff;
        }
        let residual_field = self.op.apply(&self.inv, &psi).sub(f).expect("same grid");
        let residual = self.norm(&ball_mask(&residual_field), -half);
        let rhs_norm = self.norm(&ball_mask(f), -half);
        let psi_norm = self.norm(&psi, half);
        Ok(CGOSolution {
            h: self.h,
            zeta: self.zeta.clone(),
            transpose: self.transpose,
            amplitude: None,
            psi,
            iterations,
            contraction_ratio: ratio,
            residual,
            rhs_norm,
            psi_norm,
            clamped: self.inv.report().clamped,
        })
    }

    pub fn solve(&self, f: &GridFunction, opts: &SolverOptions) -> Result<CGOSolution> {
        self.solve_from(f, None, opts)
    }

    /// Builds `f = −L_ζ a`, solves, and attaches `a`.
    pub fn solve_amplitude(&self, a: &GridFunction, opts: &SolverOptions) -> Result<CGOSolution> {
        let f = self.rhs(a);
        let mut sol = self.solve(&f, opts)?;
        sol.amplitude = Some(a.to_physical());
        Ok(sol)
    }
}

/// One-shot solve of `L_ζ ψ = f`.
#[allow(clippy::too_many_arguments)]
pub fn solve_psi(
    f: &GridFunction,
    coeffs: &Coefficients,
    m: u32,
    h: f64,
    zeta: &Zeta,
    transpose: bool,
    cutoff: &Cutoff,
    opts: &SolverOptions,
) -> Result<CGOSolution> {
    Solver::new(coeffs, m, h, zeta, transpose, cutoff)?.solve(f, opts)
}

/// Constant amplitude `a ≡ 1`.
pub fn unit_amplitude(grid: &Grid) -> GridFunction {
    GridFunction::from_fn(grid, |_| Complex64::new(1.0, 0.0))
}

/// First `h` of a decreasing sweep whose contraction ratio is at most `1/2`.
pub fn detect_h0(h: &[f64], ratios: &[f64]) -> Option<f64> {
    h.iter().zip(ratios).find(|(_, r)| **r <= 0.5).map(|(h, _)| *h)
}

/// How the rotation angle is chosen at each `h` of a decay study.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode")]
pub enum ThetaSelection {
    /// `τ = h` and a fixed `θ`.
    Fixed { theta: f64 },
    /// `(τ*, θ*)` minimizing the selection score on an `n_tau × n_theta` grid.
    Selected {
        n_tau: usize,
        n_theta: usize,
        #[serde(default)]
        theta_offset: f64,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayRow {
    pub h: f64,
    /// Semiclassical parameter of the solve (`τ*` when selected, else `h`).
    pub tau: f64,
    pub theta: f64,
    pub psi_norm: f64,
    pub ratio: f64,
    pub iterations: usize,
    pub residual: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DecayReport {
    pub rows: Vec<DecayRow>,
    /// Fit of `log₂ ‖ψ‖_{X^{m/2}}` against `log₂ τ`.
    pub fit: Option<LineFit>,
    /// All remainders vanish identically.
    pub exact: bool,
    pub h0: Option<f64>,
    pub failure: Option<String>,
}

impl DecayReport {
    pub fn exponent(&self) -> Option<f64> {
        self.fit.as_ref().map(|f| f.slope)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("h,theta,psi_norm,ratio,iterations,residual,tau\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{:e},{:e},{:e},{:e},{},{:e},{:e}\n",
                r.h, r.theta, r.psi_norm, r.ratio, r.iterations, r.residual, r.tau
            ));
        }
        out
    }
}

/// Solves `L_ζ ψ = −L_ζ a` with `ζ = ζ¹` along a dyadic sweep and fits the decay of `‖ψ‖_{X^{m/2}}`.
#[allow(clippy::too_many_arguments)]
pub fn decay_study(
    coeffs: &Coefficients,
    m: u32,
    frame: &ZetaFrame,
    hs: &[f64],
    a: &GridFunction,
    selection: ThetaSelection,
    cutoff: &Cutoff,
    opts: &SolverOptions,
) -> Result<DecayReport> {
    if hs.len() < 5 {
        return Err(LabError::Underdetermined { needed: 5, got: hs.len() });
    }
    let spectra = match selection {
        ThetaSelection::Selected { .. } => Some((FrameTable::new(a.grid(), frame), [coeffs.spectra()?])),
        ThetaSelection::Fixed { .. } => None,
    };
    let results = crate::par_map(hs, |&h| -> Result<DecayRow> {
        let (tau, theta) = match (selection, &spectra) {
            (ThetaSelection::Selected { n_tau, n_theta, theta_offset }, Some((table, sp))) => {
                let s = select_theta_offset(table, sp, h, n_tau, n_theta, theta_offset, m)?;
                (s.tau, s.theta)
            }
            (ThetaSelection::Fixed { theta }, _) => (h, theta),
            _ => unreachable!("spectra are built for selected runs"),
        };
        let zeta = zeta_rot(frame, Branch::First, tau, theta)?;
        let sol = Solver::new(coeffs, m, tau, &zeta, false, cutoff)?.solve_amplitude(a, opts)?;
        Ok(DecayRow {
            h,
            tau,
            theta,
            psi_norm: sol.psi_norm,
            ratio: sol.contraction_ratio,
            iterations: sol.iterations,
            residual: sol.residual,
        })
    });
    let mut rows = Vec::new();
    let mut failure = None;
    for r in results {
        match r {
            Ok(row) => rows.push(row),
            Err(e) => {
                failure = Some(e.to_string());
                break;
            }
        }
    }
    let exact = !rows.is_empty() && rows.iter().all(|r| r.psi_norm == 0.0);
    let fit = if exact || rows.len() < 2 {
        None
    } else {
        let t: Vec<f64> = rows.iter().map(|r| r.tau).collect();
        let v: Vec<f64> = rows.iter().map(|r| r.psi_norm).collect();
        Some(power_fit(&t, &v))
    };
    let h: Vec<f64> = rows.iter().map(|r| r.h).collect();
    let ratios: Vec<f64> = rows.iter().map(|r| r.ratio).collect();
    Ok(DecayReport { h0: detect_h0(&h, &ratios), rows, fit, exact, failure })
}
