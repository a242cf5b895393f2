use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::spectral::{derivative, multiply_dealiased, Grid, GridFunction, MultiIndex, Repr};
use crate::symbol::{XLambdaWeight, Zeta};

/// Support tolerance for coefficient pieces outside the domain ball.
pub const SUPPORT_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileKind {
    /// `A·exp(1 − 1/(1 − t²))` for `t = |x−c|/ρ < 1`.
    SmoothBump,
    /// `A·(1 − t²)^θ` for `t < 1`, Hölder-`θ` across the sphere `t = 1`.
    HolderBump,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Profile {
    #[serde(rename = "type")]
    pub kind: ProfileKind,
    pub center: Vec<f64>,
    pub radius: f64,
    pub amplitude: f64,
    #[serde(default = "default_theta")]
    pub theta: f64,
}

fn default_theta() -> f64 {
    1.0
}

impl Profile {
    pub fn eval(&self, x: &[f64]) -> f64 {
        let r2: f64 = x.iter().zip(&self.center).map(|(a, c)| (a - c).powi(2)).sum();
        let t2 = r2 / (self.radius * self.radius);
        if t2 >= 1.0 {
            return 0.0;
        }
        match self.kind {
            ProfileKind::SmoothBump => self.amplitude * (1.0 - 1.0 / (1.0 - t2)).exp(),
            ProfileKind::HolderBump => self.amplitude * (1.0 - t2).powf(self.theta),
        }
    }

    pub fn sample(&self, grid: &Grid) -> GridFunction {
        GridFunction::from_real_fn(grid, |x| self.eval(x))
    }
}

/// Entry of a coefficient description file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PieceDescription {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub component: Option<usize>,
    pub beta: Vec<u32>,
    pub profile: Profile,
}

/// One divergence-form piece `D^β f_β`.
#[derive(Clone, Debug)]
pub struct CoefficientPiece {
    pub component: usize,
    pub beta: MultiIndex,
    pub field: GridFunction,
    pub theta_h: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CoefficientKind {
    Scalar,
    Vector,
}

/// `q = Σ D^β q_β` (scalar) or `Q_j = Σ D^β Q_{jβ}` (vector).
#[derive(Clone, Debug)]
pub struct DivergenceFormCoefficient {
    pub kind: CoefficientKind,
    pub grid: Grid,
    pub pieces: Vec<CoefficientPiece>,
}

impl DivergenceFormCoefficient {
    pub fn zero(grid: &Grid, kind: CoefficientKind) -> Self {
        DivergenceFormCoefficient { kind, grid: grid.clone(), pieces: Vec::new() }
    }

    /// Checks piece supports, component indices and `|β|` against the order `m`.
    pub fn new(grid: &Grid, kind: CoefficientKind, pieces: Vec<CoefficientPiece>, m: u32) -> Result<Self> {
        let r = grid.radius();
        for (index, p) in pieces.iter().enumerate() {
            let err = |reason: String| LabError::Coefficient { index, reason };
            if p.field.grid() != grid {
                return Err(err("grid mismatch".into()));
            }
            if p.beta.dim() != grid.d() {
                return Err(err("β has the wrong dimension".into()));
            }
            let limit = match kind {
                CoefficientKind::Scalar => m,
                CoefficientKind::Vector => m - 1,
            };
            if p.beta.order() > limit {
                return Err(err(format!("|β| = {} exceeds {limit}", p.beta.order())));
            }
            if kind == CoefficientKind::Vector && p.component >= grid.d() {
                return Err(err(format!("component {} out of range", p.component)));
            }
            let phys = p.field.to_physical();
            let mut outside: f64 = 0.0;
            grid.for_each_point(|i, x| {
                if x.iter().map(|v| v * v).sum::<f64>() > r * r {
                    outside = outside.max(phys.values()[i].norm());
                }
            });
            if outside > SUPPORT_TOL {
                return Err(err(format!("|f| = {outside:e} outside the ball of radius {r}")));
            }
            if !phys.is_finite() {
                return Err(err("non-finite values".into()));
            }
        }
        Ok(DivergenceFormCoefficient { kind, grid: grid.clone(), pieces })
    }

    pub fn from_descriptions(grid: &Grid, kind: CoefficientKind, desc: &[PieceDescription], m: u32) -> Result<Self> {
        let pieces = desc
            .iter()
            .map(|p| CoefficientPiece {
                component: p.component.unwrap_or(0),
                beta: MultiIndex(p.beta.clone()),
                field: p.profile.sample(grid),
                theta_h: match p.profile.kind {
                    ProfileKind::SmoothBump => 1.0,
                    ProfileKind::HolderBump => p.profile.theta,
                },
            })
            .collect();
        Self::new(grid, kind, pieces, m)
    }

    /// Reads a JSON list of piece descriptions.
    pub fn load(path: &Path, grid: &Grid, kind: CoefficientKind, m: u32) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let desc: Vec<PieceDescription> = serde_json::from_str(&text)
            .map_err(|e| LabError::Config(format!("{}: line {}: {e}", path.display(), e.line())))?;
        Self::from_descriptions(grid, kind, &desc, m)
    }

    pub fn components(&self) -> usize {
        match self.kind {
            CoefficientKind::Scalar => 1,
            CoefficientKind::Vector => self.grid.d(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.pieces.is_empty()
    }

    /// `Σ_pieces D^β f_β` per component, in spectral representation.
    pub fn synthesize(&self) -> Result<Synthesized> {
        let mut fields = vec![GridFunction::zeros(&self.grid, Repr::Spectral); self.components()];
        for (index, p) in self.pieces.iter().enumerate() {
            let df = derivative(&p.field, &p.beta)?;
            if !df.is_finite() {
                return Err(LabError::Coefficient { index, reason: "non-finite derivative".into() });
            }
            let c = if self.kind == CoefficientKind::Scalar { 0 } else { p.component };
            fields[c] = fields[c].add(&df)?;
        }
        Ok(Synthesized { kind: self.kind, fields })
    }

    /// Linear combination `self + c·other` (piece lists concatenated).
    pub fn combine(&self, c: f64, other: &DivergenceFormCoefficient) -> Result<Self> {
        if self.kind != other.kind || self.grid != other.grid {
            return Err(LabError::InvalidArgument("incompatible coefficients".into()));
        }
        let mut pieces = self.pieces.clone();
        for p in &other.pieces {
            let mut q = p.clone();
            q.field = q.field.scale(Complex64::new(c, 0.0));
            pieces.push(q);
        }
        Ok(DivergenceFormCoefficient { kind: self.kind, grid: self.grid.clone(), pieces })
    }
}

/// Synthesized coefficient fields, one per component.
#[derive(Clone, Debug)]
pub struct Synthesized {
    pub kind: CoefficientKind,
    pub fields: Vec<GridFunction>,
}

impl Synthesized {
    pub fn grid(&self) -> &Grid {
        self.fields[0].grid()
    }

    pub fn sub(&self, other: &Synthesized) -> Result<Synthesized> {
        let fields = self.fields.iter().zip(&other.fields).map(|(a, b)| a.sub(b)).collect::<Result<_>>()?;
        Ok(Synthesized { kind: self.kind, fields })
    }

    pub fn is_zero(&self) -> bool {
        self.fields.iter().all(|f| f.values().iter().all(|v| v.norm() == 0.0))
    }
}

/// `ζ/(ih) = −iζ/h`.
pub fn zeta_shift(zeta: &Zeta, h: f64) -> Vec<Complex64> {
    zeta.0.iter().map(|z| Complex64::new(0.0, -1.0 / h) * z).collect()
}

/// `(D + s)^γ u` for a complex shift vector `s`.
pub fn shifted_derivative(u: &GridFunction, shift: &[Complex64], gamma: &MultiIndex) -> GridFunction {
    let mut s = u.to_spectral();
    if gamma.order() == 0 {
        return s;
    }
    let grid = u.grid().clone();
    let vals = s.values_mut();
    let mut buf = vec![Complex64::default(); grid.d()];
    grid.for_each_frequency(|i, xi| {
        for (b, (x, sh)) in buf.iter_mut().zip(xi.iter().zip(shift)) {
            *b = sh + x;
        }
        vals[i] *= gamma.power(&buf);
    });
    s
}

/// Coefficient action in the conjugated frame.
///
/// Scalar: `(Σ D^β f_β)·(D + ζ/(ih))^γ u`. Vector: `Σ_j Q_j·(D + ζ/(ih))^{γ+e_j} u`, so that
/// `γ = 0` gives `Q·(ζ/(ih) + D)u`. Products are dealiased.
pub fn apply_coefficient(
    c: &DivergenceFormCoefficient,
    u: &GridFunction,
    h: f64,
    zeta: &Zeta,
    gamma: &MultiIndex,
) -> Result<GridFunction> {
    if u.grid() != &c.grid {
        return Err(LabError::GridMismatch);
    }
    let syn = c.synthesize()?;
    let shift = zeta_shift(zeta, h);
    let d = c.grid.d();
    let mut out = GridFunction::zeros(&c.grid, Repr::Spectral);
    for (j, field) in syn.fields.iter().enumerate() {
        let g = match c.kind {
            CoefficientKind::Scalar => gamma.clone(),
            CoefficientKind::Vector => gamma.plus(&MultiIndex::unit(d, j)),
        };
        let w = shifted_derivative(u, &shift, &g);
        out = out.add(&multiply_dealiased(field, &w)?)?;
    }
    if !out.is_finite() {
        return Err(LabError::NonFinite("coefficient action".into()));
    }
    Ok(out)
}

/// Conjugated transpose action: `q v` for scalar coefficients and
/// `−(D + ζ/(ih))·(Q v)` for vector coefficients.
pub fn apply_coefficient_transpose(
    c: &DivergenceFormCoefficient,
    v: &GridFunction,
    h: f64,
    zeta: &Zeta,
) -> Result<GridFunction> {
    if v.grid() != &c.grid {
        return Err(LabError::GridMismatch);
    }
    let syn = c.synthesize()?;
    let shift = zeta_shift(zeta, h);
    let d = c.grid.d();
    let mut out = GridFunction::zeros(&c.grid, Repr::Spectral);
    for (j, field) in syn.fields.iter().enumerate() {
        let prod = multiply_dealiased(field, v)?;
        let term = match c.kind {
            CoefficientKind::Scalar => prod,
            CoefficientKind::Vector => {
                shifted_derivative(&prod, &shift, &MultiIndex::unit(d, j)).scale(Complex64::new(-1.0, 0.0))
            }
        };
        out = out.add(&term)?;
    }
    if !out.is_finite() {
        return Err(LabError::NonFinite("transpose coefficient action".into()));
    }
    Ok(out)
}

/// Dealiased product `v·u` together with `‖uv‖_{X^λ}/‖u‖_{X^λ}`.
pub fn smooth_multiply(v: &GridFunction, u: &GridFunction, w: &XLambdaWeight) -> Result<(GridFunction, f64)> {
    let prod = multiply_dealiased(v, u)?;
    let nu = crate::symbol::xlambda_norm(u, w);
    let ratio = if nu > 0.0 { crate::symbol::xlambda_norm(&prod, w) / nu } else { 0.0 };
    Ok((prod, ratio))
}
