//! Bilinear forms, form differences of CGO pairs, and coefficient recovery.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::averaging::{rank_nodes, FrameTable};
use crate::cgo::{CGOSolution, Coefficients, SolverOptions, Solver, ThetaSelection};
use crate::error::{LabError, Result};
use crate::fit::{richardson, Extrapolation};
use crate::multiplier::{radial_profile, shifted_derivative, zeta_shift, Cutoff};
use crate::spectral::{apply_multiplier, derivative, pad_spectrum, pairing, Grid, GridFunction, MultiIndex, Repr};
use crate::symbol::{make_frame, zeta_rot, Branch, Zeta, ZetaFrame};

fn c(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FormVariant {
    /// `∫(−Δ)^{m/2}u (−Δ)^{m/2}v`, or `∫∇(−Δ)^{(m−1)/2}u·∇(−Δ)^{(m−1)/2}v` for odd `m`.
    Navier,
    /// `Σ_{|α|=m} m!/α! ∫∂^α u ∂^α v`.
    Coercive,
}

/// `B₀(u, v)` by spectral differentiation and grid quadrature.
pub fn b0_form(u: &GridFunction, v: &GridFunction, variant: FormVariant, m: u32) -> Result<Complex64> {
    u.check_same_grid(v)?;
    let d = u.grid().d();
    let r2 = |xi: &[f64]| xi.iter().map(|x| x * x).sum::<f64>();
    match variant {
        FormVariant::Navier if m.is_multiple_of(2) => {
            let k = (m / 2) as i32;
            let a = apply_multiplier(u, |xi| c(r2(xi).powi(k)))?;
            let b = apply_multiplier(v, |xi| c(r2(xi).powi(k)))?;
            pairing(&a, &b)
        }
        FormVariant::Navier => {
            let k = ((m - 1) / 2) as i32;
            let mut acc = Complex64::default();
            for j in 0..d {
                let grad = |xi: &[f64]| Complex64::new(0.0, xi[j]) * r2(xi).powi(k);
                acc += pairing(&apply_multiplier(u, grad)?, &apply_multiplier(v, grad)?)?;
            }
            Ok(acc)
        }
        FormVariant::Coercive => {
            let mut acc = Complex64::default();
            for alpha in MultiIndex::all_of_order(d, m) {
                let w = (1..=m).map(f64::from).product::<f64>() / alpha.factorial();
                let del = |xi: &[f64]| {
                    let iv: Vec<Complex64> = xi.iter().map(|x| Complex64::new(0.0, *x)).collect();
                    alpha.power(&iv)
                };
                acc += w * pairing(&apply_multiplier(u, del)?, &apply_multiplier(v, del)?)?;
            }
            Ok(acc)
        }
    }
}

/// `⟨(−Δ)^m u, v⟩`.
pub fn polyharmonic_pairing(u: &GridFunction, v: &GridFunction, m: u32) -> Result<Complex64> {
    let lu = apply_multiplier(u, |xi| c(xi.iter().map(|x| x * x).sum::<f64>().powi(m as i32)))?;
    pairing(&lu, v)
}

/// `B(u, v) = B₀(u, v) + ⟨Q·Du, v⟩ + ⟨q u, v⟩` for plain (unconjugated) functions.
pub fn bilinear_form(u: &GridFunction, v: &GridFunction, coeffs: &Coefficients, variant: FormVariant, m: u32) -> Result<Complex64> {
    let b0 = b0_form(u, v, variant, m)?;
    let d = u.grid().d();
    let qv = coeffs.vector.synthesize()?;
    let qs = coeffs.scalar.synthesize()?;
    let vp = pad_phys(v);
    let mut acc = padded_sum(&[&pad_phys(&qs.fields[0]), &pad_phys(u), &vp]);
    for (j, qj) in qv.fields.iter().enumerate() {
        let du = derivative(u, &MultiIndex::unit(d, j))?;
        acc += padded_sum(&[&pad_phys(qj), &pad_phys(&du), &vp]);
    }
    Ok(b0 + acc * padded_weight(u.grid()))
}

fn pad_phys(u: &GridFunction) -> GridFunction {
    pad_spectrum(u).into_physical()
}

fn padded_weight(grid: &Grid) -> f64 {
    grid.padded().spec().spacing().powi(grid.d() as i32)
}

/// `Σ_x Π_k f_k(x)` over the padded grid (no quadrature weight).
fn padded_sum(fields: &[&GridFunction]) -> Complex64 {
    let n = fields[0].values().len();
    (0..n).map(|i| fields.iter().map(|f| f.values()[i]).product::<Complex64>()).sum()
}

fn modulation(grid: &Grid, xi0: &[f64]) -> GridFunction {
    GridFunction::from_fn(grid.padded(), |x| {
        let ph: f64 = x.iter().zip(xi0).map(|(a, b)| a * b).sum();
        Complex64::from_polar(1.0, -ph)
    })
}

fn times(a: &GridFunction, b: &GridFunction) -> GridFunction {
    a.mul_pointwise(b).expect("same padded grid")
}

/// `∫ f e^{−ix·ξ₀} dx` by padded-grid quadrature; the lattice coefficient when `ξ₀` is on the lattice.
pub fn transform_at(f: &GridFunction, xi0: &[f64]) -> Complex64 {
    padded_sum(&[&pad_phys(f), &modulation(f.grid(), xi0)]) * padded_weight(f.grid())
}

/// A conjugated CGO factor `u = e^{x·ζ/h}(a + ψ)`.
#[derive(Clone, Debug)]
pub struct CgoFactor {
    pub amplitude: GridFunction,
    pub psi: GridFunction,
    pub zeta: Zeta,
    pub h: f64,
}

impl CgoFactor {
    pub fn from_solution(sol: &CGOSolution) -> Self {
        let grid = sol.psi.grid();
        CgoFactor {
            amplitude: sol.amplitude.clone().unwrap_or_else(|| GridFunction::zeros(grid, Repr::Physical)),
            psi: sol.psi.clone(),
            zeta: sol.zeta.clone(),
            h: sol.h,
        }
    }

    /// The factor with `ψ` replaced by zero.
    pub fn without_remainder(&self) -> Self {
        CgoFactor { psi: GridFunction::zeros(self.psi.grid(), Repr::Physical), ..self.clone() }
    }

    pub fn total(&self) -> GridFunction {
        self.amplitude.add(&self.psi).expect("same grid")
    }
}

/// `ξ₀` from `ζ¹ + ζ² = −ihξ₀`.
pub fn common_xi0(u1: &CgoFactor, u2: &CgoFactor) -> Result<Vec<f64>> {
    if (u1.h - u2.h).abs() > 1e-14 * u1.h.abs().max(u2.h.abs()) {
        return Err(LabError::FrameMismatch(format!("h = {} vs {}", u1.h, u2.h)));
    }
    if u1.zeta.0.len() != u2.zeta.0.len() {
        return Err(LabError::FrameMismatch("dimension".into()));
    }
    let mut xi0 = Vec::with_capacity(u1.zeta.0.len());
    for (a, b) in u1.zeta.0.iter().zip(&u2.zeta.0) {
        let s = a + b;
        if s.re.abs() > 1e-10 {
            return Err(LabError::FrameMismatch(format!("Re(ζ¹ + ζ²) = {:e}", s.re)));
        }
        xi0.push(-s.im / u1.h);
    }
    Ok(xi0)
}

/// Padded physical fields of `(Q¹ − Q², q¹ − q²)`.
struct Difference {
    vector: Vec<GridFunction>,
    scalar: GridFunction,
}

impl Difference {
    fn new(c1: &Coefficients, c2: &Coefficients) -> Result<Self> {
        let v = c1.vector.synthesize()?.sub(&c2.vector.synthesize()?)?;
        let s = c1.scalar.synthesize()?.sub(&c2.scalar.synthesize()?)?;
        Ok(Difference { vector: v.fields.iter().map(pad_phys).collect(), scalar: pad_phys(&s.fields[0]) })
    }
}

/// `(B₁ − B₂)(u₁, u₂) = ⟨(Q¹−Q²)·(ζ¹/(ih) + D)w₁, e^{−ix·ξ₀}w₂⟩ + ⟨(q¹−q²)w₁, e^{−ix·ξ₀}w₂⟩`
/// with `w_k = a^k + ψ^k`.
pub fn form_difference(u1: &CgoFactor, u2: &CgoFactor, c1: &Coefficients, c2: &Coefficients) -> Result<Complex64> {
    let xi0 = common_xi0(u1, u2)?;
    let grid = u1.psi.grid().clone();
    let diff = Difference::new(c1, c2)?;
    let w1 = u1.total();
    let shift = zeta_shift(&u1.zeta, u1.h);
    let mut f = times(&diff.scalar, &pad_phys(&w1));
    for (j, qj) in diff.vector.iter().enumerate() {
        let dw = shifted_derivative(&w1, &shift, &MultiIndex::unit(grid.d(), j));
        f = f.add(&times(qj, &pad_phys(&dw)))?;
    }
    let g = times(&pad_phys(&u2.total()), &modulation(&grid, &xi0));
    Ok(padded_sum(&[&f, &g]) * padded_weight(&grid))
}

/// Direct spectral value of the form difference for `a¹ = a² = 1`, `ψ = 0`:
/// `(q̂¹−q̂²)(ξ₀) + (ζ¹/(ih))·(Q̂¹−Q̂²)(ξ₀)`, read off lattice coefficients.
pub fn pairing_oracle(c1: &Coefficients, c2: &Coefficients, zeta1: &Zeta, h: f64, xi0: &[f64]) -> Result<Complex64> {
    let grid = c1.scalar.grid.clone();
    let k: Vec<i64> = xi0.iter().map(|x| (x * grid.length() / (2.0 * std::f64::consts::PI)).round() as i64).collect();
    let v = c1.vector.synthesize()?.sub(&c2.vector.synthesize()?)?;
    let s = c1.scalar.synthesize()?.sub(&c2.scalar.synthesize()?)?;
    let look = |f: &GridFunction| f.coefficient(&k).ok_or_else(|| LabError::InvalidArgument(format!("ξ₀ = {xi0:?} is off the lattice")));
    let mut acc = look(&s.fields[0])?;
    for (z, qj) in zeta_shift(zeta1, h).iter().zip(&v.fields) {
        acc += z * look(qj)?;
    }
    Ok(acc)
}

/// The nine pairings whose sum is `ih(B₁ − B₂)(u₁, u₂)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NineTerms(pub [Complex64; 9]);

impl NineTerms {
    pub const LABELS: [&'static str; 9] = ["I", "II", "III", "IV", "V", "VI", "VII", "VIII", "IX"];

    pub fn sum(&self) -> Complex64 {
        self.0.iter().sum()
    }

    /// Exponents `h^p` the terms are bounded by: `I ~ 1`, `II, III ~ h^ε`, `IV, VI, VIII ~ h^{1+ε}`,
    /// `V, VII ~ h`, `IX ~ h`.
    pub fn bound_exponents(eps: f64) -> [f64; 9] {
        [0.0, eps, eps, 1.0 + eps, 1.0, 1.0 + eps, 1.0, 1.0 + eps, 1.0]
    }
}

pub fn nine_terms(u1: &CgoFactor, u2: &CgoFactor, c1: &Coefficients, c2: &Coefficients) -> Result<NineTerms> {
    let xi0 = common_xi0(u1, u2)?;
    let grid = u1.psi.grid().clone();
    let d = grid.d();
    let diff = Difference::new(c1, c2)?;
    let e = modulation(&grid, &xi0);
    let a1 = pad_phys(&u1.amplitude);
    let p1 = pad_phys(&u1.psi);
    let a2 = times(&pad_phys(&u2.amplitude), &e);
    let p2 = times(&pad_phys(&u2.psi), &e);
    let w = padded_weight(&grid);
    let ih = Complex64::new(0.0, u1.h);

    let mut zq = GridFunction::zeros(grid.padded(), Repr::Physical);
    let mut qda = GridFunction::zeros(grid.padded(), Repr::Physical);
    let mut qdp = GridFunction::zeros(grid.padded(), Repr::Physical);
    for (j, qj) in diff.vector.iter().enumerate() {
        let unit = MultiIndex::unit(d, j);
        zq = zq.axpy(u1.zeta.0[j], qj)?;
        qda = qda.add(&times(qj, &pad_phys(&derivative(&u1.amplitude, &unit)?)))?;
        qdp = qdp.add(&times(qj, &pad_phys(&derivative(&u1.psi, &unit)?)))?;
    }
    let q = &diff.scalar;
    let w1 = a1.add(&p1)?;
    let w2 = a2.add(&p2)?;
    Ok(NineTerms([
        padded_sum(&[&zq, &a1, &a2]) * w,
        padded_sum(&[&zq, &p1, &a2]) * w,
        padded_sum(&[&zq, &a1, &p2]) * w,
        padded_sum(&[&zq, &p1, &p2]) * w,
        ih * padded_sum(&[&qda, &a2]) * w,
        ih * padded_sum(&[&qda, &p2]) * w,
        ih * padded_sum(&[&qdp, &a2]) * w,
        ih * padded_sum(&[&qdp, &p2]) * w,
        ih * padded_sum(&[q, &w1, &w2]) * w,
    ]))
}

/// `φ_a(x)·(μ₁ − iμ₂)·x/2` with `φ_a` the radial profile of `cutoff`, so that
/// `(μ₁ + iμ₂)·D a = −i` wherever `φ_a ≡ 1`.
pub fn linear_amplitude(frame: &ZetaFrame, cutoff: &Cutoff) -> GridFunction {
    GridFunction::from_fn(cutoff.phi.grid(), |x| {
        let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        let l: Complex64 = (0..x.len()).map(|j| Complex64::new(frame.mu1[j], -frame.mu2[j]) * x[j] / 2.0).sum();
        l * radial_profile(r, cutoff.r1, cutoff.r2)
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecoveryOptions {
    pub m: u32,
    pub selection: ThetaSelection,
    pub solver: SolverOptions,
    /// Also evaluate the nine-term decomposition per sample.
    pub nine_terms: bool,
}

impl Default for RecoveryOptions {
    fn default() -> Self {
        RecoveryOptions {
            m: 2,
            selection: ThetaSelection::Selected { n_tau: 16, n_theta: 16, theta_offset: 0.0 },
            solver: SolverOptions::default(),
            nine_terms: false,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RecoverySample {
    pub h: f64,
    pub tau: f64,
    pub theta: f64,
    pub form_difference: Complex64,
    /// Estimator value fed to the extrapolation.
    pub value: Complex64,
    pub terms: Option<NineTerms>,
    pub psi1_norm: f64,
    pub psi2_norm: f64,
    pub relative_residuals: [f64; 2],
    pub iterations: [usize; 2],
    /// Selection nodes passed over before this sample's `(τ, θ)`.
    pub skipped_nodes: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RecoveryRun {
    pub xi0: Vec<f64>,
    pub mu1: Vec<f64>,
    pub mu2: Vec<f64>,
    pub samples: Vec<RecoverySample>,
    pub c_phase: Complex64,
    pub estimate: Complex64,
    pub error_bar: f64,
    pub power: f64,
    pub low_confidence: bool,
    pub oracle: Option<Complex64>,
}

impl RecoveryRun {
    /// `|estimate − oracle|`, when an oracle is attached.
    pub fn error(&self) -> Option<f64> {
        self.oracle.map(|o| (self.estimate - o).norm())
    }
}

/// Relative error bar above which an extrapolation is flagged.
pub const LOW_CONFIDENCE: f64 = 0.05;

/// Relative power below which a mode is left out of the angle selection.
pub const SPECTRUM_FLOOR: f64 = 1e-14;

/// One sample of [`cgo_pairs`].
#[derive(Clone, Debug)]
pub struct CgoPair {
    pub h: f64,
    pub tau: f64,
    pub theta: f64,
    pub first: CGOSolution,
    pub second: CGOSolution,
    /// Better-scored `(τ, θ)` nodes passed over because the iteration diverged there.
    pub skipped: usize,
}

/// Solves `L₁u₁ = 0` (forward, `ζ¹`) and `L₂ᵗu₂ = 0` (transpose, `ζ²`) along the sweep.
///
/// With a selected angle the nodes are tried in increasing score; a node where either
/// iteration fails to contract is passed over for the next one.
#[allow(clippy::too_many_arguments)]
pub fn cgo_pairs(
    c1: &Coefficients,
    c2: &Coefficients,
    frame: &ZetaFrame,
    hs: &[f64],
    a1: &GridFunction,
    a2: &GridFunction,
    opts: &RecoveryOptions,
    cutoff: &Cutoff,
) -> Result<Vec<CgoPair>> {
    let spectra = match opts.selection {
        ThetaSelection::Selected { .. } => Some(FrameTable::pruned(a1.grid(), frame, &[c1.spectra()?, c2.spectra()?], SPECTRUM_FLOOR)),
        ThetaSelection::Fixed { .. } => None,
    };
    let solve = |tau: f64, theta: f64| -> Result<(CGOSolution, CGOSolution)> {
        let z1 = zeta_rot(frame, Branch::First, tau, theta)?;
        let z2 = zeta_rot(frame, Branch::Second, tau, theta)?;
        let s1 = Solver::new(c1, opts.m, tau, &z1, false, cutoff)?.solve_amplitude(a1, &opts.solver)?;
        let s2 = Solver::new(c2, opts.m, tau, &z2, true, cutoff)?.solve_amplitude(a2, &opts.solver)?;
        Ok((s1, s2))
    };
    let results = crate::par_map(hs, |&h| -> Result<CgoPair> {
        match (opts.selection, &spectra) {
            (ThetaSelection::Selected { n_tau, n_theta, theta_offset }, Some((table, sp))) => {
                let mut last = None;
                for (skipped, s) in rank_nodes(table, sp, h, n_tau, n_theta, theta_offset, opts.m)?.into_iter().enumerate() {
                    match solve(s.tau, s.theta) {
                        Ok((first, second)) => return Ok(CgoPair { h, tau: s.tau, theta: s.theta, first, second, skipped }),
                        Err(e @ (LabError::NonContraction { .. } | LabError::MaxIterExceeded { .. })) => last = Some(e),
                        Err(e) => return Err(e),
                    }
                }
                Err(last.expect("at least one node"))
            }
            (ThetaSelection::Fixed { theta }, _) => {
                let (first, second) = solve(h, theta)?;
                Ok(CgoPair { h, tau: h, theta, first, second, skipped: 0 })
            }
            _ => unreachable!("spectra are built for selected runs"),
        }
    });
    results.into_iter().collect()
}

#[allow(clippy::too_many_arguments)]
fn run_recovery(
    c1: &Coefficients,
    c2: &Coefficients,
    frame: &ZetaFrame,
    hs: &[f64],
    a1: &GridFunction,
    a2: &GridFunction,
    opts: &RecoveryOptions,
    cutoff: &Cutoff,
    c_phase: Complex64,
    value: impl Fn(f64, f64, Complex64) -> Complex64,
) -> Result<RecoveryRun> {
    if hs.len() < 4 {
        return Err(LabError::Underdetermined { needed: 4, got: hs.len() });
    }
    let pairs = cgo_pairs(c1, c2, frame, hs, a1, a2, opts, cutoff)?;
    let mut samples = Vec::with_capacity(pairs.len());
    for p in &pairs {
        let u1 = CgoFactor::from_solution(&p.first);
        let u2 = CgoFactor::from_solution(&p.second);
        let fd = form_difference(&u1, &u2, c1, c2)?;
        let terms = if opts.nine_terms { Some(nine_terms(&u1, &u2, c1, c2)?) } else { None };
        samples.push(RecoverySample {
            h: p.h,
            tau: p.tau,
            theta: p.theta,
            form_difference: fd,
            value: value(p.tau, p.theta, fd),
            terms,
            psi1_norm: p.first.psi_norm,
            psi2_norm: p.second.psi_norm,
            relative_residuals: [p.first.relative_residual(), p.second.relative_residual()],
            iterations: [p.first.iterations, p.second.iterations],
            skipped_nodes: p.skipped,
        });
    }
    let taus: Vec<f64> = samples.iter().map(|s| s.tau).collect();
    let values: Vec<Complex64> = samples.iter().map(|s| s.value).collect();
    let Extrapolation { estimate, error_bar, power, .. } =
        richardson(&taus, &values).ok_or(LabError::Underdetermined { needed: 4, got: samples.len() })?;
    Ok(RecoveryRun {
        xi0: frame.xi0.clone(),
        mu1: frame.mu1.clone(),
        mu2: frame.mu2.clone(),
        samples,
        c_phase,
        estimate,
        error_bar,
        power,
        low_confidence: error_bar > LOW_CONFIDENCE * estimate.norm() && error_bar > 1e-13,
        oracle: None,
    })
}

/// Extrapolated limit of `c_phase·e^{−iθ_j}·iτ_j·(B₁−B₂)(u₁,u₂)`, an estimate of
/// `⟨(μ₁+iμ₂)·(Q¹−Q²), a¹a²e^{−ix·ξ₀}⟩`.
#[allow(clippy::too_many_arguments)]
pub fn recover_q_component(
    c1: &Coefficients,
    c2: &Coefficients,
    frame: &ZetaFrame,
    hs: &[f64],
    a1: &GridFunction,
    a2: &GridFunction,
    c_phase: Complex64,
    opts: &RecoveryOptions,
    cutoff: &Cutoff,
) -> Result<RecoveryRun> {
    let mut run = run_recovery(c1, c2, frame, hs, a1, a2, opts, cutoff, c_phase, |tau, theta, fd| {
        c_phase * Complex64::from_polar(1.0, -theta) * Complex64::new(0.0, tau) * fd
    })?;
    run.oracle = Some(tangential_oracle(c1, c2, frame, a1, a2)?);
    Ok(run)
}

/// `⟨(μ₁+iμ₂)·(Q¹−Q²), a¹a²e^{−ix·ξ₀}⟩` by padded quadrature.
pub fn tangential_oracle(c1: &Coefficients, c2: &Coefficients, frame: &ZetaFrame, a1: &GridFunction, a2: &GridFunction) -> Result<Complex64> {
    let grid = a1.grid().clone();
    let diff = Difference::new(c1, c2)?;
    let mut t = GridFunction::zeros(grid.padded(), Repr::Physical);
    for (j, qj) in diff.vector.iter().enumerate() {
        t = t.axpy(Complex64::new(frame.mu1[j], frame.mu2[j]), qj)?;
    }
    Ok(padded_sum(&[&t, &pad_phys(a1), &pad_phys(a2), &modulation(&grid, &frame.xi0)]) * padded_weight(&grid))
}

fn max_abs(fields: &[GridFunction]) -> f64 {
    fields.iter().map(|f| f.to_physical().sup_norm()).fold(0.0, f64::max)
}

/// Extrapolated limit of `(B₁−B₂)(u₁,u₂)` with `a¹ = a² = 1`, an estimate of `(q̂¹ − q̂²)(ξ₀)`.
pub fn recover_q(c1: &Coefficients, c2: &Coefficients, frame: &ZetaFrame, hs: &[f64], opts: &RecoveryOptions, cutoff: &Cutoff) -> Result<RecoveryRun> {
    let dq = c1.vector.synthesize()?.sub(&c2.vector.synthesize()?)?;
    let scale = max_abs(&c1.vector.synthesize()?.fields).max(1.0);
    if max_abs(&dq.fields) > 1e-14 * scale {
        return Err(LabError::InvalidArgument("recover_q needs Q¹ = Q²".into()));
    }
    let one = crate::cgo::unit_amplitude(a_grid(c1));
    let mut run = run_recovery(c1, c2, frame, hs, &one, &one, opts, cutoff, c(1.0), |_, _, fd| fd)?;
    let s = c1.scalar.synthesize()?.sub(&c2.scalar.synthesize()?)?;
    run.oracle = Some(transform_at(&s.fields[0], &frame.xi0));
    Ok(run)
}

fn a_grid(c: &Coefficients) -> &Grid {
    &c.scalar.grid
}

/// The unimodular `c ∈ {1, −1, i, −i}` closest to mapping `raw` onto `oracle`.
pub fn calibrate_phase(raw: Complex64, oracle: Complex64) -> Complex64 {
    let cands = [c(1.0), c(-1.0), Complex64::new(0.0, 1.0), Complex64::new(0.0, -1.0)];
    let mut best = cands[0];
    for cand in cands {
        if (cand * raw - oracle).norm() < (best * raw - oracle).norm() {
            best = cand;
        }
    }
    best
}

/// Runs [`recover_q_component`] with `c_phase = 1` on a known pair and fixes `c_phase`.
pub fn calibrate(c1: &Coefficients, c2: &Coefficients, frame: &ZetaFrame, hs: &[f64], opts: &RecoveryOptions, cutoff: &Cutoff) -> Result<Complex64> {
    let one = crate::cgo::unit_amplitude(a_grid(c1));
    let run = recover_q_component(c1, c2, frame, hs, &one, &one, c(1.0), opts, cutoff)?;
    let oracle = run.oracle.unwrap_or_default();
    if oracle.norm() == 0.0 {
        return Err(LabError::InvalidArgument("calibration pair has a vanishing tangential component".into()));
    }
    Ok(calibrate_phase(run.estimate, oracle))
}

/// `max_{j<k} sup |∂_k Q_j − ∂_j Q_k|` by spectral differentiation.
pub fn curl_test(q: &[GridFunction]) -> Result<f64> {
    let d = q.len();
    let mut worst: f64 = 0.0;
    for j in 0..d {
        for k in j + 1..d {
            let a = derivative(&q[j], &MultiIndex::unit(d, k))?;
            let b = derivative(&q[k], &MultiIndex::unit(d, j))?;
            worst = worst.max(a.sub(&b)?.to_physical().sup_norm());
        }
    }
    Ok(worst)
}

/// Relative curl tolerance of [`potential_from_gradient`].
pub const CURL_TOL: f64 = 1e-10;

/// `g` with `ĝ(ξ) = ξ·Q̂(ξ)/|ξ|²` and `ĝ(0) = 0`, so that `Dg = Q` when `curl Q = 0`.
pub fn potential_from_gradient(q: &[GridFunction]) -> Result<GridFunction> {
    let grid = q[0].grid().clone();
    let d = grid.d();
    if q.len() != d {
        return Err(LabError::InvalidArgument(format!("expected {d} components, got {}", q.len())));
    }
    let scale = max_abs(q);
    if scale == 0.0 {
        return Ok(GridFunction::zeros(&grid, Repr::Spectral));
    }
    let mut dscale: f64 = 0.0;
    for qj in q {
        for k in 0..d {
            dscale = dscale.max(derivative(qj, &MultiIndex::unit(d, k))?.to_physical().sup_norm());
        }
    }
    let curl = curl_test(q)?;
    if curl > CURL_TOL * dscale {
        return Err(LabError::CurlTest(curl / dscale));
    }
    let vol = grid.length().powi(d as i32);
    let zero = vec![0i64; d];
    for (component, qj) in q.iter().enumerate() {
        let mean = qj.coefficient(&zero).unwrap_or_default().norm() / vol;
        if mean > CURL_TOL * scale {
            return Err(LabError::NonZeroMean { component, mean });
        }
    }
    let spec: Vec<GridFunction> = q.iter().map(|f| f.to_spectral()).collect();
    let mut out = GridFunction::zeros(&grid, Repr::Spectral);
    {
        let vals = out.values_mut();
        grid.for_each_frequency(|i, xi| {
            let r2: f64 = xi.iter().map(|x| x * x).sum();
            if r2 > 0.0 {
                vals[i] = xi.iter().zip(&spec).map(|(x, s)| s.values()[i] * *x).sum::<Complex64>() / r2;
            }
        });
    }
    Ok(out)
}

/// `g` with `Dg = Q¹ − Q²`, shifted so that it vanishes outside the coefficient ball.
pub fn compact_potential(c1: &Coefficients, c2: &Coefficients) -> Result<GridFunction> {
    let dq = c1.vector.synthesize()?.sub(&c2.vector.synthesize()?)?;
    let g = potential_from_gradient(&dq.fields)?.into_physical();
    // the torus corner lies outside the ball, where g is constant
    let corner = g.values()[0];
    GridFunction::from_values(g.grid(), Repr::Physical, g.values().iter().map(|v| v - corner).collect())
}

/// Estimate of `ĝ(ξ₀)` for `Q¹ − Q² = Dg`, from [`recover_q_component`] with `a¹ = 1` and the
/// linear amplitude `a²`; the tangential pairing equals `iĝ(ξ₀)`.
pub fn recover_potential(
    c1: &Coefficients,
    c2: &Coefficients,
    frame: &ZetaFrame,
    hs: &[f64],
    c_phase: Complex64,
    opts: &RecoveryOptions,
    cutoff: &Cutoff,
) -> Result<RecoveryRun> {
    let g = compact_potential(c1, c2)?;
    let one = crate::cgo::unit_amplitude(a_grid(c1));
    let a2 = linear_amplitude(frame, cutoff);
    let mut run = recover_q_component(c1, c2, frame, hs, &one, &a2, c_phase, opts, cutoff)?;
    let minus_i = Complex64::new(0.0, -1.0);
    run.estimate *= minus_i;
    for s in &mut run.samples {
        s.value *= minus_i;
    }
    run.oracle = Some(transform_at(&g, &frame.xi0));
    Ok(run)
}

/// Frame used at a reconstruction frequency; `ξ₀ = 0` gets `μ₁ = e₁`, `μ₂ = e₂`.
pub fn frame_for(xi0: &[f64]) -> Result<ZetaFrame> {
    if xi0.iter().all(|x| *x == 0.0) {
        let d = xi0.len();
        let e = |j: usize| (0..d).map(|i| if i == j { 1.0 } else { 0.0 }).collect::<Vec<_>>();
        ZetaFrame::new(vec![0.0; d], e(0), e(1))
    } else {
        make_frame(xi0)
    }
}

/// Dyadic list of `count` values starting at the largest `2^{−k} ≤ min(h_max, 1/(4|ξ₀|))`.
pub fn dyadic_sweep(xi0: &[f64], h_max: f64, count: usize) -> Vec<f64> {
    let n = xi0.iter().map(|x| x * x).sum::<f64>().sqrt();
    let cap = if n > 0.0 { h_max.min(0.25 / n) } else { h_max };
    let k0 = (-cap.log2()).ceil() as i32;
    (0..count as i32).map(|k| 2f64.powi(-(k0 + k))).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReconstructOptions {
    /// Frequencies `k ∈ [−half_width, half_width]^d`.
    pub half_width: i64,
    pub h_max: f64,
    pub h_count: usize,
    pub recovery: RecoveryOptions,
}

impl Default for ReconstructOptions {
    fn default() -> Self {
        ReconstructOptions { half_width: 3, h_max: 0.125, h_count: 4, recovery: RecoveryOptions::default() }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FrequencyResult {
    pub k: Vec<i64>,
    pub xi0: Vec<f64>,
    pub estimate: Option<Complex64>,
    pub error_bar: Option<f64>,
    pub low_confidence: bool,
    pub oracle: Complex64,
    pub error: Option<String>,
}

#[derive(Clone, Debug)]
pub struct Reconstruction {
    pub field: GridFunction,
    pub oracle_field: GridFunction,
    pub frequencies: Vec<FrequencyResult>,
    /// `‖estimate − oracle‖/‖oracle‖` over the frequency box (absolute when the oracle vanishes).
    pub relative_error: f64,
}

impl Reconstruction {
    pub fn errors_csv(&self) -> String {
        let mut out = String::from("k1,k2,k3,estimate_re,estimate_im,oracle_re,oracle_im,abs_error,error_bar,low_confidence,failure\n");
        for f in &self.frequencies {
            let ks: Vec<String> = f.k.iter().map(|k| k.to_string()).collect();
            let est = f.estimate.unwrap_or_default();
            let err = f.estimate.map(|e| (e - f.oracle).norm()).unwrap_or(f64::NAN);
            out.push_str(&format!(
                "{},{:e},{:e},{:e},{:e},{:e},{:e},{},{}\n",
                ks.join(","),
                est.re,
                est.im,
                f.oracle.re,
                f.oracle.im,
                err,
                f.error_bar.unwrap_or(f64::NAN),
                f.low_confidence,
                f.error.clone().unwrap_or_default().replace(',', ";")
            ));
        }
        out
    }
}

/// Box of lattice frequencies `[−w, w]^d` in lexicographic order.
pub fn frequency_box(d: usize, w: i64) -> Vec<Vec<i64>> {
    let mut out = vec![vec![]];
    for _ in 0..d {
        out = out.into_iter().flat_map(|p| (-w..=w).map(move |k| [p.clone(), vec![k]].concat())).collect();
    }
    out
}

/// Recovers `(q̂¹ − q̂²)(ξ₀)` on a frequency box and assembles the band-limited field.
pub fn reconstruct_field(c1: &Coefficients, c2: &Coefficients, opts: &ReconstructOptions, cutoff: &Cutoff) -> Result<Reconstruction> {
    let grid = a_grid(c1).clone();
    let d = grid.d();
    let unit = 2.0 * std::f64::consts::PI / grid.length();
    let s = c1.scalar.synthesize()?.sub(&c2.scalar.synthesize()?)?;
    let ks = frequency_box(d, opts.half_width);
    let frequencies = crate::par_map(&ks, |k| {
        let xi0: Vec<f64> = k.iter().map(|v| *v as f64 * unit).collect();
        let oracle = s.fields[0].coefficient(k).unwrap_or_default();
        let run = frame_for(&xi0).and_then(|f| recover_q(c1, c2, &f, &dyadic_sweep(&xi0, opts.h_max, opts.h_count), &opts.recovery, cutoff));
        match run {
            Ok(r) => FrequencyResult {
                k: k.clone(),
                xi0,
                estimate: Some(r.estimate),
                error_bar: Some(r.error_bar),
                low_confidence: r.low_confidence,
                oracle,
                error: None,
            },
            Err(e) => FrequencyResult { k: k.clone(), xi0, estimate: None, error_bar: None, low_confidence: true, oracle, error: Some(e.to_string()) },
        }
    });
    let mut field = GridFunction::zeros(&grid, Repr::Spectral);
    let mut oracle_field = GridFunction::zeros(&grid, Repr::Spectral);
    let (mut num, mut den) = (0.0, 0.0);
    for f in &frequencies {
        let flat = grid.flat_of_frequency(&f.k).ok_or_else(|| LabError::InvalidArgument(format!("k = {:?} off the lattice", f.k)))?;
        oracle_field.values_mut()[flat] = f.oracle;
        den += f.oracle.norm_sqr();
        if let Some(e) = f.estimate {
            field.values_mut()[flat] = e;
            num += (e - f.oracle).norm_sqr();
        } else {
            num += f.oracle.norm_sqr();
        }
    }
    let relative_error = if den > 0.0 { (num / den).sqrt() } else { num.sqrt() };
    Ok(Reconstruction { field: field.into_physical(), oracle_field: oracle_field.into_physical(), frequencies, relative_error })
}

#[cfg(test)]
mod tests;
