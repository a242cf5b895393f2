//! The cutoff `φ`, the conjugated operator `P(hD)`, `I_φ`, `J_φ` and coefficient actions.

mod coefficient;
mod cutoff;
mod inverse;

pub use coefficient::{
    apply_coefficient, apply_coefficient_transpose, shifted_derivative, smooth_multiply, zeta_shift,
    CoefficientKind, CoefficientPiece, DivergenceFormCoefficient, PieceDescription, Profile, ProfileKind,
    Synthesized, SUPPORT_TOL,
};
pub use cutoff::{build_cutoff, radial_profile, smooth_step, Cutoff, CutoffRadii, BRIDGE_STEEPNESS};
pub use inverse::{
    apply_iphi, apply_jphi, apply_p, weighted_operator_norm, ClampReport, ConjugatedInverse, CLAMP_FACTOR,
    CLAMP_LIMIT,
};

#[cfg(test)]
mod tests;
