//! Periodic torus grid, transforms, multipliers and norms.

mod field;
mod grid;
pub mod io;
mod ops;

pub use field::{GridFunction, Repr};
pub use grid::{make_grid, Grid, GridSpec};
pub use ops::{
    apply_multiplier, derivative, holder_data, inner, mollify_split, multiply_dealiased, pairing,
    sobolev_norm, HolderData, MollifiedSplit, MultiIndex,
};
pub(crate) use ops::{pad_spectrum, truncate_spectrum};

#[cfg(test)]
mod tests;
