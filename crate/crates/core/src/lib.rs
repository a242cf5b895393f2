//! Spectral laboratory for complex geometrical optics (CGO) solutions of
//! `(−Δ)^m + Q·D + q` on a periodic torus.

pub mod averaging;
pub mod cgo;
pub mod error;
pub mod estimates;
pub mod fit;
pub mod forms;
pub mod harness;
pub mod multiplier;
pub mod random;
pub mod spectral;
pub mod symbol;

pub use error::{LabError, Result};

/// Order-preserving map, parallel when the `parallel` feature is enabled.
pub fn par_map<T: Sync, R: Send>(items: &[T], f: impl Fn(&T) -> R + Sync + Send) -> Vec<R> {
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        items.par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.iter().map(f).collect()
    }
}
