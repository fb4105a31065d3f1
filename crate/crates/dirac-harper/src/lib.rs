//! Numerics for the one-dimensional Dirac–Harper moiré model.
//!
//! A site carries four internal components (two sublattices in each of two
//! layers). Hopping between neighbouring sites is `t(θ)`, the on-site term is
//! `t₀ + V_w(n)` with an anti-chiral coupling `w₀` and a chiral coupling `w₁`
//! modulated at inverse moiré length `α = 1/L`.
//!
//! Module map:
//! - [`model`]: potentials, hopping matrices and finite/Floquet Hamiltonians
//! - [`cocycle`]: the 8×8 transfer cocycle and Lyapunov spectra
//! - [`spectra`]: butterflies, density of states, AMO reduction, subordinacy
//! - [`greens`]: Green's functions, minors and localization diagnostics
//! - [`dynamics`]: wavepacket evolution and transport moments
//! - [`continuum`]: the low-energy continuum model and its monodromy
//! - [`arith`]: continued fractions, Diophantine margins, the Cayley–Hamilton norm bound
//! - [`twod`]: the two-dimensional square-lattice variant
//! - [`io`]: CSV emitters shared by the command line front-end

pub mod arith;
pub mod cocycle;
pub mod continuum;
pub mod dynamics;
mod error;
pub mod greens;
pub mod io;
pub mod linalg;
pub mod model;
pub mod spectra;
pub mod twod;

pub use error::{Error, Result};
pub use model::{Boundary, ModelParams, Potential, SiteBlockMatrix, Variant};
pub use num_complex::Complex64;

/// The golden mean `(√5 − 1)/2`, the default strongly irrational frequency.
pub fn golden_mean() -> f64 {
    (5f64.sqrt() - 1.0) / 2.0
}

/// Map over a slice, in parallel when the `parallel` feature is on. Output
/// order always matches input order.
pub(crate) fn par_map<T: Sync, R: Send>(items: &[T], f: impl Fn(&T) -> R + Sync + Send) -> Vec<R> {
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
