//! wasm-bindgen exports for the static demo page in `www/`.
//!
//! Results are flat `f64` arrays so the page can draw them directly.

use dirac_harper::cocycle::{self, TransferCocycle};
use dirac_harper::{continuum, spectra, ModelParams};
use wasm_bindgen::prelude::*;

/// Largest denominator the page may request.
pub const MAX_Q: u64 = 40;

/// Butterfly points `[α₀, E₀, α₁, E₁, …]` over the Farey fractions with `q ≤ qmax`.
#[wasm_bindgen]
pub fn butterfly(w0: f64, w1: f64, theta: f64, qmax: u32, bloch_points: u32) -> Result<Vec<f64>, String> {
    if qmax as u64 > MAX_Q || qmax == 0 {
        return Err(format!("qmax must be in 1..={MAX_Q}"));
    }
    let p = ModelParams::new(w0, w1, 0.0, theta, 0.0, 0.0).map_err(|e| e.to_string())?;
    let sets = spectra::butterfly(&p, qmax as u64, bloch_points.max(1) as usize, &[theta]).map_err(|e| e.to_string())?;
    Ok(sets.iter().flat_map(|s| s.eigenvalues.iter().flat_map(move |&(e, _)| [s.alpha, e])).collect())
}

/// The eight Lyapunov exponents at energy `energy`, followed by their largest standard error.
#[wasm_bindgen]
pub fn lyapunov(w0: f64, w1: f64, alpha: f64, energy: f64, iterates: u32) -> Result<Vec<f64>, String> {
    if !(0.0..1.0).contains(&alpha) {
        return Err("alpha must be in [0, 1)".into());
    }
    let p = ModelParams::new(w0, w1, alpha, 0.0, 0.0, 0.0).map_err(|e| e.to_string())?;
    let s = cocycle::lyapunov(&TransferCocycle::new(p, energy), iterates.max(2) as usize, 4).map_err(|e| e.to_string())?;
    let mut out = s.exponents.to_vec();
    out.push(s.stderr);
    Ok(out)
}

/// `[Re tr M, Im tr M, |det M − 1|, 1 if zero energy is excluded at k_x = 0]`
/// for the chiral monodromy at coupling `w1`.
#[wasm_bindgen]
pub fn monodromy(w1: f64) -> Result<Vec<f64>, String> {
    let m = continuum::chiral_monodromy(w1, continuum::DEFAULT_STEPS).map_err(|e| e.to_string())?;
    let z = continuum::zero_energy_chiral(w1, &[continuum::DEFAULT_STEPS / 2, continuum::DEFAULT_STEPS]).map_err(|e| e.to_string())?;
    Ok(vec![m.trace.re, m.trace.im, m.det_defect, if z.excluded_at_kx_zero { 1.0 } else { 0.0 }])
}
