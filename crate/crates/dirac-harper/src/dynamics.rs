//! Wavepacket evolution on a finite window by exact diagonalization.

use faer::Mat;
use num_complex::Complex64;
use serde::Serialize;

use crate::linalg::CMat;
use crate::model::{self, Boundary, ModelParams};
use crate::{Error, Result};

/// Sites at each end watched by the boundary guard.
pub const GUARD_SITES: usize = 10;
/// Largest mass allowed on the guarded sites.
pub const GUARD_MASS: f64 = 1e-8;

/// Amplitudes `ψ(n, c)` on a window, stored site-major.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WavepacketState {
    pub window: (i64, i64),
    pub amplitudes: Vec<Complex64>,
    pub time: f64,
}

impl WavepacketState {
    pub fn sites(&self) -> usize {
        self.amplitudes.len() / 4
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `Σ_c |ψ(n, c)|²` per site.
    pub fn site_mass(&self) -> Vec<f64> {
        self.amplitudes.chunks(4).map(|c| c.iter().map(|z| z.norm_sqr()).sum()).collect()
    }

    /// `Σ_n |ψ(n, c)|²` per internal component.
    pub fn component_mass(&self) -> [f64; 4] {
        let mut out = [0.0; 4];
        for (i, z) in self.amplitudes.iter().enumerate() {
            out[i % 4] += z.norm_sqr();
        }
        out
    }

    /// Mass on the outermost `GUARD_SITES` sites at either end.
    pub fn edge_mass(&self) -> f64 {
        let m = self.site_mass();
        let k = GUARD_SITES.min(m.len());
        m[..k].iter().sum::<f64>() + m[m.len() - k..].iter().sum::<f64>()
    }

    /// `Σ_n n² |ψ(n)|²` with `n` the absolute site index.
    pub fn second_moment(&self) -> f64 {
        self.site_mass().iter().enumerate().map(|(i, m)| ((self.window.0 + i as i64) as f64).powi(2) * m).sum()
    }

    /// `√(Σ_n (1 + n²) |ψ(n)|²)`.
    pub fn weighted_moment(&self) -> f64 {
        self.site_mass().iter().enumerate().map(|(i, m)| (1.0 + ((self.window.0 + i as i64) as f64).powi(2)) * m).sum::<f64>().sqrt()
    }

    /// `1 / Σ_n |ψ(n)|⁴` for the site masses.
    pub fn participation_ratio(&self) -> f64 {
        let m = self.site_mass();
        let total: f64 = m.iter().sum();
        total * total / m.iter().map(|x| x * x).sum::<f64>()
    }

    /// Mass on sites with `|n − centre| ≤ radius`.
    pub fn mass_within(&self, centre: i64, radius: i64) -> f64 {
        self.site_mass()
            .iter()
            .enumerate()
            .filter(|(i, _)| (self.window.0 + *i as i64 - centre).abs() <= radius)
            .map(|(_, m)| m)
            .sum()
    }
}

/// `e^{−(n−c)²/(2σ²)}` on one internal component (1-based), normalized.
pub fn gaussian_packet(sigma: f64, center: i64, component: usize, window: (i64, i64)) -> Result<WavepacketState> {
    if !(1..=4).contains(&component) {
        return Err(Error::param("component", "must be in 1..=4"));
    }
    if sigma.is_nan() || sigma <= 0.0 {
        return Err(Error::param("sigma", "must be positive"));
    }
    let reach = (6.0 * sigma).ceil() as i64;
    let (need_lo, need_hi) = (center - reach, center + reach);
    if window.0 > need_lo || window.1 < need_hi {
        return Err(Error::WindowTooSmall { lo: window.0, hi: window.1, need_lo, need_hi });
    }
    let sites = (window.1 - window.0 + 1) as usize;
    let mut amplitudes = vec![Complex64::new(0.0, 0.0); 4 * sites];
    for i in 0..sites {
        let n = (window.0 + i as i64 - center) as f64;
        amplitudes[4 * i + component - 1] = Complex64::new((-n * n / (2.0 * sigma * sigma)).exp(), 0.0);
    }
    let norm = amplitudes.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    for z in &mut amplitudes {
        *z /= norm;
    }
    Ok(WavepacketState { window, amplitudes, time: 0.0 })
}

/// Spectral decomposition of a minus truncation, reused across states and times.
#[derive(Clone, Debug)]
pub struct Evolver {
    pub params: ModelParams,
    pub window: (i64, i64),
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: CMat,
    hamiltonian: CMat,
}

impl Evolver {
    pub fn new(params: &ModelParams, window: (i64, i64)) -> Result<Self> {
        let h = model::build_finite(params, window, Boundary::Minus)?;
        let (eigenvalues, eigenvectors) = h.eigen()?;
        Ok(Evolver { params: *params, window, eigenvalues, eigenvectors, hamiltonian: h.entries })
    }

    fn check(&self, state: &WavepacketState) -> Result<()> {
        if state.window != self.window {
            return Err(Error::param("window", "state and evolver windows differ"));
        }
        Ok(())
    }

    /// `⟨ψ, Hψ⟩`.
    pub fn energy(&self, state: &WavepacketState) -> Result<f64> {
        self.check(state)?;
        let psi = column(&state.amplitudes);
        let hpsi = &self.hamiltonian * &psi;
        Ok((0..psi.nrows()).map(|i| psi[(i, 0)].conj() * hpsi[(i, 0)]).sum::<Complex64>().re)
    }

    /// `ψ(t) = Σⱼ e^{−iλⱼt} ⟨vⱼ, ψ₀⟩ vⱼ` at each time, aborting at the first
    /// time whose edge mass exceeds [`GUARD_MASS`].
    pub fn evolve(&self, state: &WavepacketState, times: &[f64]) -> Result<Vec<WavepacketState>> {
        self.evolve_unguarded(state, times)?
            .into_iter()
            .map(|s| {
                let mass = s.edge_mass();
                if mass >= GUARD_MASS {
                    Err(Error::BoundaryContamination { time: s.time, mass })
                } else {
                    Ok(s)
                }
            })
            .collect()
    }

    /// [`Evolver::evolve`] without the boundary guard.
    pub fn evolve_unguarded(&self, state: &WavepacketState, times: &[f64]) -> Result<Vec<WavepacketState>> {
        self.check(state)?;
        let v = &self.eigenvectors;
        let coeff = v.adjoint() * column(&state.amplitudes);
        let dim = coeff.nrows();
        // all requested times in one product: columns e^{−iλt} c
        let phased = Mat::from_fn(dim, times.len(), |j, k| coeff[(j, 0)] * Complex64::from_polar(1.0, -self.eigenvalues[j] * (times[k] - state.time)));
        let out = v * &phased;
        Ok(times
            .iter()
            .enumerate()
            .map(|(k, &t)| WavepacketState { window: self.window, amplitudes: (0..dim).map(|i| out[(i, k)]).collect(), time: t })
            .collect())
    }
}

fn column(v: &[Complex64]) -> CMat {
    Mat::from_fn(v.len(), 1, |i, _| v[i])
}

/// One-shot evolution.
pub fn evolve(params: &ModelParams, state: &WavepacketState, times: &[f64]) -> Result<Vec<WavepacketState>> {
    Evolver::new(params, state.window)?.evolve(state, times)
}

/// `per_decade` geometrically spaced times in `[t_min, t_max]`, both ends included.
pub fn geometric_times(t_min: f64, t_max: f64, per_decade: usize) -> Result<Vec<f64>> {
    if !(t_min > 0.0 && t_max >= t_min) || per_decade == 0 {
        return Err(Error::param("times", "need 0 < t_min <= t_max and a positive density"));
    }
    let decades = (t_max / t_min).log10();
    let n = (decades * per_decade as f64).ceil() as usize;
    let mut out: Vec<f64> = (0..=n).map(|i| t_min * 10f64.powf(i as f64 / per_decade as f64)).filter(|&t| t < t_max).collect();
    out.push(t_max);
    Ok(out)
}

/// Default time grid: 64 points per decade.
pub const DEFAULT_PER_DECADE: usize = 64;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DynlocResult {
    pub times: Vec<f64>,
    /// `√(Σ (1+n²)|ψ_t(n)|²)` at each time
    pub moments: Vec<f64>,
    /// supremum over the sampled grid only
    pub grid_sup: f64,
}

/// The dynamical-localization functional sampled on `times`.
pub fn dynloc_moment(evolver: &Evolver, state: &WavepacketState, times: &[f64]) -> Result<DynlocResult> {
    let states = evolver.evolve(state, times)?;
    let moments: Vec<f64> = states.iter().map(|s| s.weighted_moment()).collect();
    let grid_sup = moments.iter().copied().fold(0.0, f64::max);
    Ok(DynlocResult { times: times.to_vec(), moments, grid_sup })
}

/// Component masses per state; each row sums to the squared norm.
pub fn layer_trace(states: &[WavepacketState]) -> Vec<(f64, [f64; 4])> {
    states.iter().map(|s| (s.time, s.component_mass())).collect()
}
