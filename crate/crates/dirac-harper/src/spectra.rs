//! Spectral sweeps: butterflies, density of states, band widths, the AMO
//! reduction and the subordinacy statistic.

use std::f64::consts::PI;

use faer::Mat;
use nalgebra::Matrix4;
use num_complex::Complex64;
use serde::Serialize;

use crate::cocycle::TransferCocycle;
use crate::linalg::{self, CMat};
use crate::model::{self, Boundary, ModelParams};
use crate::{par_map, Error, Result};

/// Sorted eigenvalues of one rational frequency over a Bloch grid.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpectrumSet {
    pub p: u64,
    pub q: u64,
    pub alpha: f64,
    pub theta: f64,
    pub bloch_grid: Vec<f64>,
    /// `(energy, k)` pairs sorted by energy
    pub eigenvalues: Vec<(f64, f64)>,
    /// `bands[j][i]`: `j`-th eigenvalue at `bloch_grid[i]`
    pub bands: Vec<Vec<f64>>,
    pub meta: ModelParams,
}

impl SpectrumSet {
    /// Lebesgue measure of the union of the band intervals `[min_k λ_j, max_k λ_j]`.
    pub fn band_union_measure(&self) -> f64 {
        let intervals = self
            .bands
            .iter()
            .map(|b| {
                let lo = b.iter().copied().fold(f64::INFINITY, f64::min);
                let hi = b.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                (lo, hi)
            })
            .collect();
        union_length(intervals)
    }
}

/// Total length of a union of closed intervals.
pub fn union_length(mut intervals: Vec<(f64, f64)>) -> f64 {
    intervals.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let mut total = 0.0;
    let mut current: Option<(f64, f64)> = None;
    for (lo, hi) in intervals {
        match current {
            Some((a, b)) if lo <= b => current = Some((a, b.max(hi))),
            Some((a, b)) => {
                total += b - a;
                current = Some((lo, hi));
            }
            None => current = Some((lo, hi)),
        }
    }
    if let Some((a, b)) = current {
        total += b - a;
    }
    total
}

/// Reduced fractions `p/q` in `[0, 1)` with `q ≤ q_max`, ordered by `(q, p)`.
pub fn farey(q_max: u64) -> Vec<(u64, u64)> {
    let mut out = vec![(0, 1)];
    for q in 2..=q_max {
        for p in 1..q {
            if crate::arith::gcd(p, q) == 1 {
                out.push((p, q));
            }
        }
    }
    out
}

/// Uniform Bloch grid `2πj/m`, `j < m`.
pub fn bloch_grid(points: usize) -> Vec<f64> {
    (0..points).map(|j| 2.0 * PI * j as f64 / points as f64).collect()
}

/// Diagonalize the Floquet matrix of `p/q` over a Bloch grid.
pub fn floquet_spectrum(params: &ModelParams, p: u64, q: u64, grid: &[f64]) -> Result<SpectrumSet> {
    let dim = 4 * q as usize;
    let mut bands = vec![Vec::with_capacity(grid.len()); dim];
    let mut eigenvalues = Vec::with_capacity(dim * grid.len());
    for &k in grid {
        let ev = model::build_floquet_pq(params, p, q, k)?.eigenvalues()?;
        for (j, &e) in ev.iter().enumerate() {
            bands[j].push(e);
            eigenvalues.push((e, k));
        }
    }
    eigenvalues.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    Ok(SpectrumSet {
        p,
        q,
        alpha: p as f64 / q as f64,
        theta: params.theta,
        bloch_grid: grid.to_vec(),
        eigenvalues,
        bands,
        meta: ModelParams { alpha: p as f64 / q as f64, ..*params },
    })
}

/// Hofstadter butterfly over the Farey sequence of order `q_max`, one
/// collection per `θ`.
pub fn butterfly(template: &ModelParams, q_max: u64, bloch_points: usize, thetas: &[f64]) -> Result<Vec<SpectrumSet>> {
    if q_max < 2 {
        return Err(Error::param("qmax", "must be >= 2"));
    }
    if bloch_points == 0 {
        return Err(Error::param("bloch_points", "must be >= 1"));
    }
    let grid = bloch_grid(bloch_points);
    let jobs: Vec<(f64, u64, u64)> =
        thetas.iter().flat_map(|&th| farey(q_max).into_iter().map(move |(p, q)| (th, p, q))).collect();
    par_map(&jobs, |&(th, p, q)| floquet_spectrum(&template.with_theta(th), p, q, &grid)).into_iter().collect()
}

/// Histogram of eigenvalues with mass normalized to one.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DosEstimate {
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
    pub mass: Vec<f64>,
    pub total_states: u64,
    pub vartheta_samples: usize,
}

impl DosEstimate {
    pub fn from_values(values: &[f64], lo: f64, hi: f64, bins: usize, samples: usize) -> Self {
        let width = (hi - lo) / bins as f64;
        let edges = (0..=bins).map(|i| lo + i as f64 * width).collect();
        let mut counts = vec![0u64; bins];
        for &v in values {
            let i = (((v - lo) / width).floor() as i64).clamp(0, bins as i64 - 1) as usize;
            counts[i] += 1;
        }
        let total = values.len() as u64;
        let mass = counts.iter().map(|&c| c as f64 / total.max(1) as f64).collect();
        DosEstimate { edges, counts, mass, total_states: total, vartheta_samples: samples }
    }
}

/// A symmetric energy window containing every spectrum of the model.
pub fn spectral_range(params: &ModelParams) -> (f64, f64) {
    let r = 3.0 + params.w0 + params.w1;
    (-r, r)
}

/// Density of states of minus truncations of `n_sites`, averaged over
/// `vartheta_samples` equispaced phase offsets.
pub fn dos(params: &ModelParams, n_sites: usize, vartheta_samples: usize, bins: usize) -> Result<DosEstimate> {
    if n_sites == 0 || vartheta_samples == 0 || bins == 0 {
        return Err(Error::param("N", "window, samples and bins must be positive"));
    }
    let phases: Vec<f64> = (0..vartheta_samples).map(|j| params.vartheta + j as f64 / vartheta_samples as f64).collect();
    let spectra = par_map(&phases, |&v| {
        model::build_finite(&params.with_vartheta(v), (0, n_sites as i64 - 1), Boundary::Minus)?.eigenvalues()
    });
    let mut all = Vec::with_capacity(4 * n_sites * vartheta_samples);
    for s in spectra {
        all.extend(s?);
    }
    let (lo, hi) = spectral_range(params);
    Ok(DosEstimate::from_values(&all, lo, hi, bins, vartheta_samples))
}

/// Density of states of the `q`-periodic operator by integrating Floquet
/// bands over a uniform Bloch grid, averaged over the same phase offsets and
/// on the same bins as [`dos`].
pub fn floquet_dos(
    params: &ModelParams,
    p: u64,
    q: u64,
    bloch_points: usize,
    vartheta_samples: usize,
    bins: usize,
) -> Result<DosEstimate> {
    let grid = bloch_grid(bloch_points);
    let phases: Vec<f64> = (0..vartheta_samples).map(|j| params.vartheta + j as f64 / vartheta_samples as f64).collect();
    let sets = par_map(&phases, |&v| floquet_spectrum(&params.with_vartheta(v), p, q, &grid));
    let mut vals = Vec::new();
    for s in sets {
        vals.extend(s?.eigenvalues.iter().map(|e| e.0));
    }
    let (lo, hi) = spectral_range(params);
    Ok(DosEstimate::from_values(&vals, lo, hi, bins, vartheta_samples))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BandWidth {
    pub band: usize,
    pub min: f64,
    pub max: f64,
    pub width: f64,
    pub flat: bool,
}

/// Widths below this are reported as flat.
pub const FLAT_TOL: f64 = 1e-6;

/// Per-band extent of the Floquet bands of a rational frequency.
pub fn flat_band_check(params: &ModelParams, bloch_points: usize) -> Result<Vec<BandWidth>> {
    let (p, q) = crate::arith::detect_rational(params.alpha, crate::arith::RATIONAL_TOL, crate::arith::RATIONAL_MAX_Q)
        .ok_or(Error::NotRational { alpha: params.alpha, max_q: crate::arith::RATIONAL_MAX_Q })?;
    flat_band_check_pq(params, p, q, bloch_points)
}

pub fn flat_band_check_pq(params: &ModelParams, p: u64, q: u64, bloch_points: usize) -> Result<Vec<BandWidth>> {
    let set = floquet_spectrum(params, p, q, &bloch_grid(bloch_points))?;
    Ok(set
        .bands
        .iter()
        .enumerate()
        .map(|(band, b)| {
            let min = b.iter().copied().fold(f64::INFINITY, f64::min);
            let max = b.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            BandWidth { band, min, max, width: max - min, flat: max - min < FLAT_TOL }
        })
        .collect())
}

/// `max_j |λ_j + λ_{4N+1−j}|` of the minus truncation on `[0, N−1]`.
pub fn particle_hole_check(params: &ModelParams, n_sites: usize) -> Result<f64> {
    if params.w0 != 0.0 && params.w1 != 0.0 {
        return Err(Error::param("w", "particle-hole symmetry needs w0 = 0 or w1 = 0"));
    }
    let ev = model::build_finite(params, (0, n_sites as i64 - 1), Boundary::Minus)?.eigenvalues()?;
    Ok(pairing_defect(&ev))
}

/// `max_j |λ_j + λ_{n−1−j}|` for sorted `ev`.
pub fn pairing_defect(ev: &[f64]) -> f64 {
    let n = ev.len();
    (0..n).map(|j| (ev[j] + ev[n - 1 - j]).abs()).fold(0.0, f64::max)
}

/// The constant unitary that decouples the anti-chiral model at `θ ∈ {0, ½}`.
pub fn amo_unitary() -> Matrix4<Complex64> {
    let s = [[1.0, -1.0, -1.0, 1.0], [-1.0, 1.0, -1.0, 1.0], [-1.0, -1.0, 1.0, 1.0], [1.0, 1.0, 1.0, 1.0]];
    Matrix4::from_fn(|i, j| Complex64::new(0.5 * s[i][j], 0.0))
}

/// One decoupled scalar chain `s_h (τ + τ*) + s_o + s_p w₀ U(ϑ + nα)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct AmoBlock {
    pub component: usize,
    /// sign of the nearest-neighbour hopping
    pub hopping_sign: f64,
    /// sign of the constant on-site term
    pub onsite_sign: f64,
    /// sign of the potential term
    pub potential_sign: f64,
    /// `λ` of the equivalent almost Mathieu operator `τ + τ* + 2λ cos`
    pub coupling: f64,
    /// energy shift `s_o + s_p w₀/3`
    pub shift: f64,
}

impl AmoBlock {
    /// Dense scalar chain on `n_sites` sites.
    pub fn matrix(&self, params: &ModelParams, n_sites: usize) -> CMat {
        Mat::from_fn(n_sites, n_sites, |i, j| {
            let v = if i == j {
                self.onsite_sign + self.potential_sign * params.w0 * model::potential(model::Potential::U, params.phase(i as i64))
            } else if i.abs_diff(j) == 1 {
                self.hopping_sign
            } else {
                0.0
            };
            Complex64::new(v, 0.0)
        })
    }
}

#[derive(Clone, Debug)]
pub struct AmoReduction {
    /// `(I ⊗ 𝒰) H (I ⊗ 𝒰)` reordered component-major
    pub conjugated: CMat,
    /// Frobenius norm of entries coupling different components
    pub residual: f64,
    /// largest entrywise difference between the diagonal blocks and [`AmoBlock::matrix`]
    pub block_defect: f64,
    pub blocks: [AmoBlock; 4],
    /// largest mismatch between the sorted union of block spectra and the full spectrum
    pub spectrum_defect: f64,
}

/// The four scalar chains expected at `θ ∈ {0, ½}`, `φ = 0`.
pub fn amo_blocks(w0: f64, theta: f64) -> [AmoBlock; 4] {
    let h = if theta == 0.0 { 1.0 } else { -1.0 };
    let signs = [(-1.0, -1.0), (-1.0, 1.0), (1.0, -1.0), (1.0, 1.0)];
    let mut out = [AmoBlock { component: 0, hopping_sign: 0.0, onsite_sign: 0.0, potential_sign: 0.0, coupling: w0 / 3.0, shift: 0.0 }; 4];
    for (c, (o, p)) in signs.into_iter().enumerate() {
        out[c] = AmoBlock {
            component: c,
            hopping_sign: o * h,
            onsite_sign: o,
            potential_sign: p,
            coupling: w0 / 3.0,
            shift: o + p * w0 / 3.0,
        };
    }
    out
}

/// Conjugate the anti-chiral minus truncation on `[0, N−1]` sitewise by
/// [`amo_unitary`] and split it into four scalar chains.
pub fn amo_block_diagonalize(params: &ModelParams, n_sites: usize) -> Result<AmoReduction> {
    if params.w1 != 0.0 {
        return Err(Error::param("w1", "AMO reduction needs w1 = 0"));
    }
    if params.phi != 0.0 {
        return Err(Error::param("phi", "AMO reduction needs phi = 0"));
    }
    if params.theta != 0.0 && params.theta != 0.5 {
        return Err(Error::param("theta", "AMO reduction needs theta in {0, 1/2}"));
    }
    let h = model::build_finite(params, (0, n_sites as i64 - 1), Boundary::Minus)?;
    let u = amo_unitary();
    let dim = 4 * n_sites;
    let ublk = Mat::from_fn(dim, dim, |i, j| if i / 4 == j / 4 { u[(i % 4, j % 4)] } else { Complex64::new(0.0, 0.0) });
    let conj = ublk.adjoint() * &h.entries * &ublk;
    // component-major reordering: row c*N + n <- 4n + c
    let perm = |r: usize| 4 * (r % n_sites) + r / n_sites;
    let reordered = Mat::from_fn(dim, dim, |i, j| conj[(perm(i), perm(j))]);
    let mut residual = 0.0;
    for i in 0..dim {
        for j in 0..dim {
            if i / n_sites != j / n_sites {
                residual += reordered[(i, j)].norm_sqr();
            }
        }
    }
    let blocks = amo_blocks(params.w0, params.theta);
    let mut block_defect: f64 = 0.0;
    let mut union = Vec::with_capacity(dim);
    for b in &blocks {
        let m = b.matrix(params, n_sites);
        let off = b.component * n_sites;
        for i in 0..n_sites {
            for j in 0..n_sites {
                block_defect = block_defect.max((reordered[(off + i, off + j)] - m[(i, j)]).norm());
            }
        }
        union.extend(linalg::hermitian_eigenvalues(m.as_ref())?);
    }
    union.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let full = h.eigenvalues()?;
    let spectrum_defect = union.iter().zip(&full).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    Ok(AmoReduction { conjugated: reordered, residual: residual.sqrt(), block_defect, blocks, spectrum_defect })
}

/// Measure of the union of `[λ − ε, λ + ε]` with `ε = fatten ×` mean level spacing.
pub fn fattened_measure(sorted_ev: &[f64], fatten: f64) -> f64 {
    if sorted_ev.len() < 2 {
        return 0.0;
    }
    let spacing = (sorted_ev[sorted_ev.len() - 1] - sorted_ev[0]) / (sorted_ev.len() - 1) as f64;
    let eps = fatten * spacing;
    union_length(sorted_ev.iter().map(|&e| (e - eps, e + eps)).collect())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AmoScanRow {
    pub w0: f64,
    /// fattened measure of the full truncation spectrum
    pub measure: f64,
    /// fattened measures of the four scalar chains
    pub block_measures: [f64; 4],
}

/// Spectral measure estimate as a function of `w₀` at `θ = 0`, `φ = 0`.
pub fn amo_critical_scan(w0_list: &[f64], alpha: f64, n_sites: usize) -> Result<Vec<AmoScanRow>> {
    par_map(w0_list, |&w0| {
        let params = ModelParams::anti_chiral(w0, alpha);
        let mut all = Vec::with_capacity(4 * n_sites);
        let mut block_measures = [0.0; 4];
        for (i, b) in amo_blocks(w0, 0.0).iter().enumerate() {
            let ev = linalg::hermitian_eigenvalues(b.matrix(&params, n_sites).as_ref())?;
            block_measures[i] = fattened_measure(&ev, 10.0);
            all.extend(ev);
        }
        all.sort_by(|a, b| a.partial_cmp(b).unwrap());
        Ok(AmoScanRow { w0, measure: fattened_measure(&all, 10.0), block_measures })
    })
    .into_iter()
    .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SubordinacyRow {
    pub energy: f64,
    /// lengths at which the running average was recorded
    pub lengths: Vec<usize>,
    /// `log_stat[r−1][i]`: `log((1/L)Σ_{n≤L} σ_r'²[φ_n] + σ_r'²[ψ_n])` with `r' = 5 − r`, at `lengths[i]`
    pub log_stat: [Vec<f64>; 4],
    /// `proxy[r−1][i]`: min of `log_stat[r−1]` over recorded lengths in `[lengths[i]/4, lengths[i]]`
    pub proxy: [Vec<f64>; 4],
}

fn log_add(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let m = a.max(b);
    m + ((a - m).exp() + (b - m).exp()).ln()
}

/// Subordinacy statistic from Dirichlet (`φ₀ = 0, φ₁ = I`) and Neumann
/// (`ψ₀ = I, ψ₁ = 0`) matrix solutions, recorded on the doubling grid
/// `16, 32, …, ≤ l_max`.
pub fn subordinacy_scan(params: &ModelParams, energies: &[f64], l_max: usize) -> Result<Vec<SubordinacyRow>> {
    let mut lengths = Vec::new();
    let mut l = 16;
    while l <= l_max {
        lengths.push(l);
        l *= 2;
    }
    if lengths.is_empty() {
        return Err(Error::param("lmax", "must be >= 16"));
    }
    par_map(energies, |&e| subordinacy_one(params, e, &lengths)).into_iter().collect()
}

fn subordinacy_one(params: &ModelParams, energy: f64, lengths: &[usize]) -> Result<SubordinacyRow> {
    type M4 = Matrix4<Complex64>;
    let c = TransferCocycle::new(*params, energy);
    let (mut phi_prev, mut phi) = (M4::zeros(), M4::identity());
    let (mut psi_prev, mut psi) = (M4::identity(), M4::zeros());
    let mut log_scale = 0.0;
    let mut sums = [f64::NEG_INFINITY; 4];
    let mut log_stat: [Vec<f64>; 4] = Default::default();
    let l_max = *lengths.last().unwrap();
    let mut next = 0;
    for n in 1..=l_max {
        // the n-th term uses φ_n, ψ_n
        let sp = phi.singular_values();
        let ss = psi.singular_values();
        let mut sp: Vec<f64> = sp.iter().copied().collect();
        let mut ss: Vec<f64> = ss.iter().copied().collect();
        sp.sort_by(|a, b| a.partial_cmp(b).unwrap());
        ss.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for r in 0..4 {
            let term = log_add(2.0 * (sp[r].ln() + log_scale), 2.0 * (ss[r].ln() + log_scale));
            sums[r] = log_add(sums[r], term);
        }
        if n == lengths[next] {
            for r in 0..4 {
                log_stat[r].push(sums[r] - (n as f64).ln());
            }
            next += 1;
        }
        let q = c.q_block(params.phase(n as i64));
        let phi_next = q * phi - phi_prev;
        let psi_next = q * psi - psi_prev;
        (phi_prev, phi) = (phi, phi_next);
        (psi_prev, psi) = (psi, psi_next);
        let big = phi.iter().chain(psi.iter()).fold(0.0f64, |m, z| m.max(z.norm()));
        if !big.is_finite() {
            return Err(Error::Overflow { step: n, scale: big });
        }
        if big > 1e100 {
            let s = Complex64::new(1.0 / big, 0.0);
            phi *= s;
            phi_prev *= s;
            psi *= s;
            psi_prev *= s;
            log_scale += big.ln();
        }
    }
    let proxy = std::array::from_fn(|r| {
        (0..lengths.len())
            .map(|i| {
                (0..=i)
                    .filter(|&j| 4 * lengths[j] >= lengths[i])
                    .map(|j| log_stat[r][j])
                    .fold(f64::INFINITY, f64::min)
            })
            .collect()
    });
    Ok(SubordinacyRow { energy, lengths: lengths.to_vec(), log_stat, proxy })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn farey_order_five() {
        let f = farey(5);
        assert_eq!(f.len(), 10);
        assert_eq!(f[0], (0, 1));
        assert_eq!(f[1], (1, 2));
    }

    #[test]
    fn union_of_overlapping_intervals() {
        assert!((union_length(vec![(0.0, 1.0), (0.5, 2.0), (3.0, 4.0)]) - 3.0).abs() < 1e-15);
    }

    #[test]
    fn histogram_mass_sums_to_one() {
        let d = DosEstimate::from_values(&[-1.0, 0.0, 0.5, 2.9], -3.0, 3.0, 6, 1);
        assert!((d.mass.iter().sum::<f64>() - 1.0).abs() < 1e-15);
    }
}
