//! The 8×8 Schrödinger cocycle `A(x) = [[Q(x), −I], [I, 0]]` with
//! `Q = t(θ)(E − t₀ − V_w(x + iε))`, its iterates and Lyapunov spectra.

use nalgebra::{SMatrix, SVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use serde::Serialize;

use crate::model::{self, Block, BlockChain, Boundary, ModelParams, Variant};
use crate::{par_map, Error, Result};

pub type Mat8 = SMatrix<Complex64, 8, 8>;
pub type Vec8 = SVector<Complex64, 8>;

/// Parameters of the transfer cocycle at a fixed energy.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TransferCocycle {
    pub params: ModelParams,
    pub energy: Complex64,
    /// imaginary shift of the phase
    pub epsilon: f64,
    pub variant: Variant,
}

impl TransferCocycle {
    pub fn new(params: ModelParams, energy: f64) -> Self {
        TransferCocycle { params, energy: Complex64::new(energy, 0.0), epsilon: 0.0, variant: Variant::Standard }
    }

    pub fn complex_energy(params: ModelParams, energy: Complex64) -> Self {
        TransferCocycle { params, energy, epsilon: 0.0, variant: Variant::Standard }
    }

    pub fn complexified(mut self, epsilon: f64) -> Self {
        self.epsilon = epsilon;
        self
    }

    pub fn with_variant(mut self, variant: Variant) -> Self {
        self.variant = variant;
        self
    }

    /// The block `Q(x)`.
    pub fn q_block(&self, x: f64) -> Block {
        let z = Complex64::new(x, self.epsilon);
        let t = model::hop_block(&self.params, self.variant);
        let e = Block::identity() * self.energy;
        t * (e - model::onsite_block(&self.params, self.variant, z))
    }

    /// Sharp operator norm bound `2 + |E| + w₀ + w₁` for real phase.
    pub fn norm_bound(&self) -> f64 {
        2.0 + self.energy.norm() + self.params.w0 + self.params.w1
    }
}

fn embed(q: &Block) -> Mat8 {
    let mut a = Mat8::zeros();
    a.fixed_view_mut::<4, 4>(0, 0).copy_from(q);
    for i in 0..4 {
        a[(i, 4 + i)] = Complex64::new(-1.0, 0.0);
        a[(4 + i, i)] = Complex64::new(1.0, 0.0);
    }
    a
}

/// The one-step matrix `A(x)`.
pub fn one_step(c: &TransferCocycle, x: f64) -> Mat8 {
    embed(&c.q_block(x))
}

/// The symplectic form `Ω = [[0, t(θ)], [−t(θ), 0]]`.
pub fn omega(theta: f64) -> Mat8 {
    let t = model::hopping_t(theta);
    let mut o = Mat8::zeros();
    o.fixed_view_mut::<4, 4>(0, 4).copy_from(&t);
    o.fixed_view_mut::<4, 4>(4, 0).copy_from(&(-t));
    o
}

/// `‖A†ΩA − Ω‖_F`.
pub fn symplectic_defect(a: &Mat8, theta: f64) -> f64 {
    let o = omega(theta);
    (a.adjoint() * o * a - o).norm()
}

/// Left-multiply `m` by `A = [[Q, −I], [I, 0]]` using the block structure.
fn apply_step(q: &Block, m: &Mat8) -> Mat8 {
    let top = m.fixed_view::<4, 8>(0, 0);
    let bot = m.fixed_view::<4, 8>(4, 0);
    let mut out = Mat8::zeros();
    out.fixed_view_mut::<4, 8>(0, 0).copy_from(&(q * top - bot));
    out.fixed_view_mut::<4, 8>(4, 0).copy_from(&top);
    out
}

/// Products above this magnitude between re-orthogonalizations abort.
pub const OVERFLOW_GUARD: f64 = 1e200;

/// The outcome of [`iterate`].
#[derive(Clone, Debug)]
pub struct IterateRecord {
    pub steps: usize,
    /// accumulated `log|R_ii|` of the QR factorization, in column order
    pub log_diag: [f64; 8],
    /// orthonormal frame `Q` with `A_n = Q R`
    pub frame: Mat8,
    /// `R` normalised by `exp(r_log_scale)`
    r_scaled: Mat8,
    r_log_scale: f64,
    /// the plain product for `n ≤ 12`
    pub dense: Option<Mat8>,
}

impl IterateRecord {
    /// Log singular values of `A_n`, nonincreasing, from the factored form.
    pub fn log_singular_values(&self) -> [f64; 8] {
        let sv = self.r_scaled.singular_values();
        let mut out = [0.0; 8];
        for (o, s) in out.iter_mut().zip(sv.iter()) {
            *o = s.ln() + self.r_log_scale;
        }
        out.sort_by(|a, b| b.partial_cmp(a).unwrap());
        out
    }
}

fn max_abs(m: &Mat8) -> f64 {
    m.iter().fold(0.0, |acc: f64, z| acc.max(z.norm()))
}

/// `A_n(x₀) = A(x₀ + (n−1)α) ⋯ A(x₀)` in factored `QR` form, re-orthogonalized
/// every `reorth_every` steps.
pub fn iterate(c: &TransferCocycle, x0: f64, n: usize, reorth_every: usize) -> Result<IterateRecord> {
    if n == 0 {
        return Err(Error::param("n", "must be >= 1"));
    }
    if reorth_every == 0 {
        return Err(Error::param("reorth_every", "must be >= 1"));
    }
    let alpha = c.params.alpha;
    let mut frame = Mat8::identity();
    let mut log_diag = [0.0; 8];
    let mut r_scaled = Mat8::identity();
    let mut r_log_scale = 0.0;
    let mut dense = if n <= 12 { Some(Mat8::identity()) } else { None };
    let mut pending = 0;
    for k in 0..n {
        let q = c.q_block(x0 + k as f64 * alpha);
        frame = apply_step(&q, &frame);
        if let Some(d) = dense.as_mut() {
            *d = apply_step(&q, d);
        }
        pending += 1;
        if pending == reorth_every || k + 1 == n {
            let scale = max_abs(&frame);
            if !scale.is_finite() || scale > OVERFLOW_GUARD {
                return Err(Error::Overflow { step: k + 1, scale });
            }
            let qr = frame.qr();
            let r = qr.r();
            frame = qr.q();
            for i in 0..8 {
                let d = r[(i, i)].norm();
                if d == 0.0 {
                    return Err(Error::Singular);
                }
                log_diag[i] += d.ln();
            }
            r_scaled = r * r_scaled;
            let s = max_abs(&r_scaled);
            r_scaled /= Complex64::new(s, 0.0);
            r_log_scale += s.ln();
            pending = 0;
        }
    }
    Ok(IterateRecord { steps: n, log_diag, frame, r_scaled, r_log_scale, dense })
}

/// How starting phases are chosen.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum PhaseSampling {
    /// `ϑ + j/m` for `j < m`
    Grid,
    /// uniform draws from a seeded ChaCha stream
    Random { seed: u64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LyapunovOptions {
    pub iterates: usize,
    pub phase_samples: usize,
    /// re-orthogonalization interval; `None` picks [`auto_reorth`]
    pub reorth_every: Option<usize>,
    /// steps discarded before accumulation starts
    pub burn_in: usize,
    pub sampling: PhaseSampling,
}

impl Default for LyapunovOptions {
    fn default() -> Self {
        LyapunovOptions { iterates: 100_000, phase_samples: 16, reorth_every: None, burn_in: 1000, sampling: PhaseSampling::Grid }
    }
}

/// Eight Lyapunov exponents, nonincreasing.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LyapunovSpectrum {
    pub exponents: [f64; 8],
    /// standard error of each exponent from the spread across phases
    pub stderr_each: [f64; 8],
    /// largest entry of `stderr_each`
    pub stderr: f64,
    pub iterates: usize,
    pub phase_samples: usize,
    /// estimates from the first and second half of the run agree within 5 stderr
    pub converged: bool,
}

impl LyapunovSpectrum {
    /// `γᵏ`, the sum of the top `k` exponents.
    pub fn partial_sum(&self, k: usize) -> f64 {
        self.exponents[..k.min(8)].iter().sum()
    }

    /// `max_i |γ_i + γ_{9−i}|` (1-based), the symplectic pairing defect.
    pub fn pairing_defect(&self) -> f64 {
        (0..4).map(|i| (self.exponents[i] + self.exponents[7 - i]).abs()).fold(0.0, f64::max)
    }
}

fn sample_phases(base: f64, m: usize, sampling: PhaseSampling) -> Vec<f64> {
    match sampling {
        PhaseSampling::Grid => (0..m).map(|j| base + j as f64 / m as f64).collect(),
        PhaseSampling::Random { seed } => {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            (0..m).map(|_| rng.random::<f64>()).collect()
        }
    }
}

/// Largest interval (at most 10) over which the spread between the fastest
/// growing and fastest decaying directions stays below `1e8`.
pub fn auto_reorth(c: &TransferCocycle) -> usize {
    let per_step = 2.0 * (c.norm_bound() * (2.0 * std::f64::consts::PI * c.epsilon.abs()).exp()).ln();
    ((8.0 * 10f64.ln() / per_step).floor() as usize).clamp(1, 10)
}

fn run_phase(c: &TransferCocycle, x0: f64, o: &LyapunovOptions, every: usize) -> Result<([f64; 8], [f64; 8])> {
    let alpha = c.params.alpha;
    let mut frame = Mat8::identity();
    let total = o.burn_in + o.iterates;
    let half = o.burn_in + o.iterates / 2;
    let mut first = [0.0; 8];
    let mut second = [0.0; 8];
    let mut pending = 0;
    for k in 0..total {
        frame = apply_step(&c.q_block(x0 + k as f64 * alpha), &frame);
        pending += 1;
        let boundary = k + 1 == o.burn_in || k + 1 == half || k + 1 == total;
        if pending == every || boundary {
            let scale = max_abs(&frame);
            if !scale.is_finite() || scale > OVERFLOW_GUARD {
                return Err(Error::Overflow { step: k + 1, scale });
            }
            let qr = frame.qr();
            let r = qr.r();
            frame = qr.q();
            if k >= o.burn_in {
                let acc = if k < half { &mut first } else { &mut second };
                for i in 0..8 {
                    let d = r[(i, i)].norm();
                    if d == 0.0 || !d.is_finite() {
                        return Err(Error::PrecisionLoss { step: k + 1 });
                    }
                    acc[i] += d.ln();
                }
            }
            pending = 0;
        }
    }
    let n1 = (half - o.burn_in) as f64;
    let n2 = (total - half) as f64;
    Ok((first.map(|v| v / n1), second.map(|v| v / n2)))
}

/// Lyapunov spectrum with explicit options.
pub fn lyapunov_with(c: &TransferCocycle, o: &LyapunovOptions) -> Result<LyapunovSpectrum> {
    if o.iterates < 2 || o.phase_samples == 0 || o.reorth_every == Some(0) {
        return Err(Error::param("iterates", "need iterates >= 2, phase_samples >= 1, reorth_every >= 1"));
    }
    let every = o.reorth_every.unwrap_or_else(|| auto_reorth(c));
    let phases = sample_phases(c.params.vartheta, o.phase_samples, o.sampling);
    let runs = par_map(&phases, |&x| run_phase(c, x, o, every));
    let runs: Vec<_> = runs.into_iter().collect::<Result<_>>()?;
    let m = runs.len() as f64;
    let n1 = (o.iterates / 2) as f64;
    let n2 = (o.iterates - o.iterates / 2) as f64;
    let mut per_phase: Vec<[f64; 8]> = runs
        .iter()
        .map(|(a, b)| {
            let mut v = [0.0; 8];
            for i in 0..8 {
                v[i] = (a[i] * n1 + b[i] * n2) / (n1 + n2);
            }
            v
        })
        .collect();
    for v in per_phase.iter_mut() {
        v.sort_by(|a, b| b.partial_cmp(a).unwrap());
    }
    let mut mean = [0.0; 8];
    let mut first = [0.0; 8];
    let mut second = [0.0; 8];
    for (v, (a, b)) in per_phase.iter().zip(&runs) {
        let mut a = *a;
        let mut b = *b;
        a.sort_by(|x, y| y.partial_cmp(x).unwrap());
        b.sort_by(|x, y| y.partial_cmp(x).unwrap());
        for i in 0..8 {
            mean[i] += v[i] / m;
            first[i] += a[i] / m;
            second[i] += b[i] / m;
        }
    }
    let mut stderr_each = [0.0; 8];
    if per_phase.len() > 1 {
        for i in 0..8 {
            let var = per_phase.iter().map(|v| (v[i] - mean[i]).powi(2)).sum::<f64>() / (m - 1.0);
            stderr_each[i] = (var / m).sqrt();
        }
    }
    let stderr = stderr_each.iter().copied().fold(0.0, f64::max);
    let converged = (0..8).all(|i| (first[i] - second[i]).abs() <= 5.0 * stderr_each[i].max(f64::EPSILON));
    Ok(LyapunovSpectrum { exponents: mean, stderr_each, stderr, iterates: o.iterates, phase_samples: phases.len(), converged })
}

/// Lyapunov spectrum over a uniform grid of `phase_samples` starting phases.
pub fn lyapunov(c: &TransferCocycle, n: usize, phase_samples: usize) -> Result<LyapunovSpectrum> {
    lyapunov_with(c, &LyapunovOptions { iterates: n, phase_samples, ..Default::default() })
}

/// Lyapunov spectrum of the complexified cocycle `A(· + iε)`. Re-orthogonalizes
/// every step since one step already grows like `e^{2π|ε|}`.
pub fn lyapunov_complexified(c: &TransferCocycle, n: usize, phase_samples: usize) -> Result<LyapunovSpectrum> {
    if c.epsilon == 0.0 {
        return Err(Error::param("epsilon", "must be nonzero"));
    }
    lyapunov_with(c, &LyapunovOptions { iterates: n, phase_samples, reorth_every: Some(1), ..Default::default() })
}

/// The large-`ε` asymptote `|log(w/3)| + 2π|ε|` of the top four exponents.
pub fn complexified_asymptote(w: f64, epsilon: f64) -> f64 {
    (w / 3.0).ln().abs() + 2.0 * std::f64::consts::PI * epsilon.abs()
}

/// Lower bound for the `i`-th exponent (1-based, `i ≤ 4`) in the anti-chiral
/// model: `max(i·log(w₀/3) − (i−1)·log(2+|E|+w₀), 0)`.
pub fn lower_bound(w0: f64, energy: f64, i: usize) -> f64 {
    let i = i as f64;
    (i * (w0 / 3.0).ln() - (i - 1.0) * (2.0 + energy.abs() + w0).ln()).max(0.0)
}

/// Upper bound `log(2 + |E| + w₀ + w₁)` for every exponent.
pub fn upper_bound(params: &ModelParams, energy: f64) -> f64 {
    (2.0 + energy.abs() + params.w0 + params.w1).ln()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ThoulessReport {
    pub gamma4_cocycle: f64,
    pub gamma4_determinant: f64,
    pub gap: f64,
    /// sampled phases where the determinant vanished numerically
    pub skipped: usize,
    pub samples: usize,
    /// per-sample `(1/N) log|det(H − E)|`
    pub log_dets: Vec<f64>,
    /// fraction of samples with `|det| ≥ exp((γ⁴ − 0.1) N)`
    pub lower_bound_fraction: f64,
    pub lyapunov: LyapunovSpectrum,
}

/// `(1/N) log|det(H_[0,N−1](ϑ) − E)|` for a single phase, `None` if singular.
pub fn log_det_density(params: &ModelParams, variant: Variant, energy: f64, n_sites: usize) -> Result<Option<f64>> {
    let chain = BlockChain::new(params, variant, (0, n_sites as i64 - 1), Boundary::Minus)?;
    let ld = chain.log_det_shifted(Complex64::new(energy, 0.0));
    Ok(if ld.is_singular() { None } else { Some(ld.log_abs / n_sites as f64) })
}

/// Compare `γ⁴` from the cocycle with the determinant average over `ϑ`.
pub fn thouless_check(
    params: &ModelParams,
    energy: f64,
    n_sites: usize,
    vartheta_samples: usize,
    lyap: &LyapunovOptions,
) -> Result<ThoulessReport> {
    if n_sites == 0 || vartheta_samples == 0 {
        return Err(Error::param("N", "window and sample count must be positive"));
    }
    let spec = lyapunov_with(&TransferCocycle::new(*params, energy), lyap)?;
    let g4 = spec.partial_sum(4);
    let phases: Vec<f64> = (0..vartheta_samples).map(|j| params.vartheta + j as f64 / vartheta_samples as f64).collect();
    let vals = par_map(&phases, |&v| log_det_density(&params.with_vartheta(v), Variant::Standard, energy, n_sites));
    let vals: Vec<Option<f64>> = vals.into_iter().collect::<Result<_>>()?;
    let kept: Vec<f64> = vals.iter().flatten().copied().collect();
    let skipped = vals.len() - kept.len();
    let det_mean = if kept.is_empty() { f64::NAN } else { kept.iter().sum::<f64>() / kept.len() as f64 };
    let lb = kept.iter().filter(|&&u| u >= g4 - 0.1).count() as f64 / vartheta_samples as f64;
    Ok(ThoulessReport {
        gamma4_cocycle: g4,
        gamma4_determinant: det_mean,
        gap: (g4 - det_mean).abs(),
        skipped,
        samples: vartheta_samples,
        log_dets: kept,
        lower_bound_fraction: lb,
        lyapunov: spec,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct KotaniEntry {
    pub energy: f64,
    pub zero_count: usize,
    /// `j` such that the energy is assigned to `S_j` (pairs of vanishing exponents)
    pub class: usize,
    pub exponents: [f64; 8],
}

/// Count numerically vanishing exponents `|γ| < tau_zero` at each energy.
pub fn kotani_indicator(params: &ModelParams, energies: &[f64], tau_zero: f64, o: &LyapunovOptions) -> Result<Vec<KotaniEntry>> {
    energies
        .iter()
        .map(|&e| {
            let s = lyapunov_with(&TransferCocycle::new(*params, e), o)?;
            let zero_count = s.exponents.iter().filter(|g| g.abs() < tau_zero).count();
            Ok(KotaniEntry { energy: e, zero_count, class: zero_count / 2, exponents: s.exponents })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn free_zero_energy_q_is_minus_identity() {
        let c = TransferCocycle::new(ModelParams::free(), 0.0);
        assert!((c.q_block(0.3) + Block::identity()).norm() < 1e-15);
    }

    #[test]
    fn structured_step_matches_dense_product() {
        let p = ModelParams::new(1.3, 0.7, 0.31, 0.2, 0.1, 0.05).unwrap();
        let c = TransferCocycle::new(p, 0.4);
        let m = Mat8::from_fn(|i, j| Complex64::new((i + 2 * j) as f64 * 0.1, i as f64 - j as f64));
        let a = one_step(&c, 0.17);
        assert!((apply_step(&c.q_block(0.17), &m) - a * m).norm() < 1e-12);
    }

    #[test]
    fn iterate_single_step_is_one_step() {
        let c = TransferCocycle::new(ModelParams::anti_chiral(2.0, 0.3), 0.1);
        let rec = iterate(&c, 0.2, 1, 10).unwrap();
        assert!((rec.dense.unwrap() - one_step(&c, 0.2)).norm() < 1e-14);
    }

    #[test]
    fn lower_bound_clamps_at_zero() {
        assert_eq!(lower_bound(2.0, 0.0, 1), 0.0);
        assert!((lower_bound(30.0, 0.0, 1) - 10f64.ln()).abs() < 1e-15);
    }
}
