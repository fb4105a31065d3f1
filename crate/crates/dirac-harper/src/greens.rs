//! Green's functions of finite windows, Cramer minors, decay diagnostics and
//! the characteristic polynomial of the plain-cosine model.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::linalg::{self, CMat, LogDet};
use crate::model::{self, Block, BlockChain, Boundary, ModelParams, Variant};
use crate::{par_map, Error, Result};

/// Energies closer than this to the window spectrum are rejected.
pub const NEAR_SINGULAR: f64 = 1e-8;

/// `(H − E)⁻¹` on a window, stored densely and read in 4×4 blocks.
#[derive(Clone, Debug)]
pub struct GreenBlock {
    pub window: (i64, i64),
    pub boundary: Boundary,
    pub energy: f64,
    pub matrix: CMat,
    /// `max |((H − E)G − I)_{ij}|`
    pub residual: f64,
}

impl GreenBlock {
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// Block between site offsets `a` and `b` counted from the window start.
    pub fn block(&self, a: usize, b: usize) -> Block {
        Block::from_fn(|i, j| self.matrix[(4 * a + i, 4 * b + j)])
    }

    /// `−G(n, n₁) t† f_{n₁−1} − G(n, n₂) t f_{n₂+1}`: the values inside the
    /// window of a solution with the given outside neighbours.
    pub fn reconstruct(&self, hop: &Block, f_left: &[Complex64; 4], f_right: &[Complex64; 4]) -> Vec<Complex64> {
        let sites = self.dim() / 4;
        let fl = hop.adjoint() * nalgebra::Vector4::from_column_slice(f_left);
        let fr = hop * nalgebra::Vector4::from_column_slice(f_right);
        let mut out = Vec::with_capacity(self.dim());
        for n in 0..sites {
            let v = -(self.block(n, 0) * fl) - self.block(n, sites - 1) * fr;
            out.extend(v.iter());
        }
        out
    }
}

fn shifted(chain: &BlockChain, energy: f64) -> CMat {
    let mut m = chain.dense();
    for i in 0..m.nrows() {
        m[(i, i)] -= energy;
    }
    m
}

/// The Green's function of `variant` restricted to `window`.
pub fn green(params: &ModelParams, variant: Variant, window: (i64, i64), boundary: Boundary, energy: f64) -> Result<GreenBlock> {
    let chain = BlockChain::new(params, variant, window, boundary)?;
    let h = chain.dense();
    let ev = linalg::hermitian_eigenvalues(h.as_ref())?;
    if let Some(&nearest) = ev.iter().min_by(|a, b| (*a - energy).abs().partial_cmp(&(*b - energy).abs()).unwrap()) {
        let distance = (nearest - energy).abs();
        if distance < NEAR_SINGULAR {
            return Err(Error::NearSingular { energy, eigenvalue: nearest, distance });
        }
    }
    let a = shifted(&chain, energy);
    let g = linalg::inverse(a.as_ref());
    let prod = &a * &g;
    let mut residual: f64 = 0.0;
    for j in 0..prod.ncols() {
        for i in 0..prod.nrows() {
            let target = if i == j { 1.0 } else { 0.0 };
            residual = residual.max((prod[(i, j)] - target).norm());
        }
    }
    Ok(GreenBlock { window, boundary, energy, matrix: g, residual })
}

/// Determinant of `H − E` on the window with row `a` and column `b` deleted
/// (no cofactor sign).
pub fn minor_matrix(
    params: &ModelParams,
    variant: Variant,
    window: (i64, i64),
    boundary: Boundary,
    energy: f64,
    a: usize,
    b: usize,
) -> Result<LogDet> {
    let chain = BlockChain::new(params, variant, window, boundary)?;
    let n = chain.dim();
    if a >= n || b >= n {
        return Err(Error::param("alpha", format!("minor index outside 0..{n}")));
    }
    let e = Complex64::new(energy, 0.0);
    Ok(linalg::band_log_det(n - 1, model::CHAIN_BANDWIDTH + 1, model::CHAIN_BANDWIDTH + 1, |i, j| {
        let (r, c) = (i + usize::from(i >= a), j + usize::from(j >= b));
        let v = chain.entry(r, c);
        if r == c {
            v - e
        } else {
            v
        }
    }))
}

/// `log|det(H − E)|` with its phase on the window.
pub fn window_log_det(params: &ModelParams, variant: Variant, window: (i64, i64), boundary: Boundary, energy: f64) -> Result<LogDet> {
    Ok(BlockChain::new(params, variant, window, boundary)?.log_det_shifted(Complex64::new(energy, 0.0)))
}

/// `|G_{b,a} − (−1)^{a+b} μ_{a,b}/det| / max(1, |G_{b,a}|)`.
pub fn cramer_defect(g: &GreenBlock, det: LogDet, minor: LogDet, a: usize, b: usize) -> f64 {
    let sign = if (a + b) & 1 == 0 { 1.0 } else { -1.0 };
    let lhs = g.matrix[(b, a)];
    let ratio = if minor.is_singular() {
        Complex64::new(0.0, 0.0)
    } else {
        minor.phase / det.phase * (minor.log_abs - det.log_abs).exp()
    };
    (lhs - ratio * sign).norm() / lhs.norm().max(1.0)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct KleinFit {
    pub n_sites: usize,
    pub samples: usize,
    /// fitted constant: the largest envelope value observed
    pub constant: f64,
    /// `(1/4N) log|μ| − (1 − |n(a) − n(b)|/(4N)) |log(w₀/3)|` per sample
    pub values: Vec<f64>,
}

/// Fit the constant in the Klein-type envelope for minors of `[0, N−1]` over
/// random `(ϑ, a, b)`.
pub fn klein_fit(params: &ModelParams, variant: Variant, energy: f64, n_sites: usize, samples: usize, seed: u64) -> Result<KleinFit> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dim = 4 * n_sites;
    let draws: Vec<(f64, usize, usize)> =
        (0..samples).map(|_| (rng.random::<f64>(), rng.random_range(0..dim), rng.random_range(0..dim))).collect();
    let rate = (params.w0 / 3.0).ln().abs();
    let values = par_map(&draws, |&(v, a, b)| -> Result<f64> {
        let mu = minor_matrix(&params.with_vartheta(v), variant, (0, n_sites as i64 - 1), Boundary::Minus, energy, a, b)?;
        let dist = (a / 4).abs_diff(b / 4) as f64;
        Ok(mu.log_abs / dim as f64 - (1.0 - dist / dim as f64) * rate)
    })
    .into_iter()
    .collect::<Result<Vec<f64>>>()?;
    let constant = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(KleinFit { n_sites, samples, constant, values })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DecayProfile {
    /// site distance `d`
    pub distance: Vec<usize>,
    /// largest `log|G_{α,α′}|` over block pairs at distance `d`
    pub log_green: Vec<f64>,
}

impl DecayProfile {
    /// Running maximum from the far end: the smallest nonincreasing majorant.
    pub fn envelope(&self) -> Vec<f64> {
        let mut out = self.log_green.clone();
        for i in (0..out.len().saturating_sub(1)).rev() {
            out[i] = out[i].max(out[i + 1]);
        }
        out
    }

    /// Least-squares slope of `log|G|` against distance.
    pub fn slope(&self) -> f64 {
        let n = self.distance.len() as f64;
        let mx = self.distance.iter().map(|&d| d as f64).sum::<f64>() / n;
        let my = self.log_green.iter().sum::<f64>() / n;
        let mut sxy = 0.0;
        let mut sxx = 0.0;
        for (&d, &y) in self.distance.iter().zip(&self.log_green) {
            sxy += (d as f64 - mx) * (y - my);
            sxx += (d as f64 - mx).powi(2);
        }
        sxy / sxx
    }
}

pub fn decay_profile(g: &GreenBlock) -> DecayProfile {
    let sites = g.dim() / 4;
    let mut log_green = vec![f64::NEG_INFINITY; sites];
    for a in 0..g.dim() {
        for b in 0..g.dim() {
            let d = (a / 4).abs_diff(b / 4);
            log_green[d] = log_green[d].max(g.matrix[(a, b)].norm().ln());
        }
    }
    DecayProfile { distance: (0..sites).collect(), log_green }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GoodGreenReport {
    pub good: bool,
    /// `min over pairs of −(d/N − ε)·rate − log|G|/N`; positive iff good
    pub margin: f64,
    pub profile: DecayProfile,
}

/// Decide whether `G` on `[0, N−1]` satisfies
/// `log|G_{α,α′}|/N < −(d/N − ε)·rate` for all pairs at site distance `d ≥ N/5`.
pub fn good_green_check(
    params: &ModelParams,
    variant: Variant,
    energy: f64,
    n_sites: usize,
    eps: f64,
    rate: f64,
) -> Result<GoodGreenReport> {
    if rate <= 0.0 {
        return Err(Error::param("gamma4", "must be positive"));
    }
    let g = green(params, variant, (0, n_sites as i64 - 1), Boundary::Minus, energy)?;
    let profile = decay_profile(&g);
    let n = n_sites as f64;
    let margin = profile
        .distance
        .iter()
        .zip(&profile.log_green)
        .filter(|(&d, _)| 5 * d >= n_sites)
        .map(|(&d, &lg)| -(d as f64 / n - eps) * rate - lg / n)
        .fold(f64::INFINITY, f64::min);
    Ok(GoodGreenReport { good: margin > 0.0, margin, profile })
}

/// Fraction of `grid` equispaced phases where the ergodic mean
/// `(1/M) Σ_{j<M} u_N(ϑ + jα)` of `u_N = (1/N) log|det(H_[0,N−1] − E)|` is at most `(1 − δ)γ⁴`.
#[allow(clippy::too_many_arguments)]
pub fn bad_set_measure(
    params: &ModelParams,
    variant: Variant,
    energy: f64,
    n_sites: usize,
    m: usize,
    delta: f64,
    gamma4: f64,
    grid: usize,
) -> Result<f64> {
    if m == 0 || grid == 0 || n_sites == 0 {
        return Err(Error::param("M", "window, average length and grid must be positive"));
    }
    let phases: Vec<f64> = (0..grid).map(|i| i as f64 / grid as f64).collect();
    let threshold = (1.0 - delta) * gamma4;
    let bad = par_map(&phases, |&v| -> Result<bool> {
        let mut sum = 0.0;
        for j in 0..m {
            let ld = window_log_det(&params.with_vartheta(v + j as f64 * params.alpha), variant, (0, n_sites as i64 - 1), Boundary::Minus, energy)?;
            sum += ld.log_abs / n_sites as f64;
        }
        Ok(sum / m as f64 <= threshold)
    });
    let mut count = 0;
    for b in bad {
        if b? {
            count += 1;
        }
    }
    Ok(count as f64 / grid as f64)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Verdict {
    Regular,
    Singular,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RegularityReport {
    pub site: i64,
    pub gamma: f64,
    pub k: usize,
    pub verdict: Verdict,
    /// the first window `[n₁, n₂]` found to witness regularity
    pub window: Option<(i64, i64)>,
    pub windows_checked: usize,
}

/// `min(|4n − 4n₁|, |4n₂ + 3 − 4n|)`.
pub fn edge_distance(n: i64, window: (i64, i64)) -> i64 {
    (4 * n - 4 * window.0).abs().min((4 * window.1 + 3 - 4 * n).abs())
}

/// Search the windows `[n₁, n₁+k−1] ∋ n` with edge distance above `4k/5` for
/// one where `|G_{4n, α′}| < e^{−γ|4n − α′|}` at both edge indices `α′`.
pub fn regularity_classify(params: &ModelParams, variant: Variant, energy: f64, n: i64, gamma: f64, k: usize) -> Result<RegularityReport> {
    if k == 0 {
        return Err(Error::param("k", "must be >= 1"));
    }
    let k_i = k as i64;
    let mut checked = 0;
    for n1 in (n - k_i + 1)..=n {
        let w = (n1, n1 + k_i - 1);
        if 5 * edge_distance(n, w) <= 4 * k_i {
            continue;
        }
        checked += 1;
        let g = match green(params, variant, w, Boundary::Minus, energy) {
            Ok(g) => g,
            Err(e) if e.is_numerical_guard() => continue,
            Err(e) => return Err(e),
        };
        let alpha = (4 * (n - n1)) as usize;
        let ok = [0usize, 4 * k - 1].iter().all(|&edge| g.matrix[(alpha, edge)].norm() < (-gamma * alpha.abs_diff(edge) as f64).exp());
        if ok {
            return Ok(RegularityReport { site: n, gamma, k, verdict: Verdict::Regular, window: Some(w), windows_checked: checked });
        }
    }
    Ok(RegularityReport { site: n, gamma, k, verdict: Verdict::Singular, window: None, windows_checked: checked })
}

/// `p^{N±}(ϑ) = det(ℋ − E)` of the flipped plain-cosine model on `window`.
pub fn charpoly(params: &ModelParams, energy: f64, window: (i64, i64), boundary: Boundary, vartheta: f64) -> Result<Complex64> {
    Ok(window_log_det(&params.with_vartheta(vartheta), Variant::CosineFlipped, window, boundary, energy)?.value())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CharpolyReport {
    pub n_sites: usize,
    pub grid: usize,
    /// `max|p|` over the grid, the normalization of every defect
    pub scale: f64,
    pub evenness: f64,
    pub half_period: f64,
    pub shift: f64,
    pub translation: f64,
    /// relative ℓ² weight of odd harmonics and harmonics above `4N`
    pub fourier_tail: f64,
    pub fourier_samples: usize,
}

impl CharpolyReport {
    pub fn max_defect(&self) -> f64 {
        [self.evenness, self.half_period, self.shift, self.translation, self.fourier_tail].into_iter().fold(0.0, f64::max)
    }
}

/// Symmetry defects of `ϑ ↦ p^{N±}(ϑ)` for the flipped plain-cosine model at
/// `φ = 1/4`, on `grid` equispaced phases. The Fourier tail uses `16N + 1` samples.
pub fn charpoly_symmetries(params: &ModelParams, energy: f64, n_sites: usize, grid: usize) -> Result<CharpolyReport> {
    if params.phi != 0.25 {
        return Err(Error::param("phi", "the symmetries hold at phi = 1/4"));
    }
    if n_sites == 0 || grid == 0 {
        return Err(Error::param("N", "window and grid must be positive"));
    }
    let n = n_sites as i64;
    let win = (0, n - 1);
    let alpha = params.alpha;
    let p = |b: Boundary, w: (i64, i64), v: f64| charpoly(params, energy, w, b, v);
    let centre = -((n - 1) as f64) * alpha / 2.0;
    let phases: Vec<f64> = (0..grid).map(|i| i as f64 / grid as f64).collect();
    let rows = par_map(&phases, |&v| -> Result<[f64; 5]> {
        let pm = p(Boundary::Minus, win, v)?;
        let even = (p(Boundary::Minus, win, centre + v)? - p(Boundary::Minus, win, centre - v)?).norm();
        let half = (pm - p(Boundary::Minus, win, v + 0.5)?).norm();
        let pp = p(Boundary::Plus, win, v)?;
        let shift = (pp - p(Boundary::Minus, win, v - alpha / 2.0)?).norm();
        let mut trans: f64 = 0.0;
        for b in [Boundary::Minus, Boundary::Plus] {
            trans = trans.max((p(b, (1, n), v)? - p(b, win, v + alpha)?).norm());
        }
        Ok([pm.norm().max(pp.norm()), even, half, shift, trans])
    });
    let mut acc = [0.0f64; 5];
    for r in rows {
        let r = r?;
        for i in 0..5 {
            acc[i] = acc[i].max(r[i]);
        }
    }
    let scale = acc[0];
    let samples = 16 * n_sites + 1;
    let fourier_tail = fourier_tail(params, energy, n_sites, samples)?;
    Ok(CharpolyReport {
        n_sites,
        grid,
        scale,
        evenness: acc[1] / scale,
        half_period: acc[2] / scale,
        shift: acc[3] / scale,
        translation: acc[4] / scale,
        fourier_tail,
        fourier_samples: samples,
    })
}

fn fourier_tail(params: &ModelParams, energy: f64, n_sites: usize, samples: usize) -> Result<f64> {
    let phases: Vec<f64> = (0..samples).map(|i| i as f64 / samples as f64).collect();
    let vals = par_map(&phases, |&v| charpoly(params, energy, (0, n_sites as i64 - 1), Boundary::Minus, v))
        .into_iter()
        .collect::<Result<Vec<Complex64>>>()?;
    let mut buf = vals;
    rustfft::FftPlanner::<f64>::new().plan_fft_forward(samples).process(&mut buf);
    let mut total = 0.0;
    let mut tail = 0.0;
    for (i, c) in buf.iter().enumerate() {
        // bin i holds harmonic i or i − samples
        let h = if i <= samples / 2 { i } else { samples - i };
        let w = c.norm_sqr();
        total += w;
        if h % 2 != 0 || h > 4 * n_sites {
            tail += w;
        }
    }
    Ok((tail / total).sqrt())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClusterReport {
    pub k: usize,
    /// interpolation phases `ϑⱼ`, `2k + 1` of them
    pub nodes: Vec<f64>,
    /// `log|p^{N−}(ϑⱼ)|` on a window of `k` sites
    pub node_log_abs: Vec<f64>,
    /// `log max_j sup_{z∈[0,1]} |ℓⱼ(z)|` for the Lagrange basis in `z = cos²(2π(ϑ + (k−1)α/2))`
    pub lagrange_log_max: f64,
    /// `max_ϑ (1/4k) log|p^{N−}(ϑ)|` over a 256-point grid
    pub lower_rate: f64,
    /// relative error of reconstructing `p` off the nodes by interpolation
    pub interpolation_defect: f64,
    /// `(1/4k)[log(2k+1) + lagrange_log_max] + |log(w₀/3)| + (γ − 4|log(w₀/3)|)/5`
    pub lemma_upper_rate: f64,
    /// `|log(w₀/3)| − ε`
    pub lower_target: f64,
    /// true when the lemma bound lies below the attained lower rate
    pub contradiction: bool,
}

/// Interpolation bound for two putative singular sites `n₁ < n₂` of the
/// flipped plain-cosine model.
#[allow(clippy::too_many_arguments)]
pub fn singular_cluster_bound(
    params: &ModelParams,
    energy: f64,
    k: usize,
    gamma: f64,
    eps: f64,
    n1: i64,
    n2: i64,
) -> Result<ClusterReport> {
    if k < 2 {
        return Err(Error::param("k", "must be >= 2"));
    }
    if 2 * (n2 - n1) <= k as i64 + 1 {
        return Err(Error::param("n2", "sites must satisfy n2 - n1 > (k+1)/2"));
    }
    let alpha = params.alpha;
    let kf = k as f64;
    let split = 2 * (k + 1).div_ceil(2);
    let x1 = (n1 - (3 * k as i64) / 4) as f64;
    let x2 = (n2 - (3 * k as i64) / 4) as f64;
    let nodes: Vec<f64> = (0..=2 * k)
        .map(|j| {
            let jf = j as f64;
            if j < split {
                params.vartheta + (x1 + (kf - 1.0) / 2.0 + jf / 2.0) * alpha
            } else {
                params.vartheta + (x2 + (kf - 1.0) / 2.0 + jf / 2.0 - (split / 2) as f64) * alpha
            }
        })
        .collect();
    let win = (0, k as i64 - 1);
    let p = |v: f64| charpoly(params, energy, win, Boundary::Minus, v);
    let zof = |v: f64| (2.0 * PI * (v + (kf - 1.0) * alpha / 2.0)).cos().powi(2);
    let node_vals = nodes.iter().map(|&v| p(v)).collect::<Result<Vec<Complex64>>>()?;
    let node_log_abs: Vec<f64> = node_vals.iter().map(|z| z.norm().ln()).collect();
    let z: Vec<f64> = nodes.iter().map(|&v| zof(v)).collect();

    let log_basis = |j: usize, x: f64| -> f64 {
        (0..z.len()).filter(|&l| l != j).map(|l| (x - z[l]).abs().ln() - (z[j] - z[l]).abs().ln()).sum()
    };
    let mut lagrange_log_max = f64::NEG_INFINITY;
    for j in 0..z.len() {
        for i in 0..=2000 {
            let v = log_basis(j, i as f64 / 2000.0);
            if v.is_finite() {
                lagrange_log_max = lagrange_log_max.max(v);
            }
        }
    }

    let grid: Vec<f64> = (0..256).map(|i| i as f64 / 256.0).collect();
    let lower_rate = grid.iter().map(|&v| p(v).map(|x| x.norm().ln())).collect::<Result<Vec<f64>>>()?.into_iter().fold(f64::NEG_INFINITY, f64::max)
        / (4.0 * kf);

    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut interpolation_defect: f64 = 0.0;
    let scale = node_vals.iter().map(|v| v.norm()).fold(0.0, f64::max);
    for _ in 0..8 {
        let v: f64 = rng.random();
        let x = zof(v);
        let mut acc = Complex64::new(0.0, 0.0);
        for j in 0..z.len() {
            let prod: f64 = (0..z.len()).filter(|&l| l != j).map(|l| (x - z[l]) / (z[j] - z[l])).product();
            acc += node_vals[j] / scale * prod;
        }
        let exact = p(v)? / scale;
        interpolation_defect = interpolation_defect.max((acc - exact).norm() / exact.norm().max(1e-300));
    }

    let l = (params.w0 / 3.0).ln().abs();
    let lemma_upper_rate = (((2 * k + 1) as f64).ln() + lagrange_log_max) / (4.0 * kf) + l + (gamma - 4.0 * l) / 5.0;
    let lower_target = l - eps;
    Ok(ClusterReport {
        k,
        nodes,
        node_log_abs,
        lagrange_log_max,
        lower_rate,
        interpolation_defect,
        lemma_upper_rate,
        lower_target,
        contradiction: lemma_upper_rate < lower_target,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn edge_distance_takes_nearer_end() {
        assert_eq!(edge_distance(4, (0, 9)), 16);
        assert_eq!(edge_distance(8, (0, 9)), 7);
    }

    #[test]
    fn envelope_is_nonincreasing() {
        let p = DecayProfile { distance: vec![0, 1, 2, 3], log_green: vec![0.0, -2.0, -1.0, -3.0] };
        assert_eq!(p.envelope(), vec![0.0, -1.0, -1.0, -3.0]);
    }
}
