//! The continuum low-energy model `ℒ(k_x)` on `L²(ℝ/Lℤ; ℂ⁴)`.
//!
//! Continuum potentials carry no `1/3`: `U(y) = 1 + 2cos 2πy` and
//! `U^±(y) = 1 − cos 2πy ± √3 sin 2πy`, so that `D_x W(x/L) = U(x/L)` with
//! `D_x = −i d/dx`.

use std::f64::consts::PI;

use faer::Mat;
use nalgebra::{Matrix2, Matrix4, Vector4};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::linalg::{self, CMat};
use crate::{Error, Result};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

fn c(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

fn max_norm<const R: usize, const C: usize>(m: &nalgebra::SMatrix<Complex64, R, C>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Continuum `U(y) = 1 + 2cos 2πy`.
pub fn u(y: f64) -> f64 {
    1.0 + 2.0 * (2.0 * PI * y).cos()
}

/// Continuum `U^±(y)`; `sign = +1` or `−1`.
pub fn u_pm(y: f64, sign: f64) -> f64 {
    let a = 2.0 * PI * y;
    1.0 - a.cos() + sign * 3f64.sqrt() * a.sin()
}

/// Fourier coefficients `(f₀, f₁)` with `f₋₁ = conj(f₁)`.
fn harmonics_u() -> (Complex64, Complex64) {
    (c(1.0), c(1.0))
}

fn harmonics_pm(sign: f64) -> (Complex64, Complex64) {
    // −cos → −1/2 on ±1; ±√3 sin → ∓ i√3/2 on +1
    (c(1.0), Complex64::new(-0.5, -sign * 3f64.sqrt() / 2.0))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContinuumParams {
    pub w0: f64,
    pub w1: f64,
    /// moiré length `L`
    pub length: f64,
    pub k_perp: f64,
    pub kx: f64,
    /// modes `n ∈ [−n_modes, n_modes]`
    pub n_modes: usize,
}

pub const DEFAULT_MODES: usize = 64;

impl ContinuumParams {
    pub fn new(w0: f64, w1: f64, length: f64, k_perp: f64, kx: f64, n_modes: usize) -> Result<Self> {
        for (field, v) in [("w0", w0), ("w1", w1), ("k_perp", k_perp), ("kx", kx)] {
            if !v.is_finite() {
                return Err(Error::param(field, "must be finite"));
            }
        }
        if !(length > 0.0 && length.is_finite()) {
            return Err(Error::param("length", "must be positive"));
        }
        if n_modes < 8 {
            return Err(Error::param("n_modes", "must be at least 8"));
        }
        Ok(ContinuumParams { w0, w1, length, k_perp, kx, n_modes })
    }

    pub fn with_kx(mut self, kx: f64) -> Self {
        self.kx = kx;
        self
    }

    pub fn with_modes(mut self, n_modes: usize) -> Self {
        self.n_modes = n_modes;
        self
    }

    pub fn dim(&self) -> usize {
        4 * (2 * self.n_modes + 1)
    }

    /// Brillouin period `2π/L`.
    pub fn period(&self) -> f64 {
        2.0 * PI / self.length
    }
}

/// `ℒ(k_x)` in the basis `e^{2πinx/L} ⊗ e_c`, index `4(n + n_modes) + c`.
pub fn bloch_matrix(p: &ContinuumParams) -> CMat {
    let m = 2 * p.n_modes + 1;
    let mut h = Mat::<Complex64>::zeros(4 * m, 4 * m);
    let (u0, u1) = harmonics_u();
    let (pp0, pp1) = harmonics_pm(1.0);
    let (pm0, pm1) = harmonics_pm(-1.0);
    // (row, col, coupling, harmonics) for the potential entries
    let pots = [
        (0, 2, p.w0, u0, u1),
        (1, 3, p.w0, u0, u1),
        (0, 3, p.w1, pm0, pm1),
        (1, 2, p.w1, pp0, pp1),
    ];
    for i in 0..m {
        let d = 2.0 * PI * (i as f64 - p.n_modes as f64) / p.length + p.kx;
        let b = 4 * i;
        for layer in [0, 2] {
            h[(b + layer, b + layer + 1)] = Complex64::new(d, -p.k_perp);
            h[(b + layer + 1, b + layer)] = Complex64::new(d, p.k_perp);
        }
        for &(r, s, w, f0, f1) in &pots {
            if w == 0.0 {
                continue;
            }
            h[(b + r, b + s)] += w * f0;
            h[(b + s, b + r)] += w * f0;
            // f(x/L) maps mode n to n + 1 with weight f₁
            if i + 1 < m {
                let a = 4 * (i + 1);
                h[(a + r, b + s)] += w * f1;
                h[(a + s, b + r)] += w * f1;
                h[(b + s, a + r)] += w * f1.conj();
                h[(b + r, a + s)] += w * f1.conj();
            }
        }
    }
    h
}

/// Ascending eigenvalues of [`bloch_matrix`].
pub fn bloch_spectrum(p: &ContinuumParams) -> Result<Vec<f64>> {
    linalg::hermitian_eigenvalues(bloch_matrix(p).as_ref())
}

/// `ℒ̂_λ(0) = diag(σ₁, σ₁)(ℒ(0) − λ)` at the same truncation.
pub fn conjugated_matrix(p: &ContinuumParams, lambda: f64) -> CMat {
    let h = bloch_matrix(&p.with_kx(0.0));
    let n = h.nrows();
    Mat::from_fn(n, n, |i, j| {
        let r = i ^ 1;
        h[(r, j)] - if r == j { c(lambda) } else { c(0.0) }
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConjugationCheck {
    pub lambda: f64,
    pub kx: f64,
    /// `min_μ |μ + k_x|` over `Spec ℒ̂_λ(0)`
    pub defect_minus: f64,
    /// `min_μ |μ − k_x|`
    pub defect_plus: f64,
}

/// For an eigenvalue `λ` of `ℒ(k_x)`, locates `∓k_x` in `Spec ℒ̂_λ(0)`.
/// Since `ℒ̂_λ(k_x) = ℒ̂_λ(0) + k_x`, the nullspace condition puts `−k_x`
/// in the spectrum.
pub fn conjugation_check(p: &ContinuumParams, lambda: f64) -> Result<ConjugationCheck> {
    let mu = linalg::eigenvalues(conjugated_matrix(p, lambda).as_ref())?;
    let dist = |target: f64| mu.iter().map(|z| (z - target).norm()).fold(f64::INFINITY, f64::min);
    Ok(ConjugationCheck { lambda, kx: p.kx, defect_minus: dist(-p.kx), defect_plus: dist(p.kx) })
}

/// `count` equispaced points on `[0, 2π/L]`, both ends included.
pub fn kx_grid(length: f64, count: usize) -> Vec<f64> {
    let per = 2.0 * PI / length;
    if count < 2 {
        return vec![0.0];
    }
    (0..count).map(|j| per * j as f64 / (count - 1) as f64).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BranchWidth {
    pub branch: usize,
    pub min: f64,
    pub max: f64,
    pub width: f64,
    pub flat: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FlatBandTable {
    pub kx: Vec<f64>,
    /// `energies[j][b]`: branch `b` at `kx[j]`
    pub energies: Vec<Vec<f64>>,
    pub widths: Vec<BranchWidth>,
    /// Some adjacent sorted eigenvalues came within `FLAT_TOL`, so the
    /// widths are those of sorted-index curves.
    pub crossings_suspected: bool,
}

pub const FLAT_TOL: f64 = 1e-6;

/// Sorted-index branch widths of `ℒ(k_x)` over `kx_grid`.
pub fn flat_band_scan_continuum(p: &ContinuumParams, kx_grid: &[f64]) -> Result<FlatBandTable> {
    let per = p.period();
    let (lo, hi) = kx_grid.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &k| (a.min(k), b.max(k)));
    if kx_grid.len() < 2 || lo > 1e-12 || hi < per - 1e-12 {
        return Err(Error::param("kx_grid", "must cover [0, 2π/L]"));
    }
    let energies = crate::par_map(kx_grid, |&k| bloch_spectrum(&p.with_kx(k))).into_iter().collect::<Result<Vec<_>>>()?;
    let nb = p.dim();
    let widths = (0..nb)
        .map(|b| {
            let (min, max) = energies.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, z), e| (a.min(e[b]), z.max(e[b])));
            BranchWidth { branch: b, min, max, width: max - min, flat: max - min < FLAT_TOL }
        })
        .collect();
    let crossings_suspected = energies.iter().any(|e| e.windows(2).any(|w| w[1] - w[0] < FLAT_TOL));
    Ok(FlatBandTable { kx: kx_grid.to_vec(), energies, widths, crossings_suspected })
}

// ---- anti-chiral closed form ----

/// `𝒰` diagonalizing `B(λ, x)`.
pub fn hadamard_u() -> Matrix4<Complex64> {
    Matrix4::from_row_slice(&[
        -1.0, 1.0, -1.0, 1.0, //
        -1.0, -1.0, 1.0, 1.0, //
        1.0, -1.0, -1.0, 1.0, //
        1.0, 1.0, 1.0, 1.0,
    ])
    .map(|x| c(x / 2.0))
}

/// `W(x/L) = iL(x/L + sin(2πx/L)/π)`.
pub fn w_antiderivative(x: f64, length: f64) -> Complex64 {
    I * length * (x / length + (2.0 * PI * x / length).sin() / PI)
}

fn symmetric_pattern(diag: Complex64, off: Complex64, pot: Complex64) -> Matrix4<Complex64> {
    let z = c(0.0);
    Matrix4::from_row_slice(&[
        diag, z, off, pot, //
        z, diag, pot, off, //
        off, pot, diag, z, //
        pot, off, z, diag,
    ])
}

/// `A(λ, x)` of the anti-chiral ODE `D_x φ + A φ = 0`.
pub fn a_matrix(lambda: f64, kx: f64, w0: f64, length: f64, x: f64) -> Matrix4<Complex64> {
    symmetric_pattern(c(kx), c(-lambda), c(w0 * u(x / length)))
}

/// `B(λ, x)` with `D_x B = A`.
pub fn b_matrix(lambda: f64, kx: f64, w0: f64, length: f64, x: f64) -> Matrix4<Complex64> {
    symmetric_pattern(I * kx * x, -I * lambda * x, w0 * w_antiderivative(x, length))
}

/// Diagonal of `𝒰 B 𝒰*`.
pub fn b_diagonal(lambda: f64, kx: f64, w0: f64, length: f64, x: f64) -> [Complex64; 4] {
    let w = w0 * w_antiderivative(x, length);
    let l = I * lambda * x;
    let k = I * kx * x;
    [-l - w + k, l - w + k, l + w + k, -l + w + k]
}

/// Diagonal of `𝒰 A 𝒰*`, the `D_x` derivative of [`b_diagonal`].
fn a_diagonal(lambda: f64, kx: f64, w0: f64, length: f64, x: f64) -> [Complex64; 4] {
    let w = c(w0 * u(x / length));
    let l = c(lambda);
    let k = c(kx);
    [-l - w + k, l - w + k, l + w + k, -l + w + k]
}

/// `e^{−B(λ, x)} φ₀` through the diagonal form.
pub fn closed_form_solution(lambda: f64, kx: f64, w0: f64, length: f64, x: f64, phi0: &Vector4<Complex64>) -> Vector4<Complex64> {
    let uu = hadamard_u();
    let d = b_diagonal(lambda, kx, w0, length, x);
    let e = Matrix4::from_diagonal(&Vector4::from_iterator(d.iter().map(|z| (-z).exp())));
    uu.adjoint() * e * uu * phi0
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AntichiralSolution {
    pub lambda: f64,
    pub kx: f64,
    pub w0: f64,
    pub length: f64,
    pub grid: Vec<f64>,
    /// `solutions[j][i]`: `φ(x_i)` for `φ₀ = e_j`
    pub solutions: Vec<Vec<[Complex64; 4]>>,
    /// `max_x ‖𝒰B𝒰* − diag‖`
    pub diagonal_defect: f64,
    /// `max |D_x φ + Aφ|` by a nine-point stencil
    pub ode_residual: f64,
    /// `min dist((λ ± w₀ ± k_x)L, 2πℤ)`
    pub quantization_defect: f64,
}

fn dist_2pi_z(x: f64) -> f64 {
    let r = x.rem_euclid(2.0 * PI);
    r.min(2.0 * PI - r)
}

const STENCIL: [f64; 4] = [4.0 / 5.0, -1.0 / 5.0, 4.0 / 105.0, -1.0 / 280.0];

/// Closed-form anti-chiral solutions at `k_⊥ = 0` on `points` grid points of `[0, L]`.
pub fn antichiral_closed_form(lambda: f64, kx: f64, w0: f64, length: f64, points: usize) -> Result<AntichiralSolution> {
    if length.is_nan() || length <= 0.0 || points < 2 {
        return Err(Error::param("length", "need L > 0 and at least two grid points"));
    }
    let grid: Vec<f64> = (0..points).map(|i| length * i as f64 / (points - 1) as f64).collect();
    let uu = hadamard_u();
    let mut diagonal_defect: f64 = 0.0;
    let mut ode_residual: f64 = 0.0;
    // eighth-order stencil with step well below the fastest local frequency
    let omega = lambda.abs() + kx.abs() + 3.0 * w0.abs() + 2.0 * PI / length;
    let h = 0.05 / omega;
    let mut solutions: Vec<Vec<[Complex64; 4]>> = (0..4).map(|_| Vec::with_capacity(points)).collect();
    for &x in &grid {
        let conj = uu * b_matrix(lambda, kx, w0, length, x) * uu.adjoint();
        let d = b_diagonal(lambda, kx, w0, length, x);
        let target = Matrix4::from_diagonal(&Vector4::from_iterator(d));
        diagonal_defect = diagonal_defect.max(max_norm(&(conj - target)));
        let a = a_matrix(lambda, kx, w0, length, x);
        for (j, sol) in solutions.iter_mut().enumerate() {
            let e = Vector4::from_fn(|i, _| if i == j { c(1.0) } else { c(0.0) });
            let f = |y: f64| closed_form_solution(lambda, kx, w0, length, y, &e);
            let phi = f(x);
            let dphi = STENCIL.iter().enumerate().fold(Vector4::zeros(), |acc, (i, &w)| acc + f(x + (i as f64 + 1.0) * h) * c(w) - f(x - (i as f64 + 1.0) * h) * c(w)) / c(h);
            ode_residual = ode_residual.max(max_norm(&(dphi * (-I) + a * phi)));
            sol.push([phi[0], phi[1], phi[2], phi[3]]);
        }
    }
    let mut quantization_defect = f64::INFINITY;
    for s0 in [1.0, -1.0] {
        for s1 in [1.0, -1.0] {
            quantization_defect = quantization_defect.min(dist_2pi_z((lambda + s0 * w0 + s1 * kx) * length));
        }
    }
    Ok(AntichiralSolution { lambda, kx, w0, length, grid, solutions, diagonal_defect, ode_residual, quantization_defect })
}

/// `‖𝒰A𝒰* − diag‖_max`.
pub fn a_diagonal_defect(lambda: f64, kx: f64, w0: f64, length: f64, x: f64) -> f64 {
    let uu = hadamard_u();
    let conj = uu * a_matrix(lambda, kx, w0, length, x) * uu.adjoint();
    let d = a_diagonal(lambda, kx, w0, length, x);
    max_norm(&(conj - Matrix4::from_diagonal(&Vector4::from_iterator(d))))
}

// ---- chiral monodromy ----

pub const DEFAULT_STEPS: usize = 4096;
pub const MIN_STEPS: usize = 1024;
pub const HALVING_TOL: f64 = 1e-8;

/// `𝒰(x) = [[0, U⁺(x)], [U⁻(x), 0]]`.
pub fn chiral_coupling(x: f64) -> Matrix2<Complex64> {
    Matrix2::new(c(0.0), c(u_pm(x, 1.0)), c(u_pm(x, -1.0)), c(0.0))
}

/// `X(1)` for `X' = −i w₁ 𝒰(x) X`, classical RK4 with `steps` steps.
pub fn integrate_fundamental(w1: f64, steps: usize) -> Matrix2<Complex64> {
    let h = 1.0 / steps as f64;
    let f = |x: f64, m: &Matrix2<Complex64>| chiral_coupling(x) * m * (-I * w1);
    let mut x_mat = Matrix2::identity();
    for s in 0..steps {
        let x = s as f64 * h;
        let k1 = f(x, &x_mat);
        let k2 = f(x + h / 2.0, &(x_mat + k1 * c(h / 2.0)));
        let k3 = f(x + h / 2.0, &(x_mat + k2 * c(h / 2.0)));
        let k4 = f(x + h, &(x_mat + k3 * c(h)));
        x_mat += (k1 + k2 * c(2.0) + k3 * c(2.0) + k4) * c(h / 6.0);
    }
    x_mat
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MonodromyResult {
    pub matrix: [[Complex64; 2]; 2],
    pub w1: f64,
    pub step: f64,
    pub det_defect: f64,
    pub trace: Complex64,
    /// `‖M(h) − M(h/2)‖_max`
    pub halving_defect: f64,
}

impl MonodromyResult {
    pub fn as_matrix(&self) -> Matrix2<Complex64> {
        Matrix2::new(self.matrix[0][0], self.matrix[0][1], self.matrix[1][0], self.matrix[1][1])
    }
}

/// The monodromy matrix `M(w₁) = X(1, w₁)` with a step-halving check.
pub fn chiral_monodromy(w1: f64, steps: usize) -> Result<MonodromyResult> {
    if steps < MIN_STEPS {
        return Err(Error::param("steps", "must be at least 1024"));
    }
    if !w1.is_finite() {
        return Err(Error::param("w1", "must be finite"));
    }
    let m = integrate_fundamental(w1, steps);
    let fine = integrate_fundamental(w1, 2 * steps);
    let halving_defect = max_norm(&(m - fine));
    if halving_defect > HALVING_TOL {
        return Err(Error::NotConverged { defect: halving_defect });
    }
    Ok(MonodromyResult {
        matrix: [[m[(0, 0)], m[(0, 1)]], [m[(1, 0)], m[(1, 1)]]],
        w1,
        step: 1.0 / steps as f64,
        det_defect: (m.determinant() - 1.0).norm(),
        trace: m.trace(),
        halving_defect,
    })
}

/// `X₁(1) ≈ (M(w) − M(−w))/(2w)`, accurate to `O(w²)`.
pub fn first_order_coefficient(w: f64, steps: usize) -> Matrix2<Complex64> {
    (integrate_fundamental(w, steps) - integrate_fundamental(-w, steps)) / c(2.0 * w)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TraceExpansion {
    pub couplings: Vec<f64>,
    /// `(tr M(w₁) − 2)/w₁²`
    pub ratios: Vec<f64>,
    /// Richardson limit `w₁ → 0`
    pub limit: f64,
}

/// Richardson extrapolation of `(tr M − 2)/w₁²` on a halving sequence of couplings.
pub fn trace_expansion(couplings: &[f64], steps: usize) -> Result<TraceExpansion> {
    if couplings.len() < 2 || couplings.windows(2).any(|w| ((w[0] / w[1]) - 2.0).abs() > 1e-12) {
        return Err(Error::param("couplings", "need at least two couplings, each half the previous"));
    }
    let ratios = couplings
        .iter()
        .map(|&w| chiral_monodromy(w, steps).map(|m| (m.trace.re - 2.0) / (w * w)))
        .collect::<Result<Vec<_>>>()?;
    // the ratio is even in w₁, so errors go like w₁², w₁⁴, …
    let mut table = ratios.clone();
    let mut factor = 4.0;
    while table.len() > 1 {
        table = table.windows(2).map(|w| (factor * w[1] - w[0]) / (factor - 1.0)).collect();
        factor *= 4.0;
    }
    Ok(TraceExpansion { couplings: couplings.to_vec(), ratios, limit: table[0] })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ZeroEnergyReport {
    pub w1: f64,
    pub in_spectrum_globally: bool,
    pub excluded_at_kx_zero: bool,
    /// Floquet eigenvalues `ρ` of `M`
    pub rho: [Complex64; 2],
    /// `μ = i log ρ₀`, making `e^{iμx} X(x) v` periodic
    pub mu: Complex64,
    pub trace_gap: f64,
    pub integration_error: f64,
}

/// Zero-energy analysis of the chiral model at `k_⊥ = 0` using
/// monodromies computed at each step count in `steps_grid`.
pub fn zero_energy_chiral(w1: f64, steps_grid: &[usize]) -> Result<ZeroEnergyReport> {
    let results = steps_grid.iter().map(|&s| chiral_monodromy(w1, s)).collect::<Result<Vec<_>>>()?;
    let Some(best) = results.iter().min_by(|a, b| a.step.total_cmp(&b.step)) else {
        return Err(Error::param("steps_grid", "must be nonempty"));
    };
    let spread = results.iter().map(|r| (r.trace - best.trace).norm()).fold(0.0, f64::max);
    let integration_error = spread.max(best.halving_defect);
    let m = best.as_matrix();
    let tr = m.trace();
    let disc = (tr * tr - m.determinant() * 4.0).sqrt();
    let rho = [(tr + disc) / 2.0, (tr - disc) / 2.0];
    let r0 = if rho[0].norm() > 0.0 { rho[0] } else { rho[1] };
    let trace_gap = (tr - 2.0).norm();
    Ok(ZeroEnergyReport {
        w1,
        in_spectrum_globally: r0.norm() > 0.0,
        excluded_at_kx_zero: trace_gap > 10.0 * integration_error,
        rho,
        mu: I * r0.ln(),
        trace_gap,
        integration_error,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonics_match_potentials() {
        for &y in &[0.0, 0.13, 0.5, 0.77] {
            let e = Complex64::from_polar(1.0, 2.0 * PI * y);
            let (a0, a1) = harmonics_u();
            assert!(((a0 + a1 * e + a1.conj() * e.conj()).re - u(y)).abs() < 1e-14);
            for s in [1.0, -1.0] {
                let (b0, b1) = harmonics_pm(s);
                assert!(((b0 + b1 * e + b1.conj() * e.conj()).re - u_pm(y, s)).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn bloch_matrix_is_hermitian() {
        let p = ContinuumParams::new(1.3, 0.7, 2.0, 0.4, 0.9, 8).unwrap();
        let h = bloch_matrix(&p);
        assert!(linalg::hermiticity_defect(h.as_ref()) < 1e-15);
    }

    #[test]
    fn a_is_diagonalized_too() {
        assert!(a_diagonal_defect(0.7, 0.3, 1.1, 1.7, 0.4) < 1e-12);
    }
}
