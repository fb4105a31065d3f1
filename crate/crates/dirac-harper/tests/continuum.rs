use std::f64::consts::PI;

use dirac_harper::continuum::{self, ContinuumParams};
use dirac_harper::Complex64;
use proptest::prelude::*;

fn params(w0: f64, w1: f64, length: f64, k_perp: f64, kx: f64, modes: usize) -> ContinuumParams {
    ContinuumParams::new(w0, w1, length, k_perp, kx, modes).unwrap()
}

fn interior(ev: &[f64], cut: f64) -> Vec<f64> {
    ev.iter().copied().filter(|e| e.abs() < cut).collect()
}

#[test]
fn free_dirac_dispersion() {
    let p = params(0.0, 0.0, 2.0, 0.3, 0.4, 16);
    let ev = continuum::bloch_spectrum(&p).unwrap();
    let mut expect: Vec<f64> = (-16..=16)
        .flat_map(|n| {
            let e = ((2.0 * PI * n as f64 / 2.0 + 0.4).powi(2) + 0.09).sqrt();
            [e, e, -e, -e]
        })
        .collect();
    expect.sort_by(f64::total_cmp);
    assert_eq!(ev.len(), p.dim());
    for (a, b) in ev.iter().zip(&expect) {
        assert!((a - b).abs() < 1e-12);
    }
}

#[test]
fn rejects_too_few_modes() {
    assert!(ContinuumParams::new(1.0, 1.0, 1.0, 0.0, 0.0, 7).is_err());
    assert!(ContinuumParams::new(1.0, 1.0, 0.0, 0.0, 0.0, 8).is_err());
}

#[test]
fn fourier_truncation_self_converges() {
    for (w0, w1) in [(2.0, 2.0), (2.0, 0.0), (0.0, 2.0), (0.5, 1.5)] {
        let a = continuum::bloch_spectrum(&params(w0, w1, 1.0, 0.2, 0.3, 32)).unwrap();
        let b = continuum::bloch_spectrum(&params(w0, w1, 1.0, 0.2, 0.3, 64)).unwrap();
        let cut = 2.0 * PI * 16.0;
        let (a, b) = (interior(&a, cut), interior(&b, cut));
        assert_eq!(a.len(), b.len());
        let d = a.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        assert!(d < 1e-8, "{w0} {w1}: {d:e}");
    }
}

#[test]
fn conjugated_operator_holds_minus_kx() {
    let p = params(1.3, 0.8, 1.0, 0.3, 0.4, 32);
    let ev = continuum::bloch_spectrum(&p).unwrap();
    for &i in &[p.dim() / 2 - 3, p.dim() / 2, p.dim() / 2 + 5] {
        let chk = continuum::conjugation_check(&p, ev[i]).unwrap();
        assert!(chk.defect_minus < 1e-6, "{chk:?}");
    }
    // the same-sign reading fails away from symmetric points
    let chk = continuum::conjugation_check(&p, ev[p.dim() / 2 + 5]).unwrap();
    assert!(chk.defect_plus > 0.1);
}

#[test]
fn free_lowest_branch_spans_one_zone() {
    let p = params(0.0, 0.0, 1.5, 0.0, 0.0, 16);
    let grid = continuum::kx_grid(1.5, 64);
    let t = continuum::flat_band_scan_continuum(&p, &grid).unwrap();
    assert!((t.widths[0].width - 2.0 * PI / 1.5).abs() < 1e-9);
}

#[test]
fn no_flat_continuum_branches() {
    let grid = continuum::kx_grid(1.0, 64);
    for (w0, w1) in [(1.0, 0.0), (0.0, 1.0)] {
        let t = continuum::flat_band_scan_continuum(&params(w0, w1, 1.0, 0.0, 0.0, 32), &grid).unwrap();
        let min = t.widths.iter().map(|b| b.width).fold(f64::INFINITY, f64::min);
        assert!(min > continuum::FLAT_TOL, "{w0} {w1}: {min:e}");
        assert!(t.widths.iter().all(|b| !b.flat));
    }
}

#[test]
fn flat_scan_needs_full_zone() {
    let p = params(1.0, 0.0, 1.0, 0.0, 0.0, 8);
    assert!(continuum::flat_band_scan_continuum(&p, &[0.0, 1.0, 2.0]).is_err());
}

#[test]
fn hadamard_diagonalizes_b() {
    let s = continuum::antichiral_closed_form(0.7, 0.3, 1.0, 1.0, 33).unwrap();
    assert!(s.diagonal_defect < 1e-12);
    let uu = continuum::hadamard_u();
    assert!((uu * uu.adjoint() - nalgebra::Matrix4::identity()).iter().all(|z| z.norm() < 1e-15));
}

#[test]
fn listed_diagonal_is_a_permutation() {
    // entries in the order (iλx − w₀W, iλx + w₀W, −iλx − w₀W, −iλx + w₀W) + ik_x x
    let (lambda, kx, w0, length, x) = (0.9, -0.2, 1.4, 2.0, 0.37);
    let w = w0 * continuum::w_antiderivative(x, length);
    let l = Complex64::new(0.0, lambda * x);
    let k = Complex64::new(0.0, kx * x);
    let listed = [l - w + k, l + w + k, -l - w + k, -l + w + k];
    let ours = continuum::b_diagonal(lambda, kx, w0, length, x);
    for z in listed {
        assert!(ours.iter().any(|y| (y - z).norm() < 1e-14));
    }
    assert!((listed[0] - ours[0]).norm() > 0.1);
}

#[test]
fn quantized_kx_realizes_lambda() {
    let (lambda, w0) = (0.7, 1.0);
    for kx in [2.0 * PI - lambda - w0, 2.0 * PI - lambda + w0, -lambda - w0, 4.0 * PI - lambda + w0] {
        let s = continuum::antichiral_closed_form(lambda, kx, w0, 1.0, 9).unwrap();
        assert!(s.quantization_defect < 1e-12);
        let ev = continuum::bloch_spectrum(&params(w0, 0.0, 1.0, 0.0, kx, 64)).unwrap();
        let d = ev.iter().map(|e| (e - lambda).abs()).fold(f64::INFINITY, f64::min);
        assert!(d < 1e-6, "kx = {kx}: {d:e}");
    }
}

#[test]
fn zero_energy_is_always_reached() {
    for w0 in [0.3f64, 1.0, 2.5] {
        let kx = (-w0).rem_euclid(2.0 * PI);
        let ev = continuum::bloch_spectrum(&params(w0, 0.0, 1.0, 0.0, kx, 32)).unwrap();
        assert!(ev.iter().map(|e| e.abs()).fold(f64::INFINITY, f64::min) < 1e-6);
    }
}

#[test]
fn off_lattice_kx_misses_lambda() {
    let (lambda, w0, kx) = (0.7, 1.0, 0.5);
    let s = continuum::antichiral_closed_form(lambda, kx, w0, 1.0, 9).unwrap();
    assert!(s.quantization_defect > 0.1);
    let ev = continuum::bloch_spectrum(&params(w0, 0.0, 1.0, 0.0, kx, 32)).unwrap();
    assert!(ev.iter().map(|e| (e - lambda).abs()).fold(f64::INFINITY, f64::min) > 1e-3);
}

#[test]
fn monodromy_is_unimodular() {
    for w1 in [0.1, 0.5, 1.0, 2.0] {
        let m = continuum::chiral_monodromy(w1, continuum::DEFAULT_STEPS).unwrap();
        assert!(m.det_defect < 1e-10);
        assert!(m.halving_defect < continuum::HALVING_TOL);
    }
}

#[test]
fn zero_coupling_monodromy_is_identity() {
    let m = continuum::chiral_monodromy(0.0, 1024).unwrap();
    assert_eq!(m.as_matrix(), nalgebra::Matrix2::identity());
}

#[test]
fn monodromy_rejects_coarse_steps() {
    assert!(continuum::chiral_monodromy(0.1, 512).is_err());
}

#[test]
fn first_order_coefficient_is_trace_free() {
    let x1 = continuum::first_order_coefficient(1e-3, continuum::DEFAULT_STEPS);
    assert!(x1.trace().norm() < 1e-6);
    assert!(x1[(0, 1)].norm() > 0.5);
}

#[test]
fn second_order_trace_is_minus_one() {
    // tr X₂(1) = −(∫U⁺)(∫U⁻) by symmetrizing the iterated integral
    let n = 20000;
    let mean = |s: f64| (0..n).map(|i| continuum::u_pm((i as f64 + 0.5) / n as f64, s)).sum::<f64>() / n as f64;
    let oracle = -mean(1.0) * mean(-1.0);
    let t = continuum::trace_expansion(&[0.1, 0.05, 0.025], continuum::DEFAULT_STEPS).unwrap();
    assert!((t.limit - oracle).abs() < 1e-6, "{t:?}");
    assert!((t.limit + 1.0).abs() < 0.01);
}

#[test]
fn zero_energy_excluded_at_small_coupling() {
    let r = continuum::zero_energy_chiral(0.3, &[2048, 4096]).unwrap();
    assert!(r.excluded_at_kx_zero);
    assert!((r.trace_gap - 0.09).abs() < 2e-3, "{r:?}");
    let r0 = continuum::zero_energy_chiral(0.0, &[2048, 4096]).unwrap();
    assert!(!r0.excluded_at_kx_zero);
}

#[test]
fn zero_energy_in_global_spectrum() {
    for w1 in [0.1, 0.3, 1.0] {
        let r = continuum::zero_energy_chiral(w1, &[4096]).unwrap();
        assert!(r.in_spectrum_globally);
        // e^{iμ}ρ = 1 closes the Floquet twist
        assert!(((Complex64::new(0.0, 1.0) * r.mu).exp() * r.rho[0] - 1.0).norm() < 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn closed_form_solves_ode(lambda in -3.0..3.0f64, kx in -3.0..3.0f64, w0 in 0.0..3.0f64, length in 0.5..3.0f64) {
        let s = continuum::antichiral_closed_form(lambda, kx, w0, length, 41).unwrap();
        prop_assert!(s.ode_residual < 1e-8, "{:e}", s.ode_residual);
        prop_assert!(s.diagonal_defect < 1e-12);
    }

    #[test]
    fn union_is_brillouin_periodic(w0 in 0.0..2.0f64, w1 in 0.0..2.0f64, kx in 0.0..6.0f64) {
        let p = params(w0, w1, 1.0, 0.1, kx, 24);
        let a = interior(&continuum::bloch_spectrum(&p).unwrap(), 2.0 * PI * 10.0);
        let b = interior(&continuum::bloch_spectrum(&p.with_kx(kx + 2.0 * PI)).unwrap(), 2.0 * PI * 10.0);
        prop_assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).abs() < 1e-8);
        }
    }
}
