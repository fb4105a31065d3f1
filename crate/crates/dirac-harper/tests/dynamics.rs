use dirac_harper::dynamics::{self, Evolver};
use dirac_harper::{golden_mean, ModelParams};
use proptest::prelude::*;

#[test]
fn gaussian_initial_state() {
    let sigma = 70f64.sqrt();
    let s = dynamics::gaussian_packet(sigma, 0, 1, (-60, 60)).unwrap();
    assert!((s.norm() - 1.0).abs() < 1e-14);
    let z: f64 = (-60..=60).map(|n: i64| (-(n * n) as f64 / 140.0).exp().powi(2)).sum::<f64>().sqrt();
    for n in [-20i64, 0, 7, 33] {
        let i = 4 * (n + 60) as usize;
        assert!((s.amplitudes[i].re - (-(n * n) as f64 / 140.0).exp() / z).abs() < 1e-15);
        assert_eq!(s.amplitudes[i + 1].norm(), 0.0);
    }
}

#[test]
fn zero_time_is_identity() {
    let p = ModelParams::new(1.0, 0.5, golden_mean(), 0.1, 0.0, 0.0).unwrap();
    let ev = Evolver::new(&p, (-40, 40)).unwrap();
    let s = dynamics::gaussian_packet(3.0, 0, 2, (-40, 40)).unwrap();
    let out = ev.evolve(&s, &[0.0]).unwrap();
    for (a, b) in out[0].amplitudes.iter().zip(&s.amplitudes) {
        assert!((a - b).norm() < 1e-12);
    }
}

#[test]
fn free_spreading_is_ballistic() {
    let w = (-140, 140);
    let ev = Evolver::new(&ModelParams::free(), w).unwrap();
    let s = dynamics::gaussian_packet(1e-3, 0, 1, w).unwrap();
    let out = ev.evolve(&s, &[10.0, 25.0, 50.0]).unwrap();
    // ⟨n²⟩ = t² ⟨v²⟩ with v = ±2 sin k and uniform k
    for o in &out {
        assert!((o.second_moment() / o.time.powi(2) - 2.0).abs() < 1e-8);
    }
    let d = dynamics::dynloc_moment(&ev, &s, &[10.0, 20.0, 40.0]).unwrap();
    let r = d.moments[2] / d.moments[1];
    assert!((r - 2.0).abs() < 0.05);
}

#[test]
fn boundary_guard_aborts() {
    let w = (-30, 30);
    let ev = Evolver::new(&ModelParams::free(), w).unwrap();
    let s = dynamics::gaussian_packet(1e-3, 0, 1, w).unwrap();
    match ev.evolve(&s, &[1.0, 40.0]) {
        Err(dirac_harper::Error::BoundaryContamination { time, mass }) => {
            assert_eq!(time, 40.0);
            assert!(mass >= dynamics::GUARD_MASS);
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn strong_coupling_moment_saturates() {
    let p = ModelParams::anti_chiral(30.0, golden_mean());
    let w = (-100, 99);
    let ev = Evolver::new(&p, w).unwrap();
    let s = dynamics::gaussian_packet(70f64.sqrt(), 0, 1, w).unwrap();
    let grid = dynamics::geometric_times(0.1, 1e4, dynamics::DEFAULT_PER_DECADE).unwrap();
    let half: Vec<f64> = grid.iter().copied().filter(|&t| t <= 5e3).collect();
    let full = dynamics::dynloc_moment(&ev, &s, &grid).unwrap().grid_sup;
    let part = dynamics::dynloc_moment(&ev, &s, &half).unwrap().grid_sup;
    assert!(full / part < 1.05);
    assert!(full >= part);
}

#[test]
fn single_site_moment_is_one() {
    let w = (-20, 20);
    let ev = Evolver::new(&ModelParams::free(), w).unwrap();
    let s = dynamics::gaussian_packet(1e-3, 0, 3, w).unwrap();
    let d = dynamics::dynloc_moment(&ev, &s, &[0.0]).unwrap();
    assert!((d.grid_sup - 1.0).abs() < 1e-12);
}

#[test]
fn free_layers_stay_decoupled() {
    let w = (-60, 60);
    let ev = Evolver::new(&ModelParams::free(), w).unwrap();
    let s = dynamics::gaussian_packet(4.0, 0, 1, w).unwrap();
    let out = ev.evolve(&s, &[1.0, 5.0, 20.0]).unwrap();
    for (_, m) in dynamics::layer_trace(&out) {
        assert!(m[2] < 1e-20 && m[3] < 1e-20);
        assert!((m.iter().sum::<f64>() - 1.0).abs() < 1e-10);
    }
}

#[test]
fn weak_coupling_layer_oscillation() {
    let p = ModelParams::anti_chiral(0.1, golden_mean());
    let w = (-160, 159);
    let ev = Evolver::new(&p, w).unwrap();
    let s = dynamics::gaussian_packet(70f64.sqrt(), 0, 1, w).unwrap();
    let times: Vec<f64> = (0..30).map(|i| i as f64).collect();
    let m: Vec<f64> = dynamics::layer_trace(&ev.evolve(&s, &times).unwrap()).iter().map(|x| x.1[0]).collect();
    let drops = m.windows(2).filter(|w| w[1] < w[0]).count();
    let rises = m.windows(2).filter(|w| w[1] > w[0]).count();
    assert!(drops > 3 && rises > 3);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn unitary_reversible_energy_conserving(w0 in 0.0..3.0f64, w1 in 0.0..3.0f64, theta in 0.0..1.0f64, t in 0.0..30.0f64) {
        let p = ModelParams::new(w0, w1, golden_mean(), theta, 0.0, 0.0).unwrap();
        let w = (-40, 40);
        let ev = Evolver::new(&p, w).unwrap();
        let s = dynamics::gaussian_packet(2.0, 0, 1, w).unwrap();
        let fwd = ev.evolve_unguarded(&s, &[t]).unwrap().pop().unwrap();
        prop_assert!((fwd.norm() - 1.0).abs() < 1e-10);
        prop_assert!((ev.energy(&fwd).unwrap() - ev.energy(&s).unwrap()).abs() < 1e-9);
        let back = ev.evolve_unguarded(&fwd, &[0.0]).unwrap().pop().unwrap();
        for (a, b) in back.amplitudes.iter().zip(&s.amplitudes) {
            prop_assert!((a - b).norm() < 1e-8);
        }
    }
}
