use dirac_harper::greens::{self, Verdict};
use dirac_harper::model::{self, gamma15, Block};
use dirac_harper::{golden_mean, Boundary, Complex64, ModelParams, Variant};
use nalgebra::Matrix3;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const G4: f64 = 9.21035;

fn c(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

fn random_params(rng: &mut ChaCha8Rng) -> ModelParams {
    ModelParams::new(
        rng.random_range(0.0..5.0),
        rng.random_range(0.0..5.0),
        rng.random(),
        rng.random(),
        rng.random(),
        rng.random(),
    )
    .unwrap()
}

#[test]
fn single_site_free_green() {
    let g = greens::green(&ModelParams::free(), Variant::Standard, (0, 0), Boundary::Minus, 5.0).unwrap();
    // γ₁₅² = I, so (γ₁₅ − 5)⁻¹ = −(γ₁₅ + 5)/24
    let exact = -(gamma15() + Block::identity() * c(5.0)) / c(24.0);
    assert!((g.block(0, 0) - exact).norm() < 1e-14);
}

#[test]
fn resolvent_identity_random() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..10 {
        let p = random_params(&mut rng);
        let e = rng.random_range(-3.0..3.0);
        let g = greens::green(&p, Variant::Standard, (0, 49), Boundary::Minus, e).unwrap();
        assert!(g.residual < 1e-8, "{}", g.residual);
    }
}

#[test]
fn near_singular_energy_is_rejected() {
    let p = ModelParams::anti_chiral(1.0, golden_mean());
    let ev = model::build_finite(&p, (0, 9), Boundary::Minus).unwrap().eigenvalues().unwrap();
    let err = greens::green(&p, Variant::Standard, (0, 9), Boundary::Minus, ev[7]).unwrap_err();
    assert!(matches!(err, dirac_harper::Error::NearSingular { .. }));
}

#[test]
fn eigenfunction_reconstruction() {
    let p = ModelParams::new(1.5, 0.8, golden_mean(), 0.2, 0.1, 0.3).unwrap();
    let (ev, vecs) = model::build_finite(&p, (0, 59), Boundary::Minus).unwrap().eigen().unwrap();
    let j = 117;
    let f = |n: usize, i: usize| vecs[(4 * n + i, j)];
    let g = greens::green(&p, Variant::Standard, (20, 39), Boundary::Minus, ev[j]).unwrap();
    let left = [f(19, 0), f(19, 1), f(19, 2), f(19, 3)];
    let right = [f(40, 0), f(40, 1), f(40, 2), f(40, 3)];
    let rec = g.reconstruct(&model::hop_block(&p, Variant::Standard), &left, &right);
    let scale = (0..vecs.nrows()).map(|i| vecs[(i, j)].norm()).fold(0.0, f64::max);
    for (i, r) in rec.iter().enumerate() {
        assert!((r - vecs[(80 + i, j)]).norm() < 1e-6 * scale);
    }
}

#[test]
fn cramer_identity_random_windows() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        let p = random_params(&mut rng);
        let n = rng.random_range(1..=20i64);
        let n1 = rng.random_range(-5..5i64);
        let boundary = if rng.random::<bool>() { Boundary::Plus } else { Boundary::Minus };
        let e = rng.random_range(-4.0..4.0);
        let a = rng.random_range(0..4 * n as usize);
        let b = rng.random_range(0..4 * n as usize);
        let w = (n1, n1 + n - 1);
        let g = greens::green(&p, Variant::Standard, w, boundary, e).unwrap();
        let det = greens::window_log_det(&p, Variant::Standard, w, boundary, e).unwrap();
        let mu = greens::minor_matrix(&p, Variant::Standard, w, boundary, e, a, b).unwrap();
        worst = worst.max(greens::cramer_defect(&g, det, mu, a, b));
    }
    assert!(worst < 1e-6, "{worst}");
}

#[test]
fn single_site_minor_is_cofactor() {
    let p = ModelParams::new(1.2, 0.7, 0.3, 0.1, 0.2, 0.4).unwrap();
    let e = 0.35;
    let m = model::onsite_block(&p, Variant::Standard, c(p.phase(0))) - Block::identity() * c(e);
    for a in 0..4 {
        for b in 0..4 {
            let rows: Vec<usize> = (0..4).filter(|&i| i != a).collect();
            let cols: Vec<usize> = (0..4).filter(|&j| j != b).collect();
            let sub = Matrix3::from_fn(|i, j| m[(rows[i], cols[j])]);
            let mu = greens::minor_matrix(&p, Variant::Standard, (0, 0), Boundary::Minus, e, a, b).unwrap();
            assert!((mu.value() - sub.determinant()).norm() < 1e-12);
        }
    }
}

#[test]
fn klein_constant_stable_under_doubling() {
    let p = ModelParams::anti_chiral(30.0, golden_mean());
    let c20 = greens::klein_fit(&p, Variant::Standard, 0.0, 20, 200, 1).unwrap().constant;
    let c40 = greens::klein_fit(&p, Variant::Standard, 0.0, 40, 200, 1).unwrap().constant;
    assert!(c20.is_finite() && c40.is_finite());
    assert!(c40 <= c20 + 0.01, "{c20} {c40}");
}

#[test]
fn green_decays_at_the_average_exponent() {
    let p = ModelParams::anti_chiral(30.0, golden_mean());
    let good = (0..64)
        .filter(|&i| greens::good_green_check(&p.with_vartheta(i as f64 / 64.0), Variant::Standard, 0.0, 60, 0.1, G4 / 4.0).unwrap().good)
        .count();
    assert!(good * 10 >= 64 * 9, "{good}");
}

#[test]
fn green_does_not_decay_at_the_summed_exponent() {
    let p = ModelParams::anti_chiral(30.0, golden_mean());
    let good = (0..64)
        .filter(|&i| greens::good_green_check(&p.with_vartheta(i as f64 / 64.0), Variant::Standard, 0.0, 60, 0.1, G4).unwrap().good)
        .count();
    assert_eq!(good, 0);
}

#[test]
fn decay_slope_matches_top_exponent() {
    let g = greens::green(&ModelParams::anti_chiral(30.0, golden_mean()), Variant::Standard, (0, 59), Boundary::Minus, 0.0).unwrap();
    let prof = greens::decay_profile(&g);
    assert!((prof.slope() + (10f64).ln()).abs() < 0.15, "{}", prof.slope());
    let env = prof.envelope();
    assert!(env.windows(2).all(|w| w[1] <= w[0]));
}

#[test]
fn free_green_is_not_good() {
    let r = greens::good_green_check(&ModelParams::free(), Variant::Standard, 0.0, 60, 0.1, 1.0).unwrap();
    assert!(!r.good);
}

#[test]
fn bad_set_is_small_and_shrinks() {
    let p = ModelParams::anti_chiral(30.0, golden_mean());
    let f20 = greens::bad_set_measure(&p, Variant::Standard, 0.0, 40, 20, 0.2, G4, 256).unwrap();
    let f40 = greens::bad_set_measure(&p, Variant::Standard, 0.0, 40, 40, 0.2, G4, 256).unwrap();
    assert!(f20 < 0.05);
    assert!(f40 <= f20);
    assert_eq!(greens::bad_set_measure(&p, Variant::Standard, 0.0, 40, 5, 0.999, G4, 64).unwrap(), 0.0);
}

fn localized_state() -> (ModelParams, f64, i64) {
    let p = ModelParams::anti_chiral(30.0, golden_mean());
    let (ev, vecs) = model::build_finite(&p, (-100, 100), Boundary::Minus).unwrap().eigen().unwrap();
    let mut best = (f64::INFINITY, 0.0, 0);
    for j in 0..ev.len() {
        let peak = (0..vecs.nrows()).max_by(|&a, &b| vecs[(a, j)].norm().partial_cmp(&vecs[(b, j)].norm()).unwrap()).unwrap();
        let site = (peak / 4) as i64 - 100;
        let score = site.abs() as f64 + ev[j].abs();
        if score < best.0 {
            best = (score, ev[j], site);
        }
    }
    (p, best.1, best.2)
}

#[test]
fn regularity_away_from_localization_centre() {
    let (p, e, peak) = localized_state();
    // |α − α′| counts components, four per site
    let gamma = G4 / 32.0;
    for d in [-50i64, -45, 45, 50] {
        let r = greens::regularity_classify(&p, Variant::Standard, e, peak + d, gamma, 40).unwrap();
        assert_eq!(r.verdict, Verdict::Regular, "site {}", peak + d);
        let w = r.window.unwrap();
        assert!(5 * greens::edge_distance(peak + d, w) > 4 * 40);
    }
    let centre = greens::regularity_classify(&p, Variant::Standard, e, peak, gamma, 40).unwrap();
    assert_eq!(centre.verdict, Verdict::Singular);
}

#[test]
fn regularity_fails_at_half_the_summed_exponent() {
    let (p, e, peak) = localized_state();
    let r = greens::regularity_classify(&p, Variant::Standard, e, peak + 50, G4 / 2.0, 40).unwrap();
    assert_eq!(r.verdict, Verdict::Singular);
}

#[test]
fn free_sites_are_singular() {
    for gamma in [0.05, 0.5] {
        let r = greens::regularity_classify(&ModelParams::free(), Variant::Standard, 0.3, 0, gamma, 40).unwrap();
        assert_eq!(r.verdict, Verdict::Singular);
    }
}

#[test]
fn charpoly_symmetries_except_shift() {
    let p = ModelParams::anti_chiral(2.0, golden_mean()).with_phi(0.25);
    let r = greens::charpoly_symmetries(&p, 0.3, 12, 64).unwrap();
    assert!(r.evenness < 1e-8);
    assert!(r.half_period < 1e-8);
    assert!(r.translation < 1e-8);
    assert!(r.fourier_tail < 1e-8);
    assert_eq!(r.fourier_samples, 16 * 12 + 1);
    // the plus and minus restrictions have different boundary blocks
    assert!(r.shift > 0.1);
}

#[test]
fn charpoly_free_is_phase_independent() {
    let p = ModelParams::anti_chiral(0.0, golden_mean()).with_phi(0.25);
    let a = greens::charpoly(&p, 0.3, (0, 11), Boundary::Minus, 0.1).unwrap();
    let b = greens::charpoly(&p, 0.3, (0, 11), Boundary::Minus, 0.77).unwrap();
    assert!((a - b).norm() < 1e-12 * a.norm());
}

#[test]
fn charpoly_requires_quarter_offset() {
    assert!(greens::charpoly_symmetries(&ModelParams::anti_chiral(2.0, 0.3), 0.3, 4, 8).is_err());
}

#[test]
fn cluster_lower_bound_and_interpolation() {
    let p = ModelParams::anti_chiral(30.0, golden_mean()).with_phi(0.25);
    let r = greens::singular_cluster_bound(&p, 0.0, 20, G4, 0.1, 0, 15).unwrap();
    assert_eq!(r.nodes.len(), 41);
    assert!(r.lower_rate >= r.lower_target);
    assert!(r.interpolation_defect < 1e-6);
}

#[test]
fn lagrange_growth_rate_decays_with_k() {
    let p = ModelParams::anti_chiral(30.0, golden_mean()).with_phi(0.25);
    let rate = |k: usize| {
        let r = greens::singular_cluster_bound(&p, 0.0, k, G4, 0.1, 0, (3 * k / 4) as i64).unwrap();
        r.lagrange_log_max / k as f64
    };
    let (a, b) = (rate(20), rate(60));
    assert!(b < a && b < 0.1, "{a} {b}");
}

#[test]
fn cluster_bound_separates_only_below_summed_exponent() {
    let p = ModelParams::anti_chiral(30.0, golden_mean()).with_phi(0.25);
    let full = greens::singular_cluster_bound(&p, 0.0, 40, G4, 0.1, 0, 30).unwrap();
    assert!(!full.contradiction);
    let quarter = greens::singular_cluster_bound(&p, 0.0, 40, G4 / 4.0, 0.1, 0, 30).unwrap();
    assert!(quarter.contradiction);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn cramer_defect_small(w0 in 0.0..4.0f64, w1 in 0.0..4.0f64, alpha in 0.0..1.0f64, e in -3.0..3.0f64,
                           n in 1i64..8, a in 0usize..32, b in 0usize..32) {
        let p = ModelParams::new(w0, w1, alpha, 0.0, 0.0, 0.0).unwrap();
        let (a, b) = (a % (4 * n as usize), b % (4 * n as usize));
        let g = greens::green(&p, Variant::Standard, (0, n - 1), Boundary::Minus, e);
        prop_assume!(g.is_ok());
        let g = g.unwrap();
        let det = greens::window_log_det(&p, Variant::Standard, (0, n - 1), Boundary::Minus, e).unwrap();
        let mu = greens::minor_matrix(&p, Variant::Standard, (0, n - 1), Boundary::Minus, e, a, b).unwrap();
        prop_assert!(greens::cramer_defect(&g, det, mu, a, b) < 1e-6);
    }

    #[test]
    fn charpoly_translation(v in 0.0..1.0f64, n in 2i64..8) {
        let p = ModelParams::anti_chiral(2.0, golden_mean()).with_phi(0.25);
        for b in [Boundary::Minus, Boundary::Plus] {
            let x = greens::charpoly(&p, 0.3, (1, n), b, v).unwrap();
            let y = greens::charpoly(&p, 0.3, (0, n - 1), b, v + p.alpha).unwrap();
            prop_assert!((x - y).norm() <= 1e-9 * x.norm().max(1.0));
        }
    }
}
