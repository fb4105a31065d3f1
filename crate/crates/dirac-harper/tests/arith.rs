use dirac_harper::arith::{self, ExactAlpha};
use dirac_harper::golden_mean;
use proptest::prelude::*;

#[test]
fn golden_mean_convergents_are_fibonacci() {
    let cf = arith::convergents(golden_mean(), 20).unwrap();
    assert!(!cf.rational);
    assert!(cf.partial_quotients.iter().skip(1).take(15).all(|&a| a == 1));
    let q: Vec<u64> = cf.convergents.iter().map(|c| c.1).take(8).collect();
    assert_eq!(q, vec![1, 1, 2, 3, 5, 8, 13, 21]);
}

#[test]
fn golden_margin_stays_positive() {
    let m = arith::diophantine_margin(&ExactAlpha::from_f64(golden_mean()).unwrap(), 0.1, 10_000, 1.0).unwrap();
    // k = 1 attains 1 − 0.618…
    assert_eq!(m.k, 1);
    assert!((m.margin - (1.0 - golden_mean())).abs() < 1e-15);
    // beyond the first convergents the margin sits near 1/√5
    let tail = arith::diophantine_margin_range(&ExactAlpha::from_f64(golden_mean()).unwrap(), 0.1, 10, 10_000, 1.0).unwrap();
    assert!(tail.margin > 0.4 && tail.margin < 1.0 / 5f64.sqrt() + 1e-3, "{tail:?}");
}

#[test]
fn rational_margin_vanishes_at_denominator() {
    let a = ExactAlpha::from_ratio(3, 7).unwrap();
    let m = arith::diophantine_margin(&a, 0.0, 20, 1.0).unwrap();
    assert_eq!((m.k, m.margin), (7, 0.0));
    assert!(!m.passes);
    assert_eq!(arith::detect_rational(3.0 / 7.0, arith::RATIONAL_TOL, arith::RATIONAL_MAX_Q), Some((3, 7)));
}

#[test]
fn liouville_margin_is_tiny() {
    // k = 10⁶ clears the first three blocks of digits
    let m = arith::diophantine_margin(&arith::liouville_example(30), 1e-6, 1_000_000, 1.0).unwrap();
    assert!(m.margin < 1e-6, "{m:?}");
}

#[test]
fn decimal_input_is_exact() {
    let a = ExactAlpha::from_decimal("0.125").unwrap();
    assert_eq!((a.num, a.den), (125, 1000));
    assert!(ExactAlpha::from_decimal("1.5").is_err());
    assert!(ExactAlpha::from_f64(1.5).is_err());
}

#[test]
fn classification_labels() {
    assert_eq!(arith::classify(0.25, 20, 0.1, 1000, 1.0).unwrap().classification, "rational");
    assert_eq!(arith::classify(golden_mean(), 30, 0.1, 1000, 1.0).unwrap().classification, "diophantine");
}

#[test]
fn singular_matrix_rejected() {
    let t = arith::Mat8::zeros();
    let v = arith::Vec8::from_element(dirac_harper::Complex64::new(1.0, 0.0)).normalize();
    assert!(arith::ch_norm_bound(&t, &v).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn cayley_hamilton_bound(entries in prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 64),
                             v in prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 8), scale in -3.0..3.0f64) {
        let t = arith::Mat8::from_fn(|i, j| dirac_harper::Complex64::new(entries[8 * i + j].0, entries[8 * i + j].1) * 10f64.powf(scale));
        let v = arith::Vec8::from_fn(|i, _| dirac_harper::Complex64::new(v[i].0, v[i].1));
        prop_assume!(v.norm() > 1e-3);
        if let Ok(b) = arith::ch_norm_bound(&t, &v.normalize()) {
            prop_assert!(b >= 0.125);
        }
    }

    #[test]
    fn convergents_approximate(x in 0.001..0.999f64) {
        let cf = arith::convergents(x, 12).unwrap();
        for &(p, q) in &cf.convergents {
            prop_assert!((x - p as f64 / q as f64).abs() <= 1.0 / (q as f64 * q as f64) + 1e-15);
        }
    }
}
