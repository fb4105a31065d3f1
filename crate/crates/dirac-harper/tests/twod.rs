use std::f64::consts::PI;

use dirac_harper::linalg;
use dirac_harper::twod::{self, Harmonic, Potential2d, TwoDParams};

fn params(w: f64, side: (usize, usize), pot: Potential2d) -> TwoDParams {
    TwoDParams::new(w, 0.5 * (5f64.sqrt() - 1.0), 1.0 / PI, ((-3, side.0 as i64 - 4), (2, side.1 as i64 + 1)), pot).unwrap()
}

fn dirichlet(n: usize) -> Vec<f64> {
    (1..=n).map(|k| 2.0 * (PI * k as f64 / (n + 1) as f64).cos()).collect()
}

#[test]
fn decoupled_laplacians() {
    let p = params(0.0, (7, 5), Potential2d::Constant(1.0));
    let e = linalg::hermitian_eigenvalues(twod::build_2d(&p).as_ref()).unwrap();
    let mut expect: Vec<f64> = dirichlet(7).iter().flat_map(|a| dirichlet(5).into_iter().flat_map(move |b| [a + b, a + b])).collect();
    expect.sort_by(f64::total_cmp);
    for (x, y) in e.iter().zip(&expect) {
        assert!((x - y).abs() < 1e-12);
    }
}

#[test]
fn constant_coupling_shifts_by_w() {
    let p = params(2.0, (6, 6), Potential2d::Constant(1.0));
    let e = linalg::hermitian_eigenvalues(twod::build_2d(&p).as_ref()).unwrap();
    let mut expect: Vec<f64> = dirichlet(6)
        .iter()
        .flat_map(|a| dirichlet(6).into_iter().flat_map(move |b| [a + b + 2.0, a + b - 2.0]))
        .collect();
    expect.sort_by(f64::total_cmp);
    for (x, y) in e.iter().zip(&expect) {
        assert!((x - y).abs() < 1e-12);
    }
}

#[test]
fn hamiltonian_is_hermitian() {
    let p = params(1.3, (8, 9), Potential2d::Product(Harmonic::new(0.2, 1.0, 0.1), Harmonic::new(0.0, 1.0, 0.0)));
    assert!(linalg::hermiticity_defect(twod::build_2d(&p).as_ref()) < 1e-13);
}

#[test]
fn fixed_sign_conjugation_is_block_diagonal() {
    for pot in [
        Potential2d::Product(Harmonic::new(1.5, 1.0, 0.0), Harmonic::new(2.0, -1.0, 0.3)),
        Potential2d::Sum(Harmonic::new(-1.5, 1.0, 0.0), Harmonic::new(-2.0, 0.5, 0.3)),
        Potential2d::Constant(-0.7),
    ] {
        let r = twod::block_diag_2d(&params(1.7, (10, 9), pot)).unwrap();
        assert_eq!(r.sign_change_bonds, 0);
        assert!(r.off_block_residual < 1e-12, "{r:?}");
        assert!(r.spectrum_defect < 1e-10);
        assert!(r.conjugation_defect < 1e-10);
        assert!(r.unitarity_defect < 1e-14);
        assert!(r.entry_defect < 1e-12);
    }
}

#[test]
fn sign_changes_flip_hopping_signs() {
    let r = twod::block_diag_2d(&params(1.0, (10, 10), Potential2d::Product(Harmonic::new(0.0, 1.0, 0.1), Harmonic::new(0.3, 1.0, 0.0)))).unwrap();
    assert!(r.sign_change_bonds > 0);
    // across a sign change ΠP₊P₋ = diag(1, −1): still block diagonal, but
    // the second block sees a reversed bond
    assert!(r.off_block_residual < 1e-12);
    assert!((r.entry_defect - 2.0).abs() < 1e-12);
    assert!(r.conjugation_defect < 1e-10);
    // a site-independent Hadamard rotation already block-diagonalizes H
    assert!(r.spectrum_defect < 1e-10);
}

#[test]
fn additive_potential_splits_into_chains() {
    let p = params(1.2, (9, 11), Potential2d::Sum(Harmonic::new(1.5, 1.0, 0.0), Harmonic::new(2.0, 1.0, 0.2)));
    let r = twod::separable_check(&p).unwrap();
    assert!(r.fixed_sign);
    assert!(r.minkowski_defect < 1e-8, "{r:?}");
}

#[test]
fn product_potential_does_not_split() {
    let p = params(1.2, (9, 11), Potential2d::Product(Harmonic::new(1.5, 1.0, 0.0), Harmonic::new(2.0, 1.0, 0.2)));
    let r = twod::separable_check(&p).unwrap();
    assert!(r.fixed_sign);
    assert!(r.minkowski_defect > 0.1, "{r:?}");
}

#[test]
fn separable_check_needs_two_factors() {
    assert!(twod::separable_check(&params(1.0, (4, 4), Potential2d::Constant(1.0))).is_err());
}

#[test]
fn tabulated_matches_builtin() {
    let f = Harmonic::new(0.4, 1.0, 0.0);
    let g = Harmonic::new(1.0, 0.5, 0.25);
    let (m1, m2) = (4, 4);
    let values = (0..m1).flat_map(|i| (0..m2).map(move |j| f.eval(i as f64 / 4.0) * g.eval(j as f64 / 4.0))).collect();
    let table = Potential2d::Tabulated { m1, m2, values };
    let a = TwoDParams::new(1.0, 0.25, 0.25, ((0, 7), (0, 7)), table).unwrap();
    let b = TwoDParams::new(1.0, 0.25, 0.25, ((0, 7), (0, 7)), Potential2d::Product(f, g)).unwrap();
    let d = twod::build_2d(&a) - twod::build_2d(&b);
    assert!(d.norm_max() < 1e-14);
}
