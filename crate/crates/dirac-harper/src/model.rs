//! Constants, potentials and Hamiltonian builders.
//!
//! Internal components per site are ordered `(A₁, B₁, A₂, B₂)`: sublattices A, B
//! of layer 1 followed by layer 2. Matrices are indexed from zero.

use std::f64::consts::PI;

use faer::Mat;
use nalgebra::{Matrix2, Matrix4};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::linalg::{self, CMat, LogDet};
use crate::{Error, Result};

pub type Block = Matrix4<Complex64>;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

fn frac(x: f64) -> f64 {
    x - x.floor()
}

/// The Pauli matrices `σ₁, σ₂, σ₃`.
pub fn pauli() -> [Matrix2<Complex64>; 3] {
    let z = c(0.0);
    let o = c(1.0);
    [
        Matrix2::new(z, o, o, z),
        Matrix2::new(z, -I, I, z),
        Matrix2::new(o, z, z, -o),
    ]
}

fn diag2(s: &Matrix2<Complex64>) -> Block {
    let mut m = Block::zeros();
    m.fixed_view_mut::<2, 2>(0, 0).copy_from(s);
    m.fixed_view_mut::<2, 2>(2, 2).copy_from(s);
    m
}

/// `γ₁₅ = diag(σ₁, σ₁)`; also the on-site kinetic term `t₀`.
pub fn gamma15() -> Block {
    diag2(&pauli()[0])
}

/// `γ₂₅ = diag(σ₂, σ₂)`.
pub fn gamma25() -> Block {
    diag2(&pauli()[1])
}

/// Nearest-neighbour hopping `t(θ) = cos(2πθ)γ₁₅ + sin(2πθ)γ₂₅`.
pub fn hopping_t(theta: f64) -> Block {
    let a = 2.0 * PI * theta;
    gamma15() * c(a.cos()) + gamma25() * c(a.sin())
}

/// The layer flip `P = diag(1, σ₁, 1)`, swapping components 1 and 2.
pub fn layer_flip() -> Block {
    let mut p = Block::zeros();
    p[(0, 0)] = c(1.0);
    p[(1, 2)] = c(1.0);
    p[(2, 1)] = c(1.0);
    p[(3, 3)] = c(1.0);
    p
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Potential {
    /// `U(x) = (1 + 2cos 2πx)/3`
    U,
    /// `U_c⁺(x) = (1 − cos 2πx + √3 sin 2πx)/3`
    UcPlus,
    /// `U_c⁻(x) = (1 − cos 2πx − √3 sin 2πx)/3`
    UcMinus,
    /// `cos 2πx`, used by the modified model
    Cosine,
}

impl Potential {
    pub fn eval(self, x: f64) -> f64 {
        let a = 2.0 * PI * x;
        let s3 = 3f64.sqrt();
        match self {
            Potential::U => (1.0 + 2.0 * a.cos()) / 3.0,
            Potential::UcPlus => (1.0 - a.cos() + s3 * a.sin()) / 3.0,
            Potential::UcMinus => (1.0 - a.cos() - s3 * a.sin()) / 3.0,
            Potential::Cosine => a.cos(),
        }
    }

    /// Analytic continuation to a complex phase.
    pub fn eval_complex(self, z: Complex64) -> Complex64 {
        let a = z * (2.0 * PI);
        let s3 = 3f64.sqrt();
        match self {
            Potential::U => (1.0 + 2.0 * a.cos()) / 3.0,
            Potential::UcPlus => (1.0 - a.cos() + s3 * a.sin()) / 3.0,
            Potential::UcMinus => (1.0 - a.cos() - s3 * a.sin()) / 3.0,
            Potential::Cosine => a.cos(),
        }
    }
}

/// Free function form of [`Potential::eval`].
pub fn potential(kind: Potential, x: f64) -> f64 {
    kind.eval(x)
}

/// Couplings and phases of the model. Phases are stored reduced mod 1.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// anti-chiral coupling
    pub w0: f64,
    /// chiral coupling
    pub w1: f64,
    /// inverse moiré length `1/L`
    pub alpha: f64,
    /// transverse quasimomentum
    pub theta: f64,
    /// A/B dislocation offset
    pub phi: f64,
    /// phase offset
    pub vartheta: f64,
}

impl ModelParams {
    pub fn new(w0: f64, w1: f64, alpha: f64, theta: f64, phi: f64, vartheta: f64) -> Result<Self> {
        for (field, v) in [("w0", w0), ("w1", w1)] {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::param(field, format!("must be finite and >= 0, got {v}")));
            }
        }
        for (field, v) in [("alpha", alpha), ("theta", theta), ("phi", phi), ("vartheta", vartheta)] {
            if !v.is_finite() {
                return Err(Error::param(field, format!("must be finite, got {v}")));
            }
        }
        Ok(ModelParams {
            w0,
            w1,
            alpha: frac(alpha),
            theta: frac(theta),
            phi: frac(phi),
            vartheta: frac(vartheta),
        })
    }

    pub fn free() -> Self {
        ModelParams { w0: 0.0, w1: 0.0, alpha: crate::golden_mean(), theta: 0.0, phi: 0.0, vartheta: 0.0 }
    }

    pub fn anti_chiral(w0: f64, alpha: f64) -> Self {
        ModelParams { w0, w1: 0.0, alpha: frac(alpha), ..Self::free() }
    }

    pub fn chiral(w1: f64, alpha: f64) -> Self {
        ModelParams { w0: 0.0, w1, alpha: frac(alpha), ..Self::free() }
    }

    pub fn with_theta(mut self, theta: f64) -> Self {
        self.theta = frac(theta);
        self
    }

    pub fn with_phi(mut self, phi: f64) -> Self {
        self.phi = frac(phi);
        self
    }

    pub fn with_vartheta(mut self, vartheta: f64) -> Self {
        self.vartheta = frac(vartheta);
        self
    }

    pub fn with_alpha(mut self, alpha: f64) -> Self {
        self.alpha = frac(alpha);
        self
    }

    /// Phase `ϑ + nα` of site `n`.
    pub fn phase(&self, n: i64) -> f64 {
        self.vartheta + n as f64 * self.alpha
    }
}

/// Which on-site potential layout to use.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Variant {
    /// The full model with `U` and `U_c^±`.
    #[default]
    Standard,
    /// Anti-chiral only, with `U` replaced by `cos 2πx`.
    Cosine,
    /// [`Variant::Cosine`] conjugated sitewise by the layer flip.
    CosineFlipped,
}

/// Restriction flavour for finite windows.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Boundary {
    /// Whole sites `n₁..=n₂`.
    #[default]
    Minus,
    /// The window shifted by two components: the last two components of
    /// `n₁ − 1`, sites `n₁..n₂`, and the first two components of `n₂`.
    Plus,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum BoundaryTag {
    Minus,
    Plus,
    Floquet { bloch_phase: f64 },
}

/// The potential block `V_w` at a (possibly complex) site phase `x = ϑ + nα`.
///
/// Anti-chiral entries sit at `x ∓ φα`, chiral entries at `x`. For complex `x`
/// the block is the analytic continuation (symmetric, not Hermitian).
pub fn potential_block(p: &ModelParams, variant: Variant, x: Complex64) -> Block {
    let mut v = Block::zeros();
    let shift = c(p.phi * p.alpha);
    let (ac, w1) = match variant {
        Variant::Standard => (Potential::U, p.w1),
        Variant::Cosine | Variant::CosineFlipped => (Potential::Cosine, 0.0),
    };
    let a_minus = p.w0 * ac.eval_complex(x - shift);
    let a_plus = p.w0 * ac.eval_complex(x + shift);
    v[(0, 2)] = a_minus;
    v[(2, 0)] = a_minus;
    v[(1, 3)] = a_plus;
    v[(3, 1)] = a_plus;
    if w1 != 0.0 {
        let cm = w1 * Potential::UcMinus.eval_complex(x);
        let cp = w1 * Potential::UcPlus.eval_complex(x);
        v[(0, 3)] = cm;
        v[(3, 0)] = cm;
        v[(1, 2)] = cp;
        v[(2, 1)] = cp;
    }
    if variant == Variant::CosineFlipped {
        let f = layer_flip();
        f * v * f
    } else {
        v
    }
}

/// The 4×4 block `V_w(n)` of site `n`.
pub fn site_potential(p: &ModelParams, n: i64) -> Block {
    potential_block(p, Variant::Standard, c(p.phase(n)))
}

/// On-site block `t₀ + V_w` in the given variant's basis.
pub fn onsite_block(p: &ModelParams, variant: Variant, x: Complex64) -> Block {
    let t0 = if variant == Variant::CosineFlipped {
        let f = layer_flip();
        f * gamma15() * f
    } else {
        gamma15()
    };
    t0 + potential_block(p, variant, x)
}

/// Hopping block `H(n, n+1)` in the given variant's basis.
pub fn hop_block(p: &ModelParams, variant: Variant) -> Block {
    if variant == Variant::CosineFlipped {
        let f = layer_flip();
        f * hopping_t(p.theta) * f
    } else {
        hopping_t(p.theta)
    }
}

/// A block-tridiagonal restriction kept in structured form, for windows too
/// large to store densely.
#[derive(Clone, Debug)]
pub struct BlockChain {
    pub window: (i64, i64),
    pub boundary: Boundary,
    /// on-site blocks of the chain sites (one extra leading site for `Plus`)
    diag: Vec<Block>,
    hop: Block,
    offset: usize,
    dim: usize,
}

/// Half bandwidth of a block-tridiagonal matrix with 4×4 blocks.
pub const CHAIN_BANDWIDTH: usize = 7;

impl BlockChain {
    pub fn new(p: &ModelParams, variant: Variant, window: (i64, i64), boundary: Boundary) -> Result<Self> {
        let (n1, n2) = window;
        if n2 < n1 {
            return Err(Error::EmptyWindow { n1, n2 });
        }
        let first = match boundary {
            Boundary::Minus => n1,
            Boundary::Plus => n1 - 1,
        };
        let diag = (first..=n2).map(|n| onsite_block(p, variant, c(p.phase(n)))).collect();
        Ok(BlockChain {
            window,
            boundary,
            diag,
            hop: hop_block(p, variant),
            offset: if boundary == Boundary::Plus { 2 } else { 0 },
            dim: 4 * (n2 - n1 + 1) as usize,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn sites(&self) -> usize {
        self.dim / 4
    }

    pub fn entry(&self, i: usize, j: usize) -> Complex64 {
        let (ci, cj) = (i + self.offset, j + self.offset);
        let (bi, bj) = (ci / 4, cj / 4);
        let (ri, rj) = (ci % 4, cj % 4);
        if bi == bj {
            self.diag[bi][(ri, rj)]
        } else if bj == bi + 1 {
            self.hop[(ri, rj)]
        } else if bi == bj + 1 {
            self.hop[(rj, ri)].conj()
        } else {
            Complex64::new(0.0, 0.0)
        }
    }

    pub fn dense(&self) -> CMat {
        Mat::from_fn(self.dim, self.dim, |i, j| self.entry(i, j))
    }

    /// `log det(H − E)` through banded elimination.
    pub fn log_det_shifted(&self, energy: Complex64) -> LogDet {
        linalg::band_log_det(self.dim, CHAIN_BANDWIDTH, CHAIN_BANDWIDTH, |i, j| {
            if i == j {
                self.entry(i, j) - energy
            } else {
                self.entry(i, j)
            }
        })
    }
}

/// A dense Hermitian matrix assembled from 4×4 site blocks.
#[derive(Clone, Debug)]
pub struct SiteBlockMatrix {
    pub window: (i64, i64),
    pub boundary: BoundaryTag,
    pub entries: CMat,
}

impl SiteBlockMatrix {
    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn hermiticity_defect(&self) -> f64 {
        linalg::hermiticity_defect(self.entries.as_ref())
    }

    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        linalg::hermitian_eigenvalues(self.entries.as_ref())
    }

    pub fn eigen(&self) -> Result<(Vec<f64>, CMat)> {
        linalg::hermitian_eigen(self.entries.as_ref())
    }

    /// The 4×4 block at site offsets `(a, b)` counted from the window start.
    pub fn block(&self, a: usize, b: usize) -> Block {
        Block::from_fn(|i, j| self.entries[(4 * a + i, 4 * b + j)])
    }
}

fn finite(p: &ModelParams, variant: Variant, window: (i64, i64), boundary: Boundary) -> Result<SiteBlockMatrix> {
    let chain = BlockChain::new(p, variant, window, boundary)?;
    Ok(SiteBlockMatrix {
        window,
        boundary: match boundary {
            Boundary::Minus => BoundaryTag::Minus,
            Boundary::Plus => BoundaryTag::Plus,
        },
        entries: chain.dense(),
    })
}

/// The `4N × 4N` restriction of the Hamiltonian to `window` with Dirichlet data.
pub fn build_finite(p: &ModelParams, window: (i64, i64), boundary: Boundary) -> Result<SiteBlockMatrix> {
    finite(p, Variant::Standard, window, boundary)
}

/// The plain-cosine anti-chiral variant; `w₁` is ignored.
pub fn build_modified(p: &ModelParams, window: (i64, i64), boundary: Boundary) -> Result<SiteBlockMatrix> {
    finite(p, Variant::Cosine, window, boundary)
}

/// Any variant, dense.
pub fn build_variant(
    p: &ModelParams,
    variant: Variant,
    window: (i64, i64),
    boundary: Boundary,
) -> Result<SiteBlockMatrix> {
    finite(p, variant, window, boundary)
}

/// Largest denominator accepted by the dense Floquet builder.
pub const FLOQUET_MAX_Q: u64 = 4096;

/// The `4q × 4q` Bloch matrix of the `q`-periodic operator at `α = p/q` and
/// Bloch phase `k`. Sites `0..q` carry phases `ϑ + n p/q`.
pub fn build_floquet_pq(params: &ModelParams, p: u64, q: u64, k: f64) -> Result<SiteBlockMatrix> {
    if q == 0 || p >= q {
        return Err(Error::param("alpha", format!("{p}/{q} is not a reduced fraction in [0,1)")));
    }
    if crate::arith::gcd(p, q) != 1 {
        return Err(Error::param("alpha", format!("{p}/{q} is not in lowest terms")));
    }
    if q > FLOQUET_MAX_Q {
        return Err(Error::param("alpha", format!("denominator {q} exceeds {FLOQUET_MAX_Q}")));
    }
    let mut pr = *params;
    pr.alpha = p as f64 / q as f64;
    let q = q as usize;
    let t = hopping_t(pr.theta);
    let bloch = Complex64::from_polar(1.0, k);
    let mut m = Mat::<Complex64>::zeros(4 * q, 4 * q);
    let mut add = |a: usize, b: usize, blk: &Block| {
        for i in 0..4 {
            for j in 0..4 {
                m[(4 * a + i, 4 * b + j)] += blk[(i, j)];
            }
        }
    };
    for n in 0..q {
        add(n, n, &onsite_block(&pr, Variant::Standard, c(pr.phase(n as i64))));
        if n + 1 < q {
            add(n, n + 1, &t);
            add(n + 1, n, &t.adjoint());
        }
    }
    add(q - 1, 0, &(t * bloch));
    add(0, q - 1, &(t.adjoint() * bloch.conj()));
    Ok(SiteBlockMatrix {
        window: (0, q as i64 - 1),
        boundary: BoundaryTag::Floquet { bloch_phase: k },
        entries: m,
    })
}

/// [`build_floquet_pq`] with `p/q` recovered from `params.alpha`.
pub fn build_floquet(params: &ModelParams, k: f64) -> Result<SiteBlockMatrix> {
    let (p, q) = crate::arith::detect_rational(params.alpha, crate::arith::RATIONAL_TOL, crate::arith::RATIONAL_MAX_Q)
        .ok_or(Error::NotRational { alpha: params.alpha, max_q: crate::arith::RATIONAL_MAX_Q })?;
    build_floquet_pq(params, p, q, k)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: Complex64, b: f64) -> bool {
        (a - c(b)).norm() < 1e-13
    }

    #[test]
    fn potentials_at_special_points() {
        assert!((potential(Potential::U, 0.0) - 1.0).abs() < 1e-15);
        assert!((potential(Potential::U, 0.5) + 1.0 / 3.0).abs() < 1e-15);
        assert!(potential(Potential::UcPlus, 0.0).abs() < 1e-15);
        assert!(potential(Potential::UcMinus, 0.0).abs() < 1e-15);
    }

    #[test]
    fn chiral_potential_sine_form() {
        for x in [0.1, 0.37, 0.9] {
            let a = 2.0 * PI * x;
            let plus = (1.0 + 2.0 * (a - PI / 6.0).sin()) / 3.0;
            let minus = (1.0 - 2.0 * (a + PI / 6.0).sin()) / 3.0;
            assert!((potential(Potential::UcPlus, x) - plus).abs() < 1e-14);
            assert!((potential(Potential::UcMinus, x) - minus).abs() < 1e-14);
        }
    }

    #[test]
    fn complex_potential_restricts_to_real() {
        for kind in [Potential::U, Potential::UcPlus, Potential::UcMinus, Potential::Cosine] {
            let z = kind.eval_complex(c(0.31));
            assert!((z.re - kind.eval(0.31)).abs() < 1e-14 && z.im.abs() < 1e-14);
        }
    }

    #[test]
    fn hopping_special_angles() {
        assert!((hopping_t(0.0) - gamma15()).norm() < 1e-15);
        assert!((hopping_t(0.25) - gamma25()).norm() < 1e-15);
    }

    #[test]
    fn anti_chiral_layout_at_origin() {
        let p = ModelParams::anti_chiral(1.0, 0.3);
        let v = site_potential(&p, 0);
        for (i, j) in [(0, 2), (1, 3), (2, 0), (3, 1)] {
            assert!(close(v[(i, j)], 1.0), "({i},{j})");
        }
        assert!(v.iter().filter(|z| z.norm() > 0.0).count() == 4);
    }

    #[test]
    fn chiral_vanishes_at_zero_phase() {
        let p = ModelParams::chiral(1.0, 0.3);
        assert!(site_potential(&p, 0).norm() < 1e-15);
    }

    #[test]
    fn free_single_site() {
        let m = build_finite(&ModelParams::free(), (0, 0), Boundary::Minus).unwrap();
        let ev = m.eigenvalues().unwrap();
        let want = [-1.0, -1.0, 1.0, 1.0];
        for (a, b) in ev.iter().zip(want) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn empty_window_rejected() {
        assert!(matches!(
            build_finite(&ModelParams::free(), (3, 2), Boundary::Minus),
            Err(Error::EmptyWindow { .. })
        ));
    }

    #[test]
    fn modified_single_site_entries() {
        let p = ModelParams::anti_chiral(1.0, 0.3).with_phi(0.25);
        let m = build_modified(&p, (0, 0), Boundary::Minus).unwrap();
        let a = 2.0 * PI * 0.25 * 0.3;
        assert!(close(m.entries[(0, 2)], a.cos()));
        assert!(close(m.entries[(1, 3)], a.cos()));
    }
}
