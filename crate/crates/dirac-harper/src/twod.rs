//! Two twisted square lattices coupled by a moiré tunneling potential.
//!
//! Each site of the window carries two components (one per lattice). The
//! kinetic term is the nearest-neighbour sum `u_{n+e₁} + u_{n−e₁} + u_{n+e₂} + u_{n−e₂}`
//! on each lattice with Dirichlet boundary, and the tunneling term is
//! `w U(n₁α₁, n₂α₂) σ₁`.

use std::f64::consts::PI;

use faer::Mat;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::linalg::{self, CMat};
use crate::{Error, Result};

/// Largest accepted window side.
pub const MAX_SIDE: usize = 64;

/// `offset + amplitude·cos(2π(x + shift))`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Harmonic {
    pub offset: f64,
    pub amplitude: f64,
    pub shift: f64,
}

impl Harmonic {
    pub fn new(offset: f64, amplitude: f64, shift: f64) -> Self {
        Harmonic { offset, amplitude, shift }
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.offset + self.amplitude * (2.0 * PI * (x + self.shift)).cos()
    }

    /// True when the factor cannot vanish.
    pub fn fixed_sign(&self) -> bool {
        self.offset.abs() > self.amplitude.abs()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Potential2d {
    Constant(f64),
    /// `U₁(x₁)·U₂(x₂)`
    Product(Harmonic, Harmonic),
    /// `U₁(x₁) + U₂(x₂)`
    Sum(Harmonic, Harmonic),
    /// Values on an `m₁ × m₂` grid over `[0,1)²` (row-major in `x₁`),
    /// periodically bilinearly interpolated.
    Tabulated { m1: usize, m2: usize, values: Vec<f64> },
}

impl Potential2d {
    pub fn eval(&self, x1: f64, x2: f64) -> f64 {
        match self {
            Potential2d::Constant(c) => *c,
            Potential2d::Product(a, b) => a.eval(x1) * b.eval(x2),
            Potential2d::Sum(a, b) => a.eval(x1) + b.eval(x2),
            Potential2d::Tabulated { m1, m2, values } => {
                let (y1, y2) = (x1.rem_euclid(1.0) * *m1 as f64, x2.rem_euclid(1.0) * *m2 as f64);
                let (i, j) = (y1.floor() as usize % m1, y2.floor() as usize % m2);
                let (f, g) = (y1 - y1.floor(), y2 - y2.floor());
                let v = |a: usize, b: usize| values[(a % m1) * m2 + b % m2];
                (1.0 - f) * (1.0 - g) * v(i, j) + f * (1.0 - g) * v(i + 1, j) + (1.0 - f) * g * v(i, j + 1) + f * g * v(i + 1, j + 1)
            }
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            Potential2d::Tabulated { m1, m2, values } => {
                if *m1 == 0 || *m2 == 0 || values.len() != m1 * m2 {
                    return Err(Error::param("potential", "table shape does not match its values"));
                }
                if values.iter().any(|v| !v.is_finite()) {
                    return Err(Error::param("potential", "table values must be finite"));
                }
            }
            Potential2d::Constant(c) if !c.is_finite() => return Err(Error::param("potential", "must be finite")),
            _ => {}
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TwoDParams {
    pub w: f64,
    pub alpha1: f64,
    pub alpha2: f64,
    /// inclusive ranges `(n₁ range, n₂ range)`
    pub window: ((i64, i64), (i64, i64)),
    pub potential: Potential2d,
}

impl TwoDParams {
    pub fn new(w: f64, alpha1: f64, alpha2: f64, window: ((i64, i64), (i64, i64)), potential: Potential2d) -> Result<Self> {
        if !(w >= 0.0 && w.is_finite()) {
            return Err(Error::param("w", "must be finite and nonnegative"));
        }
        for (field, a) in [("alpha1", alpha1), ("alpha2", alpha2)] {
            if !a.is_finite() {
                return Err(Error::param(field, "must be finite"));
            }
        }
        let ((a, b), (c, d)) = window;
        if b < a {
            return Err(Error::EmptyWindow { n1: a, n2: b });
        }
        if d < c {
            return Err(Error::EmptyWindow { n1: c, n2: d });
        }
        if (b - a + 1) as usize > MAX_SIDE || (d - c + 1) as usize > MAX_SIDE {
            return Err(Error::param("window", "each side must be at most 64 sites"));
        }
        potential.validate()?;
        Ok(TwoDParams { w, alpha1, alpha2, window, potential })
    }

    pub fn shape(&self) -> (usize, usize) {
        let ((a, b), (c, d)) = self.window;
        ((b - a + 1) as usize, (d - c + 1) as usize)
    }

    pub fn sites(&self) -> usize {
        let (n1, n2) = self.shape();
        n1 * n2
    }

    /// `U(n₁α₁, n₂α₂)` at the local site `(i, j)`.
    pub fn u_at(&self, i: usize, j: usize) -> f64 {
        let n1 = self.window.0 .0 + i as i64;
        let n2 = self.window.1 .0 + j as i64;
        self.potential.eval(n1 as f64 * self.alpha1, n2 as f64 * self.alpha2)
    }
}

fn site(ny: usize, i: usize, j: usize) -> usize {
    i * ny + j
}

/// Nearest-neighbour sum on the window with Dirichlet boundary, one component.
fn adjacency(nx: usize, ny: usize) -> Vec<(usize, usize)> {
    let mut bonds = Vec::new();
    for i in 0..nx {
        for j in 0..ny {
            if i + 1 < nx {
                bonds.push((site(ny, i, j), site(ny, i + 1, j)));
            }
            if j + 1 < ny {
                bonds.push((site(ny, i, j), site(ny, i, j + 1)));
            }
        }
    }
    bonds
}

/// `H` with index `2·site + component`, `site = i·n₂ + j`.
pub fn build_2d(p: &TwoDParams) -> CMat {
    let (nx, ny) = p.shape();
    let n = 2 * nx * ny;
    let mut h = Mat::<Complex64>::zeros(n, n);
    for (a, b) in adjacency(nx, ny) {
        for c in 0..2 {
            h[(2 * a + c, 2 * b + c)] = Complex64::new(1.0, 0.0);
            h[(2 * b + c, 2 * a + c)] = Complex64::new(1.0, 0.0);
        }
    }
    for i in 0..nx {
        for j in 0..ny {
            let s = site(ny, i, j);
            let v = Complex64::new(p.w * p.u_at(i, j), 0.0);
            h[(2 * s, 2 * s + 1)] = v;
            h[(2 * s + 1, 2 * s)] = v;
        }
    }
    h
}

/// `diag(−Δ + wU, −Δ − wU)` in the same index layout.
pub fn block_model_2d(p: &TwoDParams) -> CMat {
    let (nx, ny) = p.shape();
    let n = 2 * nx * ny;
    let mut h = Mat::<Complex64>::zeros(n, n);
    for (a, b) in adjacency(nx, ny) {
        for c in 0..2 {
            h[(2 * a + c, 2 * b + c)] = Complex64::new(1.0, 0.0);
            h[(2 * b + c, 2 * a + c)] = Complex64::new(1.0, 0.0);
        }
    }
    for i in 0..nx {
        for j in 0..ny {
            let s = site(ny, i, j);
            let v = p.w * p.u_at(i, j);
            h[(2 * s, 2 * s)] = Complex64::new(v, 0.0);
            h[(2 * s + 1, 2 * s + 1)] = Complex64::new(-v, 0.0);
        }
    }
    h
}

/// `sgn` with `sgn(0) = +1`.
pub fn sgn(x: f64) -> f64 {
    if x < 0.0 {
        -1.0
    } else {
        1.0
    }
}

/// `P_X = (1/√2)[[−s, 1], [1, s]]` with `s = sgn U(X)`.
pub fn p_block(s: f64) -> [[f64; 2]; 2] {
    let r = std::f64::consts::FRAC_1_SQRT_2;
    [[-s * r, r], [r, s * r]]
}

#[derive(Clone, Debug, Serialize)]
pub struct BlockDiagReport {
    /// `Π P H P Π` with `Π` the per-site swap applied where `sgn U = +1`
    #[serde(skip)]
    pub conjugated: CMat,
    /// Frobenius norm of the entries coupling component 0 to component 1
    pub off_block_residual: f64,
    /// max eigenvalue mismatch between `H` and its conjugate
    pub conjugation_defect: f64,
    /// max eigenvalue mismatch between `H` and `diag(−Δ + wU, −Δ − wU)`
    pub spectrum_defect: f64,
    /// `max |conjugated − diag(−Δ + wU, −Δ − wU)|` entrywise
    pub entry_defect: f64,
    /// `max ‖P_X P_X† − I‖`
    pub unitarity_defect: f64,
    /// bonds whose endpoints have different `sgn U`
    pub sign_change_bonds: usize,
}

/// Sitewise conjugation by `P` followed by the sign-dependent swap.
pub fn block_diag_2d(p: &TwoDParams) -> Result<BlockDiagReport> {
    let (nx, ny) = p.shape();
    let n = 2 * nx * ny;
    let h = build_2d(p);
    let signs: Vec<f64> = (0..nx).flat_map(|i| (0..ny).map(move |j| (i, j))).map(|(i, j)| sgn(p.u_at(i, j))).collect();
    let mut unitarity_defect: f64 = 0.0;
    // Q = Π P as a sparse 2×2 block per site
    let q: Vec<[[f64; 2]; 2]> = signs
        .iter()
        .map(|&s| {
            let b = p_block(s);
            for r in 0..2 {
                for c in 0..2 {
                    let v: f64 = (0..2).map(|k| b[r][k] * b[c][k]).sum();
                    unitarity_defect = unitarity_defect.max((v - if r == c { 1.0 } else { 0.0 }).abs());
                }
            }
            // P σ₁ P = diag(−s, s); swapping where s = +1 puts +U first
            if s > 0.0 {
                [b[1], b[0]]
            } else {
                b
            }
        })
        .collect();
    let mut conjugated = Mat::<Complex64>::zeros(n, n);
    for a in 0..nx * ny {
        for b in 0..nx * ny {
            let blk = [[h[(2 * a, 2 * b)], h[(2 * a, 2 * b + 1)]], [h[(2 * a + 1, 2 * b)], h[(2 * a + 1, 2 * b + 1)]]];
            if blk.iter().flatten().all(|z| *z == Complex64::new(0.0, 0.0)) {
                continue;
            }
            for r in 0..2 {
                for c in 0..2 {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for k in 0..2 {
                        for l in 0..2 {
                            acc += q[a][r][k] * blk[k][l] * q[b][c][l];
                        }
                    }
                    conjugated[(2 * a + r, 2 * b + c)] = acc;
                }
            }
        }
    }
    let mut off = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i % 2 != j % 2 {
                off += conjugated[(i, j)].norm_sqr();
            }
        }
    }
    let e_h = linalg::hermitian_eigenvalues(h.as_ref())?;
    let e_c = linalg::hermitian_eigenvalues(conjugated.as_ref())?;
    let model = block_model_2d(p);
    let entry_defect = (&conjugated - &model).norm_max();
    let e_m = linalg::hermitian_eigenvalues(model.as_ref())?;
    let sign_change_bonds = adjacency(nx, ny).into_iter().filter(|&(a, b)| signs[a] != signs[b]).count();
    Ok(BlockDiagReport {
        conjugated,
        off_block_residual: off.sqrt(),
        conjugation_defect: max_mismatch(&e_h, &e_c),
        spectrum_defect: max_mismatch(&e_h, &e_m),
        entry_defect,
        unitarity_defect,
        sign_change_bonds,
    })
}

fn max_mismatch(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Eigenvalues of the 1D Dirichlet chain `τ + τ* + w f(nα)` on `n₀..n₀+len−1`.
pub fn chain_spectrum(f: &Harmonic, w: f64, alpha: f64, start: i64, len: usize) -> Result<Vec<f64>> {
    let m = Mat::from_fn(len, len, |i, j| {
        if i == j {
            Complex64::new(w * f.eval((start + i as i64) as f64 * alpha), 0.0)
        } else if i.abs_diff(j) == 1 {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    linalg::hermitian_eigenvalues(m.as_ref())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SeparableReport {
    /// the two factors have fixed sign on ℝ
    pub fixed_sign: bool,
    /// max mismatch between the 2D spectrum and the blockwise sums
    /// `spec(−Δ₁ ± wU₁) + spec(−Δ₂ ± wU₂)`
    pub minkowski_defect: f64,
}

/// Compares the 2D spectrum with the 1D⊕1D blockwise sums built from the
/// chains `−Δ ± wU₁` along `n₁` and `−Δ ± wU₂` along `n₂`.
pub fn separable_check(p: &TwoDParams) -> Result<SeparableReport> {
    let (f1, f2) = match &p.potential {
        Potential2d::Product(a, b) | Potential2d::Sum(a, b) => (*a, *b),
        _ => return Err(Error::param("potential", "needs a product or sum of two factors")),
    };
    let (nx, ny) = p.shape();
    let ((a, _), (c, _)) = p.window;
    let mut sums = Vec::with_capacity(2 * nx * ny);
    for s in [1.0, -1.0] {
        let e1 = chain_spectrum(&f1, s * p.w, p.alpha1, a, nx)?;
        let e2 = chain_spectrum(&f2, s * p.w, p.alpha2, c, ny)?;
        sums.extend(e1.iter().flat_map(|x| e2.iter().map(move |y| x + y)));
    }
    sums.sort_by(f64::total_cmp);
    let e = linalg::hermitian_eigenvalues(build_2d(p).as_ref())?;
    Ok(SeparableReport { fixed_sign: f1.fixed_sign() && f2.fixed_sign(), minkowski_defect: max_mismatch(&e, &sums) })
}
