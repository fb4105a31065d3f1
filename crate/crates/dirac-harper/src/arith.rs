//! Continued fractions, Diophantine margins and the Cayley–Hamilton norm bound.
//!
//! Frequencies are handled as exact rationals `num/den` with `den ≤ 2¹²⁷`: a
//! finite `f64` in `(0, 1)` is itself such a rational, and decimal strings of up
//! to 38 digits convert exactly.

use nalgebra::{SMatrix, SVector};
use num_complex::Complex64;
use serde::Serialize;

use crate::{Error, Result};

pub fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// An exact rational frequency in `[0, 1)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct ExactAlpha {
    pub num: u128,
    pub den: u128,
}

const MAX_DEN: u128 = 1 << 127;

impl ExactAlpha {
    pub fn from_ratio(num: u128, den: u128) -> Result<Self> {
        if den == 0 || num >= den || den > MAX_DEN {
            return Err(Error::param("alpha", format!("{num}/{den} is not in [0,1)")));
        }
        Ok(ExactAlpha { num, den })
    }

    /// The exact dyadic value of a float in `[0, 1)`.
    pub fn from_f64(x: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&x) {
            return Err(Error::param("alpha", format!("{x} is not in [0,1)")));
        }
        if x == 0.0 {
            return Ok(ExactAlpha { num: 0, den: 1 });
        }
        let bits = x.to_bits();
        let biased = ((bits >> 52) & 0x7ff) as i64;
        let frac_bits = (bits & ((1u64 << 52) - 1)) as u128;
        let (mant, shift) = if biased == 0 { (frac_bits, 1074) } else { (frac_bits | (1 << 52), 1075 - biased) };
        if shift > 127 {
            // drop low bits; only frequencies below 2^-75 are affected
            let drop = shift - 127;
            return Ok(ExactAlpha { num: mant >> drop, den: MAX_DEN });
        }
        let tz = mant.trailing_zeros().min(shift as u32);
        Ok(ExactAlpha { num: mant >> tz, den: 1u128 << (shift as u32 - tz) })
    }

    /// A decimal fraction such as `"0.1100010000000000000000010"`.
    pub fn from_decimal(s: &str) -> Result<Self> {
        let digits = s
            .strip_prefix("0.")
            .or_else(|| s.strip_prefix('.'))
            .ok_or_else(|| Error::param("alpha", format!("`{s}` is not of the form 0.ddd")))?;
        if digits.is_empty() || digits.len() > 38 || !digits.bytes().all(|b| b.is_ascii_digit()) {
            return Err(Error::param("alpha", format!("`{s}` needs 1 to 38 decimal digits")));
        }
        let num: u128 = digits.parse().map_err(|_| Error::param("alpha", "unparsable digits"))?;
        Ok(ExactAlpha { num, den: 10u128.pow(digits.len() as u32) })
    }

    pub fn to_f64(&self) -> f64 {
        self.num as f64 / self.den as f64
    }

    /// `dist(kα, ℤ)` computed exactly and rounded once.
    pub fn dist_multiple(&self, k: u64) -> f64 {
        let mut r: u128 = 0;
        // k·num mod den by doubling, safe because den ≤ 2^127
        let mut base = self.num % self.den;
        let mut k = k;
        while k > 0 {
            if k & 1 == 1 {
                r = add_mod(r, base, self.den);
            }
            base = add_mod(base, base, self.den);
            k >>= 1;
        }
        let d = r.min(self.den - r);
        d as f64 / self.den as f64
    }
}

fn add_mod(a: u128, b: u128, m: u128) -> u128 {
    let s = a + b;
    if s >= m {
        s - m
    } else {
        s
    }
}

/// `Σ_{j ≥ 1} 10^{−j!}` truncated to `digits` decimals (at most 38).
pub fn liouville_example(digits: u32) -> ExactAlpha {
    let digits = digits.min(38);
    let mut num: u128 = 0;
    let mut fact: u32 = 1;
    for j in 1.. {
        fact *= j;
        if fact > digits {
            break;
        }
        num += 10u128.pow(digits - fact);
    }
    ExactAlpha { num, den: 10u128.pow(digits) }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ContinuedFraction {
    pub alpha: f64,
    pub partial_quotients: Vec<u64>,
    /// `(p_k, q_k)` starting with `(a₀, 1)`
    pub convergents: Vec<(u64, u64)>,
    pub depth: usize,
    /// Expansion stopped at an exact (or detected) rational.
    pub rational: bool,
    /// Denominators exceed the resolution of the input float.
    pub precision_limited: bool,
}

/// Tolerance and denominator cap used to classify a float as rational.
pub const RATIONAL_TOL: f64 = 1e-15;
pub const RATIONAL_MAX_Q: u64 = 1_000_000;

/// Continued-fraction convergents of an exact frequency, exact integer recurrences.
pub fn convergents_exact(alpha: ExactAlpha, depth: usize, float_input: bool) -> ContinuedFraction {
    let x = alpha.to_f64();
    let (mut a, mut b) = (alpha.num, alpha.den);
    let (mut p_prev, mut p): (u128, u128) = (1, 0);
    let (mut q_prev, mut q): (u128, u128) = (0, 1);
    let mut quotients = Vec::new();
    let mut conv = Vec::new();
    let mut rational = false;
    let mut precision_limited = false;
    // a0 = floor(num/den) = 0 for alpha in [0,1)
    quotients.push(0);
    conv.push((0, 1));
    if a == 0 {
        rational = true;
    }
    while !rational && conv.len() <= depth {
        // alpha_k = b / a
        let ak = b / a;
        let r = b % a;
        let p_next = ak.checked_mul(p).and_then(|v| v.checked_add(p_prev));
        let q_next = ak.checked_mul(q).and_then(|v| v.checked_add(q_prev));
        let (Some(pn), Some(qn)) = (p_next, q_next) else {
            precision_limited = true;
            break;
        };
        if pn > u64::MAX as u128 || qn > u64::MAX as u128 {
            precision_limited = true;
            break;
        }
        (p_prev, p) = (p, pn);
        (q_prev, q) = (q, qn);
        quotients.push(ak as u64);
        conv.push((pn as u64, qn as u64));
        if float_input && (qn as f64) * (qn as f64) > 2f64.powi(52) {
            precision_limited = true;
        }
        if r == 0 || (float_input && qn as u64 <= RATIONAL_MAX_Q && (x - pn as f64 / qn as f64).abs() <= RATIONAL_TOL) {
            rational = true;
        }
        (b, a) = (a, r);
    }
    let depth = conv.len() - 1;
    ContinuedFraction { alpha: x, partial_quotients: quotients, convergents: conv, depth, rational, precision_limited }
}

/// Convergents of a float in `(0, 1)`; floats within `1e−15` of a fraction with
/// denominator at most `10⁶` terminate as rational.
pub fn convergents(alpha: f64, depth: usize) -> Result<ContinuedFraction> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::param("alpha", format!("{alpha} is not in (0,1)")));
    }
    Ok(convergents_exact(ExactAlpha::from_f64(alpha)?, depth, true))
}

/// `Some((p, q))` when `alpha` lies within `tol` of `p/q` with `q ≤ max_q`.
pub fn detect_rational(alpha: f64, tol: f64, max_q: u64) -> Option<(u64, u64)> {
    if !(0.0..1.0).contains(&alpha) {
        return None;
    }
    if alpha == 0.0 {
        return Some((0, 1));
    }
    let cf = convergents_exact(ExactAlpha::from_f64(alpha).ok()?, 64, false);
    cf.convergents
        .iter()
        .copied()
        .take_while(|&(_, q)| q <= max_q)
        .find(|&(p, q)| (alpha - p as f64 / q as f64).abs() <= tol)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DiophantineMargin {
    pub k: u64,
    pub margin: f64,
    pub exponent: f64,
    pub passes: bool,
}

/// `min_{k_lo ≤ k ≤ k_max} k^τ · dist(kα, ℤ)`; passes iff the minimum exceeds `t`.
pub fn diophantine_margin_range(alpha: &ExactAlpha, t: f64, k_lo: u64, k_max: u64, exponent: f64) -> Result<DiophantineMargin> {
    if k_lo == 0 || k_max < k_lo {
        return Err(Error::param("k_max", format!("need 1 <= k_lo <= k_max, got {k_lo}..{k_max}")));
    }
    let mut best = DiophantineMargin { k: k_lo, margin: f64::INFINITY, exponent, passes: false };
    for k in k_lo..=k_max {
        let m = (k as f64).powf(exponent) * alpha.dist_multiple(k);
        if m < best.margin {
            best.margin = m;
            best.k = k;
        }
    }
    best.passes = best.margin > t;
    Ok(best)
}

/// [`diophantine_margin_range`] over `1 ≤ k ≤ k_max`.
pub fn diophantine_margin(alpha: &ExactAlpha, t: f64, k_max: u64, exponent: f64) -> Result<DiophantineMargin> {
    diophantine_margin_range(alpha, t, 1, k_max, exponent)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ArithReport {
    pub alpha: f64,
    pub continued_fraction: ContinuedFraction,
    pub margin: DiophantineMargin,
    pub classification: String,
    pub note: String,
}

/// Heuristic arithmetic classification used by the front-end.
pub fn classify(alpha: f64, depth: usize, t: f64, k_max: u64, exponent: f64) -> Result<ArithReport> {
    let cf = convergents(alpha, depth)?;
    let exact = ExactAlpha::from_f64(alpha)?;
    let margin = diophantine_margin(&exact, t, k_max, exponent)?;
    let max_quotient = cf.partial_quotients.iter().skip(1).copied().max().unwrap_or(0);
    let classification = if cf.rational {
        "rational"
    } else if margin.passes {
        "diophantine"
    } else if max_quotient > 10_000 {
        "liouville-like"
    } else {
        "irrational"
    };
    let note = format!(
        "finite-precision classification from {} convergents and k <= {}; not a proof",
        cf.depth, k_max
    );
    Ok(ArithReport { alpha, continued_fraction: cf, margin, classification: classification.into(), note })
}

pub type Mat8 = SMatrix<Complex64, 8, 8>;
pub type Vec8 = SVector<Complex64, 8>;

/// `max_{i ∈ ±{1..8}} ‖Tⁱv‖` for invertible `T` and unit `v`.
pub fn ch_norm_bound(t: &Mat8, v: &Vec8) -> Result<f64> {
    let sv = t.singular_values();
    let cond = sv.max() / sv.min();
    if !cond.is_finite() || cond >= 1e12 {
        return Err(Error::param("T", format!("condition number {cond:e} too large")));
    }
    let lu = t.lu();
    let mut best: f64 = 0.0;
    let mut fwd = *v;
    let mut back = *v;
    for _ in 0..8 {
        fwd = t * fwd;
        back = lu.solve(&back).ok_or(Error::Singular)?;
        best = best.max(fwd.norm()).max(back.norm());
    }
    Ok(best)
}
