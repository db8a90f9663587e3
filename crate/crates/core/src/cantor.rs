//! The standard middle-thirds Cantor function and weighted Cantor blocks.
//!
//! Point evaluation runs the ternary-digit algorithm by exact long division.
//! A double that is the nearest float to a fraction with a small denominator
//! (or any `p/3^k`) is read as that fraction; every other input is read as
//! its exact binary value. The only error left is the truncation after
//! [`EXACT_DIGITS`] ternary digits.

use crate::error::{Error, Result};

/// Ternary digits consumed by exact point evaluation; truncation error is
/// at most `2^-EXACT_DIGITS`.
pub const EXACT_DIGITS: u32 = 64;

/// Default depth for interval queries.
pub const DEFAULT_DEPTH: u32 = 24;

/// Largest level for which gap enumeration is permitted (`2^20 - 1` gaps).
pub const MAX_ENUM_DEPTH: u32 = 20;

/// How the Cantor function is evaluated at a point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvalMode {
    /// Ternary digits of the exact input value, up to [`EXACT_DIGITS`].
    Exact,
    /// Truncate after `d` ternary digits; absolute error at most `2^-d`.
    Depth(u32),
}

/// Accumulates binary digits produced by the ternary-digit algorithm.
struct BitSink {
    acc: u64,
    pos: u32,
}

impl BitSink {
    fn new() -> Self {
        BitSink { acc: 0, pos: 0 }
    }

    /// Feeds one ternary digit; returns false once evaluation has halted.
    fn push(&mut self, digit: u128) -> bool {
        self.pos += 1;
        match digit {
            0 => true,
            1 => {
                self.set();
                false
            }
            _ => {
                self.set();
                true
            }
        }
    }

    fn set(&mut self) {
        if self.pos <= 64 {
            self.acc |= 1u64 << (64 - self.pos);
        }
    }

    fn value(&self) -> f64 {
        // single rounding: u64 -> f64, then an exact power-of-two scaling
        self.acc as f64 / 18_446_744_073_709_551_616.0
    }
}

fn check_unit(x: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::Domain(format!("Cantor function argument {x} outside [0, 1]")));
    }
    Ok(())
}

/// Splits `x` in `[0, 1)` into `num / 2^exp` with `exp <= 126`.
fn dyadic_parts(x: f64) -> (u128, u32) {
    let bits = x.to_bits();
    let raw_exp = ((bits >> 52) & 0x7ff) as i32;
    let frac = bits & ((1u64 << 52) - 1);
    let (mant, exp2) = if raw_exp == 0 { (frac, -1074) } else { (frac | (1u64 << 52), raw_exp - 1075) };
    // x = mant * 2^exp2 with exp2 < 0 for x < 1
    let mut num = mant as u128;
    let mut den_exp = (-exp2) as u32;
    let tz = num.trailing_zeros().min(den_exp);
    num >>= tz;
    den_exp -= tz;
    if den_exp > 126 {
        num >>= den_exp - 126;
        den_exp = 126;
    }
    (num, den_exp)
}

/// Evaluates the standard Cantor function.
pub fn cantor_eval(x: f64, mode: EvalMode) -> Result<f64> {
    check_unit(x)?;
    if x == 1.0 {
        return Ok(1.0);
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    let digits = match mode {
        EvalMode::Exact => EXACT_DIGITS,
        EvalMode::Depth(d) => d.min(EXACT_DIGITS),
    };
    if let Some((p, q)) = snap_small_denominator(x).or_else(|| snap_ternary(x)) {
        return Ok(rational_digits(p, q, digits));
    }
    let (mut rem, den_exp) = dyadic_parts(x);
    let mask = (1u128 << den_exp) - 1;
    let mut sink = BitSink::new();
    for _ in 0..digits {
        if rem == 0 {
            break;
        }
        let r3 = rem * 3;
        let digit = r3 >> den_exp;
        rem = r3 & mask;
        if !sink.push(digit) {
            break;
        }
    }
    Ok(sink.value())
}

/// Exact-mode shorthand for points already known to lie in `[0, 1]`.
pub fn cantor(x: f64) -> f64 {
    cantor_eval(x.clamp(0.0, 1.0), EvalMode::Exact).expect("clamped argument")
}

/// Cantor function at the rational `num / den`, by exact long division in
/// base three. Terminates on a halting digit, a zero remainder, or after
/// [`EXACT_DIGITS`] digits.
pub fn cantor_rational(num: u64, den: u64) -> Result<f64> {
    if den == 0 || num > den {
        return Err(Error::Domain(format!("{num}/{den} is not a point of [0, 1]")));
    }
    if num == den {
        return Ok(1.0);
    }
    Ok(rational_digits(num, den, EXACT_DIGITS))
}

/// If `x` is the double nearest to some `p / 3^k` (`k <= 19`), returns that fraction.
/// Ternary rationals are where the Cantor function has its plateau edges, and the
/// rounding of `p / 3^k` to binary would otherwise shift the value by about `1e-11`.
/// Beyond `3^19` nearly every double is the rounding of some `p / 3^k`.
fn snap_ternary(x: f64) -> Option<(u64, u64)> {
    let mut q: u64 = 1;
    for _ in 0..19 {
        q *= 3;
        let p = (x * q as f64).round();
        if p >= 0.0 && p / q as f64 == x {
            return Some((p as u64, q));
        }
    }
    None
}

/// Largest denominator recovered by [`snap_small_denominator`].
pub const SNAP_DENOMINATOR: u64 = 1 << 20;

/// If `x` is the double nearest to a fraction `p / q` with `q <= 2^20`,
/// returns it. Such a fraction is a continued-fraction convergent of `x`, and
/// distinct fractions of this size are far more than an ulp apart.
fn snap_small_denominator(x: f64) -> Option<(u64, u64)> {
    let (mut num, den_exp) = dyadic_parts(x);
    let mut den = 1u128 << den_exp;
    let (mut h1, mut h2, mut k1, mut k2) = (1u128, 0u128, 0u128, 1u128);
    while den != 0 {
        let a = num / den;
        (num, den) = (den, num - a * den);
        let (h, k) = (a * h1 + h2, a * k1 + k2);
        if k > SNAP_DENOMINATOR as u128 {
            break;
        }
        if h as f64 / k as f64 == x {
            return Some((h as u64, k as u64));
        }
        (h2, h1, k2, k1) = (h1, h, k1, k);
    }
    None
}

fn rational_digits(num: u64, den: u64, digits: u32) -> f64 {
    let den = den as u128;
    let mut rem = num as u128;
    let mut sink = BitSink::new();
    for _ in 0..digits {
        if rem == 0 {
            break;
        }
        let r3 = rem * 3;
        let digit = r3 / den;
        rem = r3 % den;
        if !sink.push(digit) {
            break;
        }
    }
    sink.value()
}

/// `∫_0^u C(s) ds` for `u` in `[0, 1]`, via the self-similarity of `C`.
pub fn cantor_integral(u: f64) -> f64 {
    let mut u = u.clamp(0.0, 1.0);
    let mut acc = 0.0;
    let mut scale = 1.0; // length scale of the current sub-copy
    let mut offset = 0.0; // value of C at the left end of the current copy
    let mut height = 1.0; // height of the current copy
    for _ in 0..48 {
        if u <= 1.0 / 3.0 {
            u *= 3.0;
            scale /= 3.0;
            height /= 2.0;
        } else if u <= 2.0 / 3.0 {
            // left third integrates to height*scale/12 on top of the offset
            acc += offset * scale * u + height * scale * (1.0 / 12.0 + (u - 1.0 / 3.0) / 2.0);
            return acc;
        } else {
            acc += offset * scale * (2.0 / 3.0) + height * scale * (1.0 / 12.0 + 1.0 / 6.0);
            offset += height / 2.0;
            u = 3.0 * u - 2.0;
            scale /= 3.0;
            height /= 2.0;
        }
    }
    acc + offset * scale * u
}

/// A middle-thirds gap of the unit Cantor set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnitGap {
    pub level: u32,
    pub lo: f64,
    pub hi: f64,
    /// Constant value of the Cantor function on the gap.
    pub image: f64,
}

/// Gaps of levels `1..=depth` in breadth-first order (by level, then left to right).
pub fn unit_gaps(depth: u32) -> Result<Vec<UnitGap>> {
    if depth > MAX_ENUM_DEPTH {
        return Err(Error::Domain(format!("gap enumeration depth {depth} exceeds {MAX_ENUM_DEPTH}")));
    }
    let mut out = Vec::with_capacity((1usize << depth).saturating_sub(1));
    for level in 1..=depth {
        let den = 3f64.powi(level as i32);
        let img_den = 2f64.powi(level as i32);
        for word in 0..(1u64 << (level - 1)) {
            // the (level-1) binary digits of `word` pick left/right thirds
            let mut k: u64 = 0;
            for bit in (0..level - 1).rev() {
                k = k * 3 + 2 * ((word >> bit) & 1);
            }
            let lo = (3 * k + 1) as f64 / den;
            let hi = (3 * k + 2) as f64 / den;
            out.push(UnitGap { level, lo, hi, image: (2 * word + 1) as f64 / img_den });
        }
    }
    Ok(out)
}

/// Left endpoints (and value of `C` there) of the `2^depth` closed pieces of
/// the level-`depth` approximation of the Cantor set.
pub fn unit_pieces(depth: u32) -> Result<Vec<(f64, f64)>> {
    if depth > MAX_ENUM_DEPTH {
        return Err(Error::Domain(format!("piece enumeration depth {depth} exceeds {MAX_ENUM_DEPTH}")));
    }
    let den = 3f64.powi(depth as i32);
    let img_den = 2f64.powi(depth as i32);
    Ok((0..(1u64 << depth))
        .map(|word| {
            let mut k: u64 = 0;
            for bit in (0..depth).rev() {
                k = k * 3 + 2 * ((word >> bit) & 1);
            }
            (k as f64 / den, word as f64 / img_den)
        })
        .collect())
}

/// Whether `x` in `[0, 1]` lies in the level-`depth` approximation of the Cantor set.
pub fn in_unit_approximation(x: f64, depth: u32) -> bool {
    if !(0.0..=1.0).contains(&x) {
        return false;
    }
    let mut u = x;
    for _ in 0..depth {
        let y = 3.0 * u;
        if y > 1.0 && y < 2.0 {
            return false;
        }
        u = if y <= 1.0 { y } else { y - 2.0 };
    }
    true
}

/// A weighted copy of the Cantor function supported on `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CantorBlock {
    pub lo: f64,
    pub hi: f64,
    pub weight: f64,
}

impl CantorBlock {
    pub fn new(lo: f64, hi: f64, weight: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::Invalid(format!("Cantor block support [{lo}, {hi}] is not a proper interval")));
        }
        if !(weight.is_finite() && weight > 0.0) {
            return Err(Error::Invalid(format!("Cantor block weight {weight} must be positive")));
        }
        Ok(CantorBlock { lo, hi, weight })
    }

    pub fn len(&self) -> f64 {
        self.hi - self.lo
    }

    fn unit(&self, x: f64) -> f64 {
        ((x - self.lo) / self.len()).clamp(0.0, 1.0)
    }

    /// Distribution function of the block measure: `weight * C((x-lo)/len)`.
    pub fn value(&self, x: f64) -> f64 {
        if x <= self.lo {
            0.0
        } else if x >= self.hi {
            self.weight
        } else {
            self.weight * cantor(self.unit(x))
        }
    }

    /// As [`Self::value`] but truncated after `depth` ternary digits.
    pub fn value_at_depth(&self, x: f64, depth: u32) -> f64 {
        if x <= self.lo {
            0.0
        } else if x >= self.hi {
            self.weight
        } else {
            self.weight * cantor_eval(self.unit(x), EvalMode::Depth(depth)).expect("unit argument")
        }
    }

    /// Block mass of `[u, v]`.
    pub fn mass(&self, u: f64, v: f64) -> f64 {
        self.value(v) - self.value(u)
    }

    pub fn mass_at_depth(&self, u: f64, v: f64, depth: u32) -> f64 {
        self.value_at_depth(v, depth) - self.value_at_depth(u, depth)
    }

    /// `∫_u^v value(x) dx`.
    pub fn value_integral(&self, u: f64, v: f64) -> f64 {
        let prim = |x: f64| -> f64 {
            if x <= self.lo {
                0.0
            } else if x >= self.hi {
                self.weight * self.len() * 0.5 + self.weight * (x - self.hi)
            } else {
                self.weight * self.len() * cantor_integral(self.unit(x))
            }
        };
        prim(v) - prim(u)
    }

    pub fn overlaps(&self, other: &CantorBlock) -> bool {
        self.lo < other.hi && other.lo < self.hi
    }

    /// Gaps of levels `1..=depth` mapped onto the block, with the block's
    /// distribution value on each gap.
    pub fn gaps(&self, depth: u32) -> Result<Vec<UnitGap>> {
        Ok(unit_gaps(depth)?
            .into_iter()
            .map(|g| UnitGap {
                level: g.level,
                lo: self.lo + self.len() * g.lo,
                hi: self.lo + self.len() * g.hi,
                image: self.weight * g.image,
            })
            .collect())
    }

    /// Whether `x` lies in the level-`depth` approximation of the block's Cantor set.
    pub fn in_approximation(&self, x: f64, depth: u32) -> bool {
        x >= self.lo && x <= self.hi && in_unit_approximation(self.unit(x), depth)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_denominators_are_recovered() {
        assert_eq!(snap_small_denominator(0.1), Some((1, 10)));
        assert_eq!(snap_small_denominator(3.0 / 13.0), Some((3, 13)));
        assert_eq!(snap_small_denominator(0.123456789012345), None);
        // 1/10 = 0.(0022) in base 3, so c(1/10) = 0.(0011) in base 2 = 1/5
        assert_eq!(cantor(0.1), 0.2);
    }

    #[test]
    fn boundary_and_plateau_values() {
        assert_eq!(cantor_eval(0.0, EvalMode::Exact).unwrap(), 0.0);
        assert_eq!(cantor_eval(1.0, EvalMode::Exact).unwrap(), 1.0);
        assert_eq!(cantor_eval(0.5, EvalMode::Exact).unwrap(), 0.5);
        assert_eq!(cantor_rational(1, 3).unwrap(), 0.5);
        assert_eq!(cantor_rational(2, 3).unwrap(), 0.5);
    }

    #[test]
    fn quarter_maps_to_third() {
        // 1/4 = 0.0202..._3 -> 0.0101..._2
        assert_eq!(cantor_eval(0.25, EvalMode::Exact).unwrap(), 1.0 / 3.0);
        assert_eq!(cantor_rational(1, 4).unwrap(), 1.0 / 3.0);
        assert_eq!(cantor_rational(3, 4).unwrap(), 2.0 / 3.0);
    }

    #[test]
    fn depth_error_is_bounded() {
        for i in 0..=200 {
            let x = i as f64 / 200.0;
            let exact = cantor_eval(x, EvalMode::Exact).unwrap();
            for d in [4, 10, 24] {
                let approx = cantor_eval(x, EvalMode::Depth(d)).unwrap();
                assert!((exact - approx).abs() <= 2f64.powi(-(d as i32)) + 1e-15);
            }
        }
    }

    #[test]
    fn rejects_outside_unit_interval() {
        assert!(cantor_eval(-0.1, EvalMode::Exact).is_err());
        assert!(cantor_eval(1.5, EvalMode::Depth(3)).is_err());
        assert!(cantor_rational(5, 4).is_err());
    }

    #[test]
    fn plateau_endpoints_match_dyadics() {
        for g in unit_gaps(8).unwrap() {
            assert_eq!(cantor(g.lo), cantor(g.hi), "gap {g:?}");
            assert!((cantor(g.lo) - g.image).abs() < 1e-15);
        }
    }

    #[test]
    fn integral_matches_riemann_sum() {
        let n = 200_000;
        let mut acc = 0.0;
        let u = 0.7;
        for i in 0..n {
            let x = (i as f64 + 0.5) * u / n as f64;
            acc += cantor(x) * u / n as f64;
        }
        assert!((cantor_integral(u) - acc).abs() < 1e-5);
        assert!((cantor_integral(1.0) - 0.5).abs() < 1e-15);
        assert!((cantor_integral(1.0 / 3.0) - 1.0 / 12.0).abs() < 1e-15);
    }

    #[test]
    fn gap_lengths_telescope() {
        for d in 1..=10 {
            let total: f64 = unit_gaps(d).unwrap().iter().map(|g| g.hi - g.lo).sum();
            assert!((total - (1.0 - (2.0f64 / 3.0).powi(d as i32))).abs() < 1e-13);
        }
    }

    #[test]
    fn pieces_start_at_dyadic_images() {
        for (x, img) in unit_pieces(6).unwrap() {
            assert!((cantor(x) - img).abs() < 1e-15);
        }
    }

    #[test]
    fn block_mass_is_weight() {
        let b = CantorBlock::new(2.0, 5.0, 1.5).unwrap();
        assert_eq!(b.mass(2.0, 5.0), 1.5);
        assert_eq!(b.mass(3.0, 4.0), 0.0);
        assert!((b.mass_at_depth(2.0, 3.0, 10) - 0.75).abs() < 1e-12);
        assert!(CantorBlock::new(1.0, 1.0, 1.0).is_err());
        assert!(CantorBlock::new(0.0, 1.0, 0.0).is_err());
    }
}
