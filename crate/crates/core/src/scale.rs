//! Singular scale functions: the identity plus finitely many weighted Cantor
//! blocks, plus geometric stacks of unit blocks that push the scale to
//! `∓∞` at finite excluded endpoints.
//!
//! A scale function `t` on `I = <a, b>` is normalised by `t(e) = 0` where the
//! anchor `e` depends only on `a` and `b` (see [`anchor_for`]). Its
//! Lebesgue–Stieltjes measure `dt` splits into Lebesgue measure (living on the
//! open set `U` of block gaps and block-free regions) and the singular block
//! measures (living on the null set `W` of Cantor points).

use serde::{Deserialize, Serialize};

use crate::cantor::{CantorBlock, UnitGap, DEFAULT_DEPTH};
use crate::error::{Error, Result};
use crate::extreal;

/// Number of stack blocks after which the geometric tail is below `f64` resolution.
pub const MAX_STACK_BLOCKS: u32 = 1100;

/// An interval `<lo, hi>` with inclusion flags. Infinite endpoints are never included.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Interval {
    #[serde(with = "extreal")]
    pub lo: f64,
    #[serde(with = "extreal")]
    pub hi: f64,
    #[serde(default)]
    pub include_lo: bool,
    #[serde(default)]
    pub include_hi: bool,
}

impl Interval {
    pub fn new(lo: f64, hi: f64, include_lo: bool, include_hi: bool) -> Result<Self> {
        let iv = Interval { lo, hi, include_lo, include_hi };
        iv.check()?;
        Ok(iv)
    }

    pub fn open(lo: f64, hi: f64) -> Result<Self> {
        Self::new(lo, hi, false, false)
    }

    pub fn closed(lo: f64, hi: f64) -> Result<Self> {
        Self::new(lo, hi, true, true)
    }

    pub fn real_line() -> Self {
        Interval { lo: f64::NEG_INFINITY, hi: f64::INFINITY, include_lo: false, include_hi: false }
    }

    pub fn check(&self) -> Result<()> {
        if self.lo.is_nan() || self.hi.is_nan() || self.lo >= self.hi {
            return Err(Error::Invalid(format!("interval <{}, {}> is empty", self.lo, self.hi)));
        }
        if (self.include_lo && !self.lo.is_finite()) || (self.include_hi && !self.hi.is_finite()) {
            return Err(Error::Invalid(format!("interval <{}, {}> includes an infinite endpoint", self.lo, self.hi)));
        }
        Ok(())
    }

    pub fn contains(&self, x: f64) -> bool {
        let above = x > self.lo || (self.include_lo && x == self.lo);
        let below = x < self.hi || (self.include_hi && x == self.hi);
        above && below
    }

    pub fn interior_contains(&self, x: f64) -> bool {
        x > self.lo && x < self.hi
    }

    pub fn is_bounded(&self) -> bool {
        self.lo.is_finite() && self.hi.is_finite()
    }

    pub fn length(&self) -> f64 {
        self.hi - self.lo
    }

    /// Whether two intervals share a point (as sets).
    pub fn intersects(&self, other: &Interval) -> bool {
        if self.hi < other.lo || other.hi < self.lo {
            return false;
        }
        if self.hi == other.lo {
            return self.include_hi && other.include_lo;
        }
        if other.hi == self.lo {
            return other.include_hi && self.include_lo;
        }
        true
    }
}

impl std::fmt::Display for Interval {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{}{}, {}{}",
            if self.include_lo { '[' } else { '(' },
            self.lo,
            self.hi,
            if self.include_hi { ']' } else { ')' }
        )
    }
}

/// The anchor point `e` of `<a, b>`.
pub fn anchor_for(lo: f64, hi: f64) -> f64 {
    match (lo.is_finite(), hi.is_finite()) {
        (true, true) => 0.5 * (lo + hi),
        (false, true) => hi - 1.0,
        (true, false) => lo + 1.0,
        (false, false) => 0.0,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Lo,
    Hi,
}

/// Unit-weight Cantor blocks accumulating geometrically at a finite endpoint.
///
/// Block `k` of a left stack at `a` occupies `[a + Δ 2^{-k-1}, a + Δ 2^{-k}]`,
/// with `Δ = min(1, (e - a)/2)`. Right stacks mirror this at `b`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryStack {
    pub side: Side,
    pub base: f64,
    pub delta: f64,
}

impl BoundaryStack {
    fn new(side: Side, base: f64, anchor: f64) -> Self {
        let delta = (0.5 * (anchor - base).abs()).min(1.0);
        BoundaryStack { side, base, delta }
    }

    pub fn block(&self, k: u32) -> CantorBlock {
        let near = self.delta * 0.5f64.powi(k as i32 + 1);
        let far = self.delta * 0.5f64.powi(k as i32);
        match self.side {
            Side::Lo => CantorBlock { lo: self.base + near, hi: self.base + far, weight: 1.0 },
            Side::Hi => CantorBlock { lo: self.base - far, hi: self.base - near, weight: 1.0 },
        }
    }

    /// Outer edge of the stack region (the end of block 0 away from the base).
    pub fn outer(&self) -> f64 {
        match self.side {
            Side::Lo => self.base + self.delta,
            Side::Hi => self.base - self.delta,
        }
    }

    /// Index of the block containing `x`, for `x` strictly inside the stack region.
    fn index_of(&self, x: f64) -> Option<u32> {
        let r = match self.side {
            Side::Lo => (x - self.base) / self.delta,
            Side::Hi => (self.base - x) / self.delta,
        };
        if !(r > 0.0) || r >= 1.0 {
            return None;
        }
        let mut k = (-r.log2()).floor().max(0.0) as i64;
        let k_max = MAX_STACK_BLOCKS as i64;
        k = k.min(k_max);
        // guard against rounding in log2 and in the block endpoints
        for _ in 0..4 {
            let b = self.block(k as u32);
            if x < b.lo {
                k += if self.side == Side::Lo { 1 } else { -1 };
            } else if x > b.hi {
                k += if self.side == Side::Lo { -1 } else { 1 };
            } else {
                break;
            }
            k = k.clamp(0, k_max);
        }
        Some(k as u32)
    }

    /// Signed contribution to `t(x)` relative to the anchor.
    fn contribution(&self, x: f64, depth: Option<u32>) -> f64 {
        let eval = |b: &CantorBlock| match depth {
            None => b.value(x),
            Some(d) => b.value_at_depth(x, d),
        };
        match self.side {
            Side::Lo => {
                if x >= self.outer() {
                    0.0
                } else if x <= self.base {
                    f64::NEG_INFINITY
                } else {
                    match self.index_of(x) {
                        Some(k) => -(k as f64) - 1.0 + eval(&self.block(k)),
                        None => f64::NEG_INFINITY,
                    }
                }
            }
            Side::Hi => {
                if x <= self.outer() {
                    0.0
                } else if x >= self.base {
                    f64::INFINITY
                } else {
                    match self.index_of(x) {
                        Some(k) => k as f64 + eval(&self.block(k)),
                        None => f64::INFINITY,
                    }
                }
            }
        }
    }

    /// `∫_u^v contribution(x) dx` for `u <= v` strictly inside the interval.
    fn contribution_integral(&self, u: f64, v: f64) -> f64 {
        let (lo_edge, hi_edge) = match self.side {
            Side::Lo => (self.base, self.outer()),
            Side::Hi => (self.outer(), self.base),
        };
        let u = u.max(lo_edge);
        let v = v.min(hi_edge);
        if u >= v {
            return 0.0;
        }
        let (ku, kv) = (self.index_of(u).unwrap_or(0), self.index_of(v).unwrap_or(0));
        let (k0, k1) = (ku.min(kv), ku.max(kv));
        let mut acc = 0.0;
        for k in k0..=k1 {
            let b = self.block(k);
            let s = u.max(b.lo);
            let e = v.min(b.hi);
            if s >= e {
                continue;
            }
            let base = match self.side {
                Side::Lo => -(k as f64) - 1.0,
                Side::Hi => k as f64,
            };
            acc += base * (e - s) + b.value_integral(s, e);
        }
        acc
    }
}

/// Input description of a scale function on a given interval.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScaleSpec {
    #[serde(default)]
    pub blocks: Vec<CantorBlock>,
    #[serde(default)]
    pub stack_lo: bool,
    #[serde(default)]
    pub stack_hi: bool,
}

impl ScaleSpec {
    /// Natural scale with stacks exactly where the interval requires them.
    pub fn natural_for(interval: &Interval) -> Self {
        Self::with_blocks(interval, Vec::new())
    }

    /// Given blocks, with stacks exactly where the interval requires them.
    pub fn with_blocks(interval: &Interval, blocks: Vec<CantorBlock>) -> Self {
        ScaleSpec {
            blocks,
            stack_lo: interval.lo.is_finite() && !interval.include_lo,
            stack_hi: interval.hi.is_finite() && !interval.include_hi,
        }
    }
}

/// A scale function in the normalised class on `interval`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaleFunction {
    interval: Interval,
    anchor: f64,
    blocks: Vec<CantorBlock>,
    stack_lo: Option<BoundaryStack>,
    stack_hi: Option<BoundaryStack>,
    /// Σ block values at the anchor; subtracted so that `t(e) = 0`.
    anchor_offset: f64,
}

/// Builds and validates a scale function.
pub fn make_scale(interval: Interval, spec: &ScaleSpec) -> Result<ScaleFunction> {
    interval.check()?;
    let anchor = anchor_for(interval.lo, interval.hi);
    for (flag, side, end, included) in [
        (spec.stack_lo, "left", interval.lo, interval.include_lo),
        (spec.stack_hi, "right", interval.hi, interval.include_hi),
    ] {
        if end.is_finite() && !included && !flag {
            return Err(Error::Invalid(format!(
                "{side} endpoint {end} of {interval} is excluded but the scale stays finite there (needs a boundary stack)"
            )));
        }
        if flag && included {
            return Err(Error::Invalid(format!(
                "{side} endpoint {end} of {interval} is included but carries a boundary stack (scale would diverge inside the interval)"
            )));
        }
        if flag && !end.is_finite() {
            return Err(Error::Invalid(format!("boundary stack requested at infinite {side} endpoint")));
        }
    }
    let stack_lo = spec.stack_lo.then(|| BoundaryStack::new(Side::Lo, interval.lo, anchor));
    let stack_hi = spec.stack_hi.then(|| BoundaryStack::new(Side::Hi, interval.hi, anchor));

    let mut blocks = spec.blocks.clone();
    for b in &blocks {
        CantorBlock::new(b.lo, b.hi, b.weight)?;
        if b.lo < interval.lo || b.hi > interval.hi {
            return Err(Error::Invalid(format!("block [{}, {}] leaves {interval}", b.lo, b.hi)));
        }
        if let Some(s) = &stack_lo {
            if b.lo < s.outer() {
                return Err(Error::Invalid(format!(
                    "block [{}, {}] overlaps the boundary stack on ({}, {}]",
                    b.lo,
                    b.hi,
                    s.base,
                    s.outer()
                )));
            }
        }
        if let Some(s) = &stack_hi {
            if b.hi > s.outer() {
                return Err(Error::Invalid(format!(
                    "block [{}, {}] overlaps the boundary stack on [{}, {})",
                    b.lo,
                    b.hi,
                    s.outer(),
                    s.base
                )));
            }
        }
    }
    blocks.sort_by(|a, b| a.lo.total_cmp(&b.lo));
    for pair in blocks.windows(2) {
        if pair[0].overlaps(&pair[1]) {
            return Err(Error::Invalid(format!(
                "blocks [{}, {}] and [{}, {}] overlap",
                pair[0].lo, pair[0].hi, pair[1].lo, pair[1].hi
            )));
        }
    }
    let anchor_offset = blocks.iter().map(|b| b.value(anchor)).sum();
    Ok(ScaleFunction { interval, anchor, blocks, stack_lo, stack_hi, anchor_offset })
}

impl ScaleFunction {
    /// The natural scale `t(x) = x - e` on an interval without excluded finite endpoints.
    pub fn natural(interval: Interval) -> Result<Self> {
        make_scale(interval, &ScaleSpec::natural_for(&interval))
    }

    pub fn interval(&self) -> &Interval {
        &self.interval
    }

    pub fn anchor(&self) -> f64 {
        self.anchor
    }

    /// Regular (non-stack) blocks, sorted by position.
    pub fn blocks(&self) -> &[CantorBlock] {
        &self.blocks
    }

    pub fn stack(&self, side: Side) -> Option<&BoundaryStack> {
        match side {
            Side::Lo => self.stack_lo.as_ref(),
            Side::Hi => self.stack_hi.as_ref(),
        }
    }

    /// True when `dt` has no singular part (`t(x) = x - e`).
    pub fn is_natural(&self) -> bool {
        self.blocks.is_empty() && self.stack_lo.is_none() && self.stack_hi.is_none()
    }

    /// Regular blocks followed by the first `stack_count` blocks of each stack.
    pub fn all_blocks(&self, stack_count: u32) -> Vec<CantorBlock> {
        let mut out = self.blocks.clone();
        for s in [self.stack_lo, self.stack_hi].into_iter().flatten() {
            out.extend((0..stack_count.min(MAX_STACK_BLOCKS)).map(|k| s.block(k)));
        }
        out.sort_by(|a, b| a.lo.total_cmp(&b.lo));
        out
    }

    fn check_point(&self, x: f64) -> Result<()> {
        if x.is_nan() || x < self.interval.lo || x > self.interval.hi || x.is_infinite() {
            return Err(Error::Domain(format!("{x} is not a point of {}", self.interval)));
        }
        if !self.interval.contains(x) && self.stack_at(x).is_none() {
            return Err(Error::Domain(format!("{x} is not a point of {}", self.interval)));
        }
        Ok(())
    }

    fn stack_at(&self, x: f64) -> Option<&BoundaryStack> {
        [self.stack_lo.as_ref(), self.stack_hi.as_ref()].into_iter().flatten().find(|s| s.base == x)
    }

    fn eval_inner(&self, x: f64, depth: Option<u32>) -> f64 {
        // summed in the same order as the offset, so that t(e) is exactly zero
        let singular: f64 = self
            .blocks
            .iter()
            .map(|b| match depth {
                None => b.value(x),
                Some(d) => b.value_at_depth(x, d),
            })
            .sum();
        let mut t = (x - self.anchor) + (singular - self.anchor_offset);
        for s in [self.stack_lo.as_ref(), self.stack_hi.as_ref()].into_iter().flatten() {
            t += s.contribution(x, depth);
        }
        t
    }

    /// `t(x)`. At a finite excluded endpoint carrying a stack the value is
    /// the signed infinity `t(a+) = -∞` or `t(b-) = +∞`.
    pub fn eval(&self, x: f64) -> Result<f64> {
        self.check_point(x)?;
        Ok(self.eval_inner(x, None))
    }

    /// `t(x)` with every block truncated at `depth` ternary digits.
    pub fn eval_at_depth(&self, x: f64, depth: u32) -> Result<f64> {
        self.check_point(x)?;
        Ok(self.eval_inner(x, Some(depth)))
    }

    /// Limits of `t` at the two ends of the interval.
    pub fn range(&self) -> (f64, f64) {
        let lo = if self.interval.lo.is_finite() {
            if self.interval.include_lo {
                self.eval_inner(self.interval.lo, None)
            } else {
                f64::NEG_INFINITY
            }
        } else {
            f64::NEG_INFINITY
        };
        let hi = if self.interval.hi.is_finite() {
            if self.interval.include_hi {
                self.eval_inner(self.interval.hi, None)
            } else {
                f64::INFINITY
            }
        } else {
            f64::INFINITY
        };
        (lo, hi)
    }

    /// Solves `t(x) = y` by monotone bisection, to `|t(x) - y| <= tol (1 + |y|)`
    /// or until the bracket reaches floating-point resolution.
    pub fn inverse(&self, y: f64, tol: f64) -> Result<f64> {
        if !(tol > 0.0) {
            return Err(Error::Domain(format!("tolerance {tol} must be positive")));
        }
        let (rlo, rhi) = self.range();
        if y.is_nan() || y < rlo || y > rhi || y.is_infinite() {
            return Err(Error::Domain(format!("{y} is outside the range [{rlo}, {rhi}] of the scale")));
        }
        if y == rlo {
            return Ok(self.interval.lo);
        }
        if y == rhi {
            return Ok(self.interval.hi);
        }
        let mut lo = self.lower_bracket(y)?;
        let mut hi = self.upper_bracket(y)?;
        let target = tol * (1.0 + y.abs());
        for _ in 0..2000 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            let tm = self.eval_inner(mid, None);
            if (tm - y).abs() <= target {
                return Ok(mid);
            }
            if tm < y {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let (tl, th) = (self.eval_inner(lo, None), self.eval_inner(hi, None));
        let best = if (tl - y).abs() <= (th - y).abs() { lo } else { hi };
        if (self.eval_inner(best, None) - y).abs() <= target.max(1e-12 * (1.0 + y.abs())) {
            Ok(best)
        } else {
            Err(Error::Domain(format!("{y} is not resolvable in floating point near the scale boundary")))
        }
    }

    fn lower_bracket(&self, y: f64) -> Result<f64> {
        let iv = &self.interval;
        let mut x = self.anchor;
        if self.eval_inner(x, None) <= y {
            return Ok(x);
        }
        if iv.lo.is_finite() {
            if iv.include_lo {
                return Ok(iv.lo);
            }
            for _ in 0..1100 {
                let next = iv.lo + 0.5 * (x - iv.lo);
                if next <= iv.lo || next == x {
                    break;
                }
                x = next;
                if self.eval_inner(x, None) <= y {
                    return Ok(x);
                }
            }
            Err(Error::Domain(format!("{y} lies beyond floating-point resolution of the left stack")))
        } else {
            let mut step = 1.0;
            loop {
                x -= step;
                if self.eval_inner(x, None) <= y {
                    return Ok(x);
                }
                step *= 2.0;
                if !x.is_finite() {
                    return Err(Error::Domain(format!("no finite preimage of {y}")));
                }
            }
        }
    }

    fn upper_bracket(&self, y: f64) -> Result<f64> {
        let iv = &self.interval;
        let mut x = self.anchor;
        if self.eval_inner(x, None) >= y {
            return Ok(x);
        }
        if iv.hi.is_finite() {
            if iv.include_hi {
                return Ok(iv.hi);
            }
            for _ in 0..1100 {
                let next = iv.hi - 0.5 * (iv.hi - x);
                if next >= iv.hi || next == x {
                    break;
                }
                x = next;
                if self.eval_inner(x, None) >= y {
                    return Ok(x);
                }
            }
            Err(Error::Domain(format!("{y} lies beyond floating-point resolution of the right stack")))
        } else {
            let mut step = 1.0;
            loop {
                x += step;
                if self.eval_inner(x, None) >= y {
                    return Ok(x);
                }
                step *= 2.0;
                if !x.is_finite() {
                    return Err(Error::Domain(format!("no finite preimage of {y}")));
                }
            }
        }
    }

    fn check_pair(&self, u: f64, v: f64) -> Result<()> {
        if !(u <= v) {
            return Err(Error::Domain(format!("[{u}, {v}] is not an interval")));
        }
        for x in [u, v] {
            if !self.interval.contains(x) {
                return Err(Error::Domain(format!("[{u}, {v}] is not inside {}", self.interval)));
            }
        }
        Ok(())
    }

    /// `dt([u, v]) = t(v) - t(u)`.
    pub fn stieltjes_mass(&self, u: f64, v: f64) -> Result<f64> {
        self.check_pair(u, v)?;
        Ok(self.eval_inner(v, None) - self.eval_inner(u, None))
    }

    /// Splits `dt([u, v])` into its Lebesgue part `v - u` and its singular
    /// part, the latter computed with blocks truncated at `depth`.
    pub fn uw_split(&self, u: f64, v: f64, depth: u32) -> Result<(f64, f64)> {
        self.check_pair(u, v)?;
        Ok((v - u, self.singular_inner(u, v, Some(depth))))
    }

    /// Exact singular mass of `[u, v]` (point evaluation of every block).
    pub fn singular_mass(&self, u: f64, v: f64) -> Result<f64> {
        self.check_pair(u, v)?;
        Ok(self.singular_inner(u, v, None))
    }

    /// Singular mass of `[u, v]` for arbitrary reals, clipped to the interval;
    /// infinite when the clipped range reaches a stacked endpoint.
    pub fn singular_mass_clipped(&self, u: f64, v: f64) -> f64 {
        let iv = &self.interval;
        let a = u.max(iv.lo);
        let b = v.min(iv.hi);
        if a >= b {
            return 0.0;
        }
        self.singular_inner(a, b, None)
    }

    fn singular_inner(&self, u: f64, v: f64, depth: Option<u32>) -> f64 {
        let mut acc = 0.0;
        for b in &self.blocks {
            acc += match depth {
                None => b.mass(u, v),
                Some(d) => b.mass_at_depth(u, v, d),
            };
        }
        for s in [self.stack_lo.as_ref(), self.stack_hi.as_ref()].into_iter().flatten() {
            acc += s.contribution(v, depth) - s.contribution(u, depth);
        }
        acc
    }

    /// `∫_u^v t(x) dx` for `u <= v` inside the interval (endpoints must give finite `t`).
    pub fn integral(&self, u: f64, v: f64) -> Result<f64> {
        self.check_pair(u, v)?;
        let mut acc = 0.5 * ((v - self.anchor).powi(2) - (u - self.anchor).powi(2)) - self.anchor_offset * (v - u);
        for b in &self.blocks {
            acc += b.value_integral(u, v);
        }
        for s in [self.stack_lo.as_ref(), self.stack_hi.as_ref()].into_iter().flatten() {
            acc += s.contribution_integral(u, v);
        }
        Ok(acc)
    }

    /// Middle-thirds gaps (levels `1..=depth`) of every regular block and of
    /// the first `stack_count` blocks of each stack.
    pub fn block_gaps(&self, depth: u32, stack_count: u32) -> Result<Vec<UnitGap>> {
        let mut out = Vec::new();
        for b in self.all_blocks(stack_count) {
            out.extend(b.gaps(depth)?);
        }
        out.sort_by(|a, b| a.lo.total_cmp(&b.lo));
        Ok(out)
    }

    /// Whether `x` is (to depth `depth`) a point of `W`: a Cantor point of some
    /// block, or an included endpoint of the interval.
    pub fn in_w(&self, x: f64, depth: u32) -> bool {
        if (self.interval.include_lo && x == self.interval.lo) || (self.interval.include_hi && x == self.interval.hi) {
            return true;
        }
        if self.blocks.iter().any(|b| b.in_approximation(x, depth)) {
            return true;
        }
        for s in [self.stack_lo.as_ref(), self.stack_hi.as_ref()].into_iter().flatten() {
            if let Some(k) = s.index_of(x) {
                if s.block(k).in_approximation(x, depth) {
                    return true;
                }
            }
        }
        false
    }

    /// Total singular mass `dt(W)`; infinite when a stack is present.
    pub fn w_mass(&self) -> f64 {
        if self.stack_lo.is_some() || self.stack_hi.is_some() {
            f64::INFINITY
        } else {
            self.blocks.iter().map(|b| b.weight).sum()
        }
    }
}

impl Default for ScaleFunction {
    fn default() -> Self {
        ScaleFunction::natural(Interval::real_line()).expect("real line")
    }
}

/// Default depth re-exported for callers that only deal with scales.
pub const SCALE_DEPTH: u32 = DEFAULT_DEPTH;

#[cfg(test)]
mod tests {
    use super::*;

    fn ex215() -> ScaleFunction {
        make_scale(
            Interval::real_line(),
            &ScaleSpec { blocks: vec![CantorBlock::new(0.0, 1.0, 1.0).unwrap()], ..Default::default() },
        )
        .unwrap()
    }

    #[test]
    fn anchors_follow_the_rule() {
        assert_eq!(anchor_for(0.0, 2.0), 1.0);
        assert_eq!(anchor_for(f64::NEG_INFINITY, 3.0), 2.0);
        assert_eq!(anchor_for(-1.0, f64::INFINITY), 0.0);
        assert_eq!(anchor_for(f64::NEG_INFINITY, f64::INFINITY), 0.0);
    }

    #[test]
    fn cantor_scale_values() {
        let t = ex215();
        assert_eq!(t.eval(0.0).unwrap(), 0.0);
        assert_eq!(t.eval(1.0).unwrap(), 2.0);
        assert_eq!(t.eval(0.5).unwrap(), 1.0);
        assert_eq!(t.eval(-2.0).unwrap(), -2.0);
        assert!((t.inverse(1.0, 1e-12).unwrap() - 0.5).abs() < 1e-9);
        assert_eq!(t.inverse(0.0, 1e-12).unwrap(), 0.0);
    }

    #[test]
    fn masses_and_split() {
        let t = ex215();
        assert_eq!(t.stieltjes_mass(0.3, 0.3).unwrap(), 0.0);
        assert_eq!(t.stieltjes_mass(0.0, 1.0).unwrap(), 2.0);
        let gap = t.stieltjes_mass(1.0 / 3.0, 2.0 / 3.0).unwrap();
        assert!((gap - 1.0 / 3.0).abs() < 1e-15);
        let (l, s) = t.uw_split(1.0 / 3.0, 2.0 / 3.0, 24).unwrap();
        assert!((l - 1.0 / 3.0).abs() < 1e-15 && s.abs() < 1e-7);
        assert_eq!(t.uw_split(0.0, 1.0, 24).unwrap(), (1.0, 1.0));
        let (l, s) = t.uw_split(0.0, 1.0 / 3.0, 24).unwrap();
        assert!((l - 1.0 / 3.0).abs() < 1e-15 && (s - 0.5).abs() < 1e-7);
        assert!(t.stieltjes_mass(1.0, 0.0).is_err());
    }

    #[test]
    fn natural_scale_on_real_line() {
        let t = ScaleFunction::natural(Interval::real_line()).unwrap();
        for x in [-3.5, 0.0, 2.25] {
            assert_eq!(t.eval(x).unwrap(), x);
        }
        assert!(t.is_natural());
    }

    #[test]
    fn half_line_with_included_endpoint() {
        let iv = Interval::new(0.0, f64::INFINITY, true, false).unwrap();
        let t = ScaleFunction::natural(iv).unwrap();
        assert_eq!(t.eval(0.0).unwrap(), -1.0);
        assert_eq!(t.range().1, f64::INFINITY);
    }

    #[test]
    fn iff_rule_is_enforced() {
        let iv = Interval::open(0.0, f64::INFINITY).unwrap();
        let err = make_scale(iv, &ScaleSpec::default()).unwrap_err();
        assert!(err.to_string().contains("boundary stack"));
        let closed = Interval::new(0.0, f64::INFINITY, true, false).unwrap();
        assert!(make_scale(closed, &ScaleSpec { stack_lo: true, ..Default::default() }).is_err());
        let overlapping = ScaleSpec {
            blocks: vec![CantorBlock::new(0.0, 1.0, 1.0).unwrap(), CantorBlock::new(0.5, 2.0, 1.0).unwrap()],
            ..Default::default()
        };
        assert!(make_scale(Interval::real_line(), &overlapping).is_err());
    }

    #[test]
    fn stack_diverges_at_excluded_endpoint() {
        let iv = Interval::open(0.0, f64::INFINITY).unwrap();
        let t = make_scale(iv, &ScaleSpec::natural_for(&iv)).unwrap();
        assert_eq!(t.eval(1.0).unwrap(), 0.0);
        assert_eq!(t.eval(0.0).unwrap(), f64::NEG_INFINITY);
        let s = t.stack(Side::Lo).unwrap();
        let mut prev = f64::INFINITY;
        for k in 0..60 {
            let v = t.eval(s.block(k).lo).unwrap();
            assert!(v < prev);
            assert!((v - (s.block(k).lo - 1.0 - (k as f64 + 1.0))).abs() < 1e-12);
            prev = v;
        }
        // round trip deep in the stack
        let x = t.inverse(-40.25, 1e-12).unwrap();
        assert!((t.eval(x).unwrap() + 40.25).abs() < 1e-9);
    }

    #[test]
    fn right_stack_mirrors_left() {
        let iv = Interval::open(f64::NEG_INFINITY, -1.0).unwrap();
        let t = make_scale(iv, &ScaleSpec::natural_for(&iv)).unwrap();
        assert_eq!(t.anchor(), -2.0);
        assert_eq!(t.eval(-2.0).unwrap(), 0.0);
        assert_eq!(t.eval(-1.0).unwrap(), f64::INFINITY);
        let s = t.stack(Side::Hi).unwrap();
        assert_eq!(s.block(0).lo, -1.5);
        assert!((t.eval(-1.25).unwrap() - (0.75 + 1.0)).abs() < 1e-12);
    }

    #[test]
    fn integral_matches_midpoint_rule() {
        let iv = Interval::open(0.0, f64::INFINITY).unwrap();
        let t = make_scale(
            iv,
            &ScaleSpec { blocks: vec![CantorBlock::new(2.0, 3.0, 0.5).unwrap()], stack_lo: true, stack_hi: false },
        )
        .unwrap();
        let (u, v) = (0.05, 3.5);
        let n = 400_000;
        let h = (v - u) / n as f64;
        let mid: f64 = (0..n).map(|i| t.eval(u + (i as f64 + 0.5) * h).unwrap() * h).sum();
        assert!((t.integral(u, v).unwrap() - mid).abs() < 1e-4);
    }
}
