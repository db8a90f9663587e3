use serde::{Deserialize, Serialize};

use crate::config::ExtensionConfig;
use crate::error::{Error, Result};
use crate::extreal;
use crate::scale::{Side, MAX_STACK_BLOCKS};

/// Polynomial in `x - origin`, coefficients in increasing degree.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(from = "PolyRepr", into = "PolyRepr")]
pub struct Poly {
    pub coeffs: Vec<f64>,
    pub origin: f64,
}

/// Serialised either as a bare coefficient list (origin 0) or with an origin.
#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum PolyRepr {
    Plain(Vec<f64>),
    Centred { coeffs: Vec<f64>, origin: f64 },
}

impl From<PolyRepr> for Poly {
    fn from(r: PolyRepr) -> Self {
        match r {
            PolyRepr::Plain(coeffs) => Poly::new(coeffs),
            PolyRepr::Centred { coeffs, origin } => Poly::centred(coeffs, origin),
        }
    }
}

impl From<Poly> for PolyRepr {
    fn from(p: Poly) -> Self {
        if p.origin == 0.0 {
            PolyRepr::Plain(p.coeffs)
        } else {
            PolyRepr::Centred { coeffs: p.coeffs, origin: p.origin }
        }
    }
}

impl Poly {
    pub fn new(coeffs: Vec<f64>) -> Self {
        Poly { coeffs, origin: 0.0 }
    }

    pub fn centred(coeffs: Vec<f64>, origin: f64) -> Self {
        Poly { coeffs, origin }
    }

    pub fn zero() -> Self {
        Poly::new(Vec::new())
    }

    pub fn constant(c: f64) -> Self {
        Poly::new(vec![c])
    }

    /// `slope * x + intercept`.
    pub fn linear(intercept: f64, slope: f64) -> Self {
        Poly::new(vec![intercept, slope])
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| *c == 0.0)
    }

    pub fn eval(&self, x: f64) -> f64 {
        let y = x - self.origin;
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * y + c)
    }

    /// The same polynomial expanded about `origin`.
    pub fn recentred(&self, origin: f64) -> Poly {
        if origin == self.origin || self.coeffs.len() <= 1 {
            return Poly { coeffs: self.coeffs.clone(), origin };
        }
        // x - o = (x - o') + (o' - o)
        let inner = Poly::linear(origin - self.origin, 1.0);
        let mut p = self.coeffs.iter().rev().fold(Poly::zero(), |acc, c| acc.mul(&inner).add(&Poly::constant(*c)));
        p.origin = origin;
        p
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let other = if other.is_zero() { Poly::zero() } else { other.recentred(self.origin) };
        let n = self.coeffs.len().max(other.coeffs.len());
        let coeffs = (0..n).map(|i| self.coeffs.get(i).unwrap_or(&0.0) + other.coeffs.get(i).unwrap_or(&0.0)).collect();
        Poly { coeffs, origin: self.origin }
    }

    pub fn scale(&self, k: f64) -> Poly {
        Poly { coeffs: self.coeffs.iter().map(|c| c * k).collect(), origin: self.origin }
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        if self.coeffs.is_empty() || other.coeffs.is_empty() {
            return Poly::zero();
        }
        let other = other.recentred(self.origin);
        let mut out = vec![0.0; self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Poly { coeffs: out, origin: self.origin }
    }

    /// `p(alpha * x + beta)`.
    pub fn compose_affine(&self, alpha: f64, beta: f64) -> Poly {
        if alpha == 0.0 {
            return Poly::constant(self.eval(beta));
        }
        // alpha x + beta - o = alpha (x - (o - beta) / alpha)
        let mut k = 1.0;
        let coeffs = self
            .coeffs
            .iter()
            .map(|c| {
                let v = c * k;
                k *= alpha;
                v
            })
            .collect();
        Poly { coeffs, origin: (self.origin - beta) / alpha }
    }

    pub fn derivative(&self) -> Poly {
        let coeffs = self.coeffs.iter().enumerate().skip(1).map(|(i, c)| c * i as f64).collect();
        Poly { coeffs, origin: self.origin }
    }

    /// Antiderivative vanishing at the origin.
    pub fn antiderivative(&self) -> Poly {
        let mut out = vec![0.0];
        out.extend(self.coeffs.iter().enumerate().map(|(i, c)| c / (i + 1) as f64));
        Poly { coeffs: out, origin: self.origin }
    }

    pub fn integral(&self, u: f64, v: f64) -> f64 {
        if u == v || self.is_zero() {
            return 0.0;
        }
        let a = self.antiderivative();
        a.eval(v) - a.eval(u)
    }
}

/// A piece of the density `df/dt`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Segment {
    /// On `[lo, hi]`: density `u(x)` on `U` (so `f' = u` there) and the
    /// constant `w` on `W`.
    Split {
        #[serde(with = "extreal")]
        lo: f64,
        #[serde(with = "extreal")]
        hi: f64,
        #[serde(default)]
        u: Poly,
        #[serde(default)]
        w: f64,
    },
    /// Constant density `slope` on both parts while `t_lo <= t(x) <= t_hi`,
    /// where `t` is the scale of interval `interval`. The `x` endpoints are
    /// informational: near a boundary stack they may round to the endpoint.
    Ramp { interval: usize, lo: f64, hi: f64, t_lo: f64, t_hi: f64, slope: f64 },
    /// Density `coef * (k + 1)^(-power)` on the `k`-th block of a boundary stack.
    StackTail { interval: usize, side: Side, coef: f64, power: f64 },
}

impl Segment {
    pub fn split(lo: f64, hi: f64, u: Poly, w: f64) -> Self {
        Segment::Split { lo, hi, u, w }
    }

    /// `x`-range covered by the segment.
    pub fn range(&self, config: &ExtensionConfig) -> (f64, f64) {
        match self {
            Segment::Split { lo, hi, .. } | Segment::Ramp { lo, hi, .. } => (*lo, *hi),
            Segment::StackTail { interval, side, .. } => {
                match config.get(*interval).ok().and_then(|s| s.scale.stack(*side)) {
                    Some(st) => match side {
                        Side::Lo => (st.base, st.outer()),
                        Side::Hi => (st.outer(), st.base),
                    },
                    None => (f64::NAN, f64::NAN),
                }
            }
        }
    }

    /// True when the density vanishes on `U`.
    pub fn vanishes_on_u(&self) -> bool {
        match self {
            Segment::Split { u, .. } => u.is_zero(),
            Segment::Ramp { slope, .. } => *slope == 0.0,
            Segment::StackTail { coef, .. } => *coef == 0.0,
        }
    }
}

/// Where a function takes a prescribed value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SegmentAnchor {
    #[serde(with = "extreal")]
    pub lo: f64,
    #[serde(with = "extreal")]
    pub hi: f64,
    pub at: f64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Anchoring {
    /// `f(x) = value + ∫_at^x df` on the whole line.
    Global { at: f64, value: f64 },
    /// Separately on each listed closed range (typically the invariant intervals).
    Ranges { ranges: Vec<SegmentAnchor> },
}

/// A member of the form domain: anchor values plus a density with respect
/// to the scale functions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PiecewiseFn {
    pub segments: Vec<Segment>,
    pub anchoring: Anchoring,
}

fn stack_weight(coef: f64, power: f64, k: u32) -> f64 {
    coef * ((k + 1) as f64).powf(-power)
}

impl PiecewiseFn {
    pub fn zero() -> Self {
        PiecewiseFn { segments: Vec::new(), anchoring: Anchoring::Global { at: 0.0, value: 0.0 } }
    }

    pub fn constant(c: f64) -> Self {
        PiecewiseFn { segments: Vec::new(), anchoring: Anchoring::Global { at: 0.0, value: c } }
    }

    pub fn new(segments: Vec<Segment>, anchoring: Anchoring) -> Self {
        PiecewiseFn { segments, anchoring }
    }

    /// `f' = p` on `[lo, hi]`, zero elsewhere, `f(at) = value`.
    pub fn from_derivative(pieces: Vec<(f64, f64, Poly)>, at: f64, value: f64) -> Self {
        PiecewiseFn {
            segments: pieces.into_iter().map(|(lo, hi, p)| Segment::split(lo, hi, p, 0.0)).collect(),
            anchoring: Anchoring::Global { at, value },
        }
    }

    /// `∫_u^v df` (oriented).
    pub fn increment(&self, config: &ExtensionConfig, u: f64, v: f64) -> Result<f64> {
        if u == v {
            return Ok(0.0);
        }
        let (a, b, sign) = if u < v { (u, v, 1.0) } else { (v, u, -1.0) };
        let mut acc = 0.0;
        for seg in &self.segments {
            acc += segment_increment(config, seg, a, b)?;
        }
        if acc.is_nan() {
            return Err(Error::Divergent(format!("increment of f over [{a}, {b}] is undefined")));
        }
        Ok(sign * acc)
    }

    pub fn eval(&self, config: &ExtensionConfig, x: f64) -> Result<f64> {
        match &self.anchoring {
            Anchoring::Global { at, value } => Ok(value + self.increment(config, *at, x)?),
            Anchoring::Ranges { ranges } => {
                let r = ranges
                    .iter()
                    .find(|r| x >= r.lo && x <= r.hi)
                    .ok_or_else(|| Error::Domain(format!("{x} is outside every anchored range")))?;
                Ok(r.value + self.increment(config, r.at, x)?)
            }
        }
    }

    /// `½ Σ_n ∫ (df/dt_n)² dt_n`.
    pub fn energy(&self, config: &ExtensionConfig) -> Result<f64> {
        let mut acc = 0.0;
        for seg in &self.segments {
            acc += segment_energy(config, seg)?;
        }
        Ok(0.5 * acc)
    }

    /// True when every density part on `U` vanishes.
    pub fn vanishes_on_u(&self) -> bool {
        self.segments.iter().all(Segment::vanishes_on_u)
    }

    /// Pointwise sum; anchoring follows `self` with the other function's
    /// values added at each anchor.
    pub fn add(&self, config: &ExtensionConfig, other: &PiecewiseFn) -> Result<PiecewiseFn> {
        let mut segments = self.segments.clone();
        segments.extend(other.segments.iter().cloned());
        let anchoring = match &self.anchoring {
            Anchoring::Global { at, value } => Anchoring::Global { at: *at, value: value + other.eval(config, *at)? },
            Anchoring::Ranges { ranges } => Anchoring::Ranges {
                ranges: ranges
                    .iter()
                    .map(|r| Ok(SegmentAnchor { value: r.value + other.eval(config, r.at)?, ..*r }))
                    .collect::<Result<_>>()?,
            },
        };
        Ok(PiecewiseFn { segments, anchoring })
    }

    pub fn scale(&self, k: f64) -> PiecewiseFn {
        let segments = self
            .segments
            .iter()
            .map(|s| match s {
                Segment::Split { lo, hi, u, w } => Segment::Split { lo: *lo, hi: *hi, u: u.scale(k), w: w * k },
                Segment::Ramp { interval, lo, hi, t_lo, t_hi, slope } => {
                    Segment::Ramp { interval: *interval, lo: *lo, hi: *hi, t_lo: *t_lo, t_hi: *t_hi, slope: slope * k }
                }
                Segment::StackTail { interval, side, coef, power } => {
                    Segment::StackTail { interval: *interval, side: *side, coef: coef * k, power: *power }
                }
            })
            .collect();
        let anchoring = match &self.anchoring {
            Anchoring::Global { at, value } => Anchoring::Global { at: *at, value: value * k },
            Anchoring::Ranges { ranges } => Anchoring::Ranges {
                ranges: ranges.iter().map(|r| SegmentAnchor { value: r.value * k, ..*r }).collect(),
            },
        };
        PiecewiseFn { segments, anchoring }
    }

    pub fn sub(&self, config: &ExtensionConfig, other: &PiecewiseFn) -> Result<PiecewiseFn> {
        self.add(config, &other.scale(-1.0))
    }
}

fn clip(lo: f64, hi: f64, a: f64, b: f64) -> Option<(f64, f64)> {
    let (s, e) = (lo.max(a), hi.min(b));
    (s < e).then_some((s, e))
}

fn segment_increment(config: &ExtensionConfig, seg: &Segment, a: f64, b: f64) -> Result<f64> {
    match seg {
        Segment::Split { lo, hi, u, w } => {
            let Some((s, e)) = clip(*lo, *hi, a, b) else { return Ok(0.0) };
            let mut acc = 0.0;
            if !u.is_zero() {
                if !s.is_finite() || !e.is_finite() {
                    return Err(Error::Divergent(format!("unbounded U-density integrated over [{s}, {e}]")));
                }
                acc += u.integral(s, e);
            }
            if *w != 0.0 {
                acc += w * config.singular_mass(s, e);
            }
            Ok(acc)
        }
        Segment::Ramp { interval, t_lo, t_hi, slope, .. } => {
            let t = &config.get(*interval)?.scale;
            let iv = t.interval();
            let tv = |x: f64| -> f64 {
                if x <= iv.lo {
                    f64::NEG_INFINITY
                } else if x >= iv.hi {
                    f64::INFINITY
                } else {
                    t.eval(x).unwrap_or(f64::NAN)
                }
            };
            let (ta, tb) = (tv(a).clamp(*t_lo, *t_hi), tv(b).clamp(*t_lo, *t_hi));
            Ok(slope * (tb - ta))
        }
        Segment::StackTail { interval, side, coef, power } => {
            let t = &config.get(*interval)?.scale;
            let Some(st) = t.stack(*side) else {
                return Err(Error::Domain(format!("interval {interval} has no {side:?} stack")));
            };
            let mut acc = 0.0;
            for k in 0..MAX_STACK_BLOCKS {
                let blk = st.block(k);
                if blk.lo >= blk.hi {
                    break;
                }
                if let Some((s, e)) = clip(blk.lo, blk.hi, a, b) {
                    acc += stack_weight(*coef, *power, k) * ((e - s) + blk.mass(s, e));
                }
            }
            Ok(acc)
        }
    }
}

fn segment_energy(config: &ExtensionConfig, seg: &Segment) -> Result<f64> {
    match seg {
        Segment::Split { lo, hi, u, w } => {
            let mut acc = 0.0;
            if !u.is_zero() {
                if !lo.is_finite() || !hi.is_finite() {
                    return Err(Error::Divergent(format!("non-zero U-density on the unbounded range [{lo}, {hi}]")));
                }
                acc += u.mul(u).integral(*lo, *hi);
            }
            if *w != 0.0 {
                let m = config.singular_mass(*lo, *hi);
                if !m.is_finite() {
                    return Err(Error::Divergent(format!(
                        "W-density {w} on [{lo}, {hi}], whose singular mass is infinite"
                    )));
                }
                acc += w * w * m;
            }
            Ok(acc)
        }
        Segment::Ramp { t_lo, t_hi, slope, .. } => Ok(slope * slope * (t_hi - t_lo)),
        Segment::StackTail { interval, side, coef, power } => {
            if *coef == 0.0 {
                return Ok(0.0);
            }
            if 2.0 * power <= 1.0 {
                return Err(Error::Divergent(format!(
                    "stack density ~ (k+1)^-{power} is not square-summable against unit block masses"
                )));
            }
            let st = config
                .get(*interval)?
                .scale
                .stack(*side)
                .copied()
                .ok_or_else(|| Error::Domain(format!("interval {interval} has no {side:?} stack")))?;
            let mut acc = 0.0;
            let mut k_end = 0;
            for k in 0..MAX_STACK_BLOCKS {
                let blk = st.block(k);
                if blk.lo >= blk.hi {
                    break;
                }
                acc += stack_weight(*coef, *power, k).powi(2) * (1.0 + blk.len());
                k_end = k + 1;
            }
            // blocks below floating-point resolution still carry unit singular mass
            let s = 2.0 * power;
            acc += coef * coef * ((k_end as f64) + 0.5).powf(1.0 - s) / (s - 1.0);
            Ok(acc)
        }
    }
}

/// `½ Σ_n ∫ (df/dt_n)(dg/dt_n) dt_n` for functions made of `Split` segments.
pub fn bilinear(config: &ExtensionConfig, f: &PiecewiseFn, g: &PiecewiseFn) -> Result<f64> {
    let mut acc = 0.0;
    for sf in &f.segments {
        let Segment::Split { lo: fl, hi: fh, u: fu, w: fw } = sf else {
            return Err(Error::Domain("bilinear form needs split segments".into()));
        };
        for sg in &g.segments {
            let Segment::Split { lo: gl, hi: gh, u: gu, w: gw } = sg else {
                return Err(Error::Domain("bilinear form needs split segments".into()));
            };
            let Some((s, e)) = clip(*fl, *fh, *gl, *gh) else { continue };
            let uu = fu.mul(gu);
            if !uu.is_zero() {
                if !s.is_finite() || !e.is_finite() {
                    return Err(Error::Divergent(format!("U-densities overlap on the unbounded range [{s}, {e}]")));
                }
                acc += uu.integral(s, e);
            }
            if *fw != 0.0 && *gw != 0.0 {
                let m = config.singular_mass(s, e);
                if !m.is_finite() {
                    return Err(Error::Divergent(format!(
                        "W-densities overlap on [{s}, {e}] with infinite singular mass"
                    )));
                }
                acc += fw * gw * m;
            }
        }
    }
    Ok(0.5 * acc)
}
