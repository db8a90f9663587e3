use serde::Serialize;

use super::piecewise::{Anchoring, PiecewiseFn, Poly, Segment, SegmentAnchor};
use crate::config::ExtensionConfig;
use crate::error::{Error, Result};

/// Finite energy and finite anchor values.
pub fn in_extended_space(config: &ExtensionConfig, f: &PiecewiseFn) -> bool {
    let anchors_finite = match &f.anchoring {
        Anchoring::Global { value, .. } => value.is_finite(),
        Anchoring::Ranges { ranges } => ranges.iter().all(|r| r.value.is_finite()),
    };
    anchors_finite && matches!(f.energy(config), Ok(e) if e.is_finite())
}

/// Whether `df/dt_n = 0` on every `U_n`.
pub fn is_in_complement(_config: &ExtensionConfig, f: &PiecewiseFn) -> bool {
    f.vanishes_on_u()
}

/// Constants of the decomposition on one invariant interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IntervalConstants {
    pub interval: usize,
    /// `∫_{I_n} (df/dt_n) 1_{U_n} dt_n` (bounded intervals only, else 0).
    pub m: f64,
    pub c1: f64,
    pub c2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Decomposition {
    /// Absolutely continuous part, normalised by `f1(e_1) = 0`.
    pub f1: PiecewiseFn,
    /// Part in the orthogonal complement.
    pub f2: PiecewiseFn,
    pub constants: Vec<IntervalConstants>,
}

/// U-density pieces of `f` clipped to `[lo, hi]`.
fn u_pieces(f: &PiecewiseFn, lo: f64, hi: f64) -> Result<Vec<(f64, f64, Poly)>> {
    let mut out = Vec::new();
    for seg in &f.segments {
        match seg {
            Segment::Split { lo: sl, hi: sh, u, .. } => {
                let (s, e) = (sl.max(lo), sh.min(hi));
                if s < e && !u.is_zero() {
                    out.push((s, e, u.clone()));
                }
            }
            _ => {
                if !seg.vanishes_on_u() {
                    return Err(Error::Domain("decomposition is defined for split densities".into()));
                }
            }
        }
    }
    Ok(out)
}

fn integrate(pieces: &[(f64, f64, Poly)], u: f64, v: f64) -> Result<f64> {
    let (a, b, sign) = if u <= v { (u, v, 1.0) } else { (v, u, -1.0) };
    let mut acc = 0.0;
    for (lo, hi, p) in pieces {
        let (s, e) = (lo.max(a), hi.min(b));
        if s < e {
            if !s.is_finite() || !e.is_finite() {
                return Err(Error::Divergent(format!("U-density is not integrable on [{s}, {e}]")));
            }
            acc += p.integral(s, e);
        }
    }
    Ok(sign * acc)
}

impl Decomposition {
    /// `f1(x)` assembled literally as `f_0(x) + ∫_0^x h`, before normalisation.
    pub fn f1_unnormalised(&self, config: &ExtensionConfig, f: &PiecewiseFn, x: f64) -> Result<f64> {
        let mut value = 0.0;
        if let Some(n) = config.locate(x) {
            let s = &config.intervals()[n];
            let c = self.constants[n];
            let pieces = u_pieces(f, s.interval.lo, s.interval.hi)?;
            let e = s.scale.anchor();
            value += integrate(&pieces, e, x)? - c.c1 * (x - e) + c.c2;
        }
        // ∫_0^x h, with h = C1 on each interval
        let (a, b, sign) = if x >= 0.0 { (0.0, x, 1.0) } else { (x, 0.0, -1.0) };
        for (s, c) in config.intervals().iter().zip(&self.constants) {
            let (lo, hi) = (s.interval.lo.max(a), s.interval.hi.min(b));
            if lo < hi && c.c1 != 0.0 {
                value += sign * c.c1 * (hi - lo);
            }
        }
        Ok(value)
    }
}

/// Splits `f` into an absolutely continuous part and a part whose density
/// vanishes on `U`.
pub fn orthogonal_decompose(config: &ExtensionConfig, f: &PiecewiseFn) -> Result<Decomposition> {
    let mut constants = Vec::with_capacity(config.len());
    let mut f1_segments = Vec::new();
    for (n, s) in config.intervals().iter().enumerate() {
        let iv = &s.interval;
        let e = s.scale.anchor();
        let pieces = u_pieces(f, iv.lo, iv.hi)?;
        let (m, c1, c2) = if iv.is_bounded() {
            let m = integrate(&pieces, iv.lo, iv.hi)?;
            let c1 = m / iv.length();
            (m, c1, integrate(&pieces, iv.lo, e)? - c1 * (e - iv.lo))
        } else if iv.lo.is_finite() {
            (0.0, 0.0, integrate(&pieces, iv.lo, e)?)
        } else if iv.hi.is_finite() {
            (0.0, 0.0, -integrate(&pieces, e, iv.hi)?)
        } else {
            (0.0, 0.0, 0.0)
        };
        constants.push(IntervalConstants { interval: n, m, c1, c2 });
        // f1 has U-density (p - C1) + C1 = p on I_n
        f1_segments.extend(pieces.into_iter().map(|(lo, hi, p)| Segment::split(lo, hi, p, 0.0)));
    }
    let e1 = config.get(0)?.scale.anchor();
    let f1 = PiecewiseFn::new(f1_segments, Anchoring::Global { at: e1, value: 0.0 });

    let f2_segments = f
        .segments
        .iter()
        .filter_map(|seg| match seg {
            Segment::Split { lo, hi, w, .. } => (*w != 0.0).then(|| Segment::split(*lo, *hi, Poly::zero(), *w)),
            other => Some(other.clone()),
        })
        .collect();
    let anchoring = match &f.anchoring {
        Anchoring::Global { at, value } => Anchoring::Global { at: *at, value: value - f1.eval(config, *at)? },
        Anchoring::Ranges { ranges } => Anchoring::Ranges {
            ranges: ranges
                .iter()
                .map(|r| Ok(SegmentAnchor { value: r.value - f1.eval(config, r.at)?, ..*r }))
                .collect::<Result<_>>()?,
        },
    };
    let f2 = PiecewiseFn::new(f2_segments, anchoring);
    Ok(Decomposition { f1, f2, constants })
}
