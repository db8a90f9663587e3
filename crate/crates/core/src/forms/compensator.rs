use serde::{Deserialize, Serialize};

use super::piecewise::{Anchoring, PiecewiseFn, Segment, SegmentAnchor};
use crate::config::ExtensionConfig;
use crate::error::{Error, Result};
use crate::scale::Side;

/// A non-increasing staircase that is constant on each of the given closed
/// intervals of `[lo, hi]`, with `φ(lo) = 1` and `φ(hi) = 0`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Interpolant {
    pub lo: f64,
    pub hi: f64,
    /// `(a, b, value)` sorted by position.
    pub plateaus: Vec<(f64, f64, f64)>,
}

/// Monotone dyadic refinement: intervals are processed in the given order;
/// the first unassigned interval of each complementary region takes the
/// average of the two values bounding that region.
pub fn cantor_interpolant(lo: f64, hi: f64, intervals: &[(f64, f64)]) -> Result<Interpolant> {
    if !(lo < hi) {
        return Err(Error::Domain(format!("[{lo}, {hi}] is not a proper interval")));
    }
    let mut order: Vec<usize> = (0..intervals.len()).collect();
    order.sort_by(|&i, &j| intervals[i].0.total_cmp(&intervals[j].0));
    for &i in &order {
        let (a, b) = intervals[i];
        if !(a <= b) || a < lo || b > hi {
            return Err(Error::Domain(format!("[{a}, {b}] is not a closed interval inside [{lo}, {hi}]")));
        }
    }
    for w in order.windows(2) {
        if intervals[w[0]].1 >= intervals[w[1]].0 {
            return Err(Error::Domain(format!(
                "intervals [{}, {}] and [{}, {}] overlap",
                intervals[w[0]].0, intervals[w[0]].1, intervals[w[1]].0, intervals[w[1]].1
            )));
        }
    }
    let mut values = vec![f64::NAN; order.len()];
    // explicit stack instead of recursion: (range start, range end, left value, right value)
    let mut work = vec![(0usize, order.len(), 1.0f64, 0.0f64)];
    while let Some((s, e, left, right)) = work.pop() {
        if s >= e {
            continue;
        }
        let k = (s..e).min_by_key(|&p| order[p]).expect("non-empty range");
        let v = 0.5 * (left + right);
        values[k] = v;
        work.push((s, k, left, v));
        work.push((k + 1, e, v, right));
    }
    Ok(Interpolant {
        lo,
        hi,
        plateaus: order.iter().zip(values).map(|(&i, v)| (intervals[i].0, intervals[i].1, v)).collect(),
    })
}

impl Interpolant {
    /// As a function with zero density, anchored on each plateau and at both ends.
    pub fn to_fn(&self, height: f64) -> PiecewiseFn {
        let mut ranges = vec![
            SegmentAnchor { lo: f64::NEG_INFINITY, hi: self.lo, at: self.lo, value: height },
            SegmentAnchor { lo: self.hi, hi: f64::INFINITY, at: self.hi, value: 0.0 },
        ];
        ranges.extend(self.plateaus.iter().map(|&(a, b, v)| SegmentAnchor { lo: a, hi: b, at: a, value: height * v }));
        PiecewiseFn::new(Vec::new(), Anchoring::Ranges { ranges })
    }

    /// Length of `[lo, hi]` not covered by plateaus.
    pub fn uncovered(&self) -> f64 {
        (self.hi - self.lo) - self.plateaus.iter().map(|(a, b, _)| b - a).sum::<f64>()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CompensatorCase {
    OpenBoundary,
    CantorPlateau,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Compensator {
    pub case: CompensatorCase,
    pub phi: PiecewiseFn,
    /// Form energy `E(φ, φ)`.
    pub energy: f64,
    /// Upper bound for `∫ φ²`.
    pub l2: f64,
    /// `energy + l2`, an upper bound for `E₁(φ, φ)`.
    pub e1: f64,
    /// `ε / (2n)`.
    pub budget: f64,
    /// Right end of the support of `φ`.
    pub support_end: f64,
}

impl Compensator {
    pub fn within_budget(&self) -> bool {
        self.e1 < self.budget
    }
}

/// Parameters of [`compensator`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompensatorParams {
    pub h: f64,
    pub eps: f64,
    pub n: u32,
    /// Plateau width; defaults to `0.8 · ε / (2 n h²)`.
    pub beta: Option<f64>,
}

/// Builds the function `φ` with `φ(c) = h` that closes the jump of a
/// compactly supported function at `c` at `E₁`-cost below `ε / (2n)`.
pub fn compensator(
    config: &ExtensionConfig,
    case: CompensatorCase,
    c: f64,
    params: CompensatorParams,
) -> Result<Compensator> {
    let CompensatorParams { h, eps, n, beta } = params;
    if !(eps > 0.0) || n == 0 || !h.is_finite() {
        return Err(Error::Domain(format!("compensator needs ε > 0, n ≥ 1 and finite h (got {eps}, {n}, {h})")));
    }
    let budget = eps / (2.0 * n as f64);
    match case {
        CompensatorCase::OpenBoundary => open_boundary(config, c, h, eps, n, budget),
        CompensatorCase::CantorPlateau => plateau(config, c, h, eps, n, beta, budget),
    }
}

fn open_boundary(config: &ExtensionConfig, c: f64, h: f64, eps: f64, n: u32, budget: f64) -> Result<Compensator> {
    let (k, spec) = config
        .intervals()
        .iter()
        .enumerate()
        .find(|(_, s)| s.interval.lo == c)
        .ok_or_else(|| Error::Precondition(format!("{c} is not the left endpoint of an invariant interval")))?;
    let stack = spec.scale.stack(Side::Lo).ok_or_else(|| {
        Error::Precondition(format!("{c} is an included endpoint of {}, so t(c+) is finite", spec.interval))
    })?;
    if h == 0.0 {
        return Ok(Compensator {
            case: CompensatorCase::OpenBoundary,
            phi: PiecewiseFn::zero(),
            energy: 0.0,
            l2: 0.0,
            e1: 0.0,
            budget,
            support_end: c,
        });
    }
    let nf = n as f64;
    let width = (eps / (8.0 * nf * h * h)).min(stack.delta);
    let delta = c + width;
    let t_hi = spec.scale.eval(delta)?;
    let span = 16.0 * h * h * nf / eps;
    let t_lo = t_hi - span;
    let lo = spec.scale.inverse(t_lo, 1e-12).unwrap_or(c);
    let slope = -h / span;
    let phi = PiecewiseFn::new(
        vec![Segment::Ramp { interval: k, lo, hi: delta, t_lo, t_hi, slope }],
        Anchoring::Ranges {
            ranges: vec![
                SegmentAnchor { lo: c, hi: f64::INFINITY, at: delta, value: 0.0 },
                SegmentAnchor { lo: f64::NEG_INFINITY, hi: c, at: c, value: 0.0 },
            ],
        },
    );
    let energy = phi.energy(config)?;
    // φ is non-increasing on [c, δ]: left-endpoint Riemann sums bound ∫φ² from above
    let cells = 256;
    let dx = width / cells as f64;
    let mut l2 = 0.0;
    for i in 0..cells {
        let x = c + i as f64 * dx;
        let v = if i == 0 { h } else { phi.eval(config, x)? };
        l2 += v * v * dx;
    }
    Ok(Compensator {
        case: CompensatorCase::OpenBoundary,
        phi,
        energy,
        l2,
        e1: energy + l2,
        budget,
        support_end: delta,
    })
}

fn plateau(
    config: &ExtensionConfig,
    c: f64,
    h: f64,
    eps: f64,
    n: u32,
    beta: Option<f64>,
    budget: f64,
) -> Result<Compensator> {
    let nf = n as f64;
    let mut beta = beta.unwrap_or(0.8 * eps / (2.0 * nf * h * h).max(f64::MIN_POSITIVE));
    if !(beta > 0.0) {
        return Err(Error::Domain(format!("plateau width {beta} must be positive")));
    }
    let reach = c + beta;
    let mut family = Vec::new();
    for s in config.intervals().iter().filter(|s| s.interval.hi > c && s.interval.lo < reach) {
        let iv = &s.interval;
        if iv.lo <= c {
            return Err(Error::Precondition(format!("{iv} contains points on both sides of {c}")));
        }
        if !(iv.include_lo && iv.include_hi) {
            return Err(Error::Precondition(format!(
                "{iv} right of {c} is not closed; use the open-boundary construction"
            )));
        }
        if iv.hi > c + beta {
            // a straddling interval ends the plateau family
            beta = iv.lo - c;
            continue;
        }
        family.push((iv.lo, iv.hi));
    }
    family.retain(|&(_, b)| b <= c + beta);
    if family.is_empty() {
        return Err(Error::Precondition(format!("no closed intervals in ({c}, {})", c + beta)));
    }
    let interp = cantor_interpolant(c, c + beta, &family)?;
    let phi = interp.to_fn(h);
    let energy = phi.energy(config)?;
    let l2 = interp.plateaus.iter().map(|(a, b, v)| (h * v).powi(2) * (b - a)).sum::<f64>()
        + h * h * interp.uncovered().max(0.0);
    Ok(Compensator {
        case: CompensatorCase::CantorPlateau,
        phi,
        energy,
        l2,
        e1: energy + l2,
        budget,
        support_end: c + beta,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cantor::{cantor, unit_gaps};

    #[test]
    fn middle_thirds_reproduce_one_minus_cantor() {
        let gaps: Vec<(f64, f64)> = unit_gaps(5).unwrap().iter().map(|g| (g.lo, g.hi)).collect();
        let it = cantor_interpolant(0.0, 1.0, &gaps).unwrap();
        for (a, _, v) in &it.plateaus {
            assert_eq!(*v, 1.0 - cantor(*a));
        }
        assert!(it.plateaus.windows(2).all(|w| w[0].2 > w[1].2));
    }

    #[test]
    fn overlapping_family_is_rejected() {
        assert!(cantor_interpolant(0.0, 1.0, &[(0.1, 0.5), (0.4, 0.6)]).is_err());
    }
}
