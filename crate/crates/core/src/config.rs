//! Invariant-interval configurations: the data that determines a regular
//! Dirichlet extension of Brownian motion on the line.

use serde::{Deserialize, Serialize};

use crate::cantor::{CantorBlock, DEFAULT_DEPTH};
use crate::error::{Error, Result};
use crate::extreal;
use crate::scale::{make_scale, Interval, ScaleFunction, ScaleSpec, Side, MAX_STACK_BLOCKS};

/// Description of the complement of the union of the invariant intervals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Complement {
    /// Finitely many points.
    Points { points: Vec<f64> },
    /// The middle-thirds Cantor set on `[lo, hi]`; the listed intervals cover
    /// the gaps of levels `1..=depth`.
    Cantor { lo: f64, hi: f64, depth: u32 },
}

impl Default for Complement {
    fn default() -> Self {
        Complement::Points { points: Vec::new() }
    }
}

impl Complement {
    fn covers(&self, u: f64, v: f64) -> bool {
        match self {
            Complement::Points { .. } => false,
            Complement::Cantor { lo, hi, .. } => u >= *lo && v <= *hi,
        }
    }
}

/// One invariant interval as written in a scenario file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntervalDef {
    #[serde(with = "extreal")]
    pub lo: f64,
    #[serde(with = "extreal")]
    pub hi: f64,
    #[serde(default)]
    pub include_lo: bool,
    #[serde(default)]
    pub include_hi: bool,
    /// Omitted means the natural scale with stacks where required.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scale: Option<ScaleSpec>,
}

impl IntervalDef {
    pub fn interval(&self) -> Interval {
        Interval { lo: self.lo, hi: self.hi, include_lo: self.include_lo, include_hi: self.include_hi }
    }

    pub fn scale_spec(&self) -> ScaleSpec {
        self.scale.clone().unwrap_or_else(|| ScaleSpec::natural_for(&self.interval()))
    }
}

/// Unvalidated configuration, as parsed from a scenario.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigSpec {
    pub intervals: Vec<IntervalDef>,
    #[serde(default)]
    pub complement: Complement,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Invariant {
    Interval,
    ScaleFunction,
    Disjointness,
    NullComplement,
    ComplementDescriptor,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub invariant: Invariant,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ValidationReport {
    pub intervals: usize,
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    fn push(&mut self, invariant: Invariant, message: String) {
        self.violations.push(Violation { invariant, message });
    }
}

impl std::fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.is_valid() {
            return write!(f, "valid ({} intervals)", self.intervals);
        }
        writeln!(f, "invalid ({} violations)", self.violations.len())?;
        for v in &self.violations {
            writeln!(f, "  [{:?}] {}", v.invariant, v.message)?;
        }
        Ok(())
    }
}

/// Relative tolerance of the null-complement check.
const NULL_TOL: f64 = 1e-9;

/// Checks every structural invariant of a configuration and lists the violations.
pub fn validate(spec: &ConfigSpec) -> ValidationReport {
    let mut report = ValidationReport { intervals: spec.intervals.len(), ..Default::default() };
    if spec.intervals.is_empty() {
        report.push(Invariant::Interval, "configuration has no invariant intervals".into());
        return report;
    }
    let mut ivs: Vec<(usize, Interval)> = Vec::new();
    for (k, def) in spec.intervals.iter().enumerate() {
        let iv = def.interval();
        if let Err(e) = iv.check() {
            report.push(Invariant::Interval, format!("interval {k}: {e}"));
            continue;
        }
        if let Err(e) = make_scale(iv, &def.scale_spec()) {
            report.push(Invariant::ScaleFunction, format!("interval {k} {iv}: {e}"));
        }
        ivs.push((k, iv));
    }
    ivs.sort_by(|a, b| a.1.lo.total_cmp(&b.1.lo).then(a.1.hi.total_cmp(&b.1.hi)));
    for w in ivs.windows(2) {
        let ((i, a), (j, b)) = (w[0], w[1]);
        if a.hi > b.lo || a.intersects(&b) {
            report.push(Invariant::Disjointness, format!("intervals {i} {a} and {j} {b} overlap"));
        }
    }
    if !report.is_valid() {
        return report;
    }

    // uncovered stretches between consecutive intervals
    let mut cantor_uncovered = 0.0;
    let mut uncovered_points = Vec::new();
    let mut check_gap = |u: f64, v: f64, report: &mut ValidationReport| {
        if v > u {
            if spec.complement.covers(u, v) {
                cantor_uncovered += v - u;
            } else {
                report.push(Invariant::NullComplement, format!("complement contains ({u}, {v}) of positive length"));
            }
        }
    };
    let first = ivs[0].1;
    if first.lo > f64::NEG_INFINITY {
        check_gap(f64::NEG_INFINITY, first.lo, &mut report);
        if !first.include_lo {
            uncovered_points.push(first.lo);
        }
    }
    for w in ivs.windows(2) {
        let (a, b) = (w[0].1, w[1].1);
        if a.hi == b.lo {
            if !a.include_hi && !b.include_lo {
                uncovered_points.push(a.hi);
            }
        } else {
            if !a.include_hi {
                uncovered_points.push(a.hi);
            }
            if !b.include_lo {
                uncovered_points.push(b.lo);
            }
            check_gap(a.hi, b.lo, &mut report);
        }
    }
    let last = ivs[ivs.len() - 1].1;
    if last.hi < f64::INFINITY {
        if !last.include_hi {
            uncovered_points.push(last.hi);
        }
        check_gap(last.hi, f64::INFINITY, &mut report);
    }

    match &spec.complement {
        Complement::Points { points } => {
            for p in points {
                if let Some((k, iv)) = ivs.iter().find(|(_, iv)| iv.contains(*p)) {
                    report.push(
                        Invariant::ComplementDescriptor,
                        format!("complement point {p} lies in interval {k} {iv}"),
                    );
                }
            }
            for p in &uncovered_points {
                if !points.contains(p) {
                    report.push(
                        Invariant::ComplementDescriptor,
                        format!("uncovered point {p} is missing from the complement descriptor"),
                    );
                }
            }
        }
        Complement::Cantor { lo, hi, depth } => {
            if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
                report.push(
                    Invariant::ComplementDescriptor,
                    format!("Cantor descriptor [{lo}, {hi}] is not a proper interval"),
                );
            } else {
                let len = hi - lo;
                let expected = (2.0f64 / 3.0).powi(*depth as i32) * len;
                let residual = cantor_uncovered - expected;
                if residual.abs() > NULL_TOL * len {
                    report.push(
                        Invariant::NullComplement,
                        format!(
                            "uncovered length {cantor_uncovered} in [{lo}, {hi}] differs from the level-{depth} Cantor measure {expected}"
                        ),
                    );
                }
            }
        }
    }
    report
}

/// The class of a point in the sense of the Itô–McKean taxonomy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PointClass {
    Regular,
    RightShunt,
    LeftShunt,
    RightSingular,
    LeftSingular,
    Trap,
}

/// A validated configuration.
#[derive(Debug, Clone)]
pub struct ExtensionConfig {
    spec: ConfigSpec,
    intervals: Vec<IntervalSpec>,
}

/// A validated invariant interval with its scale function.
#[derive(Debug, Clone, PartialEq)]
pub struct IntervalSpec {
    pub interval: Interval,
    pub scale: ScaleFunction,
}

impl ExtensionConfig {
    /// Validates and builds; intervals are stored sorted left to right.
    pub fn new(spec: ConfigSpec) -> Result<Self> {
        let report = validate(&spec);
        if !report.is_valid() {
            return Err(Error::Invalid(report.to_string().trim_end().to_string()));
        }
        let mut intervals = spec
            .intervals
            .iter()
            .map(|d| {
                let iv = d.interval();
                Ok(IntervalSpec { interval: iv, scale: make_scale(iv, &d.scale_spec())? })
            })
            .collect::<Result<Vec<_>>>()?;
        intervals.sort_by(|a, b| a.interval.lo.total_cmp(&b.interval.lo));
        Ok(ExtensionConfig { spec, intervals })
    }

    /// Single interval `ℝ` with the given blocks.
    pub fn irreducible(blocks: Vec<CantorBlock>) -> Result<Self> {
        Self::new(ConfigSpec {
            intervals: vec![IntervalDef {
                lo: f64::NEG_INFINITY,
                hi: f64::INFINITY,
                include_lo: false,
                include_hi: false,
                scale: Some(ScaleSpec { blocks, ..Default::default() }),
            }],
            complement: Complement::default(),
        })
    }

    pub fn spec(&self) -> &ConfigSpec {
        &self.spec
    }

    pub fn intervals(&self) -> &[IntervalSpec] {
        &self.intervals
    }

    pub fn len(&self) -> usize {
        self.intervals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    pub fn get(&self, n: usize) -> Result<&IntervalSpec> {
        self.intervals.get(n).ok_or_else(|| {
            Error::Domain(format!("interval index {n} out of range (config has {})", self.intervals.len()))
        })
    }

    pub fn complement(&self) -> &Complement {
        &self.spec.complement
    }

    pub fn validate(&self) -> ValidationReport {
        validate(&self.spec)
    }

    /// Singular part of `Σ_n dt_n` on `[u, v]`; infinite when the range reaches a stacked endpoint.
    pub fn singular_mass(&self, u: f64, v: f64) -> f64 {
        if !(u < v) {
            return 0.0;
        }
        let end = self.intervals.partition_point(|s| s.interval.lo < v);
        let mut acc = 0.0;
        for s in self.intervals[..end].iter().rev() {
            if s.interval.hi <= u {
                // intervals are disjoint and sorted, so earlier ones end even sooner
                break;
            }
            if !s.scale.is_natural() {
                acc += s.scale.singular_mass_clipped(u, v);
            }
        }
        acc
    }

    /// Index of the interval containing `x`, if any.
    pub fn locate(&self, x: f64) -> Option<usize> {
        let idx = self.intervals.partition_point(|s| s.interval.lo <= x);
        (idx.saturating_sub(2)..idx.min(self.intervals.len())).rev().find(|&i| self.intervals[i].interval.contains(x))
    }

    /// Classifies `x` into shunt, trap or regular points.
    ///
    /// Points of `F` (the complement of the interval interiors) that are
    /// neither shunt points lie in both singular classes and are reported as
    /// traps, so the singular-only labels never occur for these configurations.
    pub fn classify_point(&self, x: f64) -> PointClass {
        match self.locate(x) {
            None => PointClass::Trap,
            Some(i) => {
                let iv = &self.intervals[i].interval;
                if iv.interior_contains(x) {
                    PointClass::Regular
                } else if x == iv.lo {
                    PointClass::RightShunt
                } else {
                    PointClass::LeftShunt
                }
            }
        }
    }

    /// Trace measure `μ` supported on `K`, with stacks and W-parts listed to `depth`.
    pub fn build_trace_measure(&self, depth: u32) -> TraceMeasure {
        let mut atoms = Vec::new();
        let mut parts = Vec::new();
        let mut empty = Vec::new();
        for (n, s) in self.intervals.iter().enumerate() {
            let iv = &s.interval;
            let atom = if iv.is_bounded() { iv.length() } else { 1.0 };
            if iv.include_lo {
                atoms.push(Atom { location: iv.lo, mass: atom });
            }
            if iv.include_hi {
                atoms.push(Atom { location: iv.hi, mass: atom });
            }
            let mut raw: Vec<(CantorBlock, Option<(Side, u32)>)> =
                s.scale.blocks().iter().map(|b| (*b, None)).collect();
            for side in [Side::Lo, Side::Hi] {
                if let Some(st) = s.scale.stack(side) {
                    for k in 0..MAX_STACK_BLOCKS {
                        let b = st.block(k);
                        if b.lo >= b.hi {
                            break;
                        }
                        raw.push((CantorBlock { weight: 0.5f64.powi(k as i32 + 1), ..b }, Some((side, k))));
                    }
                }
            }
            if raw.is_empty() {
                if !iv.include_lo && !iv.include_hi {
                    empty.push(n);
                }
                continue;
            }
            let factor =
                if iv.is_bounded() { iv.length() / raw.iter().map(|(b, _)| b.weight).sum::<f64>() } else { 1.0 };
            for (b, stack) in raw {
                parts.push(SingularPart { interval: n, block: CantorBlock { weight: b.weight * factor, ..b }, stack });
            }
        }
        atoms.sort_by(|a, b| a.location.total_cmp(&b.location));
        parts.sort_by(|a, b| a.block.lo.total_cmp(&b.block.lo));
        TraceMeasure { atoms, parts, empty_support: empty, depth }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Atom {
    pub location: f64,
    pub mass: f64,
}

/// Renormalised restriction of `dt_n` to one block of `W_n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SingularPart {
    pub interval: usize,
    pub block: CantorBlock,
    /// `(side, k)` for the `k`-th block of a boundary stack.
    pub stack: Option<(Side, u32)>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceMeasure {
    pub atoms: Vec<Atom>,
    pub parts: Vec<SingularPart>,
    /// Intervals that contribute nothing to the support of `μ`.
    pub empty_support: Vec<usize>,
    pub depth: u32,
}

impl TraceMeasure {
    pub fn is_purely_atomic(&self) -> bool {
        self.parts.is_empty()
    }

    /// `μ([u, v])`.
    pub fn mass(&self, u: f64, v: f64) -> f64 {
        if !(u <= v) {
            return 0.0;
        }
        let atoms: f64 = self.atoms.iter().filter(|a| a.location >= u && a.location <= v).map(|a| a.mass).sum();
        let parts: f64 =
            self.parts.iter().filter(|p| p.block.hi > u && p.block.lo < v).map(|p| p.block.mass(u, v)).sum();
        atoms + parts
    }

    /// `μ((x - eps, x + eps))`, evaluated with blocks truncated at the measure's depth.
    pub fn local_mass(&self, x: f64, eps: f64) -> f64 {
        let (u, v) = (x - eps, x + eps);
        let atoms: f64 = self.atoms.iter().filter(|a| a.location > u && a.location < v).map(|a| a.mass).sum();
        let parts: f64 = self
            .parts
            .iter()
            .filter(|p| p.block.hi > u && p.block.lo < v)
            .map(|p| p.block.mass_at_depth(u, v, self.depth))
            .sum();
        atoms + parts
    }

    /// Total mass; finite because atoms are capped and stacks are geometric.
    pub fn total(&self) -> f64 {
        self.atoms.iter().map(|a| a.mass).sum::<f64>() + self.parts.iter().map(|p| p.block.weight).sum::<f64>()
    }
}

/// Default depth for building trace measures.
pub const MEASURE_DEPTH: u32 = DEFAULT_DEPTH;

#[cfg(test)]
mod tests {
    use super::*;

    fn def(lo: f64, hi: f64, il: bool, ih: bool) -> IntervalDef {
        IntervalDef { lo, hi, include_lo: il, include_hi: ih, scale: None }
    }

    #[test]
    fn overlapping_intervals_are_reported() {
        let spec = ConfigSpec {
            intervals: vec![def(f64::NEG_INFINITY, 1.0, false, true), def(0.0, f64::INFINITY, true, false)],
            complement: Complement::default(),
        };
        let r = validate(&spec);
        assert!(r.violations.iter().any(|v| v.invariant == Invariant::Disjointness));
    }

    #[test]
    fn touching_closed_endpoints_overlap() {
        let spec = ConfigSpec {
            intervals: vec![def(f64::NEG_INFINITY, 0.0, false, true), def(0.0, f64::INFINITY, true, false)],
            complement: Complement::default(),
        };
        assert!(!validate(&spec).is_valid());
    }

    #[test]
    fn shared_endpoint_with_one_side_open() {
        let spec = ConfigSpec {
            intervals: vec![def(f64::NEG_INFINITY, 0.0, false, true), def(0.0, f64::INFINITY, false, false)],
            complement: Complement::default(),
        };
        let cfg = ExtensionConfig::new(spec).unwrap();
        assert_eq!(cfg.classify_point(0.0), PointClass::LeftShunt);
        assert_eq!(cfg.classify_point(0.5), PointClass::Regular);
    }

    #[test]
    fn positive_measure_complement_is_rejected() {
        let spec = ConfigSpec {
            intervals: vec![def(f64::NEG_INFINITY, 0.0, false, true), def(1.0, f64::INFINITY, true, false)],
            complement: Complement::default(),
        };
        let r = validate(&spec);
        assert!(r.violations.iter().any(|v| v.invariant == Invariant::NullComplement));
    }

    #[test]
    fn missing_stack_is_a_scale_violation() {
        let spec = ConfigSpec {
            intervals: vec![
                def(f64::NEG_INFINITY, 0.0, false, true),
                IntervalDef { scale: Some(ScaleSpec::default()), ..def(0.0, f64::INFINITY, false, false) },
            ],
            complement: Complement::default(),
        };
        let r = validate(&spec);
        assert!(r.violations.iter().any(|v| v.invariant == Invariant::ScaleFunction));
    }

    #[test]
    fn unlisted_trap_is_reported() {
        let spec = ConfigSpec {
            intervals: vec![def(f64::NEG_INFINITY, 0.0, false, false), def(0.0, f64::INFINITY, false, false)],
            complement: Complement::default(),
        };
        let r = validate(&spec);
        assert!(r.violations.iter().any(|v| v.invariant == Invariant::ComplementDescriptor));
    }

    #[test]
    fn empty_support_is_reported() {
        let cfg = ExtensionConfig::irreducible(vec![]).unwrap();
        let mu = cfg.build_trace_measure(8);
        assert_eq!(mu.empty_support, vec![0]);
        assert_eq!(mu.total(), 0.0);
    }
}
