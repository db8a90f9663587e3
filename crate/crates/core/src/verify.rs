//! The acceptance suite run by `bmext verify`.

use std::fmt;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::cantor::{cantor, CantorBlock};
use crate::config::ExtensionConfig;
use crate::darning::{darn, energy_equivalence_check};
use crate::error::Result;
use crate::forms::{
    bilinear, bump, cantor_fn, compensator, energy, identity, orthogonal_decompose, tent, Anchoring, CompensatorCase,
    CompensatorParams, PiecewiseFn, Poly, Segment,
};
use crate::presets::preset;
use crate::scale::{make_scale, Interval, ScaleSpec};
use crate::sim::{
    build_chain, build_global_chain, hitting_probability, simulate_path, simulate_trace_chain, GridSpec, SiteKind,
    TimeMode, TraceMode, DEFAULT_BUDGET,
};
use crate::trace::{harmonic_extension, trace_energy_bm, trace_energy_ext, trace_membership, Membership, TraceFn};

/// Samples for the hitting-probability checks.
pub const DEFAULT_SAMPLES: u64 = 100_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerifyParams {
    pub seed: u64,
    pub samples: u64,
    /// Leave wall-clock times out of the report.
    pub deterministic: bool,
}

impl Default for VerifyParams {
    fn default() -> Self {
        VerifyParams { seed: crate::DEFAULT_SEED, samples: DEFAULT_SAMPLES, deterministic: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriterionResult {
    pub id: u32,
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub seed: u64,
    pub samples: u64,
    pub criteria: Vec<CriterionResult>,
}

impl VerifyReport {
    pub fn all_passed(&self) -> bool {
        self.criteria.iter().all(|c| c.passed)
    }
}

impl fmt::Display for VerifyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.criteria {
            writeln!(f, "{:>2} {} {:<28} {}", c.id, if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail)?;
        }
        Ok(())
    }
}

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Result<Outcome> {
    Ok(Outcome { passed, detail: detail.into() })
}

fn timed(params: &VerifyParams, limit: f64, start: Instant, mut o: Outcome) -> Outcome {
    let secs = start.elapsed().as_secs_f64();
    o.passed &= secs < limit;
    if !params.deterministic {
        o.detail.push_str(&format!(" [{secs:.2} s, limit {limit} s]"));
    }
    o
}

pub const CRITERIA: &[(u32, &str)] = &[
    (1, "cantor machinery"),
    (2, "scale normalisation"),
    (3, "form consistency"),
    (4, "orthogonal decomposition"),
    (5, "compensator bounds"),
    (6, "darning"),
    (7, "trace identity"),
    (8, "monte carlo hitting"),
    (9, "process structure"),
    (10, "determinism"),
];

/// Runs one criterion.
pub fn run_criterion(id: u32, params: &VerifyParams) -> CriterionResult {
    let name = CRITERIA.iter().find(|c| c.0 == id).map(|c| c.1).unwrap_or("unknown").to_string();
    let result = match id {
        1 => cantor_machinery(params),
        2 => scale_normalisation(params),
        3 => form_consistency(params),
        4 => decomposition(),
        5 => compensators(),
        6 => darning(),
        7 => trace_identity(params),
        8 => hitting(params),
        9 => process_structure(params),
        10 => determinism(params),
        _ => outcome(false, "no such criterion"),
    };
    match result {
        Ok(o) => CriterionResult { id, name, passed: o.passed, detail: o.detail },
        Err(e) => CriterionResult { id, name, passed: false, detail: format!("error: {e}") },
    }
}

pub fn run_suite(params: &VerifyParams) -> VerifyReport {
    VerifyReport {
        seed: params.seed,
        samples: params.samples,
        criteria: CRITERIA.iter().map(|&(id, _)| run_criterion(id, params)).collect(),
    }
}

/// Cantor function of `p/q` from base-3 long division, `digits` digits deep.
fn ternary_oracle(p: u64, q: u64, digits: u32) -> f64 {
    if p == q {
        return 1.0;
    }
    let (mut r, mut bit, mut acc) = (p as u128, 0.5, 0.0);
    for _ in 0..digits {
        r *= 3;
        let d = r / q as u128;
        r %= q as u128;
        match d {
            0 => {}
            1 => return acc + bit,
            _ => acc += bit,
        }
        bit *= 0.5;
    }
    acc
}

fn cantor_machinery(params: &VerifyParams) -> Result<Outcome> {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed ^ 1);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let q = rng.random_range(1..=5000u64);
        let p = rng.random_range(0..=q);
        let got = cantor(p as f64 / q as f64);
        worst = worst.max((got - ternary_oracle(p, q, 60)).abs());
    }
    let exact = cantor(1.0 / 3.0) == 0.5 && cantor(0.25) == 1.0 / 3.0;
    let o = Outcome {
        passed: worst <= 1e-12 && exact,
        detail: format!("max deviation {worst:.1e} over 1000 rationals; c(1/3), c(1/4) exact: {exact}"),
    };
    Ok(timed(params, 1.0, start, o))
}

fn random_interval(rng: &mut ChaCha8Rng) -> Interval {
    let a = rng.random_range(-5.0..0.0);
    let b = a + rng.random_range(0.5..6.0);
    let (inc_a, inc_b) = (rng.random_bool(0.5), rng.random_bool(0.5));
    match rng.random_range(0..4) {
        0 => Interval::real_line(),
        1 => Interval { lo: a, hi: f64::INFINITY, include_lo: inc_a, include_hi: false },
        2 => Interval { lo: f64::NEG_INFINITY, hi: b, include_lo: false, include_hi: inc_b },
        _ => Interval { lo: a, hi: b, include_lo: inc_a, include_hi: inc_b },
    }
}

fn scale_normalisation(params: &VerifyParams) -> Result<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed ^ 2);
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let iv = random_interval(&mut rng);
        // keep blocks clear of any boundary stack: stacks live within 1 of the ends
        let (lo, hi) =
            (if iv.lo.is_finite() { iv.lo + 1.0 } else { -8.0 }, if iv.hi.is_finite() { iv.hi - 1.0 } else { 8.0 });
        let mut blocks = Vec::new();
        if hi - lo > 0.2 {
            let mut x = lo;
            for _ in 0..rng.random_range(0..3) {
                let len = rng.random_range(0.05..0.3);
                let start = x + rng.random_range(0.0..0.2);
                if start + len > hi {
                    break;
                }
                blocks.push(CantorBlock::new(start, start + len, rng.random_range(0.1..3.0))?);
                x = start + len;
            }
        }
        let t = make_scale(iv, &ScaleSpec::with_blocks(&iv, blocks))?;
        worst = worst.max(t.eval(t.anchor())?.abs());
    }
    let cfg = preset("ex215", 8)?;
    let t = &cfg.get(0)?.scale;
    let (t0, t1) = (t.eval(0.0)?, t.eval(1.0)?);
    outcome(
        worst == 0.0 && t0 == 0.0 && t1 == 2.0,
        format!("max |t(e)| {worst:.1e} over 50 scales; ex215 t(0) = {t0}, t(1) = {t1}"),
    )
}

/// `½ ∫ f'²` for the bump, by 5-point Gauss-Legendre (exact for its degree).
fn bump_dirichlet(radius: f64, amplitude: f64) -> f64 {
    const NODES: [(f64, f64); 5] = [
        (0.0, 0.568_888_888_888_888_9),
        (-0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
        (0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
        (-0.906_179_845_938_664, 0.236_926_885_056_189_1),
        (0.906_179_845_938_664, 0.236_926_885_056_189_1),
    ];
    let mut acc = 0.0;
    for (s, w) in NODES {
        let d = -4.0 * amplitude * s * (1.0 - s * s) / radius;
        acc += w * d * d;
    }
    0.5 * acc * radius
}

fn form_consistency(params: &VerifyParams) -> Result<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed ^ 3);
    let configs = [preset("ex215", 8)?, preset("ex218", 6)?];
    let mut worst = 0.0f64;
    for k in 0..20 {
        let (m, r, a) = (rng.random_range(-0.5..1.5), rng.random_range(0.05..1.0), rng.random_range(-2.0..2.0));
        let f = bump(m, r, a);
        let want = bump_dirichlet(r, a);
        let got = energy(&configs[k % 2], &f)?;
        worst = worst.max((got - want).abs() / want);
    }
    outcome(worst <= 1e-8, format!("max relative gap {worst:.1e} over 20 bumps"))
}

fn decomposition() -> Result<Outcome> {
    let cfg = preset("ex215", 8)?;
    let c = cantor_fn(&cfg)?;
    let x_plus_c = identity().add(&cfg, &c)?;
    let mut worst = 0.0f64;
    for (f, has_x) in [(&c, false), (&x_plus_c, true)] {
        let d = orthogonal_decompose(&cfg, f)?;
        let (mut off1, mut off2) = (None, None);
        for i in 0..100 {
            let x = -0.5 + 2.0 * i as f64 / 99.0;
            let want1 = if has_x { x } else { 0.0 };
            let want2 = cantor(x);
            let r1 = d.f1.eval(&cfg, x)? - want1;
            let r2 = d.f2.eval(&cfg, x)? - want2;
            let o1 = *off1.get_or_insert(r1);
            let o2 = *off2.get_or_insert(r2);
            worst = worst.max((r1 - o1).abs()).max((r2 - o2).abs());
        }
    }
    let suite: Vec<PiecewiseFn> =
        (0..10).map(|k| bump(-0.3 + 0.17 * k as f64, 0.4 + 0.05 * k as f64, 1.0 + k as f64)).collect();
    let f = tent().add(&cfg, &c)?;
    let d = orthogonal_decompose(&cfg, &f)?;
    let mut ortho = 0.0f64;
    for g in &suite {
        ortho = ortho.max(bilinear(&cfg, &d.f2, g)?.abs());
    }
    let pyth = (energy(&cfg, &f)? - energy(&cfg, &d.f1)? - energy(&cfg, &d.f2)?).abs();
    outcome(
        worst <= 1e-9 && ortho <= 1e-8 && pyth <= 1e-8,
        format!("value deviation {worst:.1e}; orthogonality residual {ortho:.1e}; Pythagorean gap {pyth:.1e}"),
    )
}

fn compensators() -> Result<Outcome> {
    let open = preset("ex216", 8)?;
    let plateau = preset("ex218", 10)?;
    let mut worst = 0.0f64;
    let mut failures = 0;
    for h in [0.5, 1.0, 2.0] {
        for eps in [0.1, 0.01] {
            for n in [1u32, 4] {
                let params = CompensatorParams { h, eps, n, beta: None };
                for (cfg, case) in [(&open, CompensatorCase::OpenBoundary), (&plateau, CompensatorCase::CantorPlateau)]
                {
                    let comp = compensator(cfg, case, 0.0, params)?;
                    worst = worst.max(comp.e1 / comp.budget);
                    if !comp.within_budget() {
                        failures += 1;
                    }
                }
            }
        }
    }
    outcome(failures == 0, format!("24 constructions, largest E1 / budget = {worst:.3}"))
}

fn darning() -> Result<Outcome> {
    let cfg = preset("ex215", 8)?;
    let d = darn(&cfg, 0, 8)?;
    let half = d.atoms.iter().find(|a| a.location == 0.5).map(|a| a.mass);
    let mut drift = 0.0f64;
    for depth in 4..=12 {
        let d = darn(&cfg, 0, depth)?;
        drift = drift.max((d.total_mass() - d.source.length()).abs());
    }
    let f = PiecewiseFn::new(
        vec![Segment::split(0.0, 0.5, Poly::zero(), 1.0), Segment::split(0.5, 1.0, Poly::zero(), -1.0)],
        Anchoring::Global { at: 0.0, value: 0.0 },
    );
    let gap = energy_equivalence_check(&cfg, 0, &f, 20)?.relative_gap;
    let sojourn = preset("darning-sojourn", 8)?;
    let s = darn(&sojourn, 1, 8)?;
    let at_zero = s.atoms.iter().find(|a| a.location == 0.0).map(|a| a.mass);
    outcome(
        half == Some(1.0 / 3.0) && drift <= 1e-12 && gap <= 1e-6 && at_zero == Some(1.0),
        format!(
            "m*({{1/2}}) = {half:?}; mass drift {drift:.1e} at depths 4-12; energy gap {gap:.1e}; sojourn m*({{0}}) = {at_zero:?}"
        ),
    )
}

fn trace_identity(params: &VerifyParams) -> Result<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed ^ 7);
    let k8 = preset("ex218", 8)?;
    let base = TraceFn::from_fn(&k8, 8, |_| 0.0)?;
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let values = base.values.iter().map(|&(x, _)| (x, rng.random_range(-1.0..1.0))).collect();
        let phi = TraceFn::new(8, values, vec![0.0; k8.len()])?;
        let h = harmonic_extension(&k8, &phi)?;
        let dirichlet: f64 = h
            .segments
            .iter()
            .map(|s| match s {
                Segment::Split { lo, hi, u, .. } => 0.5 * u.eval(*lo).powi(2) * (hi - lo),
                _ => 0.0,
            })
            .sum();
        let e = trace_energy_bm(&k8, &phi)?;
        worst = worst.max((e - dirichlet).abs() / e);
    }
    let mut identity_gap = 0.0f64;
    for d in 1..=8 {
        let cfg = preset("ex218", d)?;
        let phi = TraceFn::from_fn(&cfg, d, |x| x.clamp(0.0, 1.0))?;
        let want = 0.5 * (1.0 - (2.0f64 / 3.0).powi(d as i32));
        identity_gap = identity_gap.max((trace_energy_bm(&cfg, &phi)? - want).abs());
    }
    let ex215 = preset("ex215", 8)?;
    let c215 = TraceFn::from_piecewise(&ex215, 8, &cantor_fn(&ex215)?)?;
    let c218 = TraceFn::from_piecewise(&k8, 8, &cantor_fn(&k8)?)?;
    let (e215, e218) = (trace_energy_ext(&ex215, &c215)?, trace_energy_ext(&k8, &c218)?);
    let m = trace_membership(&ex215, &c215, (0.0, 1.0), 1e-9).membership;
    outcome(
        worst <= 1e-9 && identity_gap <= 1e-14 && e215 == 0.5 && e218 == 0.0 && m != Membership::BrownianTrace,
        format!(
            "jump sum vs Dirichlet integral {worst:.1e}; x|K gap {identity_gap:.1e}; c|K ext energy {e215} / {e218}; c|K on ex215: {m:?}"
        ),
    )
}

fn hitting(params: &VerifyParams) -> Result<Outcome> {
    let start = Instant::now();
    let cfg = preset("ex215", 8)?;
    let grid = GridSpec::uniform(0.0, 1.0, 27).snapped(10);
    let chain = build_chain(&cfg, 0, &grid)?;
    let h = hitting_probability(&chain, 1.0 / 3.0, 0.0, 1.0, params.samples, params.seed, DEFAULT_BUDGET)?;
    let z = h.estimate.z_score(7.0 / 12.0);
    let first = timed(params, 60.0, start, Outcome { passed: z <= 3.0, detail: String::new() });
    let start = Instant::now();
    let bm = ExtensionConfig::irreducible(Vec::new())?;
    let chain = build_chain(&bm, 0, &GridSpec::uniform(0.0, 1.0, 27))?;
    let b =
        hitting_probability(&chain, 1.0 / 3.0, 0.0, 1.0, params.samples, params.seed.wrapping_add(1), DEFAULT_BUDGET)?;
    let zb = b.estimate.z_score(2.0 / 3.0);
    let second = timed(params, 60.0, start, Outcome { passed: zb <= 3.0, detail: String::new() });
    outcome(
        first.passed && second.passed,
        format!(
            "ex215 {:.5} ± {:.5} vs 7/12 ({z:.2} SE){}; Brownian {:.5} ± {:.5} vs 2/3 ({zb:.2} SE){}",
            h.estimate.estimate,
            h.estimate.std_error,
            first.detail,
            b.estimate.estimate,
            b.estimate.std_error,
            second.detail
        ),
    )
}

fn process_structure(params: &VerifyParams) -> Result<Outcome> {
    let k3 = preset("ex218", 3)?;
    let global = build_global_chain(&k3, &GridSpec::uniform(-0.5, 1.5, 216))?;
    let mut traps = 0;
    let mut trap_ok = true;
    for (i, kind) in global.kind.iter().enumerate() {
        if *kind == SiteKind::Absorb && global.interval[i].is_none() {
            traps += 1;
            trap_ok &= simulate_path(&global, global.sites[i], 1000, params.seed, TimeMode::Mean)?.len() == 1;
        }
    }
    let ex217 = preset("ex217", 4)?;
    let chain = build_global_chain(&ex217, &GridSpec::uniform(-1.5, 1.5, 600).reflecting())?;
    let x0 = -0.4;
    let n = ex217.locate(x0);
    let path = simulate_path(&chain, x0, 1_000_000, params.seed, TimeMode::Mean)?;
    let confined = path.steps.iter().all(|s| ex217.locate(s.site) == n);
    let k5 = preset("ex218", 5)?;
    let window = GridSpec::uniform(0.0, 1.0, 243);
    let ext = simulate_trace_chain(&k5, &window, 5, 1.0 / 3.0, 100_000, params.seed, TraceMode::Extension)?;
    let pair = ext.support() == vec![1.0 / 3.0, 2.0 / 3.0];
    let bm = simulate_trace_chain(&k5, &window, 5, 0.0, 100_000, params.seed, TraceMode::Brownian)?;
    let unvisited = bm.visits.iter().filter(|&&v| v == 0).count();
    outcome(
        trap_ok && traps > 0 && confined && pair && unvisited == 0,
        format!(
            "{traps} trap starts absorbed: {trap_ok}; {} steps confined: {confined}; extension trace support {:?}; Brownian trace left {unvisited} of {} sites unvisited",
            path.len() - 1,
            ext.support(),
            bm.sites.len()
        ),
    )
}

fn determinism(params: &VerifyParams) -> Result<Outcome> {
    let quick = VerifyParams { samples: params.samples.min(10_000), deterministic: true, ..*params };
    let a = serde_json::to_string(&[run_criterion(8, &quick), run_criterion(9, &quick)])?;
    let b = serde_json::to_string(&[run_criterion(8, &quick), run_criterion(9, &quick)])?;
    outcome(a == b, format!("repeated stochastic criteria identical: {}", a == b))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn oracle_halts_on_digit_one() {
        assert_eq!(ternary_oracle(1, 2, 60), 0.5);
        assert_eq!(ternary_oracle(1, 4, 60), 1.0 / 3.0);
    }
}
