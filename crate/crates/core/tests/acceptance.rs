//! End-to-end acceptance checks. Each criterion prints one line and the
//! target fails if any of them fails.

use std::time::Instant;

use bm_extension::cantor::{cantor, CantorBlock};
use bm_extension::cli;
use bm_extension::config::ExtensionConfig;
use bm_extension::darning::{darn, energy_equivalence_check};
use bm_extension::forms::{
    bilinear, bump, cantor_fn, compensator, energy, identity, orthogonal_decompose, tent, Anchoring, CompensatorCase,
    CompensatorParams, PiecewiseFn, Poly, Segment,
};
use bm_extension::presets::preset;
use bm_extension::scale::{make_scale, Interval, ScaleSpec};
use bm_extension::sim::{
    build_chain, build_global_chain, hitting_probability, simulate_path, simulate_trace_chain, GridSpec, SiteKind,
    TimeMode, TraceMode, DEFAULT_BUDGET,
};
use bm_extension::trace::{trace_energy_bm, trace_energy_ext, trace_membership, Membership, TraceFn};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = Result<(bool, String), bm_extension::Error>;
type Criterion = (&'static str, fn() -> Check);

const SEED: u64 = 20_160_707;

/// Cantor function of `p/q` by the self-similarity `c(x) = c(3x)/2`,
/// `c(x) = 1/2 + c(3x - 2)/2`, iterated on exact integers.
fn cantor_oracle(mut p: u64, q: u64) -> f64 {
    let (mut acc, mut weight) = (0.0, 1.0);
    for _ in 0..80 {
        if p == 0 {
            return acc;
        }
        if p == q {
            return acc + weight;
        }
        let p3 = 3 * p;
        if p3 < q {
            p = p3;
        } else if p3 <= 2 * q {
            return acc + weight * 0.5;
        } else {
            acc += weight * 0.5;
            p = p3 - 2 * q;
        }
        weight *= 0.5;
    }
    acc
}

/// Middle-thirds gaps of `[0, 1]` down to `depth`, by recursion on pieces.
fn middle_third_gaps(depth: u32) -> Vec<(f64, f64)> {
    let mut pieces = vec![(0u64, 1u64)];
    let mut gaps = Vec::new();
    for level in 1..=depth {
        let den = 3u64.pow(level);
        let mut next = Vec::new();
        for (num, _) in pieces {
            let a = 3 * num;
            gaps.push(((a + 1) as f64 / den as f64, (a + 2) as f64 / den as f64));
            next.push((a, den));
            next.push((a + 2, den));
        }
        pieces = next;
    }
    gaps.sort_by(|a, b| a.0.total_cmp(&b.0));
    gaps
}

fn lookup(phi: &TraceFn, x: f64) -> f64 {
    let i = phi.values.partition_point(|&(s, _)| s < x - 1e-12);
    let (s, v) = phi.values[i];
    assert!((s - x).abs() < 1e-12, "no site near {x}");
    v
}

fn criterion_1() -> Check {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let q = rng.random_range(1..=10_000u64);
        let p = rng.random_range(0..=q);
        worst = worst.max((cantor(p as f64 / q as f64) - cantor_oracle(p, q)).abs());
    }
    let exact = cantor(1.0 / 3.0) == 0.5 && cantor(0.25) == 1.0 / 3.0;
    let secs = start.elapsed().as_secs_f64();
    Ok((worst <= 1e-12 && exact && secs < 1.0, format!("max deviation {worst:.1e}, exact values {exact}, {secs:.2} s")))
}

fn criterion_2() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 2);
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let lo = rng.random_range(-4.0..0.0);
        let hi = lo + rng.random_range(2.5..6.0);
        let iv = match rng.random_range(0..3) {
            0 => Interval::real_line(),
            1 => Interval::open(lo, hi)?,
            _ => Interval::closed(lo, hi)?,
        };
        // open ends carry a boundary stack within distance 1
        let (a, b) = if iv.is_bounded() { (lo + 1.0, hi - 1.0) } else { (-3.0, 3.0) };
        let mut blocks = Vec::new();
        let k = rng.random_range(0..4);
        for i in 0..k {
            let w = (b - a) / k as f64;
            let s = a + w * i as f64;
            blocks.push(CantorBlock::new(s + 0.1 * w, s + 0.9 * w, rng.random_range(0.2..4.0))?);
        }
        let t = make_scale(iv, &ScaleSpec::with_blocks(&iv, blocks))?;
        worst = worst.max(t.eval(t.anchor())?.abs());
    }
    let cfg = preset("ex215", 8)?;
    let t = &cfg.get(0)?.scale;
    let (t0, t1) = (t.eval(0.0)?, t.eval(1.0)?);
    Ok((worst == 0.0 && t0 == 0.0 && t1 == 2.0, format!("max |t(e)| {worst:.1e}; t(0) = {t0}, t(1) = {t1}")))
}

fn criterion_3() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 3);
    let configs = [preset("ex215", 8)?, preset("ex218", 6)?];
    let mut worst = 0.0f64;
    for k in 0..20 {
        let (m, r, a) = (rng.random_range(-0.5..1.5), rng.random_range(0.05..1.0), rng.random_range(-3.0..3.0));
        // ½∫f'² for A(1 - s²)² with s = (x - m)/r is 128 A² / (105 r)
        let want = 128.0 * a * a / (105.0 * r);
        let got = energy(&configs[k % 2], &bump(m, r, a))?;
        worst = worst.max((got - want).abs() / want);
    }
    Ok((worst <= 1e-8, format!("max relative gap {worst:.1e} over 20 bumps")))
}

fn criterion_4() -> Check {
    let cfg = preset("ex215", 8)?;
    let c = cantor_fn(&cfg)?;
    let x_plus_c = identity().add(&cfg, &c)?;
    let mut worst = 0.0f64;
    for (f, slope) in [(&c, 0.0), (&x_plus_c, 1.0)] {
        let d = orthogonal_decompose(&cfg, f)?;
        let mut offsets = None;
        for i in 0..100 {
            // x = (4i - 99) / 198
            let x = -0.5 + 2.0 * i as f64 / 99.0;
            let c_x = (4 * i as i64 - 99).clamp(0, 198) as u64;
            let c_x = cantor_oracle(c_x, 198);
            let r1 = d.f1.eval(&cfg, x)? - slope * x;
            let r2 = d.f2.eval(&cfg, x)? - c_x;
            let (o1, o2) = *offsets.get_or_insert((r1, r2));
            worst = worst.max((r1 - o1).abs()).max((r2 - o2).abs());
        }
    }
    let suite: Vec<PiecewiseFn> =
        (0..10).map(|k| bump(-0.4 + 0.2 * k as f64, 0.3 + 0.07 * k as f64, 1.0 - 0.3 * k as f64)).collect();
    let f = tent().add(&cfg, &c)?;
    let d = orthogonal_decompose(&cfg, &f)?;
    let mut ortho = 0.0f64;
    for g in &suite {
        ortho = ortho.max(bilinear(&cfg, &d.f2, g)?.abs());
    }
    let pyth = (energy(&cfg, &f)? - energy(&cfg, &d.f1)? - energy(&cfg, &d.f2)?).abs();
    Ok((
        worst <= 1e-9 && ortho <= 1e-8 && pyth <= 1e-8,
        format!("value deviation {worst:.1e}, orthogonality {ortho:.1e}, Pythagorean gap {pyth:.1e}"),
    ))
}

fn criterion_5() -> Check {
    let open = preset("ex216", 8)?;
    let plateau = preset("ex218", 10)?;
    let mut worst = 0.0f64;
    let mut all = true;
    for h in [0.5, 1.0, 2.0] {
        for eps in [0.1, 0.01] {
            for n in [1u32, 4] {
                let params = CompensatorParams { h, eps, n, beta: None };
                for (cfg, case) in [(&open, CompensatorCase::OpenBoundary), (&plateau, CompensatorCase::CantorPlateau)]
                {
                    let comp = compensator(cfg, case, 0.0, params)?;
                    let budget = eps / (2.0 * n as f64);
                    worst = worst.max(comp.e1 / budget);
                    all &= comp.e1 < budget;
                }
            }
        }
    }
    Ok((all, format!("largest E1 / (ε/2n) = {worst:.3}")))
}

fn criterion_6() -> Check {
    let cfg = preset("ex215", 8)?;
    let d = darn(&cfg, 0, 8)?;
    let half = d.atoms.iter().find(|a| a.location == 0.5).map(|a| a.mass);
    let mut drift = 0.0f64;
    for depth in 4..=12 {
        let d = darn(&cfg, 0, depth)?;
        drift = drift.max((d.total_mass() - 1.0).abs());
    }
    let f = PiecewiseFn::new(
        vec![Segment::split(0.0, 0.5, Poly::zero(), 1.0), Segment::split(0.5, 1.0, Poly::zero(), -1.0)],
        Anchoring::Global { at: 0.0, value: 0.0 },
    );
    let gap = energy_equivalence_check(&cfg, 0, &f, 20)?.relative_gap;
    let sojourn = preset("darning-sojourn", 8)?;
    let s = darn(&sojourn, 1, 8)?;
    let at_zero = s.atoms.iter().find(|a| a.location == 0.0).map(|a| a.mass);
    Ok((
        half == Some(1.0 / 3.0) && drift <= 1e-12 && gap <= 1e-6 && at_zero == Some(1.0),
        format!("m*({{1/2}}) = {half:?}, mass drift {drift:.1e}, energy gap {gap:.1e}, m*({{0}}) = {at_zero:?}"),
    ))
}

fn criterion_7() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 7);
    let k8 = preset("ex218", 8)?;
    let gaps = middle_third_gaps(8);
    let base = TraceFn::from_fn(&k8, 8, |_| 0.0)?;
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let values = base.values.iter().map(|&(x, _)| (x, rng.random_range(-1.0..1.0))).collect();
        let phi = TraceFn::new(8, values, vec![0.0; k8.len()])?;
        // Hφ is affine across each gap and flat on K, so ½D(Hφ) = ½ Σ (Δφ)² / |gap|
        let dirichlet: f64 = gaps
            .iter()
            .map(|&(a, b)| {
                let jump = lookup(&phi, b) - lookup(&phi, a);
                0.5 * jump * jump / (b - a)
            })
            .sum();
        let e = trace_energy_bm(&k8, &phi)?;
        worst = worst.max((e - dirichlet).abs() / dirichlet);
    }
    let mut x_gap = 0.0f64;
    for d in 1..=8 {
        let cfg = preset("ex218", d)?;
        let phi = TraceFn::from_fn(&cfg, d, |x| x.clamp(0.0, 1.0))?;
        let want = 0.5 * (1.0 - (2.0f64 / 3.0).powi(d as i32));
        x_gap = x_gap.max((trace_energy_bm(&cfg, &phi)? - want).abs());
    }
    let ex215 = preset("ex215", 8)?;
    let c215 = TraceFn::from_piecewise(&ex215, 8, &cantor_fn(&ex215)?)?;
    let c218 = TraceFn::from_piecewise(&k8, 8, &cantor_fn(&k8)?)?;
    let (e215, e218) = (trace_energy_ext(&ex215, &c215)?, trace_energy_ext(&k8, &c218)?);
    let m = trace_membership(&ex215, &c215, (0.0, 1.0), 1e-9).membership;
    Ok((
        worst <= 1e-9 && x_gap <= 1e-14 && e215 == 0.5 && e218 == 0.0 && m != Membership::BrownianTrace,
        format!("jump sum gap {worst:.1e}, x|K gap {x_gap:.1e}, c|K energies {e215} / {e218}, c|K {m:?}"),
    ))
}

fn criterion_8() -> Check {
    let start = Instant::now();
    let cfg = preset("ex215", 8)?;
    let chain = build_chain(&cfg, 0, &GridSpec::uniform(0.0, 1.0, 27).snapped(10))?;
    let h = hitting_probability(&chain, 1.0 / 3.0, 0.0, 1.0, 100_000, SEED, DEFAULT_BUDGET)?;
    // t(x) = x + c(x) on [0, 1], so the target is (t(1) - t(1/3)) / (t(1) - t(0))
    let target = (2.0 - (1.0 / 3.0 + 0.5)) / 2.0;
    let z = (h.estimate.estimate - target).abs() / h.estimate.std_error;
    let first = start.elapsed().as_secs_f64();
    let start = Instant::now();
    let bm = ExtensionConfig::irreducible(Vec::new())?;
    let chain = build_chain(&bm, 0, &GridSpec::uniform(0.0, 1.0, 27))?;
    let b = hitting_probability(&chain, 1.0 / 3.0, 0.0, 1.0, 100_000, SEED + 1, DEFAULT_BUDGET)?;
    let zb = (b.estimate.estimate - 2.0 / 3.0).abs() / b.estimate.std_error;
    let second = start.elapsed().as_secs_f64();
    Ok((
        z <= 3.0 && zb <= 3.0 && first < 60.0 && second < 60.0,
        format!(
            "ex215 {:.5} vs {target:.5} ({z:.2} SE, {first:.1} s); Brownian {:.5} vs 2/3 ({zb:.2} SE, {second:.1} s)",
            h.estimate.estimate, b.estimate.estimate
        ),
    ))
}

fn criterion_9() -> Check {
    let k3 = preset("ex218", 3)?;
    let global = build_global_chain(&k3, &GridSpec::uniform(-0.5, 1.5, 216))?;
    let mut traps = 0;
    let mut absorbed = true;
    for (i, kind) in global.kind.iter().enumerate() {
        if *kind == SiteKind::Absorb && global.interval[i].is_none() {
            traps += 1;
            let path = simulate_path(&global, global.sites[i], 1000, SEED, TimeMode::Exponential)?;
            absorbed &= path.len() == 1 && path.absorbed;
        }
    }
    let ex217 = preset("ex217", 4)?;
    let chain = build_global_chain(&ex217, &GridSpec::uniform(-1.5, 1.5, 600).reflecting())?;
    let home = ex217.locate(-0.4);
    let path = simulate_path(&chain, -0.4, 1_000_000, SEED, TimeMode::Mean)?;
    let confined = home.is_some() && path.steps.iter().all(|s| ex217.locate(s.site) == home);
    let k5 = preset("ex218", 5)?;
    let window = GridSpec::uniform(0.0, 1.0, 243);
    let ext = simulate_trace_chain(&k5, &window, 5, 1.0 / 3.0, 100_000, SEED, TraceMode::Extension)?;
    let pair = ext.support() == vec![1.0 / 3.0, 2.0 / 3.0];
    let bm = simulate_trace_chain(&k5, &window, 5, 0.0, 100_000, SEED, TraceMode::Brownian)?;
    // 2^5 pieces at depth 5, two endpoints each
    let every = bm.sites.len() == 64 && bm.visits.iter().all(|&v| v > 0);
    Ok((
        traps > 0 && absorbed && confined && pair && every,
        format!(
            "{traps} traps absorbing: {absorbed}; {} steps confined: {confined}; extension support {:?}; all 64 sites visited: {every}",
            path.len() - 1,
            ext.support()
        ),
    ))
}

fn criterion_10() -> Check {
    let run = || {
        let mut out = Vec::new();
        let code = cli::run(["bmext", "--deterministic", "verify"], &mut out);
        (code, out)
    };
    let (a, b) = (run(), run());
    let same = a.1 == b.1;
    Ok((same && a.0 == 0, format!("exit codes {} / {}, {} bytes, identical: {same}", a.0, b.0, a.1.len())))
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("cantor machinery", criterion_1),
        ("scale normalisation", criterion_2),
        ("form consistency", criterion_3),
        ("orthogonal decomposition", criterion_4),
        ("compensator bounds", criterion_5),
        ("darning", criterion_6),
        ("trace identity", criterion_7),
        ("monte carlo hitting", criterion_8),
        ("process structure", criterion_9),
        ("determinism", criterion_10),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let (passed, detail) = check().unwrap_or_else(|e| (false, format!("error: {e}")));
        if !passed {
            failed += 1;
        }
        println!("criterion {:>2} {} {name}: {detail}", i + 1, if passed { "PASS" } else { "FAIL" });
    }
    if failed > 0 {
        eprintln!("{failed} criteria failed");
        std::process::exit(1);
    }
}
