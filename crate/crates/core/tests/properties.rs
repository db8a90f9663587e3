use bm_extension::cantor::{cantor, CantorBlock};
use bm_extension::config::PointClass;
use bm_extension::darning::{darn, darning_map};
use bm_extension::presets::preset;
use bm_extension::scale::{make_scale, Interval, ScaleFunction, ScaleSpec};
use bm_extension::sim::{build_chain, build_global_chain, hitting_probability, simulate_path, GridSpec, TimeMode};
use bm_extension::trace::{gaps, trace_energy_bm, trace_energy_ext, TraceFn};
use proptest::prelude::*;

/// Interval `(lo, hi)` (open or closed) with up to three disjoint blocks
/// kept clear of the boundary stacks.
fn scale_strategy() -> impl Strategy<Value = ScaleFunction> {
    (-3.0..0.0f64, 3.0..6.0f64, any::<bool>(), prop::collection::vec((0.05..0.9f64, 0.1..3.0f64), 0..4)).prop_map(
        |(lo, len, closed, raw)| {
            let hi = lo + len;
            let iv = if closed { Interval::closed(lo, hi).unwrap() } else { Interval::open(lo, hi).unwrap() };
            let (a, b) = (lo + 1.0, hi - 1.0);
            let cell = (b - a) / raw.len().max(1) as f64;
            let blocks = raw
                .iter()
                .enumerate()
                .map(|(i, &(frac, w))| {
                    let s = a + cell * i as f64;
                    CantorBlock::new(s, s + frac * cell, w).unwrap()
                })
                .collect();
            make_scale(iv, &ScaleSpec::with_blocks(&iv, blocks)).unwrap()
        },
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn scale_vanishes_at_anchor_and_increases(t in scale_strategy(), u in 0.0..1.0f64, v in 0.0..1.0f64) {
        prop_assert_eq!(t.eval(t.anchor()).unwrap(), 0.0);
        let iv = *t.interval();
        let (x, y) = (iv.lo + 0.05 + u * (iv.hi - iv.lo - 0.1), iv.lo + 0.05 + v * (iv.hi - iv.lo - 0.1));
        if x < y {
            prop_assert!(t.eval(x).unwrap() < t.eval(y).unwrap());
        }
    }

    #[test]
    fn scale_inverse_round_trips(t in scale_strategy(), u in 0.0..1.0f64) {
        let iv = *t.interval();
        let x = iv.lo + 0.01 + u * (iv.hi - iv.lo - 0.02);
        let y = t.eval(x).unwrap();
        let back = t.inverse(y, 1e-12).unwrap();
        prop_assert!((back - x).abs() <= 1e-9, "{} vs {}", back, x);
    }

    #[test]
    fn lebesgue_and_singular_parts_add_up(t in scale_strategy(), u in 0.0..1.0f64, v in 0.0..1.0f64) {
        let iv = *t.interval();
        let (a, b) = (iv.lo + 1.0, iv.hi - 1.0);
        let (x, y) = (a + u.min(v) * (b - a), a + u.max(v) * (b - a));
        let (leb, sing) = t.uw_split(x, y, 30).unwrap();
        let total = t.stieltjes_mass(x, y).unwrap();
        let weight: f64 = t.blocks().iter().map(|b| b.weight).sum();
        prop_assert!((leb + sing - total).abs() <= 2.0 * weight * 2f64.powi(-30) + 1e-12);
    }

    #[test]
    fn cantor_is_dyadic_at_plateau_ends(depth in 1u32..12, k in 0u64..4096) {
        let q = 3u64.pow(depth);
        let p = 3 * (k % 3u64.pow(depth - 1)) + 1;
        let (lo, hi) = (p as f64 / q as f64, (p + 1) as f64 / q as f64);
        let (cl, ch) = (cantor(lo), cantor(hi));
        prop_assert_eq!(cl, ch);
        let scaled = cl * 2f64.powi(depth as i32);
        prop_assert_eq!(scaled, scaled.round());
    }

    #[test]
    fn every_point_has_one_class(x in -3.0..3.0f64) {
        for (name, depth) in [("ex215", 6), ("ex216", 6), ("ex217", 3), ("ex218", 4)] {
            let cfg = preset(name, depth).unwrap();
            let class = cfg.classify_point(x);
            prop_assert_eq!(class == PointClass::Trap, cfg.locate(x).is_none());
        }
    }

    #[test]
    fn darning_map_is_monotone(u in 0.0..1.0f64, v in 0.0..1.0f64) {
        let cfg = preset("ex215", 8).unwrap();
        let (x, y) = (u.min(v), u.max(v));
        prop_assert!(darning_map(&cfg, 0, x).unwrap() <= darning_map(&cfg, 0, y).unwrap());
    }

    #[test]
    fn trace_energy_ignores_constants_and_scales_quadratically(
        c in -5.0..5.0f64,
        lambda in -3.0..3.0f64,
        seed in 0u64..1000,
    ) {
        let cfg = preset("ex218", 5).unwrap();
        let phi = TraceFn::from_fn(&cfg, 5, |x| (x * (seed as f64 + 1.0)).sin()).unwrap();
        let e = trace_energy_bm(&cfg, &phi).unwrap();
        let shifted = trace_energy_bm(&cfg, &phi.shift(c)).unwrap();
        let scaled = trace_energy_bm(&cfg, &phi.scale(lambda)).unwrap();
        prop_assert!((shifted - e).abs() <= 1e-12 * (1.0 + e));
        prop_assert!((scaled - lambda * lambda * e).abs() <= 1e-12 * (1.0 + lambda * lambda * e));
        prop_assert_eq!(trace_energy_ext(&cfg, &phi).unwrap(), e);
    }

    #[test]
    fn paths_stay_in_their_interval(start in 0usize..600, seed in any::<u64>()) {
        let cfg = preset("ex217", 3).unwrap();
        let chain = build_global_chain(&cfg, &GridSpec::uniform(-1.5, 1.5, 600).reflecting()).unwrap();
        let x0 = chain.sites[start.min(chain.len() - 1)];
        let home = cfg.locate(x0);
        let path = simulate_path(&chain, x0, 2000, seed, TimeMode::Exponential).unwrap();
        prop_assert!(path.steps.iter().all(|s| cfg.locate(s.site) == home));
        if home.is_none() {
            prop_assert_eq!(path.len(), 1);
        }
    }
}

#[test]
fn darned_mass_matches_interval_length() {
    let cfg = preset("ex215", 8).unwrap();
    for depth in 1..=14 {
        let spec = darn(&cfg, 0, depth).unwrap();
        assert!((spec.total_mass() - 1.0).abs() < 1e-14, "depth {depth}");
    }
}

#[test]
fn gap_lengths_fill_the_unit_interval() {
    for depth in 1..=10 {
        let cfg = preset("ex218", depth).unwrap();
        let total: f64 =
            gaps(&cfg, depth).unwrap().iter().filter(|g| g.lo >= 0.0 && g.hi <= 1.0).map(|g| g.len()).sum();
        let want = 1.0 - (2.0f64 / 3.0).powi(depth as i32);
        assert!((total - want).abs() < 1e-13, "depth {depth}: {total} vs {want}");
    }
}

#[test]
fn darning_collapses_each_gap_to_a_point() {
    let cfg = preset("ex215", 8).unwrap();
    for (lo, hi) in [(1.0 / 3.0, 2.0 / 3.0), (1.0 / 9.0, 2.0 / 9.0), (7.0 / 9.0, 8.0 / 9.0)] {
        let a = darning_map(&cfg, 0, lo).unwrap();
        let mid = darning_map(&cfg, 0, 0.5 * (lo + hi)).unwrap();
        let b = darning_map(&cfg, 0, hi).unwrap();
        assert_eq!(a, b);
        assert_eq!(a, mid);
    }
}

#[test]
fn hitting_estimates_are_reproducible() {
    let cfg = preset("ex215", 8).unwrap();
    let chain = build_chain(&cfg, 0, &GridSpec::uniform(0.0, 1.0, 27).snapped(10)).unwrap();
    let run = || hitting_probability(&chain, 1.0 / 3.0, 0.0, 1.0, 5000, 11, 1_000_000).unwrap();
    assert_eq!(run(), run());
    assert_ne!(
        run().estimate.estimate,
        hitting_probability(&chain, 1.0 / 3.0, 0.0, 1.0, 5000, 12, 1_000_000).unwrap().estimate.estimate
    );
}
