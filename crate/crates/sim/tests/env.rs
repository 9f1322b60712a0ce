mod common;

use aforce_core::{Pose, Wrench};
use aforce_sim::env::{Env, PressEnv, TickSample, WipeEnv, OBSERVATION_COLUMNS};
use aforce_sim::runner::build_plant;
use nalgebra::{Vector2, Vector3};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const DT: f64 = 1e-3;

fn ticks_at(x: f64, y: f64, forces: &[f64]) -> Vec<TickSample> {
    forces
        .iter()
        .map(|&f| TickSample {
            pose: Pose::from_position(Vector3::new(x, y, 0.0)),
            wrench: Wrench::from_force(Vector3::new(0.0, 0.0, f)),
            dt: DT,
        })
        .collect()
}

/// Wipe task with a single marker at (0.15, 0) and a 50 ms policy period.
fn one_marker() -> WipeEnv {
    let cfg = common::config("wipe_expert.toml");
    let mut env = WipeEnv::new(&cfg);
    env.resample(&mut ChaCha8Rng::seed_from_u64(0));
    env.markers = vec![Vector2::new(0.15, 0.0)];
    env
}

#[test]
fn twenty_newtons_over_a_marker_removes_it() {
    let mut env = one_marker();
    let (obs, out) = env.step(&ticks_at(0.15, 0.0, &[20.0; 50]));
    assert_eq!(out.markers_removed, 1);
    assert!(out.reward >= 1.0);
    assert_eq!(out.penalty, 0.0);
    assert_eq!(obs.remaining, 0);
    assert!(out.success);
}

#[test]
fn five_newtons_leave_the_marker() {
    let mut env = one_marker();
    let (_, out) = env.step(&ticks_at(0.15, 0.0, &[5.0; 50]));
    assert_eq!(out.markers_removed, 0);
    assert_eq!(env.remaining(), 1);
    assert_eq!(out.info.valid_fraction, 0.0);
}

#[test]
fn eighty_newtons_for_one_period_cost_one_unit() {
    let mut env = one_marker();
    let (_, out) = env.step(&ticks_at(0.15, 0.0, &[80.0; 50]));
    // (80 - 60) N * 0.05 s at scale 1
    assert!((out.penalty + 1.0).abs() < 1e-12, "{}", out.penalty);
    assert_eq!(out.markers_removed, 0);
    assert!((out.reward - out.penalty).abs() < 1e-12);
}

#[test]
fn far_from_the_marker_nothing_is_removed() {
    let mut env = one_marker();
    let (_, out) = env.step(&ticks_at(0.3, 0.0, &[20.0; 50]));
    assert_eq!(out.markers_removed, 0);
}

#[test]
fn resets_keep_markers_inside_the_rectangle() {
    let cfg = common::config("wipe_expert.toml");
    let w = &cfg.task.wipe;
    let h = w.spot_half_width;
    let (x0, y0, x1, y1) = (w.spot_region[0] - h, w.spot_region[1] - h, w.spot_region[2] + h, w.spot_region[3] + h);
    let plant = build_plant(&cfg);
    let mut env = Env::new(&cfg);
    for seed in 0..10_000 {
        env.reset(&plant, &cfg, seed);
        let Env::Wipe(wipe) = &env else { unreachable!() };
        assert_eq!(wipe.markers.len(), w.markers);
        for m in &wipe.markers {
            assert!(m.x >= x0 && m.x <= x1 && m.y >= y0 && m.y <= y1, "seed {seed}: {m:?}");
        }
    }
}

#[test]
fn reset_is_a_function_of_the_seed() {
    let cfg = common::config("wipe_expert.toml");
    let plant = build_plant(&cfg);
    let mut a = Env::new(&cfg);
    let mut b = Env::new(&cfg);
    let (sa, oa) = a.reset(&plant, &cfg, 42);
    let (sb, ob) = b.reset(&plant, &cfg, 42);
    assert_eq!(sa, sb);
    assert_eq!(oa, ob);
    assert_eq!(a, b);
    let (sc, _) = b.reset(&plant, &cfg, 43);
    assert_ne!(a, b);
    assert_ne!(sa.q, sc.q);
}

#[test]
fn press_succeeds_after_the_hold_time() {
    let cfg = common::config("press_cem.toml");
    let mut env = PressEnv::new(&cfg);
    env.resample(&mut ChaCha8Rng::seed_from_u64(5));
    let (x, y) = (env.target.x, env.target.y);
    let periods = (cfg.task.press.hold_time / 0.05).round() as usize;
    for k in 0..periods {
        let (obs, out) = env.step(&ticks_at(x, y, &[10.0; 50]));
        assert_eq!(out.success, k + 1 == periods, "period {k}");
        assert_eq!(obs.remaining, usize::from(k + 1 < periods));
        if out.success {
            assert!(out.done);
            assert!(out.reward > 1.0);
        }
    }
}

#[test]
fn press_hold_restarts_when_contact_breaks() {
    let cfg = common::config("press_cem.toml");
    let mut env = PressEnv::new(&cfg);
    env.resample(&mut ChaCha8Rng::seed_from_u64(5));
    let (x, y) = (env.target.x, env.target.y);
    let mut forces = [10.0; 50];
    env.step(&ticks_at(x, y, &forces));
    forces[49] = 0.0;
    env.step(&ticks_at(x, y, &forces));
    assert_eq!(env.held(), 0.0);
}

#[test]
fn observation_carries_no_controller_state() {
    for c in OBSERVATION_COLUMNS {
        let lower = c.to_lowercase();
        for banned in ["stiff", "gain", "ff", "damp", "k_", "tau"] {
            assert!(!lower.contains(banned), "{c}");
        }
    }
}

proptest! {
    #[test]
    fn no_penalty_at_or_below_threshold(forces in prop::collection::vec(0.0..=60.0f64, 1..80)) {
        let mut env = one_marker();
        let (_, out) = env.step(&ticks_at(0.15, 0.0, &forces));
        prop_assert_eq!(out.penalty, 0.0);
    }

    #[test]
    fn penalty_is_the_excess_integral(forces in prop::collection::vec(0.0..200.0f64, 1..80)) {
        let mut env = one_marker();
        let (_, out) = env.step(&ticks_at(0.15, 0.0, &forces));
        let expected: f64 = -forces.iter().map(|f| (f - 60.0).max(0.0) * DT).sum::<f64>();
        prop_assert!((out.penalty - expected).abs() < 1e-12);
        prop_assert!(out.penalty <= 0.0);
        prop_assert!(out.reward.is_finite());
    }

    #[test]
    fn marker_count_never_grows(
        seed in 0u64..1000,
        path in prop::collection::vec((0.0..0.3f64, -0.2..0.2f64, 0.0..100.0f64), 1..40),
    ) {
        let cfg = common::config("wipe_expert.toml");
        let mut env = WipeEnv::new(&cfg);
        env.resample(&mut ChaCha8Rng::seed_from_u64(seed));
        let mut last = env.remaining();
        let mut removed = 0;
        for (x, y, f) in path {
            let (_, out) = env.step(&ticks_at(x, y, &[f; 10]));
            prop_assert!(env.remaining() <= last);
            removed += out.markers_removed;
            last = env.remaining();
        }
        prop_assert_eq!(removed + env.remaining(), env.initial_markers());
    }
}
