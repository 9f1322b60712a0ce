//! Experiment cells: one action space over a list of seeds, and CEM training.

use nalgebra::DVector;
use rayon::prelude::*;

use crate::config::{ExperimentConfig, PolicyKind};
use crate::policy::{cem_train, CemConfig, CemResult, Evaluation, Policy, RandomPolicy, WaypointPolicy, WipeExpert};
use crate::runner::{run_episode, EpisodeRecord, Recording};
use crate::space::SpaceSpec;

/// Policy used by `run`/`compare` for one episode.
///
/// CEM configs run the waypoint policy at the prior mean; trained
/// parameters go through [`run_waypoints`].
pub fn make_policy(cfg: &ExperimentConfig, space: &SpaceSpec, seed: u64) -> Box<dyn Policy> {
    match cfg.policy.kind {
        PolicyKind::Expert => Box::new(WipeExpert::new(cfg)),
        PolicyKind::Random => Box::new(RandomPolicy::new(cfg, space.kind, seed)),
        PolicyKind::Cem => {
            let (mean, _) = WaypointPolicy::prior(&cfg.policy.cem, space.kind);
            Box::new(WaypointPolicy::new(cfg, space.kind, mean))
        }
    }
}

/// Runs `space` for every seed; results are in seed order.
pub fn run_cell(cfg: &ExperimentConfig, space: &SpaceSpec, seeds: &[u64], recording: Recording) -> Vec<EpisodeRecord> {
    seeds
        .par_iter()
        .map(|&seed| {
            let mut policy = make_policy(cfg, space, seed);
            run_episode(cfg, space, policy.as_mut(), seed, recording)
        })
        .collect()
}

/// Runs the waypoint policy with explicit parameters.
pub fn run_waypoints(cfg: &ExperimentConfig, space: &SpaceSpec, params: &DVector<f64>, seed: u64, recording: Recording) -> EpisodeRecord {
    let mut policy = WaypointPolicy::new(cfg, space.kind, params.clone());
    run_episode(cfg, space, &mut policy, seed, recording)
}

pub fn evaluation(record: &EpisodeRecord) -> Evaluation {
    Evaluation {
        ret: record.totals.reward,
        env_steps: record.totals.actions,
        penalized: record.totals.penalty < 0.0,
        success: record.totals.success,
    }
}

pub fn cem_settings(cfg: &ExperimentConfig) -> CemConfig {
    let c = &cfg.policy.cem;
    CemConfig {
        population: c.population,
        elite_fraction: c.elite_fraction,
        generations: c.generations,
    }
}

/// CEM over waypoint parameters for one action space and root seed.
pub fn train(cfg: &ExperimentConfig, space: &SpaceSpec, seed: u64) -> CemResult {
    let (mean, std) = WaypointPolicy::prior(&cfg.policy.cem, space.kind);
    let evaluate = |params: &DVector<f64>, episode_seed: u64| {
        evaluation(&run_waypoints(cfg, space, params, episode_seed, Recording::TotalsOnly))
    };
    cem_train(evaluate, mean, std, &cem_settings(cfg), seed)
}
