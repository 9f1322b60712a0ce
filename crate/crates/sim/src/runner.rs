//! Deterministic episode loop and episode metrics.
//!
//! Per policy tick: observe, act, retarget the reference track. Per control
//! tick: sample the reference, run the action space, step the plant and
//! accumulate energy and tracking error.

use aforce_core::spatial::{pose_error, tracking_error_metric};
use aforce_core::{Action, FloatingBody, Plant, PlantModel, ReferenceTrack};
use nalgebra::DVector;
use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::env::{Env, Observation, StepOutcome, TickSample};
use crate::policy::Policy;
use crate::space::SpaceSpec;

/// Per-control-tick series; every row has 6 entries except `setpoint` (7).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ControlSeries {
    pub t: Vec<f64>,
    pub tau: Vec<[f64; 6]>,
    pub q_dot: Vec<[f64; 6]>,
    pub e: Vec<[f64; 6]>,
    pub x_dot: Vec<[f64; 6]>,
    pub stiffness: Vec<[f64; 6]>,
    pub feedforward: Vec<[f64; 6]>,
    pub wrench: Vec<[f64; 6]>,
    pub setpoint: Vec<[f64; 7]>,
}

impl ControlSeries {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }
}

/// One policy tick.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyRow {
    pub action: Action<f64>,
    pub observation: Observation,
    pub outcome: StepOutcome,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Totals {
    /// J
    pub energy: f64,
    pub energy_per_action: f64,
    /// m·s + rad·s
    pub tracking_error: f64,
    pub reward: f64,
    pub penalty: f64,
    pub markers_removed: usize,
    pub markers_total: usize,
    pub actions: usize,
    pub control_ticks: usize,
    pub success: bool,
    pub failure: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeRecord {
    pub space: String,
    pub task: String,
    pub seed: u64,
    pub dt: f64,
    pub control: ControlSeries,
    pub policy: Vec<PolicyRow>,
    pub totals: Totals,
}

/// Whether the per-tick series are kept.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Recording {
    Full,
    TotalsOnly,
}

pub fn build_plant(cfg: &ExperimentConfig) -> Plant<f64> {
    let p = &cfg.plant;
    let mut plant = Plant::new(
        PlantModel::Floating(FloatingBody::new(p.mass, p.inertia, p.gravity)),
        Some(cfg.surface_model()),
    );
    plant.joint_damping = p.joint_damping;
    plant
}

fn row6(v: &DVector<f64>) -> [f64; 6] {
    let mut r = [0.0; 6];
    r.copy_from_slice(v.as_slice());
    r
}

/// Runs one episode of `space` under `policy` from the reset given by `seed`.
///
/// Plant blow-ups and action-contract violations end the episode early and
/// are recorded in `totals.failure`; such episodes score zero reward.
pub fn run_episode(
    cfg: &ExperimentConfig,
    space: &SpaceSpec,
    policy: &mut dyn Policy,
    seed: u64,
    recording: Recording,
) -> EpisodeRecord {
    run_episode_steps(cfg, space, policy, seed, recording, cfg.task.episode_steps)
}

/// [`run_episode`] with an explicit step budget.
pub fn run_episode_steps(
    cfg: &ExperimentConfig,
    space: &SpaceSpec,
    policy: &mut dyn Policy,
    seed: u64,
    recording: Recording,
    steps: usize,
) -> EpisodeRecord {
    let dt = cfg.control_dt();
    let ratio = cfg.tick_ratio();
    let plant = build_plant(cfg);
    let mut env = Env::new(cfg);
    let (mut state, mut obs) = env.reset(&plant, cfg, seed);
    let mut record = EpisodeRecord {
        space: space.name.clone(),
        task: cfg.task.kind.label().to_string(),
        seed,
        dt,
        control: ControlSeries::default(),
        policy: Vec::new(),
        totals: Totals {
            markers_total: env.markers_total(),
            ..Totals::default()
        },
    };
    let mut ctrl = match space.controller(cfg) {
        Ok(c) => c,
        Err(e) => {
            record.totals.failure = Some(e.to_string());
            return record;
        }
    };
    let b = &cfg.bridge;
    let mut track = ReferenceTrack::hold(state.x, cfg.policy_dt(), b.max_linear_velocity, b.max_angular_velocity);
    policy.reset(&obs);
    let full = recording == Recording::Full;
    let mut ticks = Vec::with_capacity(ratio);
    let mut tick_index = 0usize;

    'episode: for _ in 0..steps {
        let action = policy.act(&obs);
        if let Err(e) = ctrl.check_action(&action) {
            record.totals.failure = Some(e.to_string());
            break;
        }
        track.set_target(action.x_d);
        ticks.clear();
        for _ in 0..ratio {
            let (x_ref, xd_ref) = track.sample(dt);
            let terms = plant.dynamics_terms(&state.q, &state.q_dot);
            let tau = match ctrl.step(&action, &x_ref, &xd_ref, &state, &terms, dt) {
                Ok(t) => t,
                Err(e) => {
                    record.totals.failure = Some(e.to_string());
                    break 'episode;
                }
            };
            let e = pose_error(&state.x, &x_ref);
            let next = match plant.step(&state, &tau, dt) {
                Ok(s) => s,
                Err(err) => {
                    record.totals.failure = Some(err.to_string());
                    break 'episode;
                }
            };
            let power: f64 = tau.iter().zip(next.q_dot.iter()).map(|(a, b)| (a * b).abs()).sum();
            record.totals.energy += power * dt;
            record.totals.tracking_error += tracking_error_metric(&e) * dt;
            tick_index += 1;
            if full {
                let s = &mut record.control;
                s.t.push(tick_index as f64 * dt);
                s.tau.push(row6(&tau));
                s.q_dot.push(row6(&next.q_dot));
                s.e.push(e.into());
                s.x_dot.push(next.x_dot.to_vector().into());
                s.stiffness.push(row6(&ctrl.gains().stiffness));
                s.feedforward.push(row6(&ctrl.gains().feedforward));
                s.wrench.push(next.f_ext.to_vector().into());
                s.setpoint.push(x_ref.to_array());
            }
            state = next;
            ticks.push(TickSample::from_state(&state, dt));
        }
        let (next_obs, outcome) = env.step(&ticks);
        record.totals.actions += 1;
        record.totals.reward += outcome.reward;
        record.totals.penalty += outcome.penalty;
        record.totals.markers_removed += outcome.markers_removed;
        record.totals.success = outcome.success;
        if full {
            record.policy.push(PolicyRow {
                action,
                observation: next_obs,
                outcome,
            });
        }
        obs = next_obs;
        if outcome.done {
            break;
        }
    }

    record.totals.control_ticks = tick_index;
    if record.totals.failure.is_some() {
        record.totals.reward = 0.0;
        record.totals.success = false;
    }
    record.totals.energy_per_action = energy_per_action(&record);
    record
}

/// Energy from the logged series: `Σ_ticks Σ_joints |τ_j·q̇_j|·dt`.
pub fn energy_total(record: &EpisodeRecord) -> f64 {
    let s = &record.control;
    s.tau
        .iter()
        .zip(&s.q_dot)
        .map(|(t, v)| t.iter().zip(v).map(|(a, b)| (a * b).abs()).sum::<f64>() * record.dt)
        .sum()
}

/// Accumulated energy divided by the number of actions; zero without actions.
pub fn energy_per_action(record: &EpisodeRecord) -> f64 {
    if record.totals.actions == 0 {
        0.0
    } else {
        record.totals.energy / record.totals.actions as f64
    }
}

/// Tracking error from the logged series: `Σ_ticks metric(e)·dt`.
pub fn tracking_error_total(record: &EpisodeRecord) -> f64 {
    record
        .control
        .e
        .iter()
        .map(|e| tracking_error_metric(&nalgebra::Vector6::from_column_slice(e)) * record.dt)
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SafetyStats {
    /// Share of episodes with a negative penalty sum.
    pub penalty_episode_fraction: f64,
    pub mean_penalty: f64,
}

/// Penalty statistics over a set of episode penalty sums; `None` when empty.
pub fn safety_stats_from(penalties: &[f64]) -> Option<SafetyStats> {
    if penalties.is_empty() {
        return None;
    }
    let n = penalties.len() as f64;
    Some(SafetyStats {
        penalty_episode_fraction: penalties.iter().filter(|p| **p < 0.0).count() as f64 / n,
        mean_penalty: penalties.iter().sum::<f64>() / n,
    })
}

pub fn safety_stats(records: &[EpisodeRecord]) -> Option<SafetyStats> {
    let p: Vec<f64> = records.iter().map(|r| r.totals.penalty).collect();
    safety_stats_from(&p)
}
