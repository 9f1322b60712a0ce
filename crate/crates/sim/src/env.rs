//! Wipe and press tasks on a horizontal surface.
//!
//! An environment sees the plant only through [`TickSample`]s collected over
//! one policy period and answers with the next [`Observation`] and a
//! [`StepOutcome`]. Normal force is the z component of the contact wrench.

use aforce_core::{Plant, PlantState, Pose, Wrench};
use nalgebra::{DVector, Vector2, Vector3};
use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::config::{ExperimentConfig, PressConfig, TaskKind, WipeConfig};
use crate::rng;

/// Share of the per-step reward given for contact inside the force window.
const CONTACT_SHAPING: f64 = 0.1;
/// Reward for completing the press task.
const PRESS_BONUS: f64 = 5.0;
/// Reward per metre of horizontal distance to the press target.
const PRESS_DISTANCE_WEIGHT: f64 = 1.0;

/// Plant quantities the task may look at after each control tick.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TickSample {
    pub pose: Pose<f64>,
    pub wrench: Wrench<f64>,
    pub dt: f64,
}

impl TickSample {
    pub fn from_state(state: &PlantState<f64>, dt: f64) -> Self {
        Self {
            pose: state.x,
            wrench: state.f_ext,
            dt,
        }
    }

    pub fn normal_force(&self) -> f64 {
        self.wrench.force.z
    }
}

pub const OBSERVATION_COLUMNS: [&str; 17] = [
    "step",
    "px_m",
    "py_m",
    "pz_m",
    "qw",
    "qx",
    "qy",
    "qz",
    "fx_N",
    "fy_N",
    "fz_N",
    "tx_Nm",
    "ty_Nm",
    "tz_Nm",
    "centroid_x_m",
    "centroid_y_m",
    "remaining",
];

/// What the slow policy sees at a policy tick.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observation {
    pub step: usize,
    pub ee_pose: Pose<f64>,
    /// Contact wrench averaged over the last policy period.
    pub wrench: Wrench<f64>,
    /// Centroid of the remaining markers (wipe) or the target (press).
    pub centroid: Vector2<f64>,
    /// Markers left (wipe); 1 until the hold succeeds (press).
    pub remaining: usize,
    pub surface_height: f64,
}

impl Observation {
    pub fn normal_force(&self) -> f64 {
        self.wrench.force.z
    }

    /// Flat row matching [`OBSERVATION_COLUMNS`].
    pub fn to_row(&self) -> [f64; 17] {
        let p = self.ee_pose.to_array();
        let w = self.wrench.to_vector();
        [
            self.step as f64,
            p[0],
            p[1],
            p[2],
            p[3],
            p[4],
            p[5],
            p[6],
            w[0],
            w[1],
            w[2],
            w[3],
            w[4],
            w[5],
            self.centroid.x,
            self.centroid.y,
            self.remaining as f64,
        ]
    }
}

/// Force statistics over one policy period.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ForceStats {
    pub max_normal: f64,
    pub mean_normal: f64,
    /// Share of ticks with the normal force inside the task's force window.
    pub valid_fraction: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StepOutcome {
    pub reward: f64,
    /// Always `<= 0`; already included in `reward`.
    pub penalty: f64,
    pub markers_removed: usize,
    pub done: bool,
    pub success: bool,
    pub info: ForceStats,
}

fn penalty(ticks: &[TickSample], threshold: f64, scale: f64) -> f64 {
    -scale * ticks.iter().map(|t| (t.normal_force() - threshold).max(0.0) * t.dt).sum::<f64>()
}

fn mean_wrench(ticks: &[TickSample]) -> Wrench<f64> {
    if ticks.is_empty() {
        return Wrench::zero();
    }
    let sum = ticks.iter().fold(nalgebra::Vector6::zeros(), |acc, t| acc + t.wrench.to_vector());
    Wrench::from_vector(&(sum / ticks.len() as f64))
}

fn uniform_in(rng: &mut impl Rng, region: &[f64]) -> Vector2<f64> {
    Vector2::new(rng.random_range(region[0]..=region[2]), rng.random_range(region[1]..=region[3]))
}

/// Initial plant state: the tool above `home` with Gaussian noise on q.
fn initial_state(plant: &Plant<f64>, cfg: &ExperimentConfig, rng: &mut impl Rng) -> PlantState<f64> {
    let home = Vector3::new(0.0, 0.0, cfg.surface.height + cfg.plant.start_height);
    let mut q = DVector::zeros(6);
    q.fixed_rows_mut::<3>(0).copy_from(&home);
    let sigma = cfg.plant.init_noise_std;
    if sigma > 0.0 {
        let noise = Normal::new(0.0, sigma).expect("validated std");
        for i in 0..6 {
            q[i] += noise.sample(rng);
        }
    }
    plant.state(q, DVector::zeros(6))
}

#[derive(Debug, Clone, PartialEq)]
pub struct WipeEnv {
    cfg: WipeConfig,
    penalty_threshold: f64,
    penalty_scale: f64,
    episode_steps: usize,
    surface_height: f64,
    pub markers: Vec<Vector2<f64>>,
    pub spot: Vector2<f64>,
    initial_markers: usize,
    step: usize,
}

impl WipeEnv {
    pub fn new(cfg: &ExperimentConfig) -> Self {
        Self {
            cfg: cfg.task.wipe.clone(),
            penalty_threshold: cfg.task.force_penalty_threshold,
            penalty_scale: cfg.task.penalty_scale,
            episode_steps: cfg.task.episode_steps,
            surface_height: cfg.surface.height,
            markers: Vec::new(),
            spot: Vector2::zeros(),
            initial_markers: 0,
            step: 0,
        }
    }

    /// Resamples the spot and its markers.
    pub fn resample(&mut self, rng: &mut impl Rng) {
        self.spot = uniform_in(rng, &self.cfg.spot_region);
        let h = self.cfg.spot_half_width;
        self.markers = (0..self.cfg.markers)
            .map(|_| self.spot + Vector2::new(rng.random_range(-h..=h), rng.random_range(-h..=h)))
            .collect();
        self.initial_markers = self.markers.len();
        self.step = 0;
    }

    pub fn remaining(&self) -> usize {
        self.markers.len()
    }

    pub fn initial_markers(&self) -> usize {
        self.initial_markers
    }

    fn centroid(&self) -> Vector2<f64> {
        if self.markers.is_empty() {
            return self.spot;
        }
        self.markers.iter().sum::<Vector2<f64>>() / self.markers.len() as f64
    }

    fn observe(&self, pose: Pose<f64>, wrench: Wrench<f64>) -> Observation {
        Observation {
            step: self.step,
            ee_pose: pose,
            wrench,
            centroid: self.centroid(),
            remaining: self.remaining(),
            surface_height: self.surface_height,
        }
    }

    pub fn step(&mut self, ticks: &[TickSample]) -> (Observation, StepOutcome) {
        let (lo, hi) = (self.cfg.force_min, self.penalty_threshold);
        let before = self.markers.len();
        let mut stats = ForceStats::default();
        let mut valid = 0usize;
        for t in ticks {
            let f = t.normal_force();
            stats.max_normal = stats.max_normal.max(f);
            stats.mean_normal += f;
            if f >= lo && f <= hi {
                valid += 1;
                let tool = t.pose.position.xy();
                let r = self.cfg.wipe_radius;
                self.markers.retain(|m| (m - tool).norm() > r);
            }
        }
        if !ticks.is_empty() {
            stats.mean_normal /= ticks.len() as f64;
            stats.valid_fraction = valid as f64 / ticks.len() as f64;
        }
        self.step += 1;
        let removed = before - self.markers.len();
        let pen = penalty(ticks, self.penalty_threshold, self.penalty_scale);
        let success = self.markers.is_empty();
        let outcome = StepOutcome {
            reward: removed as f64 + CONTACT_SHAPING * stats.valid_fraction + pen,
            penalty: pen,
            markers_removed: removed,
            done: (success && self.cfg.stop_when_clean) || self.step >= self.episode_steps,
            success,
            info: stats,
        };
        let last = ticks.last().map(|t| t.pose).unwrap_or_else(Pose::identity);
        (self.observe(last, mean_wrench(ticks)), outcome)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PressEnv {
    cfg: PressConfig,
    penalty_threshold: f64,
    penalty_scale: f64,
    episode_steps: usize,
    surface_height: f64,
    pub target: Vector2<f64>,
    held: f64,
    succeeded: bool,
    step: usize,
}

impl PressEnv {
    pub fn new(cfg: &ExperimentConfig) -> Self {
        Self {
            cfg: cfg.task.press.clone(),
            penalty_threshold: cfg.task.force_penalty_threshold,
            penalty_scale: cfg.task.penalty_scale,
            episode_steps: cfg.task.episode_steps,
            surface_height: cfg.surface.height,
            target: Vector2::zeros(),
            held: 0.0,
            succeeded: false,
            step: 0,
        }
    }

    pub fn resample(&mut self, rng: &mut impl Rng) {
        self.target = uniform_in(rng, &self.cfg.target_region);
        self.held = 0.0;
        self.succeeded = false;
        self.step = 0;
    }

    /// Seconds of uninterrupted valid pressing so far.
    pub fn held(&self) -> f64 {
        self.held
    }

    fn observe(&self, pose: Pose<f64>, wrench: Wrench<f64>) -> Observation {
        Observation {
            step: self.step,
            ee_pose: pose,
            wrench,
            centroid: self.target,
            remaining: usize::from(!self.succeeded),
            surface_height: self.surface_height,
        }
    }

    pub fn step(&mut self, ticks: &[TickSample]) -> (Observation, StepOutcome) {
        let already = self.succeeded;
        let mut stats = ForceStats::default();
        let mut valid = 0usize;
        let mut distance = 0.0;
        for t in ticks {
            let f = t.normal_force();
            stats.max_normal = stats.max_normal.max(f);
            stats.mean_normal += f;
            let d = (t.pose.position.xy() - self.target).norm();
            distance += d;
            if d <= self.cfg.target_tolerance && f >= self.cfg.hold_force && f <= self.penalty_threshold {
                valid += 1;
                self.held += t.dt;
            } else {
                self.held = 0.0;
            }
            if self.held >= self.cfg.hold_time - 1e-9 {
                self.succeeded = true;
            }
        }
        let newly = self.succeeded && !already;
        if !ticks.is_empty() {
            stats.mean_normal /= ticks.len() as f64;
            stats.valid_fraction = valid as f64 / ticks.len() as f64;
            distance /= ticks.len() as f64;
        }
        self.step += 1;
        let pen = penalty(ticks, self.penalty_threshold, self.penalty_scale);
        let bonus = if newly { PRESS_BONUS } else { 0.0 };
        let outcome = StepOutcome {
            reward: CONTACT_SHAPING * stats.valid_fraction - PRESS_DISTANCE_WEIGHT * distance + bonus + pen,
            penalty: pen,
            markers_removed: 0,
            done: self.succeeded || self.step >= self.episode_steps,
            success: self.succeeded,
            info: stats,
        };
        let last = ticks.last().map(|t| t.pose).unwrap_or_else(Pose::identity);
        (self.observe(last, mean_wrench(ticks)), outcome)
    }
}

/// One of the two tasks.
#[derive(Debug, Clone, PartialEq)]
pub enum Env {
    Wipe(WipeEnv),
    Press(PressEnv),
}

impl Env {
    pub fn new(cfg: &ExperimentConfig) -> Self {
        match cfg.task.kind {
            TaskKind::Wipe => Self::Wipe(WipeEnv::new(cfg)),
            TaskKind::Press => Self::Press(PressEnv::new(cfg)),
        }
    }

    /// Resamples the task layout and the start state from `seed`.
    pub fn reset(&mut self, plant: &Plant<f64>, cfg: &ExperimentConfig, seed: u64) -> (PlantState<f64>, Observation) {
        let mut rng = rng::stream(seed, rng::RESET);
        match self {
            Self::Wipe(w) => w.resample(&mut rng),
            Self::Press(p) => p.resample(&mut rng),
        }
        let state = initial_state(plant, cfg, &mut rng);
        let obs = match self {
            Self::Wipe(w) => w.observe(state.x, state.f_ext),
            Self::Press(p) => p.observe(state.x, state.f_ext),
        };
        (state, obs)
    }

    pub fn step(&mut self, ticks: &[TickSample]) -> (Observation, StepOutcome) {
        match self {
            Self::Wipe(w) => w.step(ticks),
            Self::Press(p) => p.step(ticks),
        }
    }

    /// Marker count at reset (wipe) or zero (press).
    pub fn markers_total(&self) -> usize {
        match self {
            Self::Wipe(w) => w.initial_markers(),
            Self::Press(_) => 0,
        }
    }

    pub fn markers_remaining(&self) -> usize {
        match self {
            Self::Wipe(w) => w.remaining(),
            Self::Press(_) => 0,
        }
    }
}
