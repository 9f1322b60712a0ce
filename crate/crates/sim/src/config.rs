//! Experiment configuration: one TOML document with a section per module.
//!
//! Unknown keys are rejected at parse time. [`ExperimentConfig::validate`]
//! then checks every physical value and reports all violations at once,
//! each prefixed with its `section.key` path.

use std::fmt;
use std::path::Path;

use aforce_core::{AdaptiveParams, PidState, SurfaceModel};
use nalgebra::DVector;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Task-space dimension of the floating body.
pub const TASK_DIM: usize = 6;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("cannot parse config {path}: {message}")]
    Parse { path: String, message: String },
    #[error("invalid config:\n{0}")]
    Invalid(Violations),
}

/// Every validation failure found in one pass.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Violations(pub Vec<String>);

impl fmt::Display for Violations {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for v in &self.0 {
            writeln!(f, "  {v}")?;
        }
        Ok(())
    }
}

impl Violations {
    fn push(&mut self, path: &str, msg: impl fmt::Display) {
        self.0.push(format!("{path}: {msg}"));
    }

    fn positive(&mut self, path: &str, v: f64) {
        if !(v > 0.0 && v.is_finite()) {
            self.push(path, format!("must be a finite value > 0, got {v}"));
        }
    }

    fn non_negative(&mut self, path: &str, v: f64) {
        if !(v >= 0.0 && v.is_finite()) {
            self.push(path, format!("must be a finite value >= 0, got {v}"));
        }
    }

    fn finite(&mut self, path: &str, v: f64) {
        if !v.is_finite() {
            self.push(path, format!("must be finite, got {v}"));
        }
    }

    fn axes(&mut self, path: &str, v: &[f64], check: fn(&mut Self, &str, f64)) {
        if v.len() != TASK_DIM {
            self.push(path, format!("expected {TASK_DIM} entries, got {}", v.len()));
            return;
        }
        for (i, x) in v.iter().enumerate() {
            check(self, &format!("{path}[{i}]"), *x);
        }
    }

    fn fixed_len(&mut self, path: &str, v: &[f64], n: usize) {
        if v.len() != n {
            self.push(path, format!("expected {n} entries, got {}", v.len()));
        }
        for (i, x) in v.iter().enumerate() {
            self.finite(&format!("{path}[{i}]"), *x);
        }
    }

    fn ordered(&mut self, path: &str, lo: &[f64], hi: &[f64]) {
        if lo.iter().zip(hi).any(|(a, b)| a > b) {
            self.push(path, "lower bound exceeds upper bound");
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub plant: PlantConfig,
    pub surface: SurfaceConfig,
    pub controller: ControllerConfig,
    pub bridge: BridgeConfig,
    pub task: TaskConfig,
    pub policy: PolicyConfig,
    pub runner: RunnerConfig,
}

/// Floating 6-DOF tool body.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlantConfig {
    /// kg
    pub mass: f64,
    /// kg·m², same about every axis
    pub inertia: f64,
    pub gravity: bool,
    /// Viscous damping on every generalized velocity.
    pub joint_damping: f64,
    /// Start height of the tool above the surface (m).
    pub start_height: f64,
    /// Std of the Gaussian perturbation of the start coordinates (m and rad).
    pub init_noise_std: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SurfaceConfig {
    /// m
    pub height: f64,
    /// N/m
    pub normal_stiffness: f64,
    /// N·s/m
    pub normal_damping: f64,
    /// N·s/m
    pub viscous_friction: f64,
    /// Load-proportional friction coefficient.
    #[serde(default)]
    pub load_friction: f64,
    /// m/s
    #[serde(default = "default_slip_velocity")]
    pub slip_velocity: f64,
}

fn default_slip_velocity() -> f64 {
    0.01
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControllerConfig {
    pub gravity_compensation: bool,
    /// Fixed stiffness presets (N/m, N·m/rad).
    pub stiffness_low: Vec<f64>,
    pub stiffness_mid: Vec<f64>,
    pub stiffness_high: Vec<f64>,
    /// Clamp applied to stiffness actions of the variable spaces.
    pub variable_min: Vec<f64>,
    pub variable_max: Vec<f64>,
    pub adaptive: AdaptiveConfig,
    pub pid: PidConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdaptiveConfig {
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    pub gamma: Vec<f64>,
    pub mu: Vec<f64>,
    pub delta: f64,
    pub k_min: Vec<f64>,
    pub k_max: Vec<f64>,
    pub f_ff_max: Vec<f64>,
    #[serde(default = "default_epsilon_sign")]
    pub epsilon_velocity_sign: f64,
}

fn default_epsilon_sign() -> f64 {
    -1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PidConfig {
    pub kp: f64,
    pub ki: f64,
    pub kd: f64,
    /// N
    pub output_cap: f64,
    /// N·s
    pub integral_bound: f64,
    /// Task axes closed around the measured wrench.
    pub regulated_axes: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BridgeConfig {
    pub control_rate_hz: f64,
    pub policy_rate_hz: f64,
    /// m/s
    pub max_linear_velocity: f64,
    /// rad/s
    pub max_angular_velocity: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TaskKind {
    Wipe,
    Press,
}

impl TaskKind {
    pub fn label(self) -> &'static str {
        match self {
            Self::Wipe => "wipe",
            Self::Press => "press",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskConfig {
    pub kind: TaskKind,
    /// Policy steps per episode.
    pub episode_steps: usize,
    /// Penalty per newton over the threshold per second.
    pub penalty_scale: f64,
    /// N
    pub force_penalty_threshold: f64,
    pub wipe: WipeConfig,
    pub press: PressConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WipeConfig {
    pub markers: usize,
    /// Rectangle `[x_lo, y_lo, x_hi, y_hi]` holding the spot centre (m).
    pub spot_region: Vec<f64>,
    /// Markers lie within this half-width around the spot centre (m).
    pub spot_half_width: f64,
    /// Tool footprint radius (m).
    pub wipe_radius: f64,
    /// Removal force threshold (N).
    pub force_min: f64,
    /// End the episode once every marker is gone.
    #[serde(default = "default_true")]
    pub stop_when_clean: bool,
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PressConfig {
    /// Rectangle `[x_lo, y_lo, x_hi, y_hi]` holding the target (m).
    pub target_region: Vec<f64>,
    /// Horizontal distance counted as reaching the target (m).
    pub target_tolerance: f64,
    /// N
    pub hold_force: f64,
    /// s
    pub hold_time: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PolicyKind {
    Expert,
    Random,
    Cem,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolicyConfig {
    pub kind: PolicyKind,
    pub expert: ExpertConfig,
    pub random: RandomConfig,
    pub cem: CemSettings,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExpertConfig {
    /// m
    pub radius: f64,
    pub revolutions_per_second: f64,
    pub rotations: f64,
    /// N
    pub press_force: f64,
    /// Target depth below the surface while wiping (m).
    pub press_depth: f64,
    /// Time to ramp the commanded force up (s).
    pub ramp_time: f64,
    /// m/s
    pub approach_speed: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomConfig {
    /// Per-action position steps of the target (m).
    pub offset_lo: Vec<f64>,
    pub offset_hi: Vec<f64>,
    /// Stiffness bounds for the stiffness channel.
    pub stiffness_lo: Vec<f64>,
    pub stiffness_hi: Vec<f64>,
    /// Upper bound of the pressing force for wrench channels (N).
    pub force_max: f64,
    /// Deepest target below the surface (m).
    pub max_depth: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CemSettings {
    pub population: usize,
    pub elite_fraction: f64,
    pub generations: usize,
    pub waypoints: usize,
    /// Initial std of the waypoint offsets (m).
    pub offset_std: f64,
    /// Initial std of the per-waypoint log10 stiffness.
    pub log_stiffness_std: f64,
    /// Initial mean of the per-waypoint log10 stiffness.
    pub log_stiffness_mean: f64,
    /// Initial mean depth of every waypoint below the surface (m).
    pub depth_mean: f64,
    /// Pressing force the wrench channel commands (N).
    pub force: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunnerConfig {
    pub seeds: Vec<u64>,
    pub action_spaces: Vec<String>,
    pub output_dir: String,
    #[serde(default)]
    pub full_rate_logs: bool,
    /// Control ticks per logged CSV row when not at full rate.
    #[serde(default = "default_decimation")]
    pub decimation: usize,
}

fn default_decimation() -> usize {
    10
}

impl ExperimentConfig {
    pub fn from_toml(text: &str, origin: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError::Parse {
            path: origin.to_string(),
            message: e.to_string(),
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Reads, parses and validates a config file.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let cfg = Self::from_toml(&text, &path.display().to_string())?;
        cfg.validate().map_err(ConfigError::Invalid)?;
        Ok(cfg)
    }

    pub fn control_dt(&self) -> f64 {
        1.0 / self.bridge.control_rate_hz
    }

    pub fn policy_dt(&self) -> f64 {
        1.0 / self.bridge.policy_rate_hz
    }

    /// Control ticks per policy tick.
    pub fn tick_ratio(&self) -> usize {
        (self.bridge.control_rate_hz / self.bridge.policy_rate_hz).round() as usize
    }

    pub fn surface_model(&self) -> SurfaceModel<f64> {
        let s = &self.surface;
        SurfaceModel {
            height: s.height,
            normal_stiffness: s.normal_stiffness,
            normal_damping: s.normal_damping,
            viscous_friction: s.viscous_friction,
            coulomb_friction: s.load_friction,
            slip_velocity: s.slip_velocity,
        }
    }

    pub fn adaptive_params(&self) -> AdaptiveParams<f64> {
        let a = &self.controller.adaptive;
        let v = |x: &Vec<f64>| DVector::from_column_slice(x);
        AdaptiveParams {
            alpha: v(&a.alpha),
            beta: v(&a.beta),
            gamma: v(&a.gamma),
            mu: v(&a.mu),
            delta: a.delta,
            k_min: v(&a.k_min),
            k_max: v(&a.k_max),
            f_ff_max: v(&a.f_ff_max),
            epsilon_velocity_sign: a.epsilon_velocity_sign,
        }
    }

    pub fn pid_state(&self) -> PidState<f64> {
        let p = &self.controller.pid;
        let regulated = (0..TASK_DIM).map(|i| p.regulated_axes.contains(&i)).collect();
        PidState::uniform(TASK_DIM, p.kp, p.ki, p.kd, p.output_cap, p.integral_bound, regulated)
    }

    /// Checks every section; returns all violations found.
    pub fn validate(&self) -> Result<(), Violations> {
        let mut v = Violations::default();

        let p = &self.plant;
        v.positive("plant.mass", p.mass);
        v.positive("plant.inertia", p.inertia);
        v.non_negative("plant.joint_damping", p.joint_damping);
        v.non_negative("plant.start_height", p.start_height);
        v.non_negative("plant.init_noise_std", p.init_noise_std);

        let s = &self.surface;
        v.finite("surface.height", s.height);
        v.positive("surface.normal_stiffness", s.normal_stiffness);
        v.non_negative("surface.normal_damping", s.normal_damping);
        v.non_negative("surface.viscous_friction", s.viscous_friction);
        v.non_negative("surface.load_friction", s.load_friction);
        v.positive("surface.slip_velocity", s.slip_velocity);

        let b = &self.bridge;
        v.positive("bridge.control_rate_hz", b.control_rate_hz);
        v.positive("bridge.policy_rate_hz", b.policy_rate_hz);
        v.positive("bridge.max_linear_velocity", b.max_linear_velocity);
        v.positive("bridge.max_angular_velocity", b.max_angular_velocity);
        if b.control_rate_hz > 0.0 && b.policy_rate_hz > 0.0 {
            let ratio = b.control_rate_hz / b.policy_rate_hz;
            if ratio < 1.0 || (ratio - ratio.round()).abs() > 1e-9 {
                v.push("bridge.control_rate_hz", "must be an integer multiple of bridge.policy_rate_hz");
            }
            let dt = 1.0 / b.control_rate_hz;
            if dt > 0.01 {
                v.push("bridge.control_rate_hz", "control period must be <= 0.01 s");
            }
            if p.mass > 0.0 {
                let n = s.normal_stiffness * dt * dt / p.mass;
                if n >= 0.1 {
                    v.push(
                        "surface.normal_stiffness",
                        format!("k_n·dt²/m = {n:.4} must stay below 0.1 for the integrator"),
                    );
                }
            }
            self.check_gain_stability(&mut v, dt);
        }

        let c = &self.controller;
        v.axes("controller.stiffness_low", &c.stiffness_low, Violations::non_negative);
        v.axes("controller.stiffness_mid", &c.stiffness_mid, Violations::non_negative);
        v.axes("controller.stiffness_high", &c.stiffness_high, Violations::non_negative);
        v.axes("controller.variable_min", &c.variable_min, Violations::non_negative);
        v.axes("controller.variable_max", &c.variable_max, Violations::positive);
        v.ordered("controller.variable_min", &c.variable_min, &c.variable_max);

        let a = &c.adaptive;
        v.axes("controller.adaptive.alpha", &a.alpha, Violations::non_negative);
        v.axes("controller.adaptive.beta", &a.beta, Violations::non_negative);
        v.axes("controller.adaptive.gamma", &a.gamma, Violations::non_negative);
        v.axes("controller.adaptive.mu", &a.mu, Violations::non_negative);
        v.positive("controller.adaptive.delta", a.delta);
        v.axes("controller.adaptive.k_min", &a.k_min, Violations::positive);
        v.axes("controller.adaptive.k_max", &a.k_max, Violations::positive);
        v.axes("controller.adaptive.f_ff_max", &a.f_ff_max, Violations::non_negative);
        v.ordered("controller.adaptive.k_min", &a.k_min, &a.k_max);
        if a.epsilon_velocity_sign != 1.0 && a.epsilon_velocity_sign != -1.0 {
            v.push("controller.adaptive.epsilon_velocity_sign", "must be -1 or 1");
        }

        let pid = &c.pid;
        v.non_negative("controller.pid.kp", pid.kp);
        v.non_negative("controller.pid.ki", pid.ki);
        v.non_negative("controller.pid.kd", pid.kd);
        v.positive("controller.pid.output_cap", pid.output_cap);
        v.non_negative("controller.pid.integral_bound", pid.integral_bound);
        if pid.regulated_axes.iter().any(|&i| i >= TASK_DIM) {
            v.push("controller.pid.regulated_axes", format!("axis indices must be < {TASK_DIM}"));
        }

        let t = &self.task;
        v.non_negative("task.penalty_scale", t.penalty_scale);
        v.positive("task.force_penalty_threshold", t.force_penalty_threshold);
        let w = &t.wipe;
        if w.markers == 0 {
            v.push("task.wipe.markers", "must be >= 1");
        }
        v.fixed_len("task.wipe.spot_region", &w.spot_region, 4);
        if w.spot_region.len() == 4 {
            v.ordered("task.wipe.spot_region", &w.spot_region[..2], &w.spot_region[2..]);
        }
        v.non_negative("task.wipe.spot_half_width", w.spot_half_width);
        v.positive("task.wipe.wipe_radius", w.wipe_radius);
        v.positive("task.wipe.force_min", w.force_min);
        if w.force_min >= t.force_penalty_threshold {
            v.push("task.wipe.force_min", "must be below task.force_penalty_threshold");
        }
        let pr = &t.press;
        v.fixed_len("task.press.target_region", &pr.target_region, 4);
        if pr.target_region.len() == 4 {
            v.ordered("task.press.target_region", &pr.target_region[..2], &pr.target_region[2..]);
        }
        v.positive("task.press.target_tolerance", pr.target_tolerance);
        v.positive("task.press.hold_force", pr.hold_force);
        v.positive("task.press.hold_time", pr.hold_time);
        if pr.hold_force >= t.force_penalty_threshold {
            v.push("task.press.hold_force", "must be below task.force_penalty_threshold");
        }

        let e = &self.policy.expert;
        v.positive("policy.expert.radius", e.radius);
        v.positive("policy.expert.revolutions_per_second", e.revolutions_per_second);
        v.positive("policy.expert.rotations", e.rotations);
        v.non_negative("policy.expert.press_force", e.press_force);
        v.non_negative("policy.expert.press_depth", e.press_depth);
        v.positive("policy.expert.ramp_time", e.ramp_time);
        v.positive("policy.expert.approach_speed", e.approach_speed);
        if e.press_force > pid.output_cap {
            v.push("policy.expert.press_force", "exceeds controller.pid.output_cap");
        }

        let r = &self.policy.random;
        v.fixed_len("policy.random.offset_lo", &r.offset_lo, 3);
        v.fixed_len("policy.random.offset_hi", &r.offset_hi, 3);
        v.ordered("policy.random.offset_lo", &r.offset_lo, &r.offset_hi);
        v.axes("policy.random.stiffness_lo", &r.stiffness_lo, Violations::non_negative);
        v.axes("policy.random.stiffness_hi", &r.stiffness_hi, Violations::non_negative);
        v.ordered("policy.random.stiffness_lo", &r.stiffness_lo, &r.stiffness_hi);
        v.non_negative("policy.random.force_max", r.force_max);
        v.non_negative("policy.random.max_depth", r.max_depth);

        let cem = &self.policy.cem;
        if cem.population == 0 {
            v.push("policy.cem.population", "must be >= 1");
        }
        if !(cem.elite_fraction > 0.0 && cem.elite_fraction < 1.0) {
            v.push("policy.cem.elite_fraction", "must lie in (0, 1)");
        } else if (cem.elite_fraction * cem.population as f64).floor() < 1.0 {
            v.push("policy.cem.elite_fraction", "leaves no elite in the population");
        }
        if cem.waypoints == 0 {
            v.push("policy.cem.waypoints", "must be >= 1");
        }
        v.positive("policy.cem.offset_std", cem.offset_std);
        v.positive("policy.cem.log_stiffness_std", cem.log_stiffness_std);
        v.finite("policy.cem.log_stiffness_mean", cem.log_stiffness_mean);
        v.finite("policy.cem.depth_mean", cem.depth_mean);
        v.non_negative("policy.cem.force", cem.force);

        let run = &self.runner;
        if run.seeds.is_empty() {
            v.push("runner.seeds", "must list at least one seed");
        }
        if run.action_spaces.is_empty() {
            v.push("runner.action_spaces", "must list at least one action space");
        }
        for (i, name) in run.action_spaces.iter().enumerate() {
            if crate::space::SpaceSpec::parse(name).is_none() {
                v.push(&format!("runner.action_spaces[{i}]"), format!("unknown action space '{name}'"));
            }
        }
        if run.decimation == 0 {
            v.push("runner.decimation", "must be >= 1");
        }
        if run.output_dir.is_empty() {
            v.push("runner.output_dir", "must not be empty");
        }

        if v.0.is_empty() {
            Ok(())
        } else {
            Err(v)
        }
    }

    /// Explicit Euler bound on the largest controller stiffness per axis.
    fn check_gain_stability(&self, v: &mut Violations, dt: f64) {
        let c = &self.controller;
        let sources: [(&str, &Vec<f64>); 3] = [
            ("controller.stiffness_high", &c.stiffness_high),
            ("controller.variable_max", &c.variable_max),
            ("controller.adaptive.k_max", &c.adaptive.k_max),
        ];
        for (path, k) in sources {
            for (i, ki) in k.iter().enumerate().take(TASK_DIM) {
                let inertia = if i < 3 { self.plant.mass } else { self.plant.inertia };
                if inertia > 0.0 && ki * dt * dt / inertia >= 0.1 {
                    v.push(&format!("{path}[{i}]"), "stiffness too high for the control period");
                }
            }
        }
    }
}
