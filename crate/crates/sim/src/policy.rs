//! Slow-loop policies: the scripted wipe expert, uniform random actions and
//! waypoint policies trained with the cross-entropy method.

use std::f64::consts::TAU;

use aforce_core::{Action, ActionSpaceKind, Pose, Wrench};
use nalgebra::{DVector, Vector2, Vector3};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::config::{CemSettings, ExperimentConfig, ExpertConfig, RandomConfig, TASK_DIM};
use crate::env::Observation;
use crate::rng;

/// Normal force that counts as touching the surface (N).
const CONTACT_FORCE: f64 = 1.0;
/// Force band around the press force that ends the press phase (N).
const PRESS_BAND: f64 = 1.0;
/// Hover height used while moving above the spot (m).
const HOVER: f64 = 0.02;
/// Horizontal distance at which the approach starts descending (m).
const ALIGNED: f64 = 0.005;
/// Depth of the approach target below the surface (m).
const APPROACH_DEPTH: f64 = 0.01;

pub trait Policy {
    /// Called once with the observation returned by the reset.
    fn reset(&mut self, obs: &Observation);
    fn act(&mut self, obs: &Observation) -> Action<f64>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Approach,
    Press,
    Wipe,
    Done,
}

/// Scripted wiping: approach the spot, press, wipe circles, hold.
#[derive(Debug, Clone, PartialEq)]
pub struct WipeExpert {
    cfg: ExpertConfig,
    dt: f64,
    surface: f64,
    /// Workspace box `(lo, hi)` every commanded pose is clamped into.
    workspace: (Vector3<f64>, Vector3<f64>),
    pub phase: Phase,
    pub rotation_count: f64,
    pub center: Vector2<f64>,
    angle: f64,
    ramp: f64,
    target: Vector3<f64>,
}

impl WipeExpert {
    pub fn new(cfg: &ExperimentConfig) -> Self {
        let e = &cfg.policy.expert;
        let w = &cfg.task.wipe;
        let margin = w.spot_half_width + e.radius;
        let region = &w.spot_region;
        let surface = cfg.surface.height;
        let lo = Vector3::new(region[0].min(0.0) - margin, region[1].min(0.0) - margin, surface - e.press_depth.max(APPROACH_DEPTH));
        let hi = Vector3::new(
            region[2].max(0.0) + margin,
            region[3].max(0.0) + margin,
            surface + cfg.plant.start_height.max(HOVER) + 0.05,
        );
        Self {
            cfg: e.clone(),
            dt: cfg.policy_dt(),
            surface,
            workspace: (lo, hi),
            phase: Phase::Approach,
            rotation_count: 0.0,
            center: Vector2::zeros(),
            angle: 0.0,
            ramp: 0.0,
            target: Vector3::zeros(),
        }
    }

    pub fn workspace(&self) -> (Vector3<f64>, Vector3<f64>) {
        self.workspace
    }

    fn command(&self, position: Vector3<f64>, force: f64) -> Action<f64> {
        let (lo, hi) = self.workspace;
        let p = position.zip_zip_map(&lo, &hi, |v, l, h| v.clamp(l, h));
        Action::pose(Pose::from_position(p)).with_wrench(Wrench::from_force(Vector3::new(0.0, 0.0, force)))
    }

    /// Moves the target at most `approach_speed·dt` towards `goal`.
    fn advance(&mut self, goal: Vector3<f64>) {
        let step = self.cfg.approach_speed * self.dt;
        let d = goal - self.target;
        self.target += if d.norm() > step { d.normalize() * step } else { d };
    }
}

impl Policy for WipeExpert {
    fn reset(&mut self, obs: &Observation) {
        self.phase = Phase::Approach;
        self.rotation_count = 0.0;
        self.angle = 0.0;
        self.ramp = 0.0;
        self.center = obs.centroid;
        self.target = obs.ee_pose.position;
    }

    fn act(&mut self, obs: &Observation) -> Action<f64> {
        let f_n = obs.normal_force();
        if self.phase == Phase::Approach && f_n > CONTACT_FORCE {
            self.phase = Phase::Press;
        }
        if self.phase == Phase::Press && self.ramp >= 1.0 && (f_n - self.cfg.press_force).abs() < PRESS_BAND {
            self.phase = Phase::Wipe;
        }
        if self.phase == Phase::Wipe && self.rotation_count >= self.cfg.rotations {
            self.phase = Phase::Done;
        }
        match self.phase {
            Phase::Approach => {
                self.center = obs.centroid;
                let here = self.target.xy();
                let goal = if (here - self.center).norm() > ALIGNED {
                    Vector3::new(self.center.x, self.center.y, self.surface + HOVER)
                } else {
                    Vector3::new(self.center.x, self.center.y, self.surface - APPROACH_DEPTH)
                };
                self.advance(goal);
                self.command(self.target, 0.0)
            }
            Phase::Press => {
                // follow the surface while the wrench loop settles
                self.target = Vector3::new(self.center.x, self.center.y, obs.ee_pose.position.z);
                self.ramp = (self.ramp + self.dt / self.cfg.ramp_time).min(1.0);
                self.command(self.target, self.ramp * self.cfg.press_force)
            }
            Phase::Wipe => {
                self.angle += TAU * self.cfg.revolutions_per_second * self.dt;
                self.rotation_count = (self.rotation_count + self.cfg.revolutions_per_second * self.dt).min(self.cfg.rotations);
                let r = self.cfg.radius;
                self.target = Vector3::new(
                    self.center.x + r * self.angle.cos(),
                    self.center.y + r * self.angle.sin(),
                    self.surface - self.cfg.press_depth,
                );
                self.command(self.target, self.cfg.press_force)
            }
            Phase::Done => self.command(self.target, self.cfg.press_force),
        }
    }
}

/// Uniform random actions inside configured bounds around the task centre.
#[derive(Debug, Clone)]
pub struct RandomPolicy {
    cfg: RandomConfig,
    /// Box `(lo, hi)` the target random walk is clamped into.
    workspace: (Vector3<f64>, Vector3<f64>),
    kind: ActionSpaceKind,
    rng: ChaCha8Rng,
    target: Vector3<f64>,
}

fn uniform(rng: &mut impl Rng, lo: f64, hi: f64) -> f64 {
    if hi > lo {
        rng.random_range(lo..hi)
    } else {
        lo
    }
}

impl RandomPolicy {
    pub fn new(cfg: &ExperimentConfig, kind: ActionSpaceKind, seed: u64) -> Self {
        let r = &cfg.policy.random;
        let w = &cfg.task.wipe;
        let region = &w.spot_region;
        let surface = cfg.surface.height;
        let lo = Vector3::new(region[0] - w.spot_half_width, region[1] - w.spot_half_width, surface - r.max_depth);
        let hi = Vector3::new(
            region[2] + w.spot_half_width,
            region[3] + w.spot_half_width,
            surface + cfg.plant.start_height,
        );
        Self {
            cfg: r.clone(),
            workspace: (lo, hi),
            kind,
            rng: rng::stream(seed, rng::POLICY),
            target: Vector3::zeros(),
        }
    }
}

impl Policy for RandomPolicy {
    fn reset(&mut self, obs: &Observation) {
        self.target = obs.ee_pose.position;
    }

    /// Position delta from the previous target; orientation held level.
    fn act(&mut self, _obs: &Observation) -> Action<f64> {
        let c = &self.cfg;
        let offset = Vector3::from_fn(|i, _| uniform(&mut self.rng, c.offset_lo[i], c.offset_hi[i]));
        let (lo, hi) = self.workspace;
        self.target = (self.target + offset).zip_zip_map(&lo, &hi, |v, l, h| v.clamp(l, h));
        let mut action = Action::pose(Pose::from_position(self.target));
        if self.kind.has_stiffness_channel() {
            let k = DVector::from_fn(TASK_DIM, |i, _| uniform(&mut self.rng, c.stiffness_lo[i], c.stiffness_hi[i]));
            action = action.with_stiffness(k);
        }
        if self.kind.has_force_channel() {
            let f = uniform(&mut self.rng, 0.0, c.force_max);
            action = action.with_wrench(Wrench::from_force(Vector3::new(0.0, 0.0, f)));
        }
        action
    }
}

/// Piecewise-constant waypoints relative to the task centre.
///
/// Parameters per waypoint: `(dx, dy, dz)` in metres, followed for spaces
/// with a stiffness channel by `log10` of the translational stiffness.
#[derive(Debug, Clone, PartialEq)]
pub struct WaypointPolicy {
    params: DVector<f64>,
    waypoints: usize,
    steps_per_waypoint: usize,
    kind: ActionSpaceKind,
    /// Rotational stiffness used with the stiffness channel.
    rotational_stiffness: [f64; 3],
    /// Clamp of the stiffness channel.
    stiffness_bounds: (Vec<f64>, Vec<f64>),
    force: f64,
    centre: Vector3<f64>,
    step: usize,
}

impl WaypointPolicy {
    /// Parameters per waypoint for an action space.
    pub fn stride(kind: ActionSpaceKind) -> usize {
        if kind.has_stiffness_channel() {
            6
        } else {
            3
        }
    }

    pub fn dim(kind: ActionSpaceKind, waypoints: usize) -> usize {
        Self::stride(kind) * waypoints
    }

    pub fn new(cfg: &ExperimentConfig, kind: ActionSpaceKind, params: DVector<f64>) -> Self {
        let waypoints = cfg.policy.cem.waypoints;
        assert_eq!(params.len(), Self::dim(kind, waypoints), "waypoint parameter length");
        let mid = &cfg.controller.stiffness_mid;
        Self {
            params,
            waypoints,
            steps_per_waypoint: cfg.task.episode_steps.div_ceil(waypoints).max(1),
            kind,
            rotational_stiffness: [mid[3], mid[4], mid[5]],
            stiffness_bounds: (cfg.controller.variable_min.clone(), cfg.controller.variable_max.clone()),
            force: cfg.policy.cem.force,
            centre: Vector3::zeros(),
            step: 0,
        }
    }

    /// Initial CEM mean and std for an action space.
    pub fn prior(cem: &CemSettings, kind: ActionSpaceKind) -> (DVector<f64>, DVector<f64>) {
        let stride = Self::stride(kind);
        let n = stride * cem.waypoints;
        let mut mean = DVector::zeros(n);
        let mut std = DVector::zeros(n);
        for w in 0..cem.waypoints {
            let o = w * stride;
            mean[o + 2] = -cem.depth_mean;
            for i in 0..3 {
                std[o + i] = cem.offset_std;
            }
            if stride == 6 {
                for i in 3..6 {
                    mean[o + i] = cem.log_stiffness_mean;
                    std[o + i] = cem.log_stiffness_std;
                }
            }
        }
        (mean, std)
    }
}

impl Policy for WaypointPolicy {
    fn reset(&mut self, obs: &Observation) {
        self.centre = Vector3::new(obs.centroid.x, obs.centroid.y, obs.surface_height);
        self.step = 0;
    }

    fn act(&mut self, _obs: &Observation) -> Action<f64> {
        let w = (self.step / self.steps_per_waypoint).min(self.waypoints - 1);
        self.step += 1;
        let stride = Self::stride(self.kind);
        let p = self.params.rows(w * stride, stride);
        let offset = Vector3::new(p[0], p[1], p[2]);
        let mut action = Action::pose(Pose::from_position(self.centre + offset));
        if stride == 6 {
            let (lo, hi) = &self.stiffness_bounds;
            let k = DVector::from_fn(TASK_DIM, |i, _| {
                let raw = if i < 3 { 10f64.powf(p[3 + i]) } else { self.rotational_stiffness[i - 3] };
                raw.clamp(lo[i], hi[i])
            });
            action = action.with_stiffness(k);
        }
        if self.kind.has_force_channel() {
            action = action.with_wrench(Wrench::from_force(Vector3::new(0.0, 0.0, self.force)));
        }
        action
    }
}

/// Result of evaluating one candidate.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Evaluation {
    pub ret: f64,
    pub env_steps: usize,
    pub penalized: bool,
    pub success: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CemConfig {
    pub population: usize,
    pub elite_fraction: f64,
    pub generations: usize,
}

impl CemConfig {
    pub fn elites(&self) -> usize {
        ((self.population as f64 * self.elite_fraction).floor() as usize).clamp(1, self.population)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GenerationStats {
    pub generation: usize,
    pub mean_return: f64,
    pub max_return: f64,
    /// Mean return of the elites.
    pub elite_return: f64,
    /// Environment steps consumed up to and including this generation.
    pub env_steps: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CemResult {
    /// Final Gaussian mean, or the initial mean without generations.
    pub mean: DVector<f64>,
    /// Best single candidate seen (initial mean when none was evaluated).
    pub best: DVector<f64>,
    pub best_return: f64,
    pub curve: Vec<GenerationStats>,
    /// Every evaluation in generation-major, candidate-minor order.
    pub evaluations: Vec<Evaluation>,
}

impl CemResult {
    pub fn env_steps(&self) -> usize {
        self.evaluations.iter().map(|e| e.env_steps).sum()
    }

    /// Environment steps consumed up to and including the first success.
    pub fn steps_to_first_success(&self) -> Option<usize> {
        let mut total = 0;
        for e in &self.evaluations {
            total += e.env_steps;
            if e.success {
                return Some(total);
            }
        }
        None
    }

    pub fn penalty_fraction(&self) -> f64 {
        if self.evaluations.is_empty() {
            return 0.0;
        }
        self.evaluations.iter().filter(|e| e.penalized).count() as f64 / self.evaluations.len() as f64
    }
}

/// Cross-entropy method over a diagonal Gaussian, keeping the elites of the
/// previous generation in the selection pool.
///
/// `evaluate(params, episode_seed)` scores one candidate. Episode seeds are
/// derived from `(seed, generation, index)` so the outcome does not depend
/// on evaluation order; candidates run in parallel.
pub fn cem_train<F>(evaluate: F, mean: DVector<f64>, std: DVector<f64>, cfg: &CemConfig, seed: u64) -> CemResult
where
    F: Fn(&DVector<f64>, u64) -> Evaluation + Sync,
{
    let n = mean.len();
    let mut mean = mean;
    let mut std = std;
    let mut best = mean.clone();
    let mut best_return = f64::NEG_INFINITY;
    let mut curve = Vec::with_capacity(cfg.generations);
    let mut evaluations = Vec::with_capacity(cfg.generations * cfg.population);
    let mut sampler = rng::stream(seed, rng::CEM_SAMPLING);
    let elites = cfg.elites();
    let mut steps = 0usize;
    let mut kept: Vec<(DVector<f64>, f64)> = Vec::with_capacity(elites);

    for generation in 0..cfg.generations {
        let candidates: Vec<DVector<f64>> = (0..cfg.population)
            .map(|_| DVector::from_fn(n, |i, _| mean[i] + std[i] * Distribution::<f64>::sample(&StandardNormal, &mut sampler)))
            .collect();
        let base = (generation * cfg.population) as u64;
        let results: Vec<Evaluation> = candidates
            .par_iter()
            .enumerate()
            .map(|(i, c)| evaluate(c, rng::derive_seed(seed, rng::CEM_EPISODES, base + i as u64)))
            .collect();

        for (c, r) in candidates.iter().zip(&results) {
            if r.ret > best_return {
                best_return = r.ret;
                best = c.clone();
            }
        }
        // previous elites compete with the new population on their recorded returns
        let mut pool: Vec<(DVector<f64>, f64)> = candidates.into_iter().zip(results.iter().map(|r| r.ret)).collect();
        pool.append(&mut kept);
        let mut order: Vec<usize> = (0..pool.len()).collect();
        order.sort_by(|&a, &b| pool[b].1.total_cmp(&pool[a].1).then(a.cmp(&b)));
        kept = order[..elites].iter().map(|&i| pool[i].clone()).collect();
        let k = elites as f64;
        mean = kept.iter().fold(DVector::zeros(n), |acc, (c, _)| acc + c) / k;
        std = kept
            .iter()
            .fold(DVector::zeros(n), |acc, (c, _)| acc + (c - &mean).map(|d| d * d))
            .map(|v| (v / k).sqrt());

        steps += results.iter().map(|r| r.env_steps).sum::<usize>();
        let returns: Vec<f64> = results.iter().map(|r| r.ret).collect();
        curve.push(GenerationStats {
            generation,
            mean_return: returns.iter().sum::<f64>() / returns.len() as f64,
            max_return: returns.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
            elite_return: kept.iter().map(|(_, r)| r).sum::<f64>() / k,
            env_steps: steps,
        });
        evaluations.extend(results);
    }

    CemResult {
        mean,
        best,
        best_return,
        curve,
        evaluations,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quadratic(target: &[f64]) -> impl Fn(&DVector<f64>, u64) -> Evaluation + Sync + '_ {
        move |p, _| Evaluation {
            ret: -p.iter().zip(target).map(|(a, b)| (a - b) * (a - b)).sum::<f64>(),
            env_steps: 1,
            ..Default::default()
        }
    }

    #[test]
    fn zero_generations_return_the_prior() {
        let cfg = CemConfig {
            population: 10,
            elite_fraction: 0.2,
            generations: 0,
        };
        let mean = DVector::from_element(3, 0.5);
        let r = cem_train(quadratic(&[1.0, 2.0, 3.0]), mean.clone(), DVector::from_element(3, 1.0), &cfg, 1);
        assert_eq!(r.mean, mean);
        assert_eq!(r.best, mean);
        assert!(r.curve.is_empty());
        assert!(r.evaluations.is_empty());
    }

    #[test]
    fn converges_on_a_quadratic() {
        let target = [0.3, -1.2, 2.5, 0.0];
        let cfg = CemConfig {
            population: 50,
            elite_fraction: 0.2,
            generations: 30,
        };
        let r = cem_train(quadratic(&target), DVector::zeros(4), DVector::from_element(4, 2.0), &cfg, 7);
        for (m, t) in r.mean.iter().zip(&target) {
            assert!((m - t).abs() < 1e-2, "{m} vs {t}");
        }
        assert_eq!(r.evaluations.len(), 50 * 30);
        assert_eq!(r.curve.last().unwrap().env_steps, 1500);
    }

    #[test]
    fn independent_of_thread_count() {
        let cfg = CemConfig {
            population: 16,
            elite_fraction: 0.25,
            generations: 5,
        };
        let f = |p: &DVector<f64>, seed: u64| Evaluation {
            ret: -p.norm_squared() + (seed % 1000) as f64 * 1e-6,
            env_steps: 1,
            ..Default::default()
        };
        let a = cem_train(f, DVector::from_element(2, 1.0), DVector::from_element(2, 1.0), &cfg, 3);
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let b = pool.install(|| cem_train(f, DVector::from_element(2, 1.0), DVector::from_element(2, 1.0), &cfg, 3));
        assert_eq!(a, b);
    }

    #[test]
    fn elite_count_is_at_least_one() {
        let cfg = CemConfig {
            population: 3,
            elite_fraction: 0.1,
            generations: 1,
        };
        assert_eq!(cfg.elites(), 1);
    }
}
