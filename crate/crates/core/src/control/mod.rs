//! Fast inner-loop policies.
//!
//! [`ActionSpaceController`] packages the impedance law, the adaptation
//! laws and the wrench regulator behind the action-space variants the slow
//! policy can target: fixed impedance, variable impedance (stiffness in the
//! action) and adaptive force-impedance, each with or without a desired
//! wrench channel.

mod adaptive;
mod impedance;
mod wrench;

pub use adaptive::{adapt_gains, critical_damping, feedback_error, AdaptiveParams, GainState};
pub use impedance::{impedance_torque, task_wrench};
pub use wrench::{regulate_wrench, PidState};

use nalgebra::DVector;
use thiserror::Error;

use crate::plant::{DynamicsTerms, PlantState};
use crate::scalar::{clamp, Real};
use crate::spatial::{select, Pose, TaskError, Twist, Wrench};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ControlError {
    #[error("invalid controller parameters: {0}")]
    InvalidParams(String),
    #[error("action contract violation: {0}")]
    ContractViolation(String),
}

/// Which action space the slow policy is acting in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ActionSpaceKind {
    /// Constant stiffness; `force` adds the desired wrench channel.
    Fixed { force: bool },
    /// Stiffness read from each action.
    Variable { force: bool },
    /// Stiffness and feedforward adapted online.
    Aforce { force: bool },
}

impl ActionSpaceKind {
    pub fn has_stiffness_channel(self) -> bool {
        matches!(self, Self::Variable { .. })
    }

    pub fn has_force_channel(self) -> bool {
        match self {
            Self::Fixed { force } | Self::Variable { force } | Self::Aforce { force } => force,
        }
    }

    pub fn is_adaptive(self) -> bool {
        matches!(self, Self::Aforce { .. })
    }

    pub fn label(self) -> &'static str {
        match self {
            Self::Fixed { force: false } => "fixed",
            Self::Fixed { force: true } => "fixed+force",
            Self::Variable { force: false } => "variable",
            Self::Variable { force: true } => "variable+force",
            Self::Aforce { force: false } => "aforce",
            Self::Aforce { force: true } => "aforce+force",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "fixed" => Self::Fixed { force: false },
            "fixed+force" => Self::Fixed { force: true },
            "variable" => Self::Variable { force: false },
            "variable+force" => Self::Variable { force: true },
            "aforce" => Self::Aforce { force: false },
            "aforce+force" => Self::Aforce { force: true },
            _ => return None,
        })
    }
}

/// One slow-loop action.
#[derive(Debug, Clone, PartialEq)]
pub struct Action<T: Real> {
    pub x_d: Pose<T>,
    /// Desired contact wrench; zero when the policy does not command one.
    pub f_d: Wrench<T>,
    /// Desired stiffness per task axis; variable spaces only.
    pub k_d: Option<DVector<T>>,
}

impl<T: Real> Action<T> {
    pub fn pose(x_d: Pose<T>) -> Self {
        Self {
            x_d,
            f_d: Wrench::zero(),
            k_d: None,
        }
    }

    pub fn with_wrench(mut self, f_d: Wrench<T>) -> Self {
        self.f_d = f_d;
        self
    }

    pub fn with_stiffness(mut self, k_d: DVector<T>) -> Self {
        self.k_d = Some(k_d);
        self
    }
}

/// Inner-loop controller state for one episode.
#[derive(Debug, Clone)]
pub struct ActionSpaceController<T: Real> {
    kind: ActionSpaceKind,
    axes: &'static [usize],
    psi: AdaptiveParams<T>,
    gains: GainState<T>,
    pid: PidState<T>,
    /// Clamp applied to stiffness received through the action.
    stiffness_bounds: (DVector<T>, DVector<T>),
    gravity_compensation: bool,
    last_force_command: DVector<T>,
}

impl<T: Real> ActionSpaceController<T> {
    /// `initial_gains` holds the constant gains of fixed spaces, the
    /// pre-first-action gains of variable spaces and `K(0)` of adaptive ones.
    pub fn new(
        kind: ActionSpaceKind,
        axes: &'static [usize],
        psi: AdaptiveParams<T>,
        initial_stiffness: DVector<T>,
        pid: PidState<T>,
        stiffness_bounds: (DVector<T>, DVector<T>),
        gravity_compensation: bool,
    ) -> Result<Self, ControlError> {
        let m = axes.len();
        if kind.is_adaptive() {
            psi.validate()?;
        }
        if psi.dim() != m || initial_stiffness.len() != m || pid.kp.len() != m {
            return Err(ControlError::InvalidParams(format!(
                "controller dimensions disagree with {m} task axes"
            )));
        }
        if stiffness_bounds.0.len() != m || stiffness_bounds.1.len() != m {
            return Err(ControlError::InvalidParams("stiffness bounds dimension".into()));
        }
        if initial_stiffness.iter().any(|k| !(*k >= T::zero())) {
            return Err(ControlError::InvalidParams("stiffness must be >= 0".into()));
        }
        let initial_stiffness = if kind.is_adaptive() {
            initial_stiffness.zip_zip_map(&psi.k_min, &psi.k_max, |k, lo, hi| clamp(k, lo, hi))
        } else {
            initial_stiffness
        };
        Ok(Self {
            kind,
            axes,
            gains: GainState::from_stiffness(initial_stiffness),
            psi,
            pid,
            stiffness_bounds,
            gravity_compensation,
            last_force_command: DVector::zeros(m),
        })
    }

    pub fn kind(&self) -> ActionSpaceKind {
        self.kind
    }

    pub fn gains(&self) -> &GainState<T> {
        &self.gains
    }

    pub fn pid(&self) -> &PidState<T> {
        &self.pid
    }

    /// Desired wrench after the regulator, last tick.
    pub fn last_force_command(&self) -> &DVector<T> {
        &self.last_force_command
    }

    /// Rejects actions carrying channels this space does not have.
    pub fn check_action(&self, action: &Action<T>) -> Result<(), ControlError> {
        if action.k_d.is_some() && !self.kind.has_stiffness_channel() {
            return Err(ControlError::ContractViolation(format!(
                "{} space has no stiffness channel",
                self.kind.label()
            )));
        }
        if !self.kind.has_force_channel() && action.f_d != Wrench::zero() {
            return Err(ControlError::ContractViolation(format!(
                "{} space has no wrench channel",
                self.kind.label()
            )));
        }
        if let Some(k) = &action.k_d {
            if k.len() != self.axes.len() || k.iter().any(|v| !v.is_finite()) {
                return Err(ControlError::ContractViolation(
                    "stiffness action has wrong dimension or is not finite".into(),
                ));
            }
        }
        if !action.x_d.is_finite() || !action.f_d.is_finite() {
            return Err(ControlError::ContractViolation("action is not finite".into()));
        }
        Ok(())
    }

    /// Torques for one control tick tracking `(x_ref, xd_ref)`.
    pub fn step(
        &mut self,
        action: &Action<T>,
        x_ref: &Pose<T>,
        xd_ref: &Twist<T>,
        state: &PlantState<T>,
        terms: &DynamicsTerms<T>,
        dt: T,
    ) -> Result<DVector<T>, ControlError> {
        self.check_action(action)?;
        let err = TaskError::new(&state.x, &state.x_dot, x_ref, xd_ref);
        let (e, e_dot) = err.select(self.axes);

        match self.kind {
            ActionSpaceKind::Fixed { .. } => {}
            ActionSpaceKind::Variable { .. } => {
                if let Some(k) = &action.k_d {
                    let (lo, hi) = &self.stiffness_bounds;
                    let k = k.zip_zip_map(lo, hi, |k, lo, hi| clamp(k, lo, hi));
                    self.gains = GainState::from_stiffness(k);
                }
            }
            ActionSpaceKind::Aforce { .. } => {
                let eps = self.psi.feedback_error(&e, &e_dot);
                self.gains = adapt_gains(&self.gains, &eps, &self.psi, dt);
            }
        }

        let f_d = if self.kind.has_force_channel() {
            let desired = select(&action.f_d.to_vector(), self.axes);
            let measured = select(&state.f_ext.to_vector(), self.axes);
            let in_contact = state.f_ext.force.norm() > T::zero();
            let (cmd, pid) = regulate_wrench(&measured, &desired, &self.pid, dt, in_contact);
            self.pid = pid;
            cmd
        } else {
            DVector::zeros(self.axes.len())
        };
        let tau = impedance_torque(terms, &e, &e_dot, &self.gains, &f_d, self.gravity_compensation);
        self.last_force_command = f_d;
        Ok(tau)
    }
}
