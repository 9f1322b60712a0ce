//! Named action spaces and their controllers.

use aforce_core::{ActionSpaceController, ActionSpaceKind, ControlError};
use nalgebra::DVector;

use crate::config::ExperimentConfig;

const AXES: &[usize] = &[0, 1, 2, 3, 4, 5];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Preset {
    Low,
    Mid,
    High,
}

/// An action space as named in configs: `low`, `mid`, `high`, `variable`
/// or `aforce`, optionally suffixed with `+force`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SpaceSpec {
    pub name: String,
    pub kind: ActionSpaceKind,
    pub preset: Option<Preset>,
}

impl SpaceSpec {
    pub fn parse(name: &str) -> Option<Self> {
        let (base, force) = match name.strip_suffix("+force") {
            Some(b) => (b, true),
            None => (name, false),
        };
        let (kind, preset) = match base {
            "low" => (ActionSpaceKind::Fixed { force }, Some(Preset::Low)),
            "mid" => (ActionSpaceKind::Fixed { force }, Some(Preset::Mid)),
            "high" => (ActionSpaceKind::Fixed { force }, Some(Preset::High)),
            "variable" => (ActionSpaceKind::Variable { force }, None),
            "aforce" => (ActionSpaceKind::Aforce { force }, None),
            _ => return None,
        };
        Some(Self {
            name: name.to_string(),
            kind,
            preset,
        })
    }

    /// Stiffness before the first action: the preset for fixed spaces,
    /// mid-range otherwise.
    pub fn initial_stiffness(&self, cfg: &ExperimentConfig) -> Vec<f64> {
        let c = &cfg.controller;
        match self.preset {
            Some(Preset::Low) => c.stiffness_low.clone(),
            Some(Preset::High) => c.stiffness_high.clone(),
            Some(Preset::Mid) | None => c.stiffness_mid.clone(),
        }
    }

    pub fn controller(&self, cfg: &ExperimentConfig) -> Result<ActionSpaceController<f64>, ControlError> {
        let c = &cfg.controller;
        ActionSpaceController::new(
            self.kind,
            AXES,
            cfg.adaptive_params(),
            DVector::from_vec(self.initial_stiffness(cfg)),
            cfg.pid_state(),
            (
                DVector::from_column_slice(&c.variable_min),
                DVector::from_column_slice(&c.variable_max),
            ),
            c.gravity_compensation,
        )
    }
}
