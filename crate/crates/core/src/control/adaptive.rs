//! Stiffness and feedforward adaptation.
//!
//! Per axis `i`, integrated with explicit Euler at the control tick:
//!
//! ```text
//! K̇_i    = β_i·|ε_i| − γ_i
//! Ḟff_i  = α_i·ε_i − μ_i·Fff_i
//! D_i    = 2·√K_i
//! ε      = e − δ·ė
//! ```
//!
//! `K` is kept inside `[k_min, k_max]` and `Fff` inside `±f_ff_max`.

use nalgebra::DVector;

use super::ControlError;
use crate::scalar::{clamp, Real};

/// Adaptation rates, relaxation factors and bounds, one entry per task axis.
#[derive(Debug, Clone, PartialEq)]
pub struct AdaptiveParams<T: Real> {
    /// Feedforward adaptation rate.
    pub alpha: DVector<T>,
    /// Stiffness adaptation rate.
    pub beta: DVector<T>,
    /// Stiffness relaxation.
    pub gamma: DVector<T>,
    /// Feedforward relaxation (1/s).
    pub mu: DVector<T>,
    /// Velocity-error weight of the feedback error (s).
    pub delta: T,
    pub k_min: DVector<T>,
    pub k_max: DVector<T>,
    pub f_ff_max: DVector<T>,
    /// Sign in front of `δ·ė`; `-1` gives `ε = e − δ·ė`.
    pub epsilon_velocity_sign: T,
}

impl<T: Real> AdaptiveParams<T> {
    /// Same parameters on every one of `m` axes.
    pub fn uniform(m: usize, alpha: T, beta: T, gamma: T, mu: T, delta: T, k_min: T, k_max: T, f_ff_max: T) -> Self {
        Self {
            alpha: DVector::from_element(m, alpha),
            beta: DVector::from_element(m, beta),
            gamma: DVector::from_element(m, gamma),
            mu: DVector::from_element(m, mu),
            delta,
            k_min: DVector::from_element(m, k_min),
            k_max: DVector::from_element(m, k_max),
            f_ff_max: DVector::from_element(m, f_ff_max),
            epsilon_velocity_sign: -T::one(),
        }
    }

    pub fn dim(&self) -> usize {
        self.alpha.len()
    }

    /// Parameters with every rate zeroed; adaptation becomes the identity.
    pub fn frozen(&self) -> Self {
        let m = self.dim();
        Self {
            alpha: DVector::zeros(m),
            beta: DVector::zeros(m),
            gamma: DVector::zeros(m),
            mu: DVector::zeros(m),
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<(), ControlError> {
        let m = self.dim();
        let fields = [
            ("beta", &self.beta),
            ("gamma", &self.gamma),
            ("mu", &self.mu),
            ("k_min", &self.k_min),
            ("k_max", &self.k_max),
            ("f_ff_max", &self.f_ff_max),
        ];
        for (name, v) in fields {
            if v.len() != m {
                return Err(ControlError::InvalidParams(format!(
                    "{name} has {} entries, expected {m}",
                    v.len()
                )));
            }
        }
        let nonneg = [
            ("alpha", &self.alpha),
            ("beta", &self.beta),
            ("gamma", &self.gamma),
            ("mu", &self.mu),
        ];
        for (name, v) in nonneg {
            if v.iter().any(|c| !(*c >= T::zero())) {
                return Err(ControlError::InvalidParams(format!("{name} must be >= 0")));
            }
        }
        if !(self.delta > T::zero()) {
            return Err(ControlError::InvalidParams("delta must be > 0".into()));
        }
        for i in 0..m {
            if !(self.k_min[i] > T::zero() && self.k_min[i] <= self.k_max[i]) {
                return Err(ControlError::InvalidParams(format!(
                    "axis {i}: need 0 < k_min <= k_max"
                )));
            }
            if !(self.f_ff_max[i] > T::zero()) {
                return Err(ControlError::InvalidParams(format!("axis {i}: f_ff_max must be > 0")));
            }
        }
        if self.epsilon_velocity_sign.abs() != T::one() {
            return Err(ControlError::InvalidParams(
                "epsilon_velocity_sign must be +1 or -1".into(),
            ));
        }
        Ok(())
    }

    /// Feedback error with the configured sign convention.
    pub fn feedback_error(&self, e: &DVector<T>, e_dot: &DVector<T>) -> DVector<T> {
        e + e_dot * (self.epsilon_velocity_sign * self.delta)
    }
}

/// Diagonal stiffness, damping and feedforward wrench.
#[derive(Debug, Clone, PartialEq)]
pub struct GainState<T: Real> {
    pub stiffness: DVector<T>,
    pub damping: DVector<T>,
    pub feedforward: DVector<T>,
}

impl<T: Real> GainState<T> {
    /// Gains with `D = 2√K` and no feedforward.
    pub fn from_stiffness(stiffness: DVector<T>) -> Self {
        let damping = critical_damping(&stiffness);
        let feedforward = DVector::zeros(stiffness.len());
        Self {
            stiffness,
            damping,
            feedforward,
        }
    }

    pub fn dim(&self) -> usize {
        self.stiffness.len()
    }

    /// Checks clamps and `D = 2√K`.
    pub fn satisfies(&self, psi: &AdaptiveParams<T>) -> bool {
        let tol = T::lit(1e-12);
        (0..self.dim()).all(|i| {
            let k = self.stiffness[i];
            k >= psi.k_min[i]
                && k <= psi.k_max[i]
                && (self.damping[i] - T::lit(2.0) * k.sqrt()).abs() <= tol * (T::one() + self.damping[i])
                && self.feedforward[i].abs() <= psi.f_ff_max[i]
        })
    }
}

/// `2·√K`, elementwise.
pub fn critical_damping<T: Real>(stiffness: &DVector<T>) -> DVector<T> {
    stiffness.map(|k| T::lit(2.0) * k.sqrt())
}

/// `ε = e − δ·ė`.
pub fn feedback_error<T: Real>(e: &DVector<T>, e_dot: &DVector<T>, delta: T) -> DVector<T> {
    e - e_dot * delta
}

/// One explicit Euler step of the stiffness and feedforward laws.
pub fn adapt_gains<T: Real>(gains: &GainState<T>, eps: &DVector<T>, psi: &AdaptiveParams<T>, dt: T) -> GainState<T> {
    let m = gains.dim();
    let mut stiffness = DVector::zeros(m);
    let mut feedforward = DVector::zeros(m);
    for i in 0..m {
        let k_rate = psi.beta[i] * eps[i].abs() - psi.gamma[i];
        stiffness[i] = clamp(gains.stiffness[i] + k_rate * dt, psi.k_min[i], psi.k_max[i]);

        let f = gains.feedforward[i];
        let f_rate = psi.alpha[i] * eps[i] - psi.mu[i] * f;
        feedforward[i] = clamp(f + f_rate * dt, -psi.f_ff_max[i], psi.f_ff_max[i]);
    }
    GainState {
        damping: critical_damping(&stiffness),
        stiffness,
        feedforward,
    }
}
