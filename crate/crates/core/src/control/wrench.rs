//! PID regulation of the desired contact wrench.

use nalgebra::DVector;

use crate::scalar::{clamp, Real};

/// Per-axis PID state. Only axes flagged in `regulated` are closed-loop;
/// the others pass the desired wrench through.
#[derive(Debug, Clone, PartialEq)]
pub struct PidState<T: Real> {
    pub integral: DVector<T>,
    pub previous_error: DVector<T>,
    pub kp: DVector<T>,
    pub ki: DVector<T>,
    pub kd: DVector<T>,
    /// Per-axis magnitude cap on the commanded wrench (N).
    pub output_cap: T,
    /// Anti-windup bound on `|∫err|`.
    pub integral_bound: T,
    pub regulated: Vec<bool>,
    primed: bool,
}

impl<T: Real> PidState<T> {
    pub fn new(kp: DVector<T>, ki: DVector<T>, kd: DVector<T>, output_cap: T, integral_bound: T, regulated: Vec<bool>) -> Self {
        let m = kp.len();
        Self {
            integral: DVector::zeros(m),
            previous_error: DVector::zeros(m),
            kp,
            ki,
            kd,
            output_cap,
            integral_bound,
            regulated,
            primed: false,
        }
    }

    /// Same gains on every regulated axis.
    pub fn uniform(m: usize, kp: T, ki: T, kd: T, output_cap: T, integral_bound: T, regulated: Vec<bool>) -> Self {
        Self::new(
            DVector::from_element(m, kp),
            DVector::from_element(m, ki),
            DVector::from_element(m, kd),
            output_cap,
            integral_bound,
            regulated,
        )
    }

    pub fn reset(&mut self) {
        self.integral.fill(T::zero());
        self.previous_error.fill(T::zero());
        self.primed = false;
    }
}

/// Commanded wrench for one control tick.
///
/// In contact: `F_d + kp∘err + ki∘∫err + kd∘d(err)/dt` with
/// `err = F_d − F_meas`, clamped to `±output_cap` per axis. The integral
/// stops accumulating while the output is saturated in the direction of
/// the error, and is bounded by `integral_bound`. Out of contact the
/// desired wrench passes through and the integral is frozen.
pub fn regulate_wrench<T: Real>(
    f_meas: &DVector<T>,
    f_d: &DVector<T>,
    pid: &PidState<T>,
    dt: T,
    in_contact: bool,
) -> (DVector<T>, PidState<T>) {
    let mut next = pid.clone();
    let mut out = f_d.clone();
    let cap = pid.output_cap;
    for i in 0..f_d.len() {
        if !pid.regulated.get(i).copied().unwrap_or(false) {
            continue;
        }
        let err = f_d[i] - f_meas[i];
        if !in_contact {
            next.previous_error[i] = err;
            continue;
        }
        let derivative = if pid.primed {
            (err - pid.previous_error[i]) / dt
        } else {
            T::zero()
        };
        let integral = clamp(
            pid.integral[i] + err * dt,
            -pid.integral_bound,
            pid.integral_bound,
        );
        let raw = f_d[i] + pid.kp[i] * err + pid.ki[i] * integral + pid.kd[i] * derivative;
        let limited = clamp(raw, -cap, cap);
        let winding_up = limited != raw && (raw > T::zero()) == (err > T::zero());
        if !winding_up {
            next.integral[i] = integral;
        }
        next.previous_error[i] = err;
        out[i] = limited;
    }
    if in_contact {
        next.primed = true;
    }
    (out, next)
}
