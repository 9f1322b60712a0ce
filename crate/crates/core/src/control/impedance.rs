//! Task-space impedance law with feedforward and desired wrench.

use nalgebra::DVector;

use super::GainState;
use crate::plant::DynamicsTerms;
use crate::scalar::Real;

/// Commanded task wrench `−F_ff − F_d − K∘e − D∘ė`.
pub fn task_wrench<T: Real>(e: &DVector<T>, e_dot: &DVector<T>, gains: &GainState<T>, f_d: &DVector<T>) -> DVector<T> {
    -(&gains.feedforward + f_d + gains.stiffness.component_mul(e) + gains.damping.component_mul(e_dot))
}

/// Joint torques `Jᵀ(−F_ff − F_d − K∘e − D∘ė) [+ g(q)]`.
pub fn impedance_torque<T: Real>(
    terms: &DynamicsTerms<T>,
    e: &DVector<T>,
    e_dot: &DVector<T>,
    gains: &GainState<T>,
    f_d: &DVector<T>,
    gravity_compensation: bool,
) -> DVector<T> {
    let wrench = task_wrench(e, e_dot, gains, f_d);
    let tau = terms.jacobian.transpose() * wrench;
    if gravity_compensation {
        tau + &terms.gravity
    } else {
        tau
    }
}
