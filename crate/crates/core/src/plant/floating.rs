//! Six-DOF floating body driven directly by a task-space wrench.

use nalgebra::{DMatrix, DVector, Vector3};

use crate::scalar::Real;
use crate::spatial::{exp_rotation, rotation_vector, Pose, Twist};

/// Rigid body with isotropic rotational inertia.
///
/// Generalized coordinates are `(position, rotation vector)`; generalized
/// velocities are the world-frame twist `(v, ω)`, so the Jacobian is the
/// identity and the Coriolis matrix vanishes (spherical inertia has no
/// gyroscopic term).
#[derive(Debug, Clone, PartialEq)]
pub struct FloatingBody<T: Real> {
    /// kg
    pub mass: T,
    /// kg·m², same about every axis
    pub inertia: T,
    pub gravity: bool,
    /// m/s², acting along -z
    pub gravity_acceleration: T,
}

impl<T: Real> FloatingBody<T> {
    pub fn new(mass: T, inertia: T, gravity: bool) -> Self {
        Self {
            mass,
            inertia,
            gravity,
            gravity_acceleration: T::lit(9.81),
        }
    }

    pub fn forward_kinematics(&self, q: &DVector<T>) -> Pose<T> {
        Pose::new(
            Vector3::new(q[0], q[1], q[2]),
            exp_rotation(&Vector3::new(q[3], q[4], q[5])),
        )
    }

    pub fn twist(&self, q_dot: &DVector<T>) -> Twist<T> {
        Twist::new(
            Vector3::new(q_dot[0], q_dot[1], q_dot[2]),
            Vector3::new(q_dot[3], q_dot[4], q_dot[5]),
        )
    }

    /// Generalized coordinates of a pose.
    pub fn coordinates(&self, pose: &Pose<T>) -> DVector<T> {
        let r = rotation_vector(&pose.orientation);
        DVector::from_column_slice(&[
            pose.position.x,
            pose.position.y,
            pose.position.z,
            r.x,
            r.y,
            r.z,
        ])
    }

    pub fn mass_matrix(&self) -> DMatrix<T> {
        let m = self.mass;
        let i = self.inertia;
        DMatrix::from_diagonal(&DVector::from_column_slice(&[m, m, m, i, i, i]))
    }

    pub fn gravity_torque(&self) -> DVector<T> {
        let mut g = DVector::zeros(6);
        if self.gravity {
            g[2] = self.mass * self.gravity_acceleration;
        }
        g
    }

    pub fn potential_energy(&self, q: &DVector<T>) -> T {
        if self.gravity {
            self.mass * self.gravity_acceleration * q[2]
        } else {
            T::zero()
        }
    }

    /// Advances positions with the (already updated) velocity; orientation is
    /// composed on the left with the world-frame rotation `exp(ω·dt)`.
    pub fn integrate(&self, q: &DVector<T>, q_dot: &DVector<T>, dt: T) -> DVector<T> {
        let pose = self.forward_kinematics(q);
        let omega = Vector3::new(q_dot[3], q_dot[4], q_dot[5]) * dt;
        let mut next = Pose::new(
            pose.position + Vector3::new(q_dot[0], q_dot[1], q_dot[2]) * dt,
            exp_rotation(&omega) * pose.orientation,
        );
        next.renormalize();
        self.coordinates(&next)
    }
}
