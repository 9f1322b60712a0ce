//! Simulated manipulator: `M(q)q̈ + C(q, q̇)q̇ + g(q) = τ_u + τ_ext`.

mod contact;
mod floating;
mod planar;

pub use contact::{contact_wrench, SurfaceModel};
pub use floating::FloatingBody;
pub use planar::PlanarArm;

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::scalar::Real;
use crate::spatial::{scatter, select, Pose, Twist, Wrench};

/// Any state component beyond this magnitude is treated as a blow-up.
pub const BLOWUP_LIMIT: f64 = 1e6;
/// Jacobians with a smaller singular value are flagged as singular.
pub const SINGULAR_THRESHOLD: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PlantError {
    #[error("integration step {0} s outside (0, 0.01]")]
    InvalidStep(f64),
    #[error("commanded torque has {got} entries, plant has {dof} joints")]
    TorqueDimension { got: usize, dof: usize },
    #[error("commanded torque is not finite")]
    NonFiniteTorque,
    #[error("inertia matrix is not positive definite")]
    IndefiniteInertia,
    #[error("numerical blow-up: {0}")]
    NumericalBlowup(String),
}

#[derive(Debug, Clone, PartialEq)]
pub enum PlantModel<T: Real> {
    Floating(FloatingBody<T>),
    Planar(PlanarArm<T>),
}

/// `M`, `C`, `g` and the task Jacobian at one configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct DynamicsTerms<T: Real> {
    pub mass: DMatrix<T>,
    pub coriolis: DMatrix<T>,
    pub gravity: DVector<T>,
    /// m×n, rows follow [`PlantModel::task_axes`].
    pub jacobian: DMatrix<T>,
    /// Smallest singular value of the Jacobian fell below [`SINGULAR_THRESHOLD`].
    pub singular: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlantState<T: Real> {
    pub q: DVector<T>,
    pub q_dot: DVector<T>,
    pub x: Pose<T>,
    pub x_dot: Twist<T>,
    /// Wrench the environment exerts on the end effector.
    pub f_ext: Wrench<T>,
}

impl<T: Real> PlantModel<T> {
    pub fn dof(&self) -> usize {
        match self {
            Self::Floating(_) => 6,
            Self::Planar(_) => 3,
        }
    }

    /// Components of the 6-D task space this model controls.
    pub fn task_axes(&self) -> &'static [usize] {
        match self {
            Self::Floating(_) => &[0, 1, 2, 3, 4, 5],
            Self::Planar(_) => &[0, 1, 5],
        }
    }

    pub fn forward_kinematics(&self, q: &DVector<T>) -> Pose<T> {
        match self {
            Self::Floating(b) => b.forward_kinematics(q),
            Self::Planar(a) => a.forward_kinematics(q),
        }
    }

    pub fn twist(&self, q: &DVector<T>, q_dot: &DVector<T>) -> Twist<T> {
        match self {
            Self::Floating(b) => b.twist(q_dot),
            Self::Planar(a) => a.twist(q, q_dot),
        }
    }

    pub fn jacobian(&self, q: &DVector<T>) -> DMatrix<T> {
        match self {
            Self::Floating(_) => DMatrix::identity(6, 6),
            Self::Planar(a) => a.jacobian(q),
        }
    }

    pub fn mass_matrix(&self, q: &DVector<T>) -> DMatrix<T> {
        match self {
            Self::Floating(b) => b.mass_matrix(),
            Self::Planar(a) => a.mass_matrix(q),
        }
    }

    pub fn coriolis(&self, q: &DVector<T>, q_dot: &DVector<T>) -> DMatrix<T> {
        match self {
            Self::Floating(_) => DMatrix::zeros(6, 6),
            Self::Planar(a) => a.coriolis(q, q_dot),
        }
    }

    pub fn gravity_torque(&self, q: &DVector<T>) -> DVector<T> {
        match self {
            Self::Floating(b) => b.gravity_torque(),
            Self::Planar(a) => a.gravity_torque(q),
        }
    }

    pub fn potential_energy(&self, q: &DVector<T>) -> T {
        match self {
            Self::Floating(b) => b.potential_energy(q),
            Self::Planar(a) => a.potential_energy(q),
        }
    }

    pub fn dynamics_terms(&self, q: &DVector<T>, q_dot: &DVector<T>) -> DynamicsTerms<T> {
        let jacobian = self.jacobian(q);
        let singular = match self {
            Self::Floating(_) => false,
            Self::Planar(_) => {
                let sv = jacobian.clone().svd(false, false).singular_values;
                sv.min() < T::lit(SINGULAR_THRESHOLD)
            }
        };
        DynamicsTerms {
            mass: self.mass_matrix(q),
            coriolis: self.coriolis(q, q_dot),
            gravity: self.gravity_torque(q),
            jacobian,
            singular,
        }
    }

    fn integrate(&self, q: &DVector<T>, q_dot: &DVector<T>, dt: T) -> DVector<T> {
        match self {
            Self::Floating(b) => b.integrate(q, q_dot, dt),
            Self::Planar(_) => q + q_dot * dt,
        }
    }

    /// Smallest inertia along any generalized coordinate.
    pub fn min_inertia(&self) -> T {
        match self {
            Self::Floating(b) => b.mass.min(b.inertia),
            Self::Planar(a) => a.inertias.iter().fold(a.masses[0], |m, &v| m.min(v)),
        }
    }
}

/// A manipulator model, an optional contact surface and joint friction.
#[derive(Debug, Clone, PartialEq)]
pub struct Plant<T: Real> {
    pub model: PlantModel<T>,
    pub surface: Option<SurfaceModel<T>>,
    /// Joint-space viscous damping (N·m·s/rad).
    pub joint_damping: T,
}

impl<T: Real> Plant<T> {
    pub fn new(model: PlantModel<T>, surface: Option<SurfaceModel<T>>) -> Self {
        Self {
            model,
            surface,
            joint_damping: T::lit(0.01),
        }
    }

    pub fn dof(&self) -> usize {
        self.model.dof()
    }

    pub fn task_axes(&self) -> &'static [usize] {
        self.model.task_axes()
    }

    pub fn dynamics_terms(&self, q: &DVector<T>, q_dot: &DVector<T>) -> DynamicsTerms<T> {
        self.model.dynamics_terms(q, q_dot)
    }

    /// Contact wrench at a tool pose, zero without a surface.
    pub fn contact_wrench(&self, x: &Pose<T>, x_dot: &Twist<T>) -> Wrench<T> {
        match &self.surface {
            Some(s) => contact_wrench(x, x_dot, s),
            None => Wrench::zero(),
        }
    }

    /// Full state from joint positions and velocities.
    pub fn state(&self, q: DVector<T>, q_dot: DVector<T>) -> PlantState<T> {
        let x = self.model.forward_kinematics(&q);
        let x_dot = self.model.twist(&q, &q_dot);
        let f_ext = self.contact_wrench(&x, &x_dot);
        PlantState {
            q,
            q_dot,
            x,
            x_dot,
            f_ext,
        }
    }

    /// Kinetic plus potential energy.
    pub fn mechanical_energy(&self, state: &PlantState<T>) -> T {
        let m = self.model.mass_matrix(&state.q);
        let kinetic = state.q_dot.dot(&(m * &state.q_dot)) * T::lit(0.5);
        kinetic + self.model.potential_energy(&state.q)
    }

    /// One semi-implicit Euler step of the forward dynamics.
    pub fn step(&self, state: &PlantState<T>, tau_u: &DVector<T>, dt: T) -> Result<PlantState<T>, PlantError> {
        if !(dt > T::zero() && dt <= T::lit(0.01)) {
            return Err(PlantError::InvalidStep(dt.as_f64()));
        }
        if tau_u.len() != self.dof() {
            return Err(PlantError::TorqueDimension {
                got: tau_u.len(),
                dof: self.dof(),
            });
        }
        if tau_u.iter().any(|v| !v.is_finite()) {
            return Err(PlantError::NonFiniteTorque);
        }
        let terms = self.dynamics_terms(&state.q, &state.q_dot);
        let axes = self.task_axes();
        let wrench = select(&state.f_ext.to_vector(), axes);
        let tau_ext = terms.jacobian.transpose() * wrench;
        let rhs = tau_u + tau_ext
            - &terms.coriolis * &state.q_dot
            - &terms.gravity
            - &state.q_dot * self.joint_damping;
        let chol = terms.mass.cholesky().ok_or(PlantError::IndefiniteInertia)?;
        let q_ddot = chol.solve(&rhs);
        let q_dot = &state.q_dot + q_ddot * dt;
        let q = self.model.integrate(&state.q, &q_dot, dt);
        check_bounded("q", &q)?;
        check_bounded("q_dot", &q_dot)?;
        Ok(self.state(q, q_dot))
    }

    /// Maps a task-space wrench (m-vector) to joint torques.
    pub fn task_wrench_to_torque(&self, terms: &DynamicsTerms<T>, wrench: &DVector<T>) -> DVector<T> {
        terms.jacobian.transpose() * wrench
    }

    /// Scatters an m-vector task quantity into the 6-D convention.
    pub fn to_full(&self, v: &DVector<T>) -> nalgebra::Vector6<T> {
        scatter(v, self.task_axes())
    }
}

fn check_bounded<T: Real>(name: &str, v: &DVector<T>) -> Result<(), PlantError> {
    let limit = T::lit(BLOWUP_LIMIT);
    for (i, c) in v.iter().enumerate() {
        if !c.is_finite() || c.abs() > limit {
            return Err(PlantError::NumericalBlowup(format!(
                "{name}[{i}] = {}",
                c.as_f64()
            )));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use nalgebra::Vector3;

    fn floating(gravity: bool) -> Plant<f64> {
        let mut p = Plant::new(PlantModel::Floating(FloatingBody::new(1.0, 0.05, gravity)), None);
        p.joint_damping = 0.0;
        p
    }

    fn arm(gravity: bool) -> PlanarArm<f64> {
        PlanarArm::slender([0.4, 0.3, 0.2], [2.0, 1.5, 1.0], gravity)
    }

    #[test]
    fn floating_terms_without_gravity() {
        let p = floating(false);
        let q = DVector::from_column_slice(&[0.1, 0.2, 0.3, 0.0, 0.1, 0.0]);
        let t = p.dynamics_terms(&q, &DVector::zeros(6));
        let diag = DVector::from_column_slice(&[1.0, 1.0, 1.0, 0.05, 0.05, 0.05]);
        assert_eq!(t.mass, DMatrix::from_diagonal(&diag));
        assert_eq!(t.coriolis, DMatrix::zeros(6, 6));
        assert_eq!(t.gravity, DVector::zeros(6));
        assert_eq!(t.jacobian, DMatrix::identity(6, 6));
        assert!(!t.singular);
    }

    #[test]
    fn stretched_arm_geometry() {
        let a = arm(false);
        let q = DVector::zeros(3);
        let pose = a.forward_kinematics(&q);
        assert_relative_eq!(pose.position, Vector3::new(0.9, 0.0, 0.0), epsilon = 1e-15);
        let j = a.jacobian(&q);
        // ∂x/∂q = -Σ l sin φ = 0, ∂y/∂q_j = Σ_{k≥j} l_k
        let expected = DMatrix::from_row_slice(3, 3, &[0.0, 0.0, 0.0, 0.9, 0.5, 0.2, 1.0, 1.0, 1.0]);
        assert_relative_eq!(j, expected, epsilon = 1e-15);
    }

    #[test]
    fn stretched_arm_is_flagged_singular() {
        let p = Plant::new(PlantModel::Planar(arm(false)), None);
        let t = p.dynamics_terms(&DVector::zeros(3), &DVector::zeros(3));
        assert!(t.singular);
        let t = p.dynamics_terms(&DVector::from_column_slice(&[0.3, 0.8, -0.5]), &DVector::zeros(3));
        assert!(!t.singular);
    }

    #[test]
    fn floating_equilibrium_is_stationary() {
        let p = floating(false);
        let s = p.state(DVector::from_column_slice(&[0.1, -0.2, 0.3, 0.2, 0.0, -0.1]), DVector::zeros(6));
        let next = p.step(&s, &DVector::zeros(6), 1e-3).unwrap();
        assert_relative_eq!(next.q, s.q, epsilon = 1e-15);
        assert_eq!(next.q_dot, s.q_dot);
    }

    #[test]
    fn newton_second_law() {
        let p = floating(false);
        let mut s = p.state(DVector::zeros(6), DVector::zeros(6));
        let mut tau = DVector::zeros(6);
        tau[0] = 1.0;
        for _ in 0..1000 {
            s = p.step(&s, &tau, 1e-3).unwrap();
        }
        assert!((s.q_dot[0] - 1.0).abs() < 1e-3);
        assert!((s.x_dot.linear.x - 1.0).abs() < 1e-3);
    }

    #[test]
    fn floating_rotation_integrates_world_angular_velocity() {
        let p = floating(false);
        let mut q_dot = DVector::zeros(6);
        q_dot[5] = 1.0;
        let mut s = p.state(DVector::zeros(6), q_dot);
        for _ in 0..500 {
            s = p.step(&s, &DVector::zeros(6), 1e-3).unwrap();
        }
        assert_relative_eq!(s.x.orientation.angle(), 0.5, epsilon = 1e-9);
        assert_relative_eq!(s.q[5], 0.5, epsilon = 1e-9);
    }

    #[test]
    fn gravity_pulls_down_and_compensation_holds() {
        let p = floating(true);
        let s = p.state(DVector::zeros(6), DVector::zeros(6));
        let fallen = p.step(&s, &DVector::zeros(6), 1e-3).unwrap();
        assert!(fallen.q_dot[2] < 0.0);
        let g = p.dynamics_terms(&s.q, &s.q_dot).gravity;
        let held = p.step(&s, &g, 1e-3).unwrap();
        assert_eq!(held.q_dot[2], 0.0);
    }

    #[test]
    fn rejects_bad_inputs() {
        let p = floating(false);
        let s = p.state(DVector::zeros(6), DVector::zeros(6));
        assert!(matches!(p.step(&s, &DVector::zeros(6), 0.0), Err(PlantError::InvalidStep(_))));
        assert!(matches!(p.step(&s, &DVector::zeros(6), 0.02), Err(PlantError::InvalidStep(_))));
        assert!(matches!(p.step(&s, &DVector::zeros(3), 1e-3), Err(PlantError::TorqueDimension { .. })));
        let mut tau = DVector::zeros(6);
        tau[1] = f64::NAN;
        assert_eq!(p.step(&s, &tau, 1e-3), Err(PlantError::NonFiniteTorque));
    }

    #[test]
    fn huge_torque_is_a_blowup() {
        let p = floating(false);
        let s = p.state(DVector::zeros(6), DVector::zeros(6));
        let tau = DVector::from_element(6, 1e12);
        assert!(matches!(p.step(&s, &tau, 1e-3), Err(PlantError::NumericalBlowup(_))));
    }

    #[test]
    fn contact_force_enters_the_dynamics() {
        let mut p = floating(false);
        p.surface = Some(SurfaceModel::viscous(0.0, 10_000.0, 0.0, 0.0));
        let s = p.state(DVector::from_column_slice(&[0.0, 0.0, -0.001, 0.0, 0.0, 0.0]), DVector::zeros(6));
        assert_relative_eq!(s.f_ext.force.z, 10.0, epsilon = 1e-9);
        let next = p.step(&s, &DVector::zeros(6), 1e-3).unwrap();
        assert_relative_eq!(next.q_dot[2], 10.0 * 1e-3, epsilon = 1e-12);
    }

    #[test]
    fn step_is_bitwise_deterministic() {
        let p = Plant::new(PlantModel::Planar(arm(true)), None);
        let s = p.state(DVector::from_column_slice(&[0.3, -0.4, 0.9]), DVector::from_column_slice(&[0.1, 0.2, -0.3]));
        let tau = DVector::from_column_slice(&[0.5, -0.2, 0.1]);
        let a = p.step(&s, &tau, 1e-3).unwrap();
        let b = p.step(&s, &tau, 1e-3).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn single_precision_plant_steps() {
        let p = Plant::<f32>::new(PlantModel::Floating(FloatingBody::new(1.0, 0.05, false)), None);
        let s = p.state(DVector::zeros(6), DVector::zeros(6));
        let mut tau = DVector::zeros(6);
        tau[0] = 2.0;
        let next = p.step(&s, &tau, 1e-3).unwrap();
        assert!((next.q_dot[0] - 2e-3).abs() < 1e-7);
    }
}
