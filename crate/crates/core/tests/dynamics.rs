//! Rigid-body model checks against finite-difference and energy oracles.

use aforce_core::plant::{FloatingBody, PlanarArm, Plant, PlantModel};
use nalgebra::{DMatrix, DVector};

/// Small deterministic generator so the configuration sets are reproducible.
struct Lcg(u64);

impl Lcg {
    fn next(&mut self) -> f64 {
        self.0 = self.0.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        ((self.0 >> 11) as f64) / ((1u64 << 53) as f64)
    }

    fn range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next()
    }

    fn vector(&mut self, n: usize, lo: f64, hi: f64) -> DVector<f64> {
        DVector::from_fn(n, |_, _| self.range(lo, hi))
    }
}

fn arm(gravity: bool) -> PlanarArm<f64> {
    PlanarArm::slender([0.4, 0.3, 0.2], [2.0, 1.5, 1.0], gravity)
}

/// Task coordinates (x, y, yaw) of the planar arm, evaluated independently
/// of the model's kinematics code.
fn planar_task_coordinates(q: &DVector<f64>) -> [f64; 3] {
    let l = [0.4, 0.3, 0.2];
    let mut phi = 0.0;
    let (mut x, mut y) = (0.0, 0.0);
    for i in 0..3 {
        phi += q[i];
        x += l[i] * phi.cos();
        y += l[i] * phi.sin();
    }
    [x, y, phi]
}

#[test]
fn jacobian_matches_central_differences() {
    let a = arm(false);
    let mut rng = Lcg(7);
    let h = 1e-6;
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let q = rng.vector(3, -std::f64::consts::PI, std::f64::consts::PI);
        let j = a.jacobian(&q);
        for col in 0..3 {
            let mut qp = q.clone();
            let mut qm = q.clone();
            qp[col] += h;
            qm[col] -= h;
            let fp = planar_task_coordinates(&qp);
            let fm = planar_task_coordinates(&qm);
            for row in 0..3 {
                let fd = (fp[row] - fm[row]) / (2.0 * h);
                worst = worst.max((fd - j[(row, col)]).abs());
            }
        }
    }
    assert!(worst <= 1e-5, "worst Jacobian deviation {worst}");
}

#[test]
fn forward_kinematics_agrees_with_independent_geometry() {
    let a = arm(false);
    let mut rng = Lcg(11);
    for _ in 0..200 {
        let q = rng.vector(3, -3.0, 3.0);
        let pose = a.forward_kinematics(&q);
        let [x, y, yaw] = planar_task_coordinates(&q);
        assert!((pose.position.x - x).abs() < 1e-12);
        assert!((pose.position.y - y).abs() < 1e-12);
        let angle = pose.orientation.angle() * pose.orientation.axis().map_or(1.0, |ax| ax.z.signum());
        let wrapped = (yaw + std::f64::consts::PI).rem_euclid(2.0 * std::f64::consts::PI) - std::f64::consts::PI;
        assert!((angle - wrapped).abs() < 1e-9 || (angle.abs() - std::f64::consts::PI).abs() < 1e-9);
    }
}

#[test]
fn inertia_is_symmetric_positive_definite() {
    let a = arm(true);
    let mut rng = Lcg(3);
    for _ in 0..1000 {
        let q = rng.vector(3, -3.2, 3.2);
        let m = a.mass_matrix(&q);
        let asym = (&m - m.transpose()).abs().max();
        assert!(asym < 1e-10, "asymmetry {asym}");
        let eig = m.clone().symmetric_eigenvalues();
        assert!(eig.min() > 0.0, "min eigenvalue {}", eig.min());
        assert!(m.cholesky().is_some());
    }
}

#[test]
fn inertia_derivative_matches_finite_differences() {
    let a = arm(false);
    let mut rng = Lcg(5);
    let h = 1e-6;
    for _ in 0..200 {
        let q = rng.vector(3, -3.0, 3.0);
        for k in 0..3 {
            let mut qp = q.clone();
            let mut qm = q.clone();
            qp[k] += h;
            qm[k] -= h;
            let fd = (a.mass_matrix(&qp) - a.mass_matrix(&qm)) / (2.0 * h);
            let an = a.mass_matrix_derivative(&q, k);
            assert!((fd - an).abs().max() < 1e-7);
        }
    }
}

#[test]
fn mdot_minus_two_c_is_skew() {
    let a = arm(true);
    let mut rng = Lcg(13);
    let h = 1e-6;
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let q = rng.vector(3, -3.0, 3.0);
        let q_dot = rng.vector(3, -2.0, 2.0);
        let v = rng.vector(3, -1.0, 1.0);
        // Ṁ along the trajectory by central differences of M(q + q̇·t)
        let m_dot: DMatrix<f64> =
            (a.mass_matrix(&(&q + &q_dot * h)) - a.mass_matrix(&(&q - &q_dot * h))) / (2.0 * h);
        let n = m_dot - a.coriolis(&q, &q_dot) * 2.0;
        worst = worst.max(v.dot(&(&n * &v)).abs());
    }
    assert!(worst <= 1e-8, "vᵀ(Ṁ − 2C)v reached {worst}");
}

#[test]
fn gravity_is_the_gradient_of_potential_energy() {
    let a = arm(true);
    let mut rng = Lcg(17);
    let h = 1e-6;
    for _ in 0..200 {
        let q = rng.vector(3, -3.0, 3.0);
        let g = a.gravity_torque(&q);
        for k in 0..3 {
            let mut qp = q.clone();
            let mut qm = q.clone();
            qp[k] += h;
            qm[k] -= h;
            let fd = (a.potential_energy(&qp) - a.potential_energy(&qm)) / (2.0 * h);
            assert!((fd - g[k]).abs() < 1e-6);
        }
    }
}

#[test]
fn damped_arm_loses_energy_every_step() {
    let mut plant = Plant::new(PlantModel::Planar(arm(true)), None);
    plant.joint_damping = 0.5;
    let mut state = plant.state(DVector::from_column_slice(&[0.3, 0.5, -0.4]), DVector::zeros(3));
    let tau = DVector::zeros(3);
    let mut energy = plant.mechanical_energy(&state);
    let start = energy;
    for _ in 0..3000 {
        state = plant.step(&state, &tau, 1e-4).unwrap();
        let e = plant.mechanical_energy(&state);
        assert!(e <= energy + 1e-9, "energy rose from {energy} to {e}");
        energy = e;
    }
    assert!(energy < start - 0.1);
}

#[test]
fn kinematic_state_is_consistent_after_steps() {
    let plant = Plant::new(PlantModel::Floating(FloatingBody::new(1.0, 0.05, true)), None);
    let mut q_dot = DVector::zeros(6);
    q_dot[3] = 0.7;
    q_dot[4] = -1.1;
    q_dot[1] = 0.3;
    let mut state = plant.state(DVector::zeros(6), q_dot);
    let tau = plant.dynamics_terms(&state.q, &state.q_dot).gravity;
    for _ in 0..2000 {
        state = plant.step(&state, &tau, 1e-3).unwrap();
        let fk = plant.model.forward_kinematics(&state.q);
        assert!((fk.position - state.x.position).norm() < 1e-9);
        assert!(fk.orientation.angle_to(&state.x.orientation) < 1e-9);
        let tw = plant.model.twist(&state.q, &state.q_dot);
        assert!((tw.to_vector() - state.x_dot.to_vector()).norm() < 1e-9);
    }
}
