//! Three-link planar arm moving in a vertical plane.
//!
//! The arm lives in the world x–y plane with gravity along -y. Link `i`
//! has its centre of mass at half its length. The controlled task axes are
//! `(x, y, yaw)`.

use nalgebra::{DMatrix, DVector, Vector3};

use crate::scalar::Real;
use crate::spatial::{Pose, Twist};

#[derive(Debug, Clone, PartialEq)]
pub struct PlanarArm<T: Real> {
    /// m
    pub lengths: [T; 3],
    /// kg
    pub masses: [T; 3],
    /// kg·m² about each link's centre of mass
    pub inertias: [T; 3],
    pub gravity: bool,
    pub gravity_acceleration: T,
}

impl<T: Real> PlanarArm<T> {
    /// Slender-rod links (`I = m·l²/12`).
    pub fn slender(lengths: [T; 3], masses: [T; 3], gravity: bool) -> Self {
        let twelfth = T::lit(1.0 / 12.0);
        let inertias = [0, 1, 2].map(|i| masses[i] * lengths[i] * lengths[i] * twelfth);
        Self {
            lengths,
            masses,
            inertias,
            gravity,
            gravity_acceleration: T::lit(9.81),
        }
    }

    fn angles(&self, q: &DVector<T>) -> [T; 3] {
        [q[0], q[0] + q[1], q[0] + q[1] + q[2]]
    }

    /// Lever arm of link `k` when computing the point attached to link `i`.
    fn lever(&self, k: usize, i: usize, tip: bool) -> T {
        if k < i || tip {
            self.lengths[k]
        } else {
            self.lengths[k] * T::lit(0.5)
        }
    }

    /// Planar position of the centre of mass of link `i` (or its tip).
    fn point(&self, q: &DVector<T>, i: usize, tip: bool) -> (T, T) {
        let phi = self.angles(q);
        (0..=i).fold((T::zero(), T::zero()), |(x, y), k| {
            let a = self.lever(k, i, tip);
            (x + a * phi[k].cos(), y + a * phi[k].sin())
        })
    }

    /// 2×3 translational Jacobian of the point attached to link `i`.
    fn point_jacobian(&self, q: &DVector<T>, i: usize, tip: bool) -> DMatrix<T> {
        let phi = self.angles(q);
        let mut jac = DMatrix::zeros(2, 3);
        for j in 0..=i {
            for k in j..=i {
                let a = self.lever(k, i, tip);
                jac[(0, j)] -= a * phi[k].sin();
                jac[(1, j)] += a * phi[k].cos();
            }
        }
        jac
    }

    /// Derivative of [`Self::point_jacobian`] with respect to `q_m`.
    fn point_jacobian_derivative(&self, q: &DVector<T>, i: usize, m: usize) -> DMatrix<T> {
        let phi = self.angles(q);
        let mut d = DMatrix::zeros(2, 3);
        if m > i {
            return d;
        }
        for j in 0..=i {
            for k in j.max(m)..=i {
                let a = self.lever(k, i, false);
                d[(0, j)] -= a * phi[k].cos();
                d[(1, j)] -= a * phi[k].sin();
            }
        }
        d
    }

    pub fn forward_kinematics(&self, q: &DVector<T>) -> Pose<T> {
        let (x, y) = self.point(q, 2, true);
        let yaw = self.angles(q)[2];
        Pose::new(
            Vector3::new(x, y, T::zero()),
            nalgebra::UnitQuaternion::from_axis_angle(&Vector3::z_axis(), yaw),
        )
    }

    /// 3×3 task Jacobian for `(x, y, yaw)`.
    pub fn jacobian(&self, q: &DVector<T>) -> DMatrix<T> {
        let jp = self.point_jacobian(q, 2, true);
        let mut jac = DMatrix::zeros(3, 3);
        jac.rows_mut(0, 2).copy_from(&jp);
        jac.row_mut(2).fill(T::one());
        jac
    }

    pub fn twist(&self, q: &DVector<T>, q_dot: &DVector<T>) -> Twist<T> {
        let v = self.jacobian(q) * q_dot;
        Twist::new(
            Vector3::new(v[0], v[1], T::zero()),
            Vector3::new(T::zero(), T::zero(), v[2]),
        )
    }

    fn rotational_jacobian(i: usize) -> DVector<T> {
        DVector::from_fn(3, |j, _| if j <= i { T::one() } else { T::zero() })
    }

    pub fn mass_matrix(&self, q: &DVector<T>) -> DMatrix<T> {
        let mut m = DMatrix::zeros(3, 3);
        for i in 0..3 {
            let jv = self.point_jacobian(q, i, false);
            let jw = Self::rotational_jacobian(i);
            m += jv.transpose() * &jv * self.masses[i] + &jw * jw.transpose() * self.inertias[i];
        }
        m
    }

    /// `∂M/∂q_m`.
    pub fn mass_matrix_derivative(&self, q: &DVector<T>, m: usize) -> DMatrix<T> {
        let mut out = DMatrix::zeros(3, 3);
        for i in 0..3 {
            let jv = self.point_jacobian(q, i, false);
            let dj = self.point_jacobian_derivative(q, i, m);
            let sym = dj.transpose() * &jv;
            out += (&sym + sym.transpose()) * self.masses[i];
        }
        out
    }

    /// Coriolis matrix from Christoffel symbols of the first kind, so that
    /// `Ṁ − 2C` is skew-symmetric.
    pub fn coriolis(&self, q: &DVector<T>, q_dot: &DVector<T>) -> DMatrix<T> {
        let dm: Vec<DMatrix<T>> = (0..3).map(|k| self.mass_matrix_derivative(q, k)).collect();
        let half = T::lit(0.5);
        DMatrix::from_fn(3, 3, |i, j| {
            (0..3).fold(T::zero(), |acc, k| {
                acc + half * (dm[k][(i, j)] + dm[j][(i, k)] - dm[i][(j, k)]) * q_dot[k]
            })
        })
    }

    pub fn gravity_torque(&self, q: &DVector<T>) -> DVector<T> {
        let mut g = DVector::zeros(3);
        if !self.gravity {
            return g;
        }
        for i in 0..3 {
            let jv = self.point_jacobian(q, i, false);
            for j in 0..3 {
                g[j] += self.masses[i] * self.gravity_acceleration * jv[(1, j)];
            }
        }
        g
    }

    pub fn potential_energy(&self, q: &DVector<T>) -> T {
        if !self.gravity {
            return T::zero();
        }
        (0..3).fold(T::zero(), |acc, i| {
            acc + self.masses[i] * self.gravity_acceleration * self.point(q, i, false).1
        })
    }
}
