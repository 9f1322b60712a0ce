//! Poses, twists, wrenches and task-space errors.
//!
//! Quaternions are scalar-first everywhere they are serialized:
//! `(px, py, pz, qw, qx, qy, qz)`.

use nalgebra::{DVector, Quaternion, UnitQuaternion, Vector3, Vector6};

use crate::scalar::Real;

/// Column names of a serialized pose, in order.
pub const POSE_COLUMNS: [&str; 7] = ["px_m", "py_m", "pz_m", "qw", "qx", "qy", "qz"];

/// End-effector pose: position in metres and a unit orientation quaternion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose<T: Real> {
    pub position: Vector3<T>,
    pub orientation: UnitQuaternion<T>,
}

impl<T: Real> Default for Pose<T> {
    fn default() -> Self {
        Self::identity()
    }
}

impl<T: Real> Pose<T> {
    pub fn new(position: Vector3<T>, orientation: UnitQuaternion<T>) -> Self {
        Self {
            position,
            orientation,
        }
    }

    pub fn identity() -> Self {
        Self::new(Vector3::zeros(), UnitQuaternion::identity())
    }

    pub fn from_position(position: Vector3<T>) -> Self {
        Self::new(position, UnitQuaternion::identity())
    }

    /// Builds a pose from a possibly non-normalized scalar-first quaternion.
    pub fn from_parts(position: Vector3<T>, w: T, x: T, y: T, z: T) -> Self {
        Self::new(
            position,
            UnitQuaternion::from_quaternion(Quaternion::new(w, x, y, z)),
        )
    }

    /// Re-projects the orientation onto the unit sphere.
    pub fn renormalize(&mut self) {
        self.orientation = UnitQuaternion::from_quaternion(*self.orientation.quaternion());
    }

    /// Orientation with a non-negative scalar part.
    pub fn canonical_orientation(&self) -> UnitQuaternion<T> {
        canonical(&self.orientation)
    }

    pub fn to_array(&self) -> [T; 7] {
        let q = self.orientation.quaternion();
        [
            self.position.x,
            self.position.y,
            self.position.z,
            q.w,
            q.i,
            q.j,
            q.k,
        ]
    }

    pub fn from_array(a: [T; 7]) -> Self {
        Self::from_parts(Vector3::new(a[0], a[1], a[2]), a[3], a[4], a[5], a[6])
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|v| v.is_finite())
    }
}

/// Linear (m/s) and angular (rad/s) velocity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Twist<T: Real> {
    pub linear: Vector3<T>,
    pub angular: Vector3<T>,
}

impl<T: Real> Default for Twist<T> {
    fn default() -> Self {
        Self::zero()
    }
}

impl<T: Real> Twist<T> {
    pub fn new(linear: Vector3<T>, angular: Vector3<T>) -> Self {
        Self { linear, angular }
    }

    pub fn zero() -> Self {
        Self::new(Vector3::zeros(), Vector3::zeros())
    }

    pub fn to_vector(&self) -> Vector6<T> {
        stack(&self.linear, &self.angular)
    }

    pub fn from_vector(v: &Vector6<T>) -> Self {
        Self::new(v.fixed_rows::<3>(0).into(), v.fixed_rows::<3>(3).into())
    }

    pub fn is_finite(&self) -> bool {
        self.to_vector().iter().all(|v| v.is_finite())
    }
}

/// Force (N) and torque (N·m).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Wrench<T: Real> {
    pub force: Vector3<T>,
    pub torque: Vector3<T>,
}

impl<T: Real> Default for Wrench<T> {
    fn default() -> Self {
        Self::zero()
    }
}

impl<T: Real> Wrench<T> {
    pub fn new(force: Vector3<T>, torque: Vector3<T>) -> Self {
        Self { force, torque }
    }

    pub fn zero() -> Self {
        Self::new(Vector3::zeros(), Vector3::zeros())
    }

    pub fn from_force(force: Vector3<T>) -> Self {
        Self::new(force, Vector3::zeros())
    }

    pub fn to_vector(&self) -> Vector6<T> {
        stack(&self.force, &self.torque)
    }

    pub fn from_vector(v: &Vector6<T>) -> Self {
        Self::new(v.fixed_rows::<3>(0).into(), v.fixed_rows::<3>(3).into())
    }

    pub fn is_finite(&self) -> bool {
        self.to_vector().iter().all(|v| v.is_finite())
    }
}

/// Pose and twist error of the end effector, `x - x_d` and `ẋ - ẋ_d`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TaskError<T: Real> {
    pub e: Vector6<T>,
    pub e_dot: Vector6<T>,
}

impl<T: Real> TaskError<T> {
    pub fn new(x: &Pose<T>, x_dot: &Twist<T>, x_d: &Pose<T>, xd_dot: &Twist<T>) -> Self {
        Self {
            e: pose_error(x, x_d),
            e_dot: x_dot.to_vector() - xd_dot.to_vector(),
        }
    }

    /// Restricts both errors to the controlled task axes.
    pub fn select(&self, axes: &[usize]) -> (DVector<T>, DVector<T>) {
        (select(&self.e, axes), select(&self.e_dot, axes))
    }
}

/// Picks `axes` out of a 6-vector.
pub fn select<T: Real>(v: &Vector6<T>, axes: &[usize]) -> DVector<T> {
    DVector::from_iterator(axes.len(), axes.iter().map(|&i| v[i]))
}

/// Scatters an m-vector back into a 6-vector, zero elsewhere.
pub fn scatter<T: Real>(v: &DVector<T>, axes: &[usize]) -> Vector6<T> {
    let mut out = Vector6::zeros();
    for (k, &i) in axes.iter().enumerate() {
        out[i] = v[k];
    }
    out
}

fn stack<T: Real>(a: &Vector3<T>, b: &Vector3<T>) -> Vector6<T> {
    Vector6::new(a.x, a.y, a.z, b.x, b.y, b.z)
}

/// Quaternion with the scalar part made non-negative.
pub fn canonical<T: Real>(q: &UnitQuaternion<T>) -> UnitQuaternion<T> {
    if q.quaternion().w < T::zero() {
        UnitQuaternion::new_unchecked(-*q.quaternion())
    } else {
        *q
    }
}

/// Rotation vector (axis times angle, angle in `[0, π]`) of a unit quaternion.
pub fn rotation_vector<T: Real>(q: &UnitQuaternion<T>) -> Vector3<T> {
    let q = canonical(q);
    let v = q.quaternion().imag();
    let s = v.norm();
    if s <= T::default_epsilon() {
        // first-order expansion near identity
        return v * T::lit(2.0);
    }
    let angle = T::lit(2.0) * s.atan2(q.quaternion().w);
    v * (angle / s)
}

/// Unit quaternion of a rotation vector.
pub fn exp_rotation<T: Real>(w: &Vector3<T>) -> UnitQuaternion<T> {
    let angle = w.norm();
    if angle <= T::default_epsilon() {
        let half = w * T::lit(0.5);
        return UnitQuaternion::from_quaternion(Quaternion::new(T::one(), half.x, half.y, half.z));
    }
    let half = angle * T::lit(0.5);
    let s = half.sin() / angle;
    UnitQuaternion::new_unchecked(Quaternion::new(half.cos(), w.x * s, w.y * s, w.z * s))
}

/// Spherical linear interpolation along the shorter arc; `t` in `[0, 1]`.
pub fn slerp<T: Real>(a: &UnitQuaternion<T>, b: &UnitQuaternion<T>, t: T) -> UnitQuaternion<T> {
    let qa = a.quaternion();
    let mut qb = *b.quaternion();
    let mut dot = qa.coords.dot(&qb.coords);
    if dot < T::zero() {
        qb = -qb;
        dot = -dot;
    }
    if dot > T::lit(1.0 - 1e-9) {
        let q = qa.lerp(&qb, t);
        return UnitQuaternion::from_quaternion(q);
    }
    let theta = dot.acos();
    let sin_theta = theta.sin();
    let wa = ((T::one() - t) * theta).sin() / sin_theta;
    let wb = (t * theta).sin() / sin_theta;
    UnitQuaternion::from_quaternion(Quaternion::from(qa.coords * wa + qb.coords * wb))
}

/// Geodesic angle between two orientations, `2·acos(|⟨a, b⟩|)`.
pub fn geodesic_angle<T: Real>(a: &UnitQuaternion<T>, b: &UnitQuaternion<T>) -> T {
    rotation_vector(&(a * b.conjugate())).norm()
}

/// Task-space pose error `x - x_d`.
///
/// The translational part is the plain difference of positions; the
/// rotational part is the rotation vector of `x.q ∘ conj(x_d.q)`, so its
/// magnitude never exceeds π.
pub fn pose_error<T: Real>(x: &Pose<T>, x_d: &Pose<T>) -> Vector6<T> {
    let dp = x.position - x_d.position;
    let rot = rotation_vector(&(x.orientation * x_d.orientation.conjugate()));
    stack(&dp, &rot)
}

/// Scalar tracking error: L1 norm of the position error plus the rotation angle.
pub fn tracking_error_metric<T: Real>(e: &Vector6<T>) -> T {
    e[0].abs() + e[1].abs() + e[2].abs() + e.fixed_rows::<3>(3).norm()
}
