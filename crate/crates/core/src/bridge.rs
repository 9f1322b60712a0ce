//! Reference interpolation between slow policy ticks and fast control ticks.
//!
//! Each action starts a straight-line segment from the current setpoint to
//! the new target: positions are interpolated linearly, orientations by
//! slerp. A segment lasts one policy period unless that would exceed the
//! velocity clamp, in which case it is stretched.

use nalgebra::Vector3;

use crate::scalar::Real;
use crate::spatial::{geodesic_angle, rotation_vector, slerp, Pose, Twist};

#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceTrack<T: Real> {
    start: Pose<T>,
    target: Pose<T>,
    setpoint: Pose<T>,
    twist: Twist<T>,
    duration: T,
    elapsed: T,
    /// One policy period (s).
    pub period: T,
    /// m/s
    pub max_linear_velocity: T,
    /// rad/s
    pub max_angular_velocity: T,
}

impl<T: Real> ReferenceTrack<T> {
    /// Track holding `pose` with zero twist.
    pub fn hold(pose: Pose<T>, period: T, max_linear_velocity: T, max_angular_velocity: T) -> Self {
        Self {
            start: pose,
            target: pose,
            setpoint: pose,
            twist: Twist::zero(),
            duration: period,
            elapsed: period,
            period,
            max_linear_velocity,
            max_angular_velocity,
        }
    }

    pub fn setpoint(&self) -> &Pose<T> {
        &self.setpoint
    }

    pub fn target(&self) -> &Pose<T> {
        &self.target
    }

    pub fn twist(&self) -> &Twist<T> {
        &self.twist
    }

    pub fn duration(&self) -> T {
        self.duration
    }

    pub fn elapsed(&self) -> T {
        self.elapsed
    }

    /// Starts a new segment from the current setpoint towards `target`.
    pub fn set_target(&mut self, target: Pose<T>) {
        let distance = (target.position - self.setpoint.position).norm();
        let angle = geodesic_angle(&target.orientation, &self.setpoint.orientation);
        let mut duration = self.period;
        if distance > self.max_linear_velocity * duration {
            duration = distance / self.max_linear_velocity;
        }
        if angle > self.max_angular_velocity * duration {
            duration = angle / self.max_angular_velocity;
        }
        self.start = self.setpoint;
        self.target = target;
        self.duration = duration;
        self.elapsed = T::zero();
        self.twist = self.segment_twist();
    }

    fn segment_twist(&self) -> Twist<T> {
        let linear = (self.target.position - self.start.position) / self.duration;
        let rot = rotation_vector(&(self.target.orientation * self.start.orientation.conjugate()));
        Twist::new(linear, rot / self.duration)
    }

    /// Advances by one control period and returns the new setpoint and
    /// feedforward twist.
    pub fn sample(&mut self, dt: T) -> (Pose<T>, Twist<T>) {
        self.elapsed = (self.elapsed + dt).min(self.duration);
        if self.elapsed >= self.duration {
            self.setpoint = self.target;
            self.twist = Twist::zero();
        } else {
            let s = self.elapsed / self.duration;
            let position: Vector3<T> = self.start.position.lerp(&self.target.position, s);
            let orientation = slerp(&self.start.orientation, &self.target.orientation, s);
            self.setpoint = Pose::new(position, orientation);
        }
        (self.setpoint, self.twist)
    }
}
