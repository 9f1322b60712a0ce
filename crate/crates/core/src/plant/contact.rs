//! Penalty contact against a horizontal plane.

use nalgebra::Vector3;

use crate::scalar::Real;
use crate::spatial::{Pose, Twist, Wrench};

/// Horizontal contact plane with a spring-damper normal law and a smooth
/// tangential friction law.
///
/// Tangential force is `-mu_t·v - mu_c·f_n·v/sqrt(|v|² + v_s²)`: a viscous
/// term plus a load-proportional term regularized around zero slip, so
/// there is no stick phase.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfaceModel<T: Real> {
    /// Height of the plane along world z (m).
    pub height: T,
    /// Normal stiffness k_n (N/m).
    pub normal_stiffness: T,
    /// Normal damping c_n (N·s/m).
    pub normal_damping: T,
    /// Viscous tangential friction mu_t (N·s/m).
    pub viscous_friction: T,
    /// Load-proportional friction coefficient mu_c (dimensionless).
    pub coulomb_friction: T,
    /// Regularization speed v_s of the load-proportional term (m/s).
    pub slip_velocity: T,
}

impl<T: Real> SurfaceModel<T> {
    /// Plane with only the viscous tangential law.
    pub fn viscous(height: T, normal_stiffness: T, normal_damping: T, viscous_friction: T) -> Self {
        Self {
            height,
            normal_stiffness,
            normal_damping,
            viscous_friction,
            coulomb_friction: T::zero(),
            slip_velocity: T::lit(0.01),
        }
    }

    /// `k_n·dt²/m`; semi-implicit Euler needs this well below 1.
    pub fn stability_number(&self, dt: T, mass: T) -> T {
        self.normal_stiffness * dt * dt / mass
    }

    /// Penetration depth of a point; positive inside the surface.
    pub fn penetration(&self, point: &Vector3<T>) -> T {
        self.height - point.z
    }

    pub fn validate(&self) -> Result<(), String> {
        if !(self.normal_stiffness > T::zero()) {
            return Err("normal stiffness must be > 0".into());
        }
        if self.normal_damping < T::zero()
            || self.viscous_friction < T::zero()
            || self.coulomb_friction < T::zero()
        {
            return Err("damping and friction coefficients must be >= 0".into());
        }
        if !(self.slip_velocity > T::zero()) {
            return Err("slip velocity must be > 0".into());
        }
        Ok(())
    }
}

/// Contact wrench exerted by the surface on the tool point at `x`.
pub fn contact_wrench<T: Real>(x: &Pose<T>, x_dot: &Twist<T>, surface: &SurfaceModel<T>) -> Wrench<T> {
    let depth = surface.penetration(&x.position);
    if depth <= T::zero() {
        return Wrench::zero();
    }
    let normal = surface.normal_stiffness * depth - surface.normal_damping * x_dot.linear.z;
    let normal = if normal > T::zero() { normal } else { T::zero() };

    let vx = x_dot.linear.x;
    let vy = x_dot.linear.y;
    let speed_sq = vx * vx + vy * vy;
    let load = surface.coulomb_friction * normal
        / (speed_sq + surface.slip_velocity * surface.slip_velocity).sqrt();
    let gain = surface.viscous_friction + load;
    Wrench::from_force(Vector3::new(-gain * vx, -gain * vy, normal))
}
