//! Task-space adaptive force-impedance control.
//!
//! The crate holds the pieces that run inside the fast control loop:
//! spatial types and task errors ([`spatial`]), the simulated manipulator
//! ([`plant`]), the impedance/adaptation laws and action spaces
//! ([`control`]) and the slow-to-fast reference interpolator ([`bridge`]).
//!
//! Everything numeric is generic over [`Real`] (`f32` or `f64`); the
//! `*64` aliases below fix the scalar to `f64`, which is what the
//! simulation harness uses.

pub mod bridge;
pub mod control;
pub mod plant;
pub mod scalar;
pub mod spatial;

pub use bridge::ReferenceTrack;
pub use control::{
    ActionSpaceController, ActionSpaceKind, AdaptiveParams, Action, ControlError, GainState,
    PidState,
};
pub use plant::{
    DynamicsTerms, FloatingBody, PlanarArm, Plant, PlantError, PlantModel, PlantState,
    SurfaceModel,
};
pub use scalar::Real;
pub use spatial::{Pose, TaskError, Twist, Wrench};

pub type Pose64 = Pose<f64>;
pub type Twist64 = Twist<f64>;
pub type Wrench64 = Wrench<f64>;
pub type TaskError64 = TaskError<f64>;
pub type Plant64 = Plant<f64>;
pub type PlantState64 = PlantState<f64>;
pub type DynamicsTerms64 = DynamicsTerms<f64>;
pub type SurfaceModel64 = SurfaceModel<f64>;
pub type AdaptiveParams64 = AdaptiveParams<f64>;
pub type GainState64 = GainState<f64>;
pub type PidState64 = PidState<f64>;
pub type Action64 = Action<f64>;
pub type Controller64 = ActionSpaceController<f64>;
pub type ReferenceTrack64 = ReferenceTrack<f64>;

pub type Pose32 = Pose<f32>;
pub type GainState32 = GainState<f32>;
pub type AdaptiveParams32 = AdaptiveParams<f32>;
