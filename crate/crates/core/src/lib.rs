//! Monocular inter-vehicle distance estimation that accounts for the road
//! gradient of both the ego vehicle and the target.
//!
//! Per frame the pipeline:
//!
//! 1. estimates the ego gradient from two odometry rotations one interval
//!    apart ([`ego_gradient`]),
//! 2. converts it into a vanishing line and compares that with the center
//!    of the target's bounding box ([`target_adjust`]),
//! 3. bumps the gradient when the target appears to be on a steeper plane,
//! 4. and evaluates the pinhole ground-plane distance ([`distance`]).
//!
//! [`simulator`] produces synthetic sequences with exact ground truth and
//! [`eval`] scores estimates against it. The math is generic over
//! [`Scalar`] (`f32` or `f64`); the aliases below fix it to `f64`.

pub mod cli;
pub mod distance;
pub mod ego_gradient;
pub mod error;
pub mod eval;
pub mod geometry;
pub mod io;
pub mod scalar;
pub mod simulator;
pub mod target_adjust;
pub mod types;

pub use error::{Error, Result};
pub use scalar::Scalar;
pub use types::{BBox, Flag};

pub type Calibration = types::CameraCalibration<f64>;
pub type Pose = types::PoseSample<f64>;
pub type Detection = types::Detection<f64>;
pub type Estimate = types::DistanceEstimate<f64>;
pub type Pipeline = distance::Pipeline<f64>;
pub type PipelineOptions = distance::PipelineOptions<f64>;
pub type Policy = target_adjust::AdjustmentPolicy<f64>;
pub type Mat3 = geometry::Mat3<f64>;
pub type Vec3 = geometry::Vec3<f64>;

pub type Calibration32 = types::CameraCalibration<f32>;
pub type Pose32 = types::PoseSample<f32>;
pub type Pipeline32 = distance::Pipeline<f32>;
