//! Coordinate frames, rigid transforms, rotation maps and camera projection.

mod camera;
mod frame;
mod pose;
pub mod rotation;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use camera::{CameraModel, Distortion, UNDISTORT_MAX_ITERATIONS, UNDISTORT_TOLERANCE};
pub use frame::{FrameId, Timestamp};
pub use pose::{Pose, ROTATION_TOLERANCE};
pub use rotation::{rotation_angle, rotation_exp, rotation_log};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("frame mismatch: cannot compose a transform from {left_from} with one mapping into {right_to}")]
    FrameMismatch { left_from: FrameId, right_to: FrameId },
    #[error("invalid rotation: deviates from SO(3) by {deviation:e}")]
    InvalidRotation { deviation: f64 },
    #[error("invalid transform: {0}")]
    InvalidTransform(String),
    #[error("point is behind the camera (z = {z})")]
    BehindCamera { z: f64 },
    #[error("point is expressed in {0}, not in a camera frame")]
    NotInCameraFrame(FrameId),
    #[error("depth must be positive and finite, got {0}")]
    InvalidDepth(f64),
    #[error("distortion inversion did not converge after {iterations} iterations (residual {residual:e})")]
    NonConvergence { residual: f64, iterations: usize },
    #[error("invalid camera: {0}")]
    InvalidCamera(String),
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
}

/// Sub-pixel image coordinates. May lie outside the image.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ImagePoint {
    pub u: f64,
    pub v: f64,
}

impl ImagePoint {
    pub const fn new(u: f64, v: f64) -> Self {
        ImagePoint { u, v }
    }

    pub fn distance(&self, other: &ImagePoint) -> f64 {
        (self.u - other.u).hypot(self.v - other.v)
    }

    pub fn distance_squared(&self, other: &ImagePoint) -> f64 {
        let (du, dv) = (self.u - other.u, self.v - other.v);
        du * du + dv * dv
    }

    pub fn is_finite(&self) -> bool {
        self.u.is_finite() && self.v.is_finite()
    }
}

/// A 3D point tagged with the frame its coordinates are expressed in.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScenePoint {
    pub position: Vector3<f64>,
    pub frame: FrameId,
}

impl ScenePoint {
    pub fn new(position: Vector3<f64>, frame: FrameId) -> Self {
        ScenePoint { position, frame }
    }
}
