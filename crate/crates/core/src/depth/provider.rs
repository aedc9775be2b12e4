use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use nalgebra::Vector3;

use crate::geometry::{CameraModel, ImagePoint, Pose, ScenePoint};

use super::{floor_depth, project_pointcloud, DepthError, DepthImage, DepthInterpolant, FloorPlaneConfig};

/// Which provider a tracking run uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DepthMode {
    Floor,
    ZMap,
    Sensor,
}

impl DepthMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            DepthMode::Floor => "floor",
            DepthMode::ZMap => "zmap",
            DepthMode::Sensor => "sensor",
        }
    }
}

impl fmt::Display for DepthMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DepthMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "floor" => Ok(DepthMode::Floor),
            "zmap" => Ok(DepthMode::ZMap),
            "sensor" => Ok(DepthMode::Sensor),
            other => Err(format!("unknown depth mode '{other}' (expected floor, zmap or sensor)")),
        }
    }
}

/// Pixels inside the image but outside the hull of the rendered depth
/// samples (typically along the image border) take the depth of the
/// nearest sample when it lies within this many pixels.
pub const HULL_FALLBACK_PX: f64 = 20.0;

/// Where the depth is requested: the frame index of the segment start and
/// the camera motion since the first frame of the sequence, mapping
/// `Camera(t_k)` coordinates into `Camera(t_0)`.
#[derive(Debug, Clone, Copy)]
pub struct DepthQuery {
    pub frame_index: usize,
    pub camera_motion: Pose,
}

/// Source of the depth of a reference pixel.
#[derive(Debug, Clone)]
pub enum DepthProvider {
    /// Ray–floor intersection. Holds `T^{F,C}` at the first frame.
    FloorPlane { initial_camera_to_fixed: Pose },
    /// Depth map rendered from a fixed-frame point cloud.
    DepthMap { cloud: Arc<Vec<Vector3<f64>>>, initial_camera_to_fixed: Pose },
    /// Measured depth images, keyed by frame index.
    Sensor { frames: Arc<BTreeMap<usize, DepthImage>> },
}

impl DepthProvider {
    pub fn mode(&self) -> DepthMode {
        match self {
            DepthProvider::FloorPlane { .. } => DepthMode::Floor,
            DepthProvider::DepthMap { .. } => DepthMode::ZMap,
            DepthProvider::Sensor { .. } => DepthMode::Sensor,
        }
    }

    fn camera_to_fixed(initial: &Pose, query: &DepthQuery) -> Result<Pose, DepthError> {
        Ok(initial.compose(&query.camera_motion)?)
    }

    /// Scene point behind `pixel`, in the camera frame of the queried frame.
    pub fn scene_point(&self, cam: &CameraModel, pixel: &ImagePoint, query: &DepthQuery) -> Result<ScenePoint, DepthError> {
        let frame = query.camera_motion.from_frame();
        match self {
            DepthProvider::FloorPlane { initial_camera_to_fixed } => {
                let cfg = FloorPlaneConfig::new(Self::camera_to_fixed(initial_camera_to_fixed, query)?)?;
                floor_depth(&cfg, cam, pixel)
            }
            DepthProvider::DepthMap { cloud, initial_camera_to_fixed } => {
                let camera_to_fixed = Self::camera_to_fixed(initial_camera_to_fixed, query)?;
                let samples = project_pointcloud(cloud, &camera_to_fixed.inverse(), cam)?;
                let interpolant = DepthInterpolant::from_points(samples, cam.width, cam.height)?;
                let depth = interpolant
                    .depth_at(pixel)
                    .or_else(|| {
                        interpolant
                            .nearest_sample(pixel)
                            .filter(|(d, _)| cam.contains(pixel) && *d <= HULL_FALLBACK_PX)
                            .map(|(_, depth)| depth)
                    })
                    .ok_or(DepthError::NoDepthAt { pixel: *pixel, frame: Some(query.frame_index) })?;
                Ok(cam.unproject(pixel, depth, frame)?)
            }
            DepthProvider::Sensor { frames } => {
                let depth = frames
                    .get(&query.frame_index)
                    .and_then(|img| img.sample_at(pixel))
                    .ok_or(DepthError::NoDepthAt { pixel: *pixel, frame: Some(query.frame_index) })?;
                Ok(cam.unproject(pixel, depth, frame)?)
            }
        }
    }
}
