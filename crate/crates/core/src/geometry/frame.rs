use std::fmt;

use serde::{Deserialize, Serialize};

/// Integer nanoseconds since an arbitrary epoch, the EuRoC convention.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Timestamp(pub i64);

impl Timestamp {
    pub const NANOS_PER_SEC: i64 = 1_000_000_000;

    pub fn from_secs_f64(secs: f64) -> Self {
        Timestamp((secs * Self::NANOS_PER_SEC as f64).round() as i64)
    }

    pub fn as_secs_f64(self) -> f64 {
        self.0 as f64 / Self::NANOS_PER_SEC as f64
    }

    pub fn nanos(self) -> i64 {
        self.0
    }

    pub fn offset_by_secs(self, secs: f64) -> Self {
        Timestamp(self.0 + (secs * Self::NANOS_PER_SEC as f64).round() as i64)
    }
}

impl fmt::Display for Timestamp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}ns", self.0)
    }
}

/// Symbolic coordinate frame label.
///
/// Body and camera frames move with the agent, so they are indexed by the
/// time instant they refer to. The fixed frame is global and carries no
/// timestamp. `Image` is the 2D pixel plane of the camera.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FrameId {
    Body(Timestamp),
    Fixed,
    Camera(Timestamp),
    Image,
}

impl FrameId {
    pub fn timestamp(&self) -> Option<Timestamp> {
        match self {
            FrameId::Body(t) | FrameId::Camera(t) => Some(*t),
            FrameId::Fixed | FrameId::Image => None,
        }
    }

    pub fn is_camera(&self) -> bool {
        matches!(self, FrameId::Camera(_))
    }
}

impl fmt::Display for FrameId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FrameId::Body(t) => write!(f, "Body({})", t.0),
            FrameId::Fixed => f.write_str("Fixed"),
            FrameId::Camera(t) => write!(f, "Camera({})", t.0),
            FrameId::Image => f.write_str("Image"),
        }
    }
}
