//! Loading pose streams, calibrations, frames and annotations; timestamp
//! alignment; synthetic scenes with exact ground truth.

mod annotations;
mod euroc;
mod frames;
mod resample;
pub mod synth;
mod trajectory;

use std::path::PathBuf;

use thiserror::Error;

use crate::geometry::{GeometryError, Timestamp};

pub use annotations::{
    canonical_json, AnnotatedPoint, AnnotationSet, AnnotationTrack, ImageBounds,
};
pub use euroc::{
    load_euroc_sequence, load_euroc_sequence_with, read_pose_csv, read_sensor_yaml, write_pose_csv, EurocSequence,
    SensorCalibration, CAMERA_INDEX, ESTIMATES_DIR, GROUNDTRUTH_CSV, IMAGE_DIR, POINT_CLOUD, SENSOR_YAML,
};
pub use frames::{FrameRecord, FrameSequence};
pub use resample::{align_and_resample, interpolate_absolute, pose_at, slerp, AlignedSequence, ResampleParams};
pub use trajectory::{Convention, PoseSource, PoseTrajectory, StampedPose};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TrajectoryError {
    #[error("trajectory is empty")]
    Empty,
    #[error("timestamps not strictly increasing at entry {index} ({previous} then {current})")]
    NonMonotonic { index: usize, previous: Timestamp, current: Timestamp },
    #[error("entry {index} maps {found}, expected {expected}")]
    FrameLabels { index: usize, expected: String, found: String },
    #[error("entry {index}: {source}")]
    Pose { index: usize, source: GeometryError },
    #[error("index {index} out of range for trajectory of length {len}")]
    OutOfRange { index: usize, len: usize },
}

#[derive(Debug, Error)]
pub enum AnnotationError {
    #[error("schema violation at {pointer}: {message}")]
    Schema { pointer: String, message: String },
    #[error("track {track}, frame {frame}: ({u}, {v}) lies outside the {width}x{height} image")]
    OutOfBounds { track: u64, frame: usize, u: f64, v: f64, width: u32, height: u32 },
    #[error("track {track} has more than one annotation at frame {frame}")]
    Duplicate { track: u64, frame: usize },
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("missing file {0}")]
    MissingFile(PathBuf),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}:{line}: {message}")]
    MalformedRow { path: PathBuf, line: usize, message: String },
    #[error("{path}:{line}: timestamp does not increase")]
    NonMonotonic { path: PathBuf, line: usize },
    #[error("{path}: {message}")]
    Calibration { path: PathBuf, message: String },
    #[error("pose requested at {timestamp} but the stream covers only {start}..{end}")]
    ExtrapolationRefused { timestamp: Timestamp, start: Timestamp, end: Timestamp },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Trajectory(#[from] TrajectoryError),
    #[error(transparent)]
    Annotation(#[from] AnnotationError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}
