//! Tracking every reference point of a sequence under one pose source.

use std::collections::BTreeMap;
use std::sync::Arc;

use nalgebra::Vector3;
use rayon::prelude::*;
use thiserror::Error;

use crate::depth::{DepthImage, DepthMode, DepthProvider};
use crate::geometry::{CameraModel, ImagePoint};
use crate::ingestion::{AnnotationSet, PoseTrajectory};
use crate::tracking::{run_track_with_respawn, Initializer, KeypointTrack, RigConfig, Tracker, TrackingError};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("depth mode {0} needs {1}")]
    MissingDepthInput(DepthMode, &'static str),
    #[error("the annotation initializer needs an annotation set")]
    MissingAnnotations,
    #[error("track {track}: {source}")]
    Track { track: u64, source: TrackingError },
    #[error(transparent)]
    Tracking(#[from] TrackingError),
}

/// Optional scene data for the depth providers that need it.
#[derive(Debug, Clone, Default)]
pub struct DepthInputs {
    pub cloud: Option<Arc<Vec<Vector3<f64>>>>,
    pub sensor: Option<Arc<BTreeMap<usize, DepthImage>>>,
}

/// How reference pixels are chosen for each track.
#[derive(Debug, Clone, PartialEq)]
pub enum ReferencePolicy {
    /// One track per pixel, re-anchored at the same pixel on respawn.
    Fixed(Vec<ImagePoint>),
    /// `count` tracks with seeded random references.
    SeededRandom { seed: u64, count: usize },
    /// One track per annotated track, references taken from annotations.
    FromAnnotations,
}

/// Build the provider for `mode`, anchoring floor and point-cloud depth at
/// the first camera pose of `poses`.
pub fn depth_provider(
    mode: DepthMode,
    inputs: &DepthInputs,
    poses: &PoseTrajectory,
    rig: &RigConfig,
) -> Result<DepthProvider, PipelineError> {
    let first = poses.to_absolute().entries()[0];
    let initial_camera_to_fixed = first
        .pose
        .compose(&rig.body_from_camera(first.timestamp)?)
        .map_err(TrackingError::from)?;
    Ok(match mode {
        DepthMode::Floor => DepthProvider::FloorPlane { initial_camera_to_fixed },
        DepthMode::ZMap => DepthProvider::DepthMap {
            cloud: inputs.cloud.clone().ok_or(PipelineError::MissingDepthInput(mode, "a point cloud"))?,
            initial_camera_to_fixed,
        },
        DepthMode::Sensor => DepthProvider::Sensor {
            frames: inputs.sensor.clone().ok_or(PipelineError::MissingDepthInput(mode, "depth images"))?,
        },
    })
}

/// Track every reference point, in parallel, through `poses` (one entry
/// per frame). Tracks come back ordered by id.
pub fn track_all(
    poses: &PoseTrajectory,
    rig: &RigConfig,
    camera: &CameraModel,
    mode: DepthMode,
    inputs: &DepthInputs,
    policy: &ReferencePolicy,
    annotations: Option<&AnnotationSet>,
) -> Result<Vec<KeypointTrack>, PipelineError> {
    let depth = depth_provider(mode, inputs, poses, rig)?;
    let tracker = Tracker::new(poses, rig, camera, &depth)?;
    let jobs: Vec<(u64, Initializer)> = match policy {
        ReferencePolicy::Fixed(pixels) => pixels.iter().enumerate().map(|(i, p)| (i as u64, Initializer::Fixed(*p))).collect(),
        ReferencePolicy::SeededRandom { seed, count } => {
            (0..*count as u64).map(|i| (i, Initializer::SeededRandom { seed: *seed })).collect()
        }
        ReferencePolicy::FromAnnotations => annotations
            .ok_or(PipelineError::MissingAnnotations)?
            .tracks
            .iter()
            .map(|t| (t.id, Initializer::FromAnnotations))
            .collect(),
    };
    let mut tracks = jobs
        .par_iter()
        .map(|(id, init)| {
            let ann = annotations.and_then(|a| a.track(*id));
            run_track_with_respawn(*id, init, &tracker, ann).map_err(|source| PipelineError::Track { track: *id, source })
        })
        .collect::<Result<Vec<_>, _>>()?;
    tracks.sort_by_key(|t| t.track_id);
    Ok(tracks)
}
