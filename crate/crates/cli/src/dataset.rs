//! Loading a sequence directory into aligned, per-source pose streams.
//!
//! Annotation frame numbers index the camera index as stored on disk.
//! After resampling they are renumbered to the retained frames, which is
//! the indexing used by tracks and reports.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use vice_core::depth::io::{read_depth_image, read_ply};
use vice_core::depth::DepthMode;
use vice_core::ingestion::{
    align_and_resample, load_euroc_sequence_with, AnnotatedPoint, AnnotationSet, AnnotationTrack, EurocSequence,
    FrameSequence, ImageBounds, PoseTrajectory, ResampleParams,
};
use vice_core::pipeline::DepthInputs;

use crate::config::Settings;
use crate::error::{CliError, ErrorCode};

/// Directory of per-frame depth images named `<timestamp>.depth`.
pub const DEPTH_DIR: &str = "depth0";
pub const GROUNDTRUTH_LABEL: &str = "mocap";

pub struct PreparedSequence {
    pub euroc: EurocSequence,
    pub frames: FrameSequence,
    /// Index of each retained frame in the on-disk camera index.
    pub frame_indices: Vec<usize>,
    /// Renumbered to retained frames; `None` when the file is absent.
    pub annotations: Option<AnnotationSet>,
    /// Aligned poses (one per retained frame) by source name.
    pub sources: BTreeMap<String, PoseTrajectory>,
}

pub fn image_bounds(seq: &EurocSequence) -> ImageBounds {
    ImageBounds { width: seq.camera.width, height: seq.camera.height }
}

pub fn load_sequence(settings: &Settings) -> Result<EurocSequence, CliError> {
    if !settings.dataset.is_dir() {
        return Err(CliError::missing(format!("dataset directory {} not found", settings.dataset.display())));
    }
    Ok(load_euroc_sequence_with(&settings.dataset, settings.estimate_convention)?)
}

pub fn read_annotations(path: &Path, bounds: ImageBounds) -> Result<Option<AnnotationSet>, CliError> {
    if !path.is_file() {
        return Ok(None);
    }
    AnnotationSet::read(path, Some(bounds)).map(Some).map_err(|e| CliError::new(ErrorCode::Ingest, e))
}

/// Keep annotated points on retained frames and renumber them.
pub fn renumber_annotations(set: &AnnotationSet, frame_indices: &[usize]) -> AnnotationSet {
    let position: BTreeMap<usize, usize> = frame_indices.iter().enumerate().map(|(new, &old)| (old, new)).collect();
    let tracks = set
        .tracks
        .iter()
        .map(|t| AnnotationTrack {
            id: t.id,
            points: t
                .points
                .iter()
                .filter_map(|p| position.get(&p.frame).map(|&frame| AnnotatedPoint { frame, ..p.clone() }))
                .collect(),
            extra: t.extra.clone(),
        })
        .collect();
    AnnotationSet { tracks, ..set.clone() }
}

/// Names of the sources to use: the configured list, or every stream.
pub fn selected_sources(seq: &EurocSequence, settings: &Settings) -> Result<Vec<String>, CliError> {
    let available: Vec<String> = seq.trajectories().into_iter().map(|(n, _)| n).collect();
    if settings.sources.is_empty() {
        return Ok(available);
    }
    for s in &settings.sources {
        if !available.contains(s) {
            return Err(CliError::missing(format!("pose source {s:?} not found (available: {})", available.join(", "))));
        }
    }
    Ok(settings.sources.clone())
}

pub fn trajectory<'a>(seq: &'a EurocSequence, name: &str) -> Option<&'a PoseTrajectory> {
    if name == GROUNDTRUTH_LABEL {
        seq.groundtruth.as_ref()
    } else {
        seq.estimates.get(name)
    }
}

pub fn resample_params(settings: &Settings, time_offset: f64) -> ResampleParams {
    ResampleParams { target_fps: settings.fps, clip_seconds: settings.clip_seconds, time_offset }
}

/// Align one source with an explicit time offset.
pub fn align_source(
    seq: &EurocSequence,
    settings: &Settings,
    name: &str,
    time_offset: f64,
) -> Result<(FrameSequence, Vec<usize>, PoseTrajectory), CliError> {
    let traj = trajectory(seq, name).ok_or_else(|| CliError::missing(format!("pose source {name:?} not found")))?;
    let aligned = align_and_resample(&seq.frames, traj, &resample_params(settings, time_offset))
        .map_err(|e| CliError::new(ErrorCode::Ingest, format!("source {name}: {e}")))?;
    Ok((aligned.frames, aligned.frame_indices, aligned.poses))
}

pub fn prepare(settings: &Settings) -> Result<PreparedSequence, CliError> {
    let euroc = load_sequence(settings)?;
    prepare_loaded(euroc, settings)
}

pub fn prepare_loaded(euroc: EurocSequence, settings: &Settings) -> Result<PreparedSequence, CliError> {
    let names = selected_sources(&euroc, settings)?;
    let mut sources = BTreeMap::new();
    let mut frames = None;
    for name in &names {
        // The configured offset models a desynchronised estimate; ground
        // truth is always read at frame time.
        let offset = if name == GROUNDTRUTH_LABEL { 0.0 } else { settings.time_offset };
        let (f, idx, poses) = align_source(&euroc, settings, name, offset)?;
        frames.get_or_insert((f, idx));
        sources.insert(name.clone(), poses);
    }
    let (frames, frame_indices) = match frames {
        Some(f) => f,
        None => return Err(CliError::missing("no pose source selected")),
    };
    let annotations = read_annotations(&settings.annotations, image_bounds(&euroc))?
        .map(|a| renumber_annotations(&a, &frame_indices));
    Ok(PreparedSequence { euroc, frames, frame_indices, annotations, sources })
}

/// Ground truth aligned to the retained frames.
pub fn aligned_groundtruth(prep: &PreparedSequence, settings: &Settings) -> Result<Option<PoseTrajectory>, CliError> {
    if let Some(p) = prep.sources.get(GROUNDTRUTH_LABEL) {
        return Ok(Some(p.clone()));
    }
    if prep.euroc.groundtruth.is_none() {
        return Ok(None);
    }
    Ok(Some(align_source(&prep.euroc, settings, GROUNDTRUTH_LABEL, 0.0)?.2))
}

/// Point cloud and depth images needed by `modes`.
pub fn depth_inputs(prep: &PreparedSequence, modes: &[DepthMode]) -> Result<DepthInputs, CliError> {
    let mut inputs = DepthInputs::default();
    if modes.contains(&DepthMode::ZMap) {
        let path = prep
            .euroc
            .point_cloud
            .clone()
            .ok_or_else(|| CliError::missing("depth mode zmap needs pointcloud0/data.ply"))?;
        let cloud = read_ply(&path).map_err(|e| CliError::new(ErrorCode::Ingest, e))?;
        inputs.cloud = Some(Arc::new(cloud));
    }
    if modes.contains(&DepthMode::Sensor) {
        let dir = prep.euroc.root.join(DEPTH_DIR);
        if !dir.is_dir() {
            return Err(CliError::missing(format!("depth mode sensor needs {}", dir.display())));
        }
        let mut images = BTreeMap::new();
        for (i, f) in prep.frames.frames().iter().enumerate() {
            let path: PathBuf = dir.join(format!("{}.depth", f.timestamp.0));
            if path.is_file() {
                images.insert(i, read_depth_image(&path).map_err(|e| CliError::new(ErrorCode::Ingest, e))?);
            }
        }
        inputs.sensor = Some(Arc::new(images));
    }
    Ok(inputs)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renumbering_drops_skipped_frames() {
        let mut set = AnnotationSet::default();
        for f in 0..6 {
            set.track_mut(3).upsert(AnnotatedPoint::new(f, f as f64, 1.0, f == 4));
        }
        let out = renumber_annotations(&set, &[0, 2, 4]);
        let frames: Vec<(usize, f64, bool)> = out.tracks[0].points.iter().map(|p| (p.frame, p.u, p.respawn)).collect();
        assert_eq!(frames, vec![(0, 0.0, false), (1, 2.0, false), (2, 4.0, true)]);
    }
}
