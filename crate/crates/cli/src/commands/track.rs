use std::path::{Path, PathBuf};

use vice_core::depth::DepthMode;
use vice_core::pipeline::{track_all, DepthInputs, ReferencePolicy};
use vice_core::tracking::KeypointTrack;

use crate::config::{InitializerSetting, Settings};
use crate::dataset::{depth_inputs, prepare, PreparedSequence};
use crate::error::{CliError, ErrorCode};

pub fn reference_policy(settings: &Settings) -> ReferencePolicy {
    match &settings.initializer {
        InitializerSetting::Annotations => ReferencePolicy::FromAnnotations,
        InitializerSetting::Random { seed, points } => ReferencePolicy::SeededRandom { seed: *seed, count: *points },
        InitializerSetting::Fixed(p) => ReferencePolicy::Fixed(p.clone()),
    }
}

pub fn track_dir(root: &Path, source: &str, mode: DepthMode) -> PathBuf {
    root.join(source).join(mode.as_str())
}

/// Track every reference point under one source and depth mode.
pub fn track_source(
    prep: &PreparedSequence,
    settings: &Settings,
    inputs: &DepthInputs,
    source: &str,
    mode: DepthMode,
) -> Result<Vec<KeypointTrack>, CliError> {
    let poses = &prep.sources[source];
    let policy = reference_policy(settings);
    if policy == ReferencePolicy::FromAnnotations && prep.annotations.is_none() {
        return Err(CliError::missing(format!(
            "initializer \"annotations\" needs {}",
            settings.annotations.display()
        )));
    }
    track_all(poses, &prep.euroc.rig, &prep.euroc.camera, mode, inputs, &policy, prep.annotations.as_ref())
        .map_err(|e| CliError::new(ErrorCode::Track, format!("{source}/{mode}: {e}", mode = mode.as_str())))
}

/// Lists, for each tracked frame, its index in the on-disk camera index.
pub const FRAME_MAP_FILE: &str = "frames.json";

pub fn write_tracks(dir: &Path, tracks: &[KeypointTrack], frame_indices: &[usize]) -> Result<(), CliError> {
    if dir.exists() {
        std::fs::remove_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let map = dir.join(FRAME_MAP_FILE);
    let text = serde_json::to_string(&serde_json::json!({ "frame_indices": frame_indices })).expect("serializable");
    std::fs::write(&map, text + "\n").map_err(|e| CliError::io(&map, e))?;
    for t in tracks {
        let path = dir.join(format!("track_{}.json", t.track_id));
        t.write(&path).map_err(|e| CliError::io(&path, e))?;
    }
    Ok(())
}

/// The frame map stored next to the tracks, when present.
pub fn read_frame_map(dir: &Path) -> Result<Option<Vec<usize>>, CliError> {
    let path = dir.join(FRAME_MAP_FILE);
    if !path.is_file() {
        return Ok(None);
    }
    let text = std::fs::read_to_string(&path).map_err(|e| CliError::io(&path, e))?;
    let value: serde_json::Value = serde_json::from_str(&text).map_err(|e| CliError::new(ErrorCode::Ingest, format!("{}: {e}", path.display())))?;
    serde_json::from_value(value["frame_indices"].clone())
        .map(Some)
        .map_err(|e| CliError::new(ErrorCode::Ingest, format!("{}: {e}", path.display())))
}

/// Tracks stored under `dir`, ordered by id; `None` when the directory
/// does not exist.
pub fn read_tracks(dir: &Path) -> Result<Option<Vec<KeypointTrack>>, CliError> {
    if !dir.is_dir() {
        return Ok(None);
    }
    let mut tracks = Vec::new();
    for entry in std::fs::read_dir(dir).map_err(|e| CliError::io(dir, e))? {
        let path = entry.map_err(|e| CliError::io(dir, e))?.path();
        let is_track = path.extension().is_some_and(|e| e == "json")
            && path.file_name().is_some_and(|n| n.to_string_lossy().starts_with("track_"));
        if is_track {
            tracks.push(KeypointTrack::read(&path).map_err(|e| CliError::new(ErrorCode::Ingest, format!("{}: {e}", path.display())))?);
        }
    }
    tracks.sort_by_key(|t| t.track_id);
    Ok(Some(tracks))
}

/// Run `track`: writes `<tracks_dir>/<source>/<mode>/track_<id>.json` and
/// returns one summary line per source and mode. A source that fails is
/// reported on stderr and its directory removed; the command fails only
/// when nothing could be tracked.
pub fn run(settings: &Settings) -> Result<Vec<String>, CliError> {
    let prep = prepare(settings)?;
    let inputs = depth_inputs(&prep, &settings.depth_modes)?;
    let mut lines = Vec::new();
    let mut last_err = None;
    for source in prep.sources.keys() {
        for &mode in &settings.depth_modes {
            let dir = track_dir(&settings.tracks_dir, source, mode);
            match track_source(&prep, settings, &inputs, source, mode) {
                Ok(tracks) => {
                    write_tracks(&dir, &tracks, &prep.frame_indices)?;
                    let segments: usize = tracks.iter().map(|t| t.segments.len()).sum();
                    lines.push(format!(
                        "{source}/{}: {} tracks, {segments} segments over {} frames -> {}",
                        mode.as_str(),
                        tracks.len(),
                        prep.frames.len(),
                        dir.display()
                    ));
                }
                Err(e) if e.code == ErrorCode::Track => {
                    eprintln!("{e}");
                    if dir.exists() {
                        std::fs::remove_dir_all(&dir).map_err(|err| CliError::io(&dir, err))?;
                    }
                    last_err = Some(e);
                }
                Err(e) => return Err(e),
            }
        }
    }
    match (lines.is_empty(), last_err) {
        (true, Some(e)) => Err(e),
        _ => Ok(lines),
    }
}
