use image::RgbImage;
use vice_core::depth::DepthMode;
use vice_core::tracking::KeypointTrack;

use super::track::{read_tracks, track_dir};
use crate::config::Settings;
use crate::dataset::{prepare, PreparedSequence};
use crate::error::CliError;
use crate::render::{base_image, draw_layers, Layer, Palette};

pub const RENDER_DIR: &str = "render";

/// Overlay of frame `frame` (retained-frame numbering): annotations, then
/// each source's tracks.
pub fn render_frame(
    prep: &PreparedSequence,
    sources: &[(String, Option<Vec<KeypointTrack>>)],
    palette: Palette,
    frame: usize,
) -> RgbImage {
    let cam = &prep.euroc.camera;
    let record = &prep.frames.frames()[frame];
    let mut img = base_image(record.image.as_deref(), cam.width, cam.height);
    let mut layers = Vec::new();
    if let Some(a) = &prep.annotations {
        let points = a.tracks.iter().filter_map(|t| t.point_at(frame)).map(|p| (p.pixel(), p.respawn)).collect();
        layers.push(Layer { color: palette.annotation(), points });
    }
    let mut rank = 0;
    for (name, tracks) in sources {
        let color = palette.source(name, rank);
        if name != "mocap" && name != "onboard" {
            rank += 1;
        }
        let Some(tracks) = tracks else { continue };
        let points = tracks
            .iter()
            .filter_map(|t| {
                let respawn = t.segments.iter().any(|s| s.start_frame == frame);
                t.predicted_at(frame).map(|p| (p, respawn))
            })
            .collect();
        layers.push(Layer { color, points });
    }
    draw_layers(&mut img, &layers);
    img
}

/// Run `render` for frames `range` (all when `None`) using the tracks of
/// the first configured depth mode.
pub fn run(settings: &Settings, range: Option<(usize, usize)>) -> Result<Vec<String>, CliError> {
    let palette = Palette::parse(&settings.palette)
        .ok_or_else(|| CliError::config(format!("unknown palette {:?} (default, colorblind)", settings.palette)))?;
    let prep = prepare(settings)?;
    let mode: DepthMode = settings.depth_modes[0];
    let mut sources = Vec::new();
    for name in prep.sources.keys() {
        sources.push((name.clone(), read_tracks(&track_dir(&settings.tracks_dir, name, mode))?));
    }
    let (start, end) = range.unwrap_or((0, prep.frames.len()));
    let end = end.min(prep.frames.len());
    let dir = settings.output.join(RENDER_DIR);
    std::fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
    use rayon::prelude::*;
    (start..end).into_par_iter().try_for_each(|f| {
        let path = dir.join(format!("frame_{f:05}.png"));
        render_frame(&prep, &sources, palette, f).save(&path).map_err(|e| CliError::io(&path, e))
    })?;
    Ok(vec![format!("rendered {} frames to {}", end.saturating_sub(start), dir.display())])
}
