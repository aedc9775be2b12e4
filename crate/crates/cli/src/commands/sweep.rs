use rayon::prelude::*;
use vice_core::depth::DepthMode;
use vice_core::metrics::per_point_rmse2d;
use vice_core::pipeline::track_all;

use super::track::reference_policy;
use crate::config::Settings;
use crate::dataset::{align_source, depth_inputs, load_sequence, read_annotations, image_bounds, renumber_annotations, PreparedSequence, GROUNDTRUTH_LABEL};
use crate::error::{CliError, ErrorCode};

pub const CSV_HEADER: &str = "time_offset_s,rmse2d_px";

/// Offsets `a, a + step, ...` up to and including `b`, from `a:b:step`.
pub fn parse_range(text: &str) -> Result<Vec<f64>, CliError> {
    let bad = || CliError::config(format!("range {text:?} must be start:end:step with step > 0 and end >= start"));
    let parts: Vec<f64> = text.split(':').map(|p| p.trim().parse::<f64>()).collect::<Result<_, _>>().map_err(|_| bad())?;
    let [a, b, step] = parts[..] else { return Err(bad()) };
    if !(step > 0.0) || !(b >= a) || !a.is_finite() || !b.is_finite() {
        return Err(bad());
    }
    let n = ((b - a) / step + 1e-9).floor() as usize + 1;
    if n > 100_000 {
        return Err(CliError::config(format!("range {text:?} has {n} steps")));
    }
    // Snap to whole nanoseconds so offsets print as written.
    Ok((0..n).map(|i| ((a + i as f64 * step) * 1e9).round() / 1e9).collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub offset: f64,
    /// Mean per-point RMSE₂D; `None` when the offset could not be tracked.
    pub rmse2d: Option<f64>,
}

pub fn best(rows: &[SweepRow]) -> Option<&SweepRow> {
    rows.iter().filter(|r| r.rmse2d.is_some()).min_by(|a, b| a.rmse2d.partial_cmp(&b.rmse2d).unwrap())
}

pub fn to_csv(rows: &[SweepRow]) -> String {
    let mut out = format!("{CSV_HEADER}\n");
    for r in rows {
        let e = r.rmse2d.map(|e| e.to_string()).unwrap_or_else(|| "N.A".into());
        out.push_str(&format!("{},{e}\n", r.offset));
    }
    out
}

/// The source swept by default: the first configured or available
/// estimate other than ground truth.
pub fn default_source(prep_sources: &[String]) -> Option<String> {
    prep_sources.iter().find(|s| s.as_str() != GROUNDTRUTH_LABEL).or(prep_sources.first()).cloned()
}

/// Track `source` with each time offset and score it against the annotations.
pub fn sweep(settings: &Settings, source: Option<&str>, mode: DepthMode, offsets: &[f64]) -> Result<Vec<SweepRow>, CliError> {
    let euroc = load_sequence(settings)?;
    let names = crate::dataset::selected_sources(&euroc, settings)?;
    let source = match source {
        Some(s) => s.to_string(),
        None => default_source(&names).ok_or_else(|| CliError::missing("no pose source to sweep"))?,
    };
    let (frames, frame_indices, poses) = align_source(&euroc, settings, &source, 0.0)?;
    let annotations = read_annotations(&settings.annotations, image_bounds(&euroc))?
        .map(|a| renumber_annotations(&a, &frame_indices))
        .ok_or_else(|| CliError::missing(format!("annotations {} not found", settings.annotations.display())))?;
    let mut sources = std::collections::BTreeMap::new();
    sources.insert(source.clone(), poses);
    let prep = PreparedSequence { euroc, frames, frame_indices, annotations: Some(annotations), sources };
    let inputs = depth_inputs(&prep, &[mode])?;
    let policy = reference_policy(settings);
    let rows = offsets
        .par_iter()
        .map(|&offset| {
            let rmse2d = align_source(&prep.euroc, settings, &source, offset).ok().and_then(|(_, _, poses)| {
                let ann = prep.annotations.as_ref();
                let tracks = track_all(&poses, &prep.euroc.rig, &prep.euroc.camera, mode, &inputs, &policy, ann).ok()?;
                let scores = per_point_rmse2d(ann?, &tracks).ok()?;
                (!scores.is_empty()).then(|| scores.iter().map(|(_, e)| e).sum::<f64>() / scores.len() as f64)
            });
            SweepRow { offset, rmse2d }
        })
        .collect::<Vec<_>>();
    if best(&rows).is_none() {
        return Err(CliError::new(ErrorCode::Track, format!("no offset in the range could be tracked for {source}")));
    }
    Ok(rows)
}
