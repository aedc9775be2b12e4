use std::path::Path;

use vice_core::ingestion::AnnotationSet;
use vice_core::metrics::{delta_report, error_timeseries, MetricReport, ReportContext, SourceResult};

use super::track::{read_frame_map, read_tracks, track_dir};
use crate::config::Settings;
use crate::dataset::{aligned_groundtruth, prepare, PreparedSequence, GROUNDTRUTH_LABEL};
use crate::error::{CliError, ErrorCode};

pub const REPORT_FILE: &str = "report.csv";

pub struct Evaluation {
    pub report: MetricReport,
    /// `(file name, CSV)` per source and depth mode with ground truth.
    pub timeseries: Vec<(String, String)>,
}

fn describe(indices: &[usize]) -> String {
    match (indices.first(), indices.last()) {
        (Some(a), Some(b)) => format!("camera frames {a}..={b}"),
        _ => "empty".into(),
    }
}

fn to_degrees(report: &mut MetricReport) {
    for row in &mut report.rows {
        if row.metric == "aoe" || row.metric == "roe" {
            row.metric.push_str("_deg");
            row.mean = row.mean.map(f64::to_degrees);
            row.std = row.std.map(f64::to_degrees);
        }
    }
}

pub fn evaluate(prep: &PreparedSequence, settings: &Settings, annotations: &AnnotationSet) -> Result<Evaluation, CliError> {
    let gt = aligned_groundtruth(prep, settings)?;
    let mut results = Vec::new();
    for (source, poses) in &prep.sources {
        for &mode in &settings.depth_modes {
            let dir = track_dir(&settings.tracks_dir, source, mode);
            if let Some(map) = read_frame_map(&dir)? {
                if map != prep.frame_indices {
                    return Err(CliError::new(
                        ErrorCode::Evaluate,
                        format!(
                            "frame ranges differ: tracks in {} cover {} frames ({}), the aligned sequence has {} frames ({})",
                            dir.display(),
                            map.len(),
                            describe(&map),
                            prep.frame_indices.len(),
                            describe(&prep.frame_indices)
                        ),
                    ));
                }
            }
            let tracks = read_tracks(&dir)?;
            results.push(SourceResult {
                source: source.clone(),
                depth_mode: mode.as_str().to_string(),
                tracks,
                poses: Some(poses.clone()),
            });
        }
    }
    let ctx = ReportContext { dataset: settings.dataset_name.clone(), sequence: settings.sequence.clone() };
    let mut report = delta_report(&ctx, annotations, gt.as_ref(), GROUNDTRUTH_LABEL, &results, settings.roe_stride);
    if settings.degrees {
        to_degrees(&mut report);
    }
    let mut timeseries = Vec::new();
    if let Some(gt) = &gt {
        for r in &results {
            if let (Some(tracks), Some(poses)) = (&r.tracks, &r.poses) {
                let series = error_timeseries(annotations, tracks, gt, poses)
                    .map_err(|e| CliError::new(ErrorCode::Evaluate, format!("{}/{}: {e}", r.source, r.depth_mode)))?;
                timeseries.push((format!("timeseries_{}_{}.csv", r.source, r.depth_mode), series.to_csv()));
            }
        }
    }
    Ok(Evaluation { report, timeseries })
}

fn write(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))
}

/// Run `evaluate`: writes `report.csv` and the time series into the output
/// directory and returns the console table.
pub fn run(settings: &Settings) -> Result<String, CliError> {
    let prep = prepare(settings)?;
    let annotations = prep
        .annotations
        .clone()
        .ok_or_else(|| CliError::missing(format!("annotations {} not found", settings.annotations.display())))?;
    let eval = evaluate(&prep, settings, &annotations)?;
    std::fs::create_dir_all(&settings.output).map_err(|e| CliError::io(&settings.output, e))?;
    write(&settings.output.join(REPORT_FILE), &eval.report.to_csv())?;
    for (name, csv) in &eval.timeseries {
        write(&settings.output.join(name), csv)?;
    }
    Ok(eval.report.to_table())
}
