use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::ingestion::{AnnotationSet, PoseTrajectory};
use crate::tracking::KeypointTrack;

use super::{aoe, rmse2d, rmse3d, roe, subset_aggregate, MetricsError};

/// Labels shared by every row of a report.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReportContext {
    pub dataset: String,
    pub sequence: String,
}

/// Tracks and poses produced from one pose source.
#[derive(Debug, Clone)]
pub struct SourceResult {
    pub source: String,
    pub depth_mode: String,
    /// `None` marks a source that could not be tracked.
    pub tracks: Option<Vec<KeypointTrack>>,
    /// Aligned absolute or relative poses, compared against ground truth.
    pub poses: Option<PoseTrajectory>,
}

/// One CSV row; `None` values print as `N.A`.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricRow {
    pub dataset: String,
    pub sequence: String,
    pub source: String,
    pub depth_mode: String,
    pub metric: String,
    pub subset_size: Option<usize>,
    pub mean: Option<f64>,
    pub std: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct MetricReport {
    pub rows: Vec<MetricRow>,
}

/// RMSE₂D of each annotated track against the source track with the same id.
pub fn per_point_rmse2d(annotations: &AnnotationSet, tracks: &[KeypointTrack]) -> Result<Vec<(u64, f64)>, MetricsError> {
    let by_id: BTreeMap<u64, &KeypointTrack> = tracks.iter().map(|t| (t.track_id, t)).collect();
    let mut out = Vec::new();
    for a in &annotations.tracks {
        let track = by_id.get(&a.id).ok_or(MetricsError::NoOverlap)?;
        out.push((a.id, rmse2d(&track.by_frame(), &a.by_frame())?));
    }
    Ok(out)
}

/// Pixel discrepancy of each source against the annotations, aggregated
/// over every subset size, and the pose-space discrepancy of each source
/// against `groundtruth`.
pub fn delta_report(
    ctx: &ReportContext,
    annotations: &AnnotationSet,
    groundtruth: Option<&PoseTrajectory>,
    groundtruth_label: &str,
    sources: &[SourceResult],
    roe_stride: usize,
) -> MetricReport {
    let mut rows = Vec::new();
    let row = |source: &str, depth_mode: &str, metric: &str, subset_size: Option<usize>, mean: Option<f64>, std: Option<f64>| MetricRow {
        dataset: ctx.dataset.clone(),
        sequence: ctx.sequence.clone(),
        source: source.to_string(),
        depth_mode: depth_mode.to_string(),
        metric: metric.to_string(),
        subset_size,
        mean,
        std,
    };
    let point_count = annotations.tracks.len().max(1);
    for s in sources {
        let scores = s.tracks.as_deref().and_then(|t| per_point_rmse2d(annotations, t).ok()).filter(|v| !v.is_empty());
        for k in 1..=point_count {
            let stats = scores.as_ref().and_then(|v| {
                let values: Vec<f64> = v.iter().map(|(_, e)| *e).collect();
                subset_aggregate(&values, k).ok()
            });
            rows.push(row(&s.source, &s.depth_mode, "rmse2d", Some(k), stats.map(|m| m.mean), stats.map(|m| m.std)));
        }
    }
    let mut seen = Vec::new();
    for s in sources {
        if s.source == groundtruth_label || seen.contains(&s.source) {
            continue;
        }
        seen.push(s.source.clone());
        let pair = groundtruth.zip(s.poses.as_ref());
        let metrics: [(&str, Option<f64>); 3] = match pair {
            Some((gt, est)) => [
                ("rmse3d", rmse3d(gt, est).ok()),
                ("aoe", aoe(&gt.rotations(), &est.rotations()).ok()),
                ("roe", roe(gt, est, roe_stride).ok()),
            ],
            None => [("rmse3d", None), ("aoe", None), ("roe", None)],
        };
        for (metric, value) in metrics {
            rows.push(row(&s.source, "", metric, None, value, None));
        }
    }
    MetricReport { rows }
}

fn cell(v: Option<f64>, present: bool) -> String {
    match (v, present) {
        (Some(v), _) => format!("{v}"),
        (None, true) => "N.A".into(),
        (None, false) => String::new(),
    }
}

impl MetricReport {
    pub const CSV_HEADER: &'static str = "dataset,sequence,source,depth_mode,metric,subset_size,mean,std";

    pub fn to_csv(&self) -> String {
        let mut out = format!("{}\n", Self::CSV_HEADER);
        for r in &self.rows {
            let has_std = r.subset_size.is_some();
            writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                r.dataset,
                r.sequence,
                r.source,
                r.depth_mode,
                r.metric,
                r.subset_size.map(|k| k.to_string()).unwrap_or_default(),
                cell(r.mean, true),
                if has_std { cell(r.std, r.mean.is_none() || r.std.is_some()) } else { String::new() },
            )
            .unwrap();
        }
        out
    }

    pub fn extend(&mut self, other: MetricReport) {
        self.rows.extend(other.rows);
    }

    /// Plain-text table: one line per (sequence, source, depth mode) with
    /// pose metrics and `mean±std` per subset size.
    pub fn to_table(&self) -> String {
        let max_k = self.rows.iter().filter_map(|r| r.subset_size).max().unwrap_or(0);
        let mut header = vec!["sequence".to_string(), "source".into(), "depth".into(), "RMSE [m]".into(), "AOE".into(), "ROE".into()];
        header.extend((1..=max_k).map(|k| if k == 1 { "1 point".to_string() } else { format!("{k} points") }));

        let mut keys: Vec<(String, String, String)> = Vec::new();
        for r in self.rows.iter().filter(|r| r.subset_size.is_some()) {
            let key = (r.sequence.clone(), r.source.clone(), r.depth_mode.clone());
            if !keys.contains(&key) {
                keys.push(key);
            }
        }
        for r in self.rows.iter().filter(|r| r.subset_size.is_none()) {
            if !keys.iter().any(|k| k.0 == r.sequence && k.1 == r.source) {
                keys.push((r.sequence.clone(), r.source.clone(), String::new()));
            }
        }
        let pose_cell = |seq: &str, source: &str, metric: &str| {
            self.rows
                .iter()
                .find(|r| r.sequence == seq && r.source == source && r.metric == metric && r.subset_size.is_none())
                .map(|r| r.mean.map_or("N.A".to_string(), |v| format!("{v:.3}")))
                .unwrap_or_else(|| "-".into())
        };
        let mut lines: Vec<Vec<String>> = vec![header];
        for (seq, source, depth) in &keys {
            let mut line = vec![seq.clone(), source.clone(), depth.clone()];
            for m in ["rmse3d", "aoe", "roe"] {
                line.push(pose_cell(seq, source, m));
            }
            for k in 1..=max_k {
                let r = self.rows.iter().find(|r| {
                    &r.sequence == seq && &r.source == source && &r.depth_mode == depth && r.subset_size == Some(k)
                });
                line.push(match r {
                    Some(MetricRow { mean: Some(m), std: Some(s), .. }) => format!("{m:.1}±{s:.1}"),
                    Some(_) => "N.A".into(),
                    None => "-".into(),
                });
            }
            lines.push(line);
        }
        let widths: Vec<usize> =
            (0..lines[0].len()).map(|c| lines.iter().map(|l| l[c].chars().count()).max().unwrap_or(0)).collect();
        let mut out = String::new();
        for (i, line) in lines.iter().enumerate() {
            let cells: Vec<String> = line.iter().zip(&widths).map(|(s, w)| format!("{s:<w$}")).collect();
            out.push_str(cells.join("  ").trim_end());
            out.push('\n');
            if i == 0 {
                out.push_str(&widths.iter().map(|w| "-".repeat(*w)).collect::<Vec<_>>().join("  "));
                out.push('\n');
            }
        }
        out
    }
}
