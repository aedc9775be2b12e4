use std::fmt::Write as _;

use crate::geometry::rotation_angle;
use crate::ingestion::{AnnotationSet, AnnotationTrack, PoseTrajectory};
use crate::tracking::KeypointTrack;

use super::MetricsError;

/// Pixel error of one track against its annotations at every frame where
/// both exist.
#[derive(Debug, Clone, PartialEq)]
pub struct PixelErrorSeries {
    /// `(frame, error in pixels, segment index)`.
    pub entries: Vec<(usize, f64, usize)>,
}

pub fn pixel_error_series(track: &KeypointTrack, annotations: &AnnotationTrack) -> PixelErrorSeries {
    let annotated = annotations.by_frame();
    let mut entries = Vec::new();
    for (segment, s) in track.segments.iter().enumerate() {
        for (frame, p) in s.frames() {
            if let (Some(p), Some(a)) = (p, annotated.get(&frame)) {
                entries.push((frame, p.distance(a), segment));
            }
        }
    }
    PixelErrorSeries { entries }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeriesRow {
    pub frame: usize,
    /// Mean pixel error over the tracks present at this frame.
    pub err2d_px: Option<f64>,
    pub err3d_m: f64,
    pub aoe_rad: f64,
    /// Some track starts a new segment at this frame.
    pub respawn: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorTimeSeries {
    pub rows: Vec<TimeSeriesRow>,
}

/// Per-frame pixel, position and orientation errors of one source.
pub fn error_timeseries(
    annotations: &AnnotationSet,
    tracks: &[KeypointTrack],
    gt: &PoseTrajectory,
    est: &PoseTrajectory,
) -> Result<ErrorTimeSeries, MetricsError> {
    if gt.len() != est.len() {
        return Err(MetricsError::LengthMismatch { gt: gt.len(), est: est.len() });
    }
    let (gt_abs, est_abs) = (gt.to_absolute(), est.to_absolute());
    let n = gt.len();
    let mut sums = vec![(0.0, 0usize); n];
    let mut respawn = vec![false; n];
    for track in tracks {
        for &f in &track.respawn_frames() {
            if f < n {
                respawn[f] = true;
            }
        }
        if let Some(a) = annotations.track(track.track_id) {
            for (frame, e, _) in pixel_error_series(track, a).entries {
                if frame < n {
                    sums[frame].0 += e;
                    sums[frame].1 += 1;
                }
            }
        }
    }
    let mut rows = Vec::with_capacity(n);
    for (frame, (g, e)) in gt_abs.entries().iter().zip(est_abs.entries()).enumerate() {
        let aoe = rotation_angle(&(g.pose.rotation().transpose() * e.pose.rotation()))?;
        rows.push(TimeSeriesRow {
            frame,
            err2d_px: (sums[frame].1 > 0).then(|| sums[frame].0 / sums[frame].1 as f64),
            err3d_m: (g.pose.translation() - e.pose.translation()).norm(),
            aoe_rad: aoe,
            respawn: respawn[frame],
        });
    }
    Ok(ErrorTimeSeries { rows })
}

impl ErrorTimeSeries {
    pub const CSV_HEADER: &'static str = "frame,err2d_px,err3d_m,aoe_rad,respawn_flag";

    pub fn to_csv(&self) -> String {
        let mut out = format!("{}\n", Self::CSV_HEADER);
        for r in &self.rows {
            let e2 = r.err2d_px.map(|e| format!("{e}")).unwrap_or_default();
            writeln!(out, "{},{},{},{},{}", r.frame, e2, r.err3d_m, r.aoe_rad, u8::from(r.respawn)).unwrap();
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{ImagePoint, Timestamp};
    use crate::ingestion::{AnnotatedPoint, Convention, PoseSource};
    use crate::tracking::TrackSegment;
    use nalgebra::{Matrix3, Vector3};

    #[test]
    fn zero_error_and_flags() {
        let mut set = AnnotationSet::default();
        for f in 0..4 {
            set.track_mut(0).upsert(AnnotatedPoint::new(f, 5.0, 5.0, f == 2));
        }
        let seg = |start: usize, len: usize| TrackSegment {
            start_frame: start,
            reference: ImagePoint::new(5.0, 5.0),
            reference_point: None,
            points: vec![Some(ImagePoint::new(5.0, 5.0)); len],
        };
        let track = KeypointTrack { track_id: 0, segments: vec![seg(0, 2), seg(2, 2)] };
        let poses = PoseTrajectory::from_samples(
            (0..4).map(|i| (Timestamp(i), Matrix3::identity(), Vector3::new(i as f64, 0.0, 1.0))),
            Convention::Absolute,
            PoseSource::Mocap,
        )
        .unwrap();
        let ts = error_timeseries(&set, &[track], &poses, &poses).unwrap();
        assert!(ts.rows.iter().all(|r| r.err2d_px == Some(0.0) && r.err3d_m == 0.0 && r.aoe_rad == 0.0));
        assert_eq!(ts.rows.iter().filter(|r| r.respawn).map(|r| r.frame).collect::<Vec<_>>(), vec![2]);
        let csv = ts.to_csv();
        assert!(csv.starts_with("frame,err2d_px,err3d_m,aoe_rad,respawn_flag\n0,0,0,0,0\n"));
        assert!(csv.contains("\n2,0,0,0,1\n"));
    }
}
