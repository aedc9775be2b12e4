use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::geometry::{ImagePoint, ScenePoint};
use crate::ingestion::canonical_json;

use super::TrackingError;

/// One reference point followed from `start_frame` until the next respawn.
#[derive(Debug, Clone, PartialEq)]
pub struct TrackSegment {
    pub start_frame: usize,
    pub reference: ImagePoint,
    /// The lifted reference in the body frame at `start_frame`; not stored
    /// in track files.
    pub reference_point: Option<ScenePoint>,
    /// Predicted pixel for frames `start_frame..start_frame + len`; `None`
    /// while the point is behind the camera.
    pub points: Vec<Option<ImagePoint>>,
}

impl TrackSegment {
    pub fn end_frame(&self) -> usize {
        self.start_frame + self.points.len()
    }

    pub fn frames(&self) -> impl Iterator<Item = (usize, Option<ImagePoint>)> + '_ {
        self.points.iter().enumerate().map(|(i, p)| (self.start_frame + i, *p))
    }
}

/// Predicted pixels of one tracked keypoint, split at respawns.
#[derive(Debug, Clone, PartialEq)]
pub struct KeypointTrack {
    pub track_id: u64,
    pub segments: Vec<TrackSegment>,
}

#[derive(Serialize, Deserialize)]
struct PointJson {
    frame: usize,
    uv: Option<[f64; 2]>,
}

#[derive(Serialize, Deserialize)]
struct SegmentJson {
    start_frame: usize,
    ref_uv: [f64; 2],
    points: Vec<PointJson>,
}

#[derive(Serialize, Deserialize)]
struct TrackJson {
    track_id: u64,
    segments: Vec<SegmentJson>,
}

impl KeypointTrack {
    /// Predicted pixel at `frame`, when present.
    pub fn predicted_at(&self, frame: usize) -> Option<ImagePoint> {
        self.segments
            .iter()
            .find(|s| (s.start_frame..s.end_frame()).contains(&frame))
            .and_then(|s| s.points[frame - s.start_frame])
    }

    /// Present predictions by frame.
    pub fn by_frame(&self) -> BTreeMap<usize, ImagePoint> {
        self.segments.iter().flat_map(|s| s.frames().filter_map(|(f, p)| p.map(|p| (f, p)))).collect()
    }

    /// First frame of every segment after the first.
    pub fn respawn_frames(&self) -> Vec<usize> {
        self.segments.iter().skip(1).map(|s| s.start_frame).collect()
    }

    pub fn frame_count(&self) -> usize {
        self.segments.last().map_or(0, |s| s.end_frame())
    }

    /// Segments must be contiguous and non-empty.
    pub fn validate(&self) -> Result<(), TrackingError> {
        let mut expected = self.segments.first().map_or(0, |s| s.start_frame);
        for s in &self.segments {
            if s.start_frame != expected || s.points.is_empty() {
                return Err(TrackingError::Format(format!("segment at frame {} does not continue at {expected}", s.start_frame)));
            }
            expected = s.end_frame();
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        let doc = TrackJson {
            track_id: self.track_id,
            segments: self
                .segments
                .iter()
                .map(|s| SegmentJson {
                    start_frame: s.start_frame,
                    ref_uv: [s.reference.u, s.reference.v],
                    points: s.frames().map(|(frame, p)| PointJson { frame, uv: p.map(|p| [p.u, p.v]) }).collect(),
                })
                .collect(),
        };
        canonical_json(&serde_json::to_value(doc).expect("tracks serialize"))
    }

    pub fn from_json(text: &str) -> Result<Self, TrackingError> {
        let doc: TrackJson = serde_json::from_str(text).map_err(|e| TrackingError::Format(e.to_string()))?;
        let mut segments = Vec::with_capacity(doc.segments.len());
        for s in doc.segments {
            for (i, p) in s.points.iter().enumerate() {
                if p.frame != s.start_frame + i {
                    return Err(TrackingError::Format(format!("segment at frame {}: point {i} has frame {}", s.start_frame, p.frame)));
                }
            }
            segments.push(TrackSegment {
                start_frame: s.start_frame,
                reference: ImagePoint::new(s.ref_uv[0], s.ref_uv[1]),
                reference_point: None,
                points: s.points.into_iter().map(|p| p.uv.map(|[u, v]| ImagePoint::new(u, v))).collect(),
            });
        }
        let track = KeypointTrack { track_id: doc.track_id, segments };
        track.validate()?;
        Ok(track)
    }

    pub fn read(path: &Path) -> Result<Self, TrackingError> {
        let text = std::fs::read_to_string(path).map_err(|e| TrackingError::Format(format!("{}: {e}", path.display())))?;
        KeypointTrack::from_json(&text).map_err(|e| TrackingError::Format(format!("{}: {e}", path.display())))
    }

    pub fn write(&self, path: &Path) -> std::io::Result<()> {
        std::fs::write(path, self.to_json())
    }
}
