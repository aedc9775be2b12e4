//! Human keypoint annotations and their JSON file format.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::geometry::ImagePoint;

use super::AnnotationError;

/// Image size used to validate annotation coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ImageBounds {
    pub width: u32,
    pub height: u32,
}

impl ImageBounds {
    pub fn contains(&self, u: f64, v: f64) -> bool {
        u >= 0.0 && v >= 0.0 && u < self.width as f64 && v < self.height as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotatedPoint {
    pub frame: usize,
    pub u: f64,
    pub v: f64,
    /// The point starts a new segment with a freshly chosen reference.
    #[serde(default)]
    pub respawn: bool,
    #[serde(flatten)]
    pub extra: BTreeMap<String, Value>,
}

impl AnnotatedPoint {
    pub fn new(frame: usize, u: f64, v: f64, respawn: bool) -> Self {
        AnnotatedPoint { frame, u, v, respawn, extra: BTreeMap::new() }
    }

    pub fn pixel(&self) -> ImagePoint {
        ImagePoint::new(self.u, self.v)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotationTrack {
    pub id: u64,
    #[serde(default)]
    pub points: Vec<AnnotatedPoint>,
    #[serde(flatten)]
    pub extra: BTreeMap<String, Value>,
}

impl AnnotationTrack {
    pub fn new(id: u64) -> Self {
        AnnotationTrack { id, points: Vec::new(), extra: BTreeMap::new() }
    }

    pub fn point_at(&self, frame: usize) -> Option<&AnnotatedPoint> {
        self.points.iter().find(|p| p.frame == frame)
    }

    /// Insert or replace the annotation at `point.frame`, keeping points
    /// ordered by frame.
    pub fn upsert(&mut self, point: AnnotatedPoint) {
        match self.points.binary_search_by_key(&point.frame, |p| p.frame) {
            Ok(i) => self.points[i] = point,
            Err(i) => self.points.insert(i, point),
        }
    }

    /// Frames flagged as respawns.
    pub fn respawn_frames(&self) -> BTreeSet<usize> {
        self.points.iter().filter(|p| p.respawn).map(|p| p.frame).collect()
    }

    /// Annotated pixels by frame.
    pub fn by_frame(&self) -> BTreeMap<usize, ImagePoint> {
        self.points.iter().map(|p| (p.frame, p.pixel())).collect()
    }
}

/// Annotated ground-truth pixel positions, per track and frame.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct AnnotationSet {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sequence: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub annotator: Option<String>,
    pub tracks: Vec<AnnotationTrack>,
    #[serde(flatten)]
    pub extra: BTreeMap<String, Value>,
}

impl AnnotationSet {
    pub fn new(sequence: impl Into<String>, annotator: impl Into<String>) -> Self {
        AnnotationSet {
            sequence: Some(sequence.into()),
            annotator: Some(annotator.into()),
            tracks: Vec::new(),
            extra: BTreeMap::new(),
        }
    }

    pub fn track(&self, id: u64) -> Option<&AnnotationTrack> {
        self.tracks.iter().find(|t| t.id == id)
    }

    /// The track with `id`, created empty if absent.
    pub fn track_mut(&mut self, id: u64) -> &mut AnnotationTrack {
        let i = match self.tracks.iter().position(|t| t.id == id) {
            Some(i) => i,
            None => {
                self.tracks.push(AnnotationTrack::new(id));
                self.tracks.len() - 1
            }
        };
        &mut self.tracks[i]
    }

    pub fn point_count(&self) -> usize {
        self.tracks.iter().map(|t| t.points.len()).sum()
    }

    /// Checks one annotation per (track, frame), finite coordinates, and,
    /// when `bounds` is given, coordinates inside the image.
    pub fn validate(&self, bounds: Option<ImageBounds>) -> Result<(), AnnotationError> {
        for (ti, track) in self.tracks.iter().enumerate() {
            let mut seen = BTreeSet::new();
            for (pi, p) in track.points.iter().enumerate() {
                if !seen.insert(p.frame) {
                    return Err(AnnotationError::Duplicate { track: track.id, frame: p.frame });
                }
                if !p.u.is_finite() || !p.v.is_finite() {
                    return Err(AnnotationError::Schema {
                        pointer: format!("/tracks/{ti}/points/{pi}"),
                        message: "coordinates must be finite".into(),
                    });
                }
                if let Some(b) = bounds {
                    if !b.contains(p.u, p.v) {
                        return Err(AnnotationError::OutOfBounds {
                            track: track.id,
                            frame: p.frame,
                            u: p.u,
                            v: p.v,
                            width: b.width,
                            height: b.height,
                        });
                    }
                }
            }
        }
        Ok(())
    }

    pub fn from_json_str(text: &str, bounds: Option<ImageBounds>) -> Result<Self, AnnotationError> {
        let mut de = serde_json::Deserializer::from_str(text);
        let set: AnnotationSet = serde_path_to_error::deserialize(&mut de).map_err(|e| AnnotationError::Schema {
            pointer: json_pointer(e.path()),
            message: e.inner().to_string(),
        })?;
        de.end().map_err(|e| AnnotationError::Schema { pointer: String::new(), message: e.to_string() })?;
        set.validate(bounds)?;
        Ok(set)
    }

    pub fn read(path: &Path, bounds: Option<ImageBounds>) -> Result<Self, AnnotationError> {
        let text = std::fs::read_to_string(path).map_err(|source| AnnotationError::Io { path: path.into(), source })?;
        AnnotationSet::from_json_str(&text, bounds)
    }

    pub fn to_canonical_json(&self) -> String {
        canonical_json(&serde_json::to_value(self).expect("annotation sets serialize"))
    }

    /// Writes canonical JSON through a temporary file and a rename, so a
    /// crash never leaves a truncated file behind.
    pub fn write(&self, path: &Path) -> Result<(), AnnotationError> {
        let io = |source| AnnotationError::Io { path: path.into(), source };
        let mut tmp = path.as_os_str().to_owned();
        tmp.push(".tmp");
        std::fs::write(&tmp, self.to_canonical_json()).map_err(io)?;
        std::fs::rename(&tmp, path).map_err(io)
    }
}

fn json_pointer(path: &serde_path_to_error::Path) -> String {
    use serde_path_to_error::Segment;
    let mut out = String::new();
    for segment in path.iter() {
        out.push('/');
        match segment {
            Segment::Seq { index } => write!(out, "{index}").unwrap(),
            Segment::Map { key } => out.push_str(&key.replace('~', "~0").replace('/', "~1")),
            Segment::Enum { variant } => out.push_str(variant),
            Segment::Unknown => out.push('?'),
        }
    }
    if out.is_empty() {
        out.push('/');
    }
    out
}

/// Round to 9 significant digits and print the shortest decimal that
/// reads back to the rounded value; integral values keep a `.0`.
fn format_float(x: f64) -> String {
    if !x.is_finite() {
        return "null".into();
    }
    let rounded: f64 = format!("{x:.8e}").parse().expect("formatted float parses");
    let rounded = if rounded == 0.0 { 0.0 } else { rounded };
    let mut s = format!("{rounded}");
    if !s.contains('.') {
        s.push_str(".0");
    }
    s
}

fn write_value(out: &mut String, value: &Value, indent: usize) {
    let pad = |out: &mut String, n: usize| out.extend(std::iter::repeat_n(' ', n));
    match value {
        Value::Null | Value::Bool(_) | Value::String(_) => out.push_str(&value.to_string()),
        Value::Number(n) if n.is_f64() => out.push_str(&format_float(n.as_f64().unwrap())),
        Value::Number(n) => out.push_str(&n.to_string()),
        Value::Array(items) if items.is_empty() => out.push_str("[]"),
        Value::Array(items) => {
            out.push_str("[\n");
            for (i, item) in items.iter().enumerate() {
                pad(out, indent + 2);
                write_value(out, item, indent + 2);
                out.push_str(if i + 1 < items.len() { ",\n" } else { "\n" });
            }
            pad(out, indent);
            out.push(']');
        }
        Value::Object(map) if map.is_empty() => out.push_str("{}"),
        Value::Object(map) => {
            let mut keys: Vec<&String> = map.keys().collect();
            keys.sort();
            out.push_str("{\n");
            for (i, key) in keys.iter().enumerate() {
                pad(out, indent + 2);
                out.push_str(&Value::String((*key).clone()).to_string());
                out.push_str(": ");
                write_value(out, &map[*key], indent + 2);
                out.push_str(if i + 1 < keys.len() { ",\n" } else { "\n" });
            }
            pad(out, indent);
            out.push('}');
        }
    }
}

/// Byte-stable JSON: sorted keys, two-space indent, floats rounded to 9
/// significant digits, trailing newline.
pub fn canonical_json(value: &Value) -> String {
    let mut out = String::new();
    write_value(&mut out, value, 0);
    out.push('\n');
    out
}
