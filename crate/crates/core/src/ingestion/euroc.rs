//! EuRoC-style dataset directories and generic pose CSV files.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use nalgebra::{Matrix4, Vector3};
use serde::Deserialize;

use crate::geometry::rotation::quaternion_from_wxyz;
use crate::geometry::{CameraModel, Distortion, FrameId, Pose, Timestamp};
use crate::tracking::RigConfig;

use super::{Convention, FrameRecord, FrameSequence, IngestError, PoseSource, PoseTrajectory};

pub const CAMERA_INDEX: &str = "cam0/data.csv";
pub const IMAGE_DIR: &str = "cam0/data";
pub const SENSOR_YAML: &str = "cam0/sensor.yaml";
pub const GROUNDTRUTH_CSV: &str = "state_groundtruth_estimate0/data.csv";
pub const ESTIMATES_DIR: &str = "estimates";
pub const POINT_CLOUD: &str = "pointcloud0/data.ply";

#[derive(Debug, Clone, PartialEq)]
pub struct SensorCalibration {
    pub camera: CameraModel,
    pub rig: RigConfig,
    pub rate_hz: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct EurocSequence {
    pub root: PathBuf,
    pub frames: FrameSequence,
    pub camera: CameraModel,
    pub rig: RigConfig,
    /// Ground truth, labelled `mocap`.
    pub groundtruth: Option<PoseTrajectory>,
    /// `estimates/<name>.csv`, by file stem.
    pub estimates: BTreeMap<String, PoseTrajectory>,
    pub point_cloud: Option<PathBuf>,
}

impl EurocSequence {
    /// Ground truth first, then estimates in name order.
    pub fn trajectories(&self) -> Vec<(String, &PoseTrajectory)> {
        let mut out: Vec<(String, &PoseTrajectory)> = Vec::new();
        if let Some(gt) = &self.groundtruth {
            out.push((PoseSource::Mocap.label().to_string(), gt));
        }
        out.extend(self.estimates.iter().map(|(k, v)| (k.clone(), v)));
        out
    }
}

fn require(path: PathBuf) -> Result<PathBuf, IngestError> {
    if path.is_file() {
        Ok(path)
    } else {
        Err(IngestError::MissingFile(path))
    }
}

fn csv_reader(path: &Path) -> Result<csv::Reader<std::fs::File>, IngestError> {
    let file = std::fs::File::open(path).map_err(|source| match source.kind() {
        std::io::ErrorKind::NotFound => IngestError::MissingFile(path.into()),
        _ => IngestError::Io { path: path.into(), source },
    })?;
    Ok(csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(file))
}

/// Rows of a CSV file with their 1-based line numbers. A first row whose
/// leading field is not an integer is taken as a header and skipped.
fn csv_rows(path: &Path) -> Result<Vec<(usize, csv::StringRecord)>, IngestError> {
    let mut rows = Vec::new();
    for (i, record) in csv_reader(path)?.records().enumerate() {
        let record = record.map_err(|e| IngestError::MalformedRow {
            path: path.into(),
            line: e.position().map_or(0, |p| p.line() as usize),
            message: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        if i == 0 && record.get(0).is_some_and(|f| f.parse::<i64>().is_err()) {
            continue;
        }
        if record.iter().all(str::is_empty) {
            continue;
        }
        rows.push((line, record));
    }
    Ok(rows)
}

fn field<T: std::str::FromStr>(path: &Path, line: usize, record: &csv::StringRecord, column: usize) -> Result<T, IngestError> {
    let raw = record.get(column).unwrap_or("");
    raw.parse().map_err(|_| IngestError::MalformedRow {
        path: path.into(),
        line,
        message: format!("column {}: expected a number, found {raw:?}", column + 1),
    })
}

/// Reads `timestamp_ns,px,py,pz,qw,qx,qy,qz[,...]` rows; extra columns are
/// ignored.
pub fn read_pose_csv(path: &Path, convention: Convention, source: PoseSource) -> Result<PoseTrajectory, IngestError> {
    let rows = csv_rows(path)?;
    if rows.is_empty() {
        return Err(IngestError::MalformedRow { path: path.into(), line: 1, message: "no pose rows".into() });
    }
    let mut samples = Vec::with_capacity(rows.len());
    let mut previous: Option<i64> = None;
    for (line, record) in &rows {
        let line = *line;
        if record.len() < 8 {
            return Err(IngestError::MalformedRow {
                path: path.into(),
                line,
                message: format!("expected at least 8 columns, found {}", record.len()),
            });
        }
        let t: i64 = field(path, line, record, 0)?;
        if previous.is_some_and(|p| t <= p) {
            return Err(IngestError::NonMonotonic { path: path.into(), line });
        }
        previous = Some(t);
        let mut v = [0.0; 7];
        for (k, slot) in v.iter_mut().enumerate() {
            *slot = field(path, line, record, k + 1)?;
        }
        let q = quaternion_from_wxyz(v[3], v[4], v[5], v[6]).ok_or_else(|| IngestError::MalformedRow {
            path: path.into(),
            line,
            message: "quaternion has zero norm".into(),
        })?;
        samples.push((Timestamp(t), q, Vector3::new(v[0], v[1], v[2])));
    }
    Ok(PoseTrajectory::from_quaternions(samples, convention, source)?)
}

/// Writes a trajectory as generic pose CSV with a header line.
pub fn write_pose_csv(path: &Path, trajectory: &PoseTrajectory) -> Result<(), IngestError> {
    let mut out = String::from("timestamp_ns,px,py,pz,qw,qx,qy,qz\n");
    for e in trajectory.entries() {
        let d = e.pose.translation();
        let q = e.pose.quaternion();
        let q = if q.w < 0.0 { -q.into_inner() } else { q.into_inner() };
        writeln!(out, "{},{},{},{},{},{},{},{}", e.timestamp.0, d.x, d.y, d.z, q.w, q.i, q.j, q.k).unwrap();
    }
    write_text(path, &out)
}

pub(crate) fn write_text(path: &Path, text: &str) -> Result<(), IngestError> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|source| IngestError::Io { path: parent.into(), source })?;
    }
    std::fs::write(path, text).map_err(|source| IngestError::Io { path: path.into(), source })
}

#[derive(Deserialize)]
struct MatrixYaml {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

#[derive(Deserialize)]
struct SensorYaml {
    #[serde(rename = "T_BS")]
    t_bs: MatrixYaml,
    rate_hz: Option<f64>,
    resolution: [u32; 2],
    intrinsics: [f64; 4],
    #[serde(default)]
    distortion_coefficients: Vec<f64>,
}

pub fn read_sensor_yaml(path: &Path) -> Result<SensorCalibration, IngestError> {
    let text = std::fs::read_to_string(path).map_err(|source| match source.kind() {
        std::io::ErrorKind::NotFound => IngestError::MissingFile(path.into()),
        _ => IngestError::Io { path: path.into(), source },
    })?;
    // OpenCV writes a `%YAML:1.0` directive that YAML parsers reject.
    let body: String = text.lines().filter(|l| !l.starts_with('%')).collect::<Vec<_>>().join("\n");
    let bad = |message: String| IngestError::Calibration { path: path.into(), message };
    let raw: SensorYaml = serde_yaml::from_str(&body).map_err(|e| bad(e.to_string()))?;
    if raw.t_bs.rows != 4 || raw.t_bs.cols != 4 || raw.t_bs.data.len() != 16 {
        return Err(bad(format!("T_BS must be 4x4, got {}x{} with {} values", raw.t_bs.rows, raw.t_bs.cols, raw.t_bs.data.len())));
    }
    let m = Matrix4::from_row_slice(&raw.t_bs.data);
    let t0 = Timestamp(0);
    let body_from_camera = Pose::from_homogeneous(&m, FrameId::Camera(t0), FrameId::Body(t0)).map_err(|e| bad(format!("T_BS: {e}")))?;
    let distortion = Distortion::from_opencv(&raw.distortion_coefficients).map_err(|e| bad(e.to_string()))?;
    let [fx, fy, cx, cy] = raw.intrinsics;
    let camera = CameraModel::new(fx, fy, cx, cy, distortion, raw.resolution[0], raw.resolution[1]).map_err(|e| bad(e.to_string()))?;
    Ok(SensorCalibration { camera, rig: RigConfig::constant(&body_from_camera), rate_hz: raw.rate_hz })
}

fn yaml_list(values: impl IntoIterator<Item = f64>) -> String {
    values.into_iter().map(|v| format!("{v}")).collect::<Vec<_>>().join(", ")
}

pub fn format_sensor_yaml(camera: &CameraModel, rig: &RigConfig, rate_hz: f64) -> String {
    let m = rig.nominal().to_homogeneous();
    let rows: Vec<f64> = (0..4).flat_map(|r| (0..4).map(move |c| m[(r, c)])).collect();
    let coeffs = camera.distortion.to_opencv();
    let used = if coeffs[5..].iter().all(|&c| c == 0.0) {
        if coeffs[4] == 0.0 { 4 } else { 5 }
    } else {
        8
    };
    format!(
        "%YAML:1.0\nsensor_type: camera\nT_BS:\n  cols: 4\n  rows: 4\n  data: [{}]\nrate_hz: {}\nresolution: [{}, {}]\ncamera_model: pinhole\nintrinsics: [{}]\ndistortion_model: radial-tangential\ndistortion_coefficients: [{}]\n",
        yaml_list(rows),
        rate_hz,
        camera.width,
        camera.height,
        yaml_list([camera.fx, camera.fy, camera.cx, camera.cy]),
        yaml_list(coeffs[..used].iter().copied()),
    )
}

fn read_camera_index(root: &Path, rate_hz: Option<f64>) -> Result<FrameSequence, IngestError> {
    let path = require(root.join(CAMERA_INDEX))?;
    let mut frames = Vec::new();
    let mut lines = Vec::new();
    for (line, record) in csv_rows(&path)? {
        if record.len() < 2 {
            return Err(IngestError::MalformedRow {
                path: path.clone(),
                line,
                message: format!("expected 2 columns, found {}", record.len()),
            });
        }
        let t: i64 = field(&path, line, &record, 0)?;
        frames.push(FrameRecord { timestamp: Timestamp(t), image: Some(root.join(IMAGE_DIR).join(&record[1])) });
        lines.push(line);
    }
    let provisional = FrameSequence::new(frames.clone(), 0.0)
        .map_err(|i| IngestError::NonMonotonic { path: path.clone(), line: lines[i] })?;
    let rate = rate_hz.or_else(|| provisional.estimated_rate_hz()).unwrap_or(0.0);
    Ok(FrameSequence::new(frames, rate).expect("checked above"))
}

/// Loads an EuRoC-style directory with ground truth (absolute, `mocap`)
/// and any `estimates/*.csv` read with `estimate_convention`.
pub fn load_euroc_sequence_with(root: &Path, estimate_convention: Convention) -> Result<EurocSequence, IngestError> {
    let calib = read_sensor_yaml(&root.join(SENSOR_YAML))?;
    let frames = read_camera_index(root, calib.rate_hz)?;
    let gt_path = root.join(GROUNDTRUTH_CSV);
    let groundtruth = if gt_path.is_file() {
        Some(read_pose_csv(&gt_path, Convention::Absolute, PoseSource::Mocap)?)
    } else {
        None
    };
    let mut estimates = BTreeMap::new();
    let dir = root.join(ESTIMATES_DIR);
    if dir.is_dir() {
        let entries = std::fs::read_dir(&dir).map_err(|source| IngestError::Io { path: dir.clone(), source })?;
        for entry in entries {
            let path = entry.map_err(|source| IngestError::Io { path: dir.clone(), source })?.path();
            if path.extension().is_some_and(|e| e == "csv") {
                let name = path.file_stem().unwrap().to_string_lossy().into_owned();
                estimates.insert(name, read_pose_csv(&path, estimate_convention, PoseSource::OnBoard)?);
            }
        }
    }
    if groundtruth.is_none() && estimates.is_empty() {
        return Err(IngestError::MissingFile(gt_path));
    }
    let cloud = root.join(POINT_CLOUD);
    Ok(EurocSequence {
        root: root.into(),
        frames,
        camera: calib.camera,
        rig: calib.rig,
        groundtruth,
        estimates,
        point_cloud: cloud.is_file().then_some(cloud),
    })
}

pub fn load_euroc_sequence(root: &Path) -> Result<EurocSequence, IngestError> {
    load_euroc_sequence_with(root, Convention::Absolute)
}
