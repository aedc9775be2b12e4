//! Synthetic flights over a flat floor with exactly known poses and
//! perfect annotations.
//!
//! The body flies a circle at a sinusoidally varying altitude with its yaw
//! swinging about the heading and no roll or pitch. The default camera looks
//! straight down, so the floor lies at a single depth in every frame.

use std::path::Path;

use nalgebra::{Matrix3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::depth::{floor_depth, io::write_ply, FloorPlaneConfig};
use crate::geometry::rotation::{rot_z, rotation_exp};
use crate::geometry::{CameraModel, ImagePoint, Pose, Timestamp};
use crate::tracking::RigConfig;

use super::euroc::{format_sensor_yaml, write_pose_csv, write_text, CAMERA_INDEX, ESTIMATES_DIR, GROUNDTRUTH_CSV, POINT_CLOUD, SENSOR_YAML};
use super::{AnnotatedPoint, AnnotationSet, Convention, FrameSequence, IngestError, PoseSource, PoseTrajectory};

pub const ANNOTATIONS_FILE: &str = "annotations.json";
pub const ONBOARD_NAME: &str = "onboard";

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectorySpec {
    pub frames: usize,
    pub fps: f64,
    /// Pose samples per second in the emitted streams.
    pub pose_rate_hz: f64,
    /// Extra pose coverage before the first and after the last frame, s.
    pub padding_s: f64,
    pub radius: f64,
    pub speed: f64,
    pub altitude: f64,
    pub altitude_amplitude: f64,
    pub altitude_period_s: f64,
    /// Yaw swings about the heading by this much, rad.
    pub yaw_amplitude: f64,
    pub yaw_period_s: f64,
}

impl Default for TrajectorySpec {
    fn default() -> Self {
        TrajectorySpec {
            frames: 300,
            fps: 10.0,
            pose_rate_hz: 10.0,
            padding_s: 1.0,
            radius: 2.0,
            speed: 0.4,
            altitude: 1.5,
            altitude_amplitude: 0.2,
            altitude_period_s: 12.0,
            yaw_amplitude: 0.3,
            yaw_period_s: 5.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SceneSpec {
    pub landmarks: usize,
    pub camera: CameraModel,
    pub rig: RigConfig,
    /// Spacing of the floor point-cloud grid, m.
    pub cloud_spacing: f64,
    /// The cloud covers `[-extent, extent]²`.
    pub cloud_extent: f64,
}

/// Camera looking straight down, image x along body -y and image y along
/// body -x, mounted 10 cm ahead of the body origin.
pub fn nadir_rig() -> RigConfig {
    let r = Matrix3::new(0.0, -1.0, 0.0, -1.0, 0.0, 0.0, 0.0, 0.0, -1.0);
    RigConfig::from_parts(r, Vector3::new(0.1, 0.0, -0.05)).expect("valid rotation")
}

impl Default for SceneSpec {
    fn default() -> Self {
        SceneSpec {
            landmarks: 8,
            camera: CameraModel::euroc_cam0(),
            rig: nadir_rig(),
            cloud_spacing: 0.025,
            cloud_extent: 5.0,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct NoiseSpec {
    /// Rotation noise per pose step, rad.
    pub sigma_rot: f64,
    /// Translation noise per pose step, m.
    pub sigma_trans: f64,
    /// The on-board stream stamps the pose of time `t` as `t + time_offset`.
    pub time_offset_s: f64,
    /// Rotation vector and translation applied to the reported extrinsic.
    pub extrinsic_perturbation: Option<(Vector3<f64>, Vector3<f64>)>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SynthSpec {
    pub seed: u64,
    pub trajectory: TrajectorySpec,
    pub scene: SceneSpec,
    pub noise: NoiseSpec,
}

/// A floor point annotated from `start_frame` until it leaves the image.
#[derive(Debug, Clone, PartialEq)]
pub struct Landmark {
    pub track: u64,
    pub start_frame: usize,
    pub position: Vector3<f64>,
}

#[derive(Debug, Clone)]
pub struct SynthScene {
    pub frames: FrameSequence,
    pub camera: CameraModel,
    /// Extrinsic used to generate the data.
    pub rig: RigConfig,
    /// Extrinsic written to the calibration file; differs from `rig` only
    /// under an extrinsic perturbation.
    pub reported_rig: RigConfig,
    /// Absolute true poses on the padded pose grid.
    pub truth: PoseTrajectory,
    /// Absolute on-board poses: true steps with noise, possibly time-shifted.
    pub noisy: PoseTrajectory,
    pub landmarks: Vec<Landmark>,
    pub annotations: AnnotationSet,
    pub point_cloud: Vec<Vector3<f64>>,
}

impl SynthScene {
    /// True poses at the frame timestamps.
    pub fn truth_at_frames(&self) -> PoseTrajectory {
        let frame_times = self.frames.timestamps();
        let indices: Vec<usize> = self
            .truth
            .timestamps()
            .enumerate()
            .filter(|(_, t)| frame_times.binary_search(t).is_ok())
            .map(|(i, _)| i)
            .collect();
        self.truth.select(&indices).expect("indices in range")
    }

    /// `T^{F,C}` at frame `index` under the true poses.
    pub fn true_camera_to_fixed(&self, index: usize) -> Pose {
        let t = self.frames.frames()[index].timestamp;
        let body = self.truth.entries().iter().find(|e| e.timestamp == t).expect("frame on pose grid").pose;
        body.compose(&self.rig.body_from_camera(t).expect("constant rig")).expect("frames chain")
    }
}

fn spec_error(message: impl Into<String>) -> IngestError {
    IngestError::InvalidParameter(message.into())
}

/// Random phases of the periodic terms of the path.
#[derive(Clone, Copy)]
struct Phases {
    circle: f64,
    altitude: f64,
    yaw: f64,
}

fn body_pose(spec: &TrajectorySpec, phases: &Phases, t: f64) -> (Matrix3<f64>, Vector3<f64>) {
    let tau = std::f64::consts::TAU;
    let alpha = phases.circle + spec.speed / spec.radius * t;
    let h = spec.altitude + spec.altitude_amplitude * (tau * t / spec.altitude_period_s + phases.altitude).sin();
    let position = Vector3::new(spec.radius * alpha.cos(), spec.radius * alpha.sin(), h);
    let wobble = spec.yaw_amplitude * (tau * t / spec.yaw_period_s + phases.yaw).sin();
    (rot_z(alpha + std::f64::consts::FRAC_PI_2 + wobble), position)
}

fn random_central_pixel(rng: &mut ChaCha8Rng, cam: &CameraModel) -> ImagePoint {
    let (w, h) = (cam.width as f64, cam.height as f64);
    ImagePoint::new(rng.random_range(0.2 * w..0.8 * w), rng.random_range(0.2 * h..0.8 * h))
}

pub fn synth_scene(spec: &SynthSpec) -> Result<SynthScene, IngestError> {
    let traj = &spec.trajectory;
    let scene = &spec.scene;
    if traj.frames == 0 || !(traj.fps > 0.0) || !(traj.yaw_period_s > 0.0) || !(traj.altitude_period_s > 0.0) || !(traj.pose_rate_hz > 0.0) || !(traj.padding_s >= 0.0) {
        return Err(spec_error("trajectory needs frames > 0, positive rates and non-negative padding"));
    }
    if !(traj.radius > 0.0) || !(traj.altitude - traj.altitude_amplitude.abs() > 0.0) {
        return Err(spec_error("trajectory must stay above the floor with a positive radius"));
    }
    if scene.rig.is_time_varying() {
        return Err(spec_error("synthetic scenes use a constant extrinsic"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let phases = Phases {
        circle: rng.random_range(0.0..std::f64::consts::TAU),
        altitude: rng.random_range(0.0..std::f64::consts::TAU),
        yaw: rng.random_range(0.0..std::f64::consts::TAU),
    };

    let frames = FrameSequence::uniform(Timestamp(0), traj.frames, traj.fps);
    let frame_period = Timestamp::NANOS_PER_SEC as f64 / traj.fps;
    let pose_period = Timestamp::NANOS_PER_SEC as f64 / traj.pose_rate_hz;
    let end_ns = (traj.frames - 1) as f64 * frame_period + traj.padding_s * 1e9;
    let start_steps = (traj.padding_s * traj.pose_rate_hz).ceil() as i64;
    let mut grid: Vec<i64> = Vec::new();
    let mut j = -start_steps;
    loop {
        let t = (j as f64 * pose_period).round() as i64;
        if t as f64 > end_ns + 0.5 {
            break;
        }
        grid.push(t);
        j += 1;
    }
    // Frame times must be pose samples so the truth is exact at frames.
    let missing = frames.timestamps().into_iter().find(|t| grid.binary_search(&t.0).is_err());
    if let Some(t) = missing {
        return Err(spec_error(format!("frame time {t} is not on the pose grid; use a pose rate that is a multiple of the frame rate")));
    }

    let truth_samples: Vec<(Timestamp, Matrix3<f64>, Vector3<f64>)> = grid
        .iter()
        .map(|&t| {
            let (r, d) = body_pose(traj, &phases, t as f64 * 1e-9);
            (Timestamp(t), r, d)
        })
        .collect();
    let truth = PoseTrajectory::from_samples(truth_samples, Convention::Absolute, PoseSource::SyntheticTruth)?;

    let noisy = noisy_stream(&truth, &spec.noise, &mut rng)?;

    let reported_rig = match spec.noise.extrinsic_perturbation {
        None => scene.rig.clone(),
        Some((rv, dt)) => {
            let nominal = scene.rig.nominal();
            RigConfig::from_parts(rotation_exp(&rv) * nominal.rotation(), nominal.translation() + dt)?
        }
    };

    let mut partial = SynthScene {
        frames,
        camera: scene.camera,
        rig: scene.rig.clone(),
        reported_rig,
        truth,
        noisy,
        landmarks: Vec::new(),
        annotations: AnnotationSet::new("synthetic", "synth"),
        point_cloud: floor_grid(scene.cloud_spacing, scene.cloud_extent),
    };
    annotate(&mut partial, scene.landmarks, &mut rng)?;
    Ok(partial)
}

fn noisy_stream(truth: &PoseTrajectory, noise: &NoiseSpec, rng: &mut ChaCha8Rng) -> Result<PoseTrajectory, IngestError> {
    let shift = (noise.time_offset_s * 1e9).round() as i64;
    let restamp = |t: Timestamp| Timestamp(t.0 + shift);
    if noise.sigma_rot == 0.0 && noise.sigma_trans == 0.0 {
        let entries = truth
            .entries()
            .iter()
            .map(|e| (restamp(e.timestamp), *e.pose.rotation(), *e.pose.translation()))
            .collect::<Vec<_>>();
        return Ok(PoseTrajectory::from_samples(entries, Convention::Absolute, PoseSource::OnBoard)?);
    }
    let relative = truth.to_relative();
    let rot = Normal::new(0.0, noise.sigma_rot).map_err(|e| spec_error(format!("sigma_rot: {e}")))?;
    let trans = Normal::new(0.0, noise.sigma_trans).map_err(|e| spec_error(format!("sigma_trans: {e}")))?;
    let mut samples = Vec::with_capacity(relative.len());
    for (i, e) in relative.entries().iter().enumerate() {
        let (mut r, mut d) = (*e.pose.rotation(), *e.pose.translation());
        if i > 0 {
            let w = Vector3::new(rot.sample(rng), rot.sample(rng), rot.sample(rng));
            let n = Vector3::new(trans.sample(rng), trans.sample(rng), trans.sample(rng));
            r = rotation_exp(&w) * r;
            d += n;
        }
        samples.push((restamp(e.timestamp), r, d));
    }
    let noisy = PoseTrajectory::from_samples(samples, Convention::Relative, PoseSource::OnBoard)?;
    Ok(noisy.to_absolute())
}

fn floor_grid(spacing: f64, extent: f64) -> Vec<Vector3<f64>> {
    if !(spacing > 0.0) || !(extent > 0.0) {
        return Vec::new();
    }
    let n = (extent / spacing).round() as i64;
    let mut out = Vec::with_capacity(((2 * n + 1) * (2 * n + 1)) as usize);
    for i in -n..=n {
        for j in -n..=n {
            out.push(Vector3::new(i as f64 * spacing, j as f64 * spacing, 0.0));
        }
    }
    out
}

fn spawn(scene: &SynthScene, frame: usize, pixel: &ImagePoint) -> Result<Vector3<f64>, IngestError> {
    let camera_to_fixed = scene.true_camera_to_fixed(frame);
    let cfg = FloorPlaneConfig::new(camera_to_fixed)
        .map_err(|e| spec_error(format!("landmark never visible at frame {frame}: {e}")))?;
    let p = floor_depth(&cfg, &scene.camera, pixel).map_err(|e| spec_error(format!("landmark never visible at frame {frame}: {e}")))?;
    Ok(camera_to_fixed.apply(&p.position))
}

fn project(scene: &SynthScene, frame: usize, position: &Vector3<f64>) -> Option<ImagePoint> {
    let p_c = scene.true_camera_to_fixed(frame).inverse().apply(position);
    scene.camera.project_coords(&p_c).ok().filter(|p| scene.camera.contains(p))
}

fn annotate(scene: &mut SynthScene, count: usize, rng: &mut ChaCha8Rng) -> Result<(), IngestError> {
    let n = scene.frames.len();
    for track in 0..count as u64 {
        let mut pixel = random_central_pixel(rng, &scene.camera);
        let mut position = spawn(scene, 0, &pixel)?;
        scene.landmarks.push(Landmark { track, start_frame: 0, position });
        scene.annotations.track_mut(track).upsert(AnnotatedPoint::new(0, pixel.u, pixel.v, false));
        for frame in 1..n {
            let (p, respawn) = match project(scene, frame, &position) {
                Some(p) => (p, false),
                None => {
                    pixel = random_central_pixel(rng, &scene.camera);
                    position = spawn(scene, frame, &pixel)?;
                    scene.landmarks.push(Landmark { track, start_frame: frame, position });
                    (pixel, true)
                }
            };
            scene.annotations.track_mut(track).upsert(AnnotatedPoint::new(frame, p.u, p.v, respawn));
        }
    }
    Ok(())
}

/// Writes the scene as an EuRoC-style directory (without images) plus
/// `annotations.json`.
pub fn write_dataset(scene: &SynthScene, root: &Path) -> Result<(), IngestError> {
    let mut index = String::from("#timestamp [ns],filename\n");
    for f in scene.frames.frames() {
        index.push_str(&format!("{},{}.png\n", f.timestamp.0, f.timestamp.0));
    }
    write_text(&root.join(CAMERA_INDEX), &index)?;
    write_text(&root.join(SENSOR_YAML), &format_sensor_yaml(&scene.camera, &scene.reported_rig, scene.frames.rate_hz()))?;
    write_pose_csv(&root.join(GROUNDTRUTH_CSV), &scene.truth)?;
    write_pose_csv(&root.join(ESTIMATES_DIR).join(format!("{ONBOARD_NAME}.csv")), &scene.noisy)?;
    let ply = root.join(POINT_CLOUD);
    let dir = ply.parent().expect("nested path");
    std::fs::create_dir_all(dir).map_err(|source| IngestError::Io { path: dir.into(), source })?;
    write_ply(&ply, &scene.point_cloud).map_err(|e| IngestError::InvalidParameter(e.to_string()))?;
    scene.annotations.write(&root.join(ANNOTATIONS_FILE))?;
    Ok(())
}

/// Maps `FrameId::Fixed` points into image pixels for frame `index`
/// using the true poses; `None` when out of view.
pub fn true_projection(scene: &SynthScene, index: usize, position: &Vector3<f64>) -> Option<ImagePoint> {
    project(scene, index, position)
}
