//! Frame downsampling, cropping and pose interpolation at frame times.

use nalgebra::{Matrix3, Quaternion, UnitQuaternion, Vector3};

use crate::geometry::{Pose, Timestamp};

use super::{Convention, FrameSequence, IngestError, PoseTrajectory, StampedPose};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResampleParams {
    /// Output frame rate; `None` keeps every frame.
    pub target_fps: Option<f64>,
    /// Keep frames strictly less than this many seconds after the first.
    pub clip_seconds: Option<f64>,
    /// Added to each frame timestamp before looking up its pose, seconds.
    pub time_offset: f64,
}

impl Default for ResampleParams {
    fn default() -> Self {
        ResampleParams { target_fps: None, clip_seconds: None, time_offset: 0.0 }
    }
}

/// Frames retained by resampling, with one pose per frame.
#[derive(Debug, Clone)]
pub struct AlignedSequence {
    pub frames: FrameSequence,
    /// Index of each retained frame in the input sequence.
    pub frame_indices: Vec<usize>,
    /// Same convention as the input trajectory, stamped with frame times.
    pub poses: PoseTrajectory,
}

/// Spherical linear interpolation along the shorter arc.
pub fn slerp(q0: &UnitQuaternion<f64>, q1: &UnitQuaternion<f64>, s: f64) -> UnitQuaternion<f64> {
    let a = q0.quaternion();
    let mut b = *q1.quaternion();
    let mut dot = a.dot(&b);
    if dot < 0.0 {
        b = -b;
        dot = -dot;
    }
    let q: Quaternion<f64> = if dot > 1.0 - 1e-12 {
        a * (1.0 - s) + b * s
    } else {
        let theta = dot.clamp(-1.0, 1.0).acos();
        let sin = theta.sin();
        a * (((1.0 - s) * theta).sin() / sin) + b * ((s * theta).sin() / sin)
    };
    UnitQuaternion::new_normalize(q)
}

/// Pose of an absolute trajectory at `t`: translation lerp and rotation
/// slerp between the bracketing samples.
///
/// Queries up to half a sampling interval outside the covered span are
/// clamped to the end samples; anything further is refused.
pub fn interpolate_absolute(
    trajectory: &PoseTrajectory,
    t: Timestamp,
) -> Result<(Matrix3<f64>, Vector3<f64>), IngestError> {
    debug_assert_eq!(trajectory.convention(), Convention::Absolute);
    let entries = trajectory.entries();
    let half = trajectory.sample_interval().unwrap_or(0) / 2;
    let (first, last) = (trajectory.first_timestamp(), trajectory.last_timestamp());
    if t.0 < first.0 - half || t.0 > last.0 + half {
        return Err(IngestError::ExtrapolationRefused { timestamp: t, start: first, end: last });
    }
    let exact = |e: &StampedPose| (*e.pose.rotation(), *e.pose.translation());
    if t <= first {
        return Ok(exact(&entries[0]));
    }
    if t >= last {
        return Ok(exact(&entries[entries.len() - 1]));
    }
    let hi = entries.partition_point(|e| e.timestamp < t);
    if entries[hi].timestamp == t {
        return Ok(exact(&entries[hi]));
    }
    let (a, b) = (&entries[hi - 1], &entries[hi]);
    let s = (t.0 - a.timestamp.0) as f64 / (b.timestamp.0 - a.timestamp.0) as f64;
    let translation = a.pose.translation() * (1.0 - s) + b.pose.translation() * s;
    let q = slerp(&a.pose.quaternion(), &b.pose.quaternion(), s);
    Ok((q.to_rotation_matrix().into_inner(), translation))
}

fn select_frames(frames: &FrameSequence, params: &ResampleParams) -> Result<Vec<usize>, IngestError> {
    let stamps = frames.timestamps();
    if stamps.is_empty() {
        return Ok(Vec::new());
    }
    let t0 = stamps[0].0;
    let mut picked: Vec<usize> = match params.target_fps {
        Some(fps) if !(fps > 0.0) || !fps.is_finite() => {
            return Err(IngestError::InvalidParameter(format!("target fps must be positive, got {fps}")))
        }
        Some(fps) if frames.estimated_rate_hz().is_some_and(|r| fps < r * (1.0 - 1e-6)) => {
            let period = Timestamp::NANOS_PER_SEC as f64 / fps;
            let end = stamps[stamps.len() - 1].0;
            let mut out: Vec<usize> = Vec::new();
            let mut k = 0u64;
            loop {
                let target = t0 + (k as f64 * period).round() as i64;
                if target > end {
                    break;
                }
                let hi = stamps.partition_point(|s| s.0 < target);
                let nearest = if hi == 0 {
                    0
                } else if hi == stamps.len() || target - stamps[hi - 1].0 <= stamps[hi].0 - target {
                    hi - 1
                } else {
                    hi
                };
                if out.last() != Some(&nearest) {
                    out.push(nearest);
                }
                k += 1;
            }
            out
        }
        _ => (0..stamps.len()).collect(),
    };
    if let Some(clip) = params.clip_seconds {
        let limit = (clip * Timestamp::NANOS_PER_SEC as f64).round() as i64;
        picked.retain(|&i| stamps[i].0 - t0 < limit);
    }
    Ok(picked)
}

/// Downsample and crop `frames`, then give each retained frame the pose
/// of `poses` at `frame time + time_offset`.
pub fn align_and_resample(
    frames: &FrameSequence,
    poses: &PoseTrajectory,
    params: &ResampleParams,
) -> Result<AlignedSequence, IngestError> {
    let indices = select_frames(frames, params)?;
    if indices.is_empty() {
        return Err(IngestError::InvalidParameter("no frames left after resampling".into()));
    }
    let absolute = poses.to_absolute();
    let mut samples = Vec::with_capacity(indices.len());
    for &i in &indices {
        let t = frames.frames()[i].timestamp;
        let (r, d) = interpolate_absolute(&absolute, t.offset_by_secs(params.time_offset))?;
        samples.push((t, r, d));
    }
    let aligned = PoseTrajectory::from_samples(samples, Convention::Absolute, poses.source())?;
    let rate = params.target_fps.unwrap_or(frames.rate_hz()).min(frames.rate_hz());
    Ok(AlignedSequence {
        frames: frames.subset(&indices, rate),
        frame_indices: indices,
        poses: aligned.to_convention(poses.convention()),
    })
}

/// Pose-convention-aware wrapper returning a single `Pose`.
pub fn pose_at(trajectory: &PoseTrajectory, t: Timestamp) -> Result<Pose, IngestError> {
    let (r, d) = interpolate_absolute(&trajectory.to_absolute(), t)?;
    Ok(Pose::new(r, d, crate::geometry::FrameId::Body(t), crate::geometry::FrameId::Fixed)?)
}
