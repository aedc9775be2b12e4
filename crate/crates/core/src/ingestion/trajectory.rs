use std::fmt;
use std::str::FromStr;

use nalgebra::{Matrix3, UnitQuaternion, Vector3};

use crate::geometry::{FrameId, Pose, Timestamp};

use super::TrajectoryError;

/// How the poses of a trajectory relate frames.
///
/// * `Absolute`: entry `i` is `T^{F,B_i}`, body at `t_i` into the fixed frame.
/// * `Relative`: entry 0 is the anchor `T^{F,B_0}`; entry `i > 0` is the step
///   `T^{B_i,B_{i-1}}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Convention {
    Absolute,
    Relative,
}

impl FromStr for Convention {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "absolute" => Ok(Convention::Absolute),
            "relative" => Ok(Convention::Relative),
            other => Err(format!("unknown pose convention '{other}' (expected absolute or relative)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PoseSource {
    OnBoard,
    Mocap,
    SyntheticTruth,
}

impl PoseSource {
    pub fn label(&self) -> &'static str {
        match self {
            PoseSource::OnBoard => "onboard",
            PoseSource::Mocap => "mocap",
            PoseSource::SyntheticTruth => "synthetic-truth",
        }
    }
}

impl fmt::Display for PoseSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StampedPose {
    pub timestamp: Timestamp,
    pub pose: Pose,
}

/// Timestamped poses from one source, strictly increasing in time.
#[derive(Debug, Clone, PartialEq)]
pub struct PoseTrajectory {
    entries: Vec<StampedPose>,
    convention: Convention,
    source: PoseSource,
}

fn expected_frames(convention: Convention, entries: &[StampedPose], i: usize) -> (FrameId, FrameId) {
    let t = entries[i].timestamp;
    match (convention, i) {
        (Convention::Absolute, _) | (Convention::Relative, 0) => (FrameId::Body(t), FrameId::Fixed),
        (Convention::Relative, _) => (FrameId::Body(entries[i - 1].timestamp), FrameId::Body(t)),
    }
}

impl PoseTrajectory {
    pub fn new(entries: Vec<StampedPose>, convention: Convention, source: PoseSource) -> Result<Self, TrajectoryError> {
        if entries.is_empty() {
            return Err(TrajectoryError::Empty);
        }
        for i in 1..entries.len() {
            if entries[i].timestamp <= entries[i - 1].timestamp {
                return Err(TrajectoryError::NonMonotonic {
                    index: i,
                    previous: entries[i - 1].timestamp,
                    current: entries[i].timestamp,
                });
            }
        }
        for i in 0..entries.len() {
            let (from, to) = expected_frames(convention, &entries, i);
            let pose = &entries[i].pose;
            if pose.from_frame() != from || pose.to_frame() != to {
                return Err(TrajectoryError::FrameLabels {
                    index: i,
                    expected: format!("{from} -> {to}"),
                    found: format!("{} -> {}", pose.from_frame(), pose.to_frame()),
                });
            }
        }
        Ok(PoseTrajectory { entries, convention, source })
    }

    /// Build from raw `(timestamp, rotation, translation)` samples, labelling
    /// frames according to `convention`.
    pub fn from_samples(
        samples: impl IntoIterator<Item = (Timestamp, Matrix3<f64>, Vector3<f64>)>,
        convention: Convention,
        source: PoseSource,
    ) -> Result<Self, TrajectoryError> {
        let mut entries: Vec<StampedPose> = Vec::new();
        for (i, (timestamp, rotation, translation)) in samples.into_iter().enumerate() {
            let (from, to) = match (convention, entries.last()) {
                (Convention::Relative, Some(prev)) => (FrameId::Body(prev.timestamp), FrameId::Body(timestamp)),
                _ => (FrameId::Body(timestamp), FrameId::Fixed),
            };
            let pose = Pose::new(rotation, translation, from, to).map_err(|source| TrajectoryError::Pose { index: i, source })?;
            entries.push(StampedPose { timestamp, pose });
        }
        PoseTrajectory::new(entries, convention, source)
    }

    /// Same as [`PoseTrajectory::from_samples`] with quaternion rotations.
    pub fn from_quaternions(
        samples: impl IntoIterator<Item = (Timestamp, UnitQuaternion<f64>, Vector3<f64>)>,
        convention: Convention,
        source: PoseSource,
    ) -> Result<Self, TrajectoryError> {
        PoseTrajectory::from_samples(
            samples.into_iter().map(|(t, q, d)| (t, q.to_rotation_matrix().into_inner(), d)),
            convention,
            source,
        )
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[StampedPose] {
        &self.entries
    }

    pub fn convention(&self) -> Convention {
        self.convention
    }

    pub fn source(&self) -> PoseSource {
        self.source
    }

    pub fn with_source(mut self, source: PoseSource) -> Self {
        self.source = source;
        self
    }

    pub fn timestamps(&self) -> impl Iterator<Item = Timestamp> + '_ {
        self.entries.iter().map(|e| e.timestamp)
    }

    pub fn first_timestamp(&self) -> Timestamp {
        self.entries[0].timestamp
    }

    pub fn last_timestamp(&self) -> Timestamp {
        self.entries[self.entries.len() - 1].timestamp
    }

    /// Median spacing between consecutive samples, in nanoseconds.
    pub fn sample_interval(&self) -> Option<i64> {
        let mut gaps: Vec<i64> = self.entries.windows(2).map(|w| w[1].timestamp.0 - w[0].timestamp.0).collect();
        if gaps.is_empty() {
            return None;
        }
        gaps.sort_unstable();
        Some(gaps[gaps.len() / 2])
    }

    pub fn to_absolute(&self) -> PoseTrajectory {
        match self.convention {
            Convention::Absolute => self.clone(),
            Convention::Relative => {
                let mut out = Vec::with_capacity(self.entries.len());
                let mut current = self.entries[0].pose;
                out.push(self.entries[0]);
                for e in &self.entries[1..] {
                    current = current.compose(&e.pose.inverse()).expect("consecutive frame labels");
                    out.push(StampedPose { timestamp: e.timestamp, pose: current });
                }
                PoseTrajectory { entries: out, convention: Convention::Absolute, source: self.source }
            }
        }
    }

    pub fn to_relative(&self) -> PoseTrajectory {
        match self.convention {
            Convention::Relative => self.clone(),
            Convention::Absolute => {
                let mut out = Vec::with_capacity(self.entries.len());
                out.push(self.entries[0]);
                for w in self.entries.windows(2) {
                    let step = w[1].pose.inverse().compose(&w[0].pose).expect("shared fixed frame");
                    out.push(StampedPose { timestamp: w[1].timestamp, pose: step });
                }
                PoseTrajectory { entries: out, convention: Convention::Relative, source: self.source }
            }
        }
    }

    pub fn to_convention(&self, convention: Convention) -> PoseTrajectory {
        match convention {
            Convention::Absolute => self.to_absolute(),
            Convention::Relative => self.to_relative(),
        }
    }

    /// Body motion `T^{B_i,B_{i-1}}` for `i >= 1`.
    pub fn step(&self, i: usize) -> Pose {
        match self.convention {
            Convention::Relative => self.entries[i].pose,
            Convention::Absolute => self.entries[i]
                .pose
                .inverse()
                .compose(&self.entries[i - 1].pose)
                .expect("shared fixed frame"),
        }
    }

    /// Positions in the fixed frame, `d` of each absolute pose.
    pub fn positions(&self) -> Vec<Vector3<f64>> {
        self.to_absolute().entries.iter().map(|e| *e.pose.translation()).collect()
    }

    /// Orientations in the fixed frame, `R` of each absolute pose.
    pub fn rotations(&self) -> Vec<Matrix3<f64>> {
        self.to_absolute().entries.iter().map(|e| *e.pose.rotation()).collect()
    }

    /// Sub-trajectory of the given entries, re-anchored so the result keeps
    /// this trajectory's convention.
    pub fn select(&self, indices: &[usize]) -> Result<PoseTrajectory, TrajectoryError> {
        if let Some(&index) = indices.iter().find(|&&i| i >= self.entries.len()) {
            return Err(TrajectoryError::OutOfRange { index, len: self.entries.len() });
        }
        let abs = self.to_absolute();
        let picked: Vec<StampedPose> = indices.iter().map(|&i| abs.entries[i]).collect();
        let picked = PoseTrajectory::new(picked, Convention::Absolute, self.source)?;
        Ok(picked.to_convention(self.convention))
    }
}
