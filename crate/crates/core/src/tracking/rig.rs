use std::collections::BTreeMap;

use nalgebra::{Matrix3, Vector3};

use crate::geometry::{FrameId, GeometryError, Pose, Timestamp};

use super::TrackingError;

/// Camera mounting on the body: `T^{B,C}`, constant or tabulated per
/// frame timestamp.
#[derive(Debug, Clone, PartialEq)]
pub struct RigConfig {
    constant: Pose,
    table: Option<BTreeMap<Timestamp, Pose>>,
}

fn normalize(pose: &Pose, t: Timestamp) -> Pose {
    pose.relabel(FrameId::Camera(t), FrameId::Body(t))
}

impl RigConfig {
    /// A constant extrinsic. Frame labels of `body_from_camera` are ignored.
    pub fn constant(body_from_camera: &Pose) -> Self {
        RigConfig { constant: normalize(body_from_camera, Timestamp(0)), table: None }
    }

    pub fn from_parts(rotation: Matrix3<f64>, translation: Vector3<f64>) -> Result<Self, GeometryError> {
        let pose = Pose::new(rotation, translation, FrameId::Camera(Timestamp(0)), FrameId::Body(Timestamp(0)))?;
        Ok(RigConfig { constant: pose, table: None })
    }

    /// Camera and body frames coincide.
    pub fn identity() -> Self {
        RigConfig::constant(&Pose::identity(FrameId::Fixed))
    }

    /// Per-timestamp extrinsics; every frame queried later must appear.
    pub fn time_varying(entries: impl IntoIterator<Item = (Timestamp, Pose)>) -> Self {
        let table: BTreeMap<Timestamp, Pose> = entries.into_iter().map(|(t, p)| (t, normalize(&p, t))).collect();
        let constant = table.values().next().copied().unwrap_or_else(|| normalize(&Pose::identity(FrameId::Fixed), Timestamp(0)));
        RigConfig { constant, table: Some(table) }
    }

    pub fn is_time_varying(&self) -> bool {
        self.table.is_some()
    }

    /// The constant extrinsic, or the first table entry.
    pub fn nominal(&self) -> &Pose {
        &self.constant
    }

    /// `T^{B_t,C_t}`.
    pub fn body_from_camera(&self, t: Timestamp) -> Result<Pose, TrackingError> {
        match &self.table {
            None => Ok(normalize(&self.constant, t)),
            Some(table) => table.get(&t).copied().ok_or(TrackingError::MissingExtrinsic(t)),
        }
    }

    /// `T^{C_t,B_t}`.
    pub fn camera_from_body(&self, t: Timestamp) -> Result<Pose, TrackingError> {
        Ok(self.body_from_camera(t)?.inverse())
    }

    /// Fails on the first timestamp a time-varying table does not cover.
    pub fn check_covers(&self, timestamps: impl IntoIterator<Item = Timestamp>) -> Result<(), TrackingError> {
        if let Some(table) = &self.table {
            if let Some(t) = timestamps.into_iter().find(|t| !table.contains_key(t)) {
                return Err(TrackingError::MissingExtrinsic(t));
            }
        }
        Ok(())
    }
}
