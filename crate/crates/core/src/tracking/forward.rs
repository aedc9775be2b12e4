use crate::depth::{DepthProvider, DepthQuery};
use crate::geometry::{CameraModel, FrameId, ImagePoint, Pose, ScenePoint, Timestamp};
use crate::ingestion::PoseTrajectory;

use super::{RigConfig, TrackSegment, TrackingError};

/// Everything needed to push reference pixels forward through one pose
/// estimate. Entry `k` of the trajectory belongs to frame `k`.
#[derive(Debug, Clone)]
pub struct Tracker {
    timestamps: Vec<Timestamp>,
    /// `T^{B_k,B_{k-1}}`; entry 0 is unused.
    steps: Vec<Pose>,
    /// `T^{F,B_k}` from the same estimate.
    absolute: Vec<Pose>,
    /// `T^{B_k,C_k}`.
    body_from_camera: Vec<Pose>,
    camera: CameraModel,
    depth: DepthProvider,
}

impl Tracker {
    pub fn new(poses: &PoseTrajectory, rig: &RigConfig, camera: &CameraModel, depth: &DepthProvider) -> Result<Self, TrackingError> {
        let timestamps: Vec<Timestamp> = poses.timestamps().collect();
        let relative = poses.to_relative();
        let absolute = poses.to_absolute();
        let body_from_camera = timestamps.iter().map(|&t| rig.body_from_camera(t)).collect::<Result<Vec<_>, _>>()?;
        Ok(Tracker {
            steps: (0..relative.len()).map(|i| relative.entries()[i].pose).collect(),
            absolute: absolute.entries().iter().map(|e| e.pose).collect(),
            timestamps,
            body_from_camera,
            camera: *camera,
            depth: depth.clone(),
        })
    }

    pub fn len(&self) -> usize {
        self.timestamps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.timestamps.is_empty()
    }

    pub fn camera(&self) -> &CameraModel {
        &self.camera
    }

    pub fn depth(&self) -> &DepthProvider {
        &self.depth
    }

    /// `T^{F,C_k}` according to the estimate.
    pub fn camera_to_fixed(&self, k: usize) -> Pose {
        self.absolute[k].compose(&self.body_from_camera[k]).expect("consistent frame labels")
    }

    /// Estimated camera motion `T^{C_0,C_k}`.
    pub fn camera_motion(&self, k: usize) -> Pose {
        self.camera_to_fixed(0).inverse().compose(&self.camera_to_fixed(k)).expect("consistent frame labels")
    }

    /// Lift `reference` at frame `start` into the body frame `B_start`.
    pub fn lift(&self, reference: &ImagePoint, start: usize) -> Result<ScenePoint, TrackingError> {
        let query = DepthQuery { frame_index: start, camera_motion: self.camera_motion(start) };
        let p_c = self
            .depth
            .scene_point(&self.camera, reference, &query)
            .map_err(|source| TrackingError::Depth { frame: start, source })?;
        Ok(self.body_from_camera[start].transform(&p_c)?)
    }

    /// Predicted pixel of a body-frame point at `start` in frames
    /// `start..end`, accumulating `T^{B_T,B_start}` one step at a time.
    /// Frame `start` reports `reference` itself.
    pub fn propagate(&self, reference: &ImagePoint, point: &ScenePoint, start: usize) -> Propagation<'_> {
        Propagation {
            tracker: self,
            reference: *reference,
            point: *point,
            start,
            next: start,
            accumulated: Pose::identity(FrameId::Body(self.timestamps[start])),
        }
    }

    /// Forward-tracks `reference` from `start` to the end of the sequence
    /// without respawning.
    pub fn track_point(&self, reference: &ImagePoint, start: usize) -> Result<TrackSegment, TrackingError> {
        if start >= self.len() {
            return Err(TrackingError::FrameOutOfRange { frame: start, len: self.len() });
        }
        let point = self.lift(reference, start)?;
        let points = self.propagate(reference, &point, start).collect::<Result<Vec<_>, _>>()?;
        Ok(TrackSegment { start_frame: start, reference: *reference, reference_point: Some(point), points })
    }
}

/// Iterator over the predicted pixels of one lifted point.
pub struct Propagation<'a> {
    tracker: &'a Tracker,
    reference: ImagePoint,
    point: ScenePoint,
    start: usize,
    next: usize,
    /// `T^{B_next-1,B_start}` after the previous item.
    accumulated: Pose,
}

impl Propagation<'_> {
    pub fn frame(&self) -> usize {
        self.next
    }
}

impl Propagation<'_> {
    fn advance(&mut self, k: usize) -> Result<Option<ImagePoint>, TrackingError> {
        let t = self.tracker;
        self.accumulated = t.steps[k].compose(&self.accumulated)?;
        let in_body = self.accumulated.transform(&self.point)?;
        let in_camera = t.body_from_camera[k].inverse().transform(&in_body)?;
        Ok(t.camera.project(&in_camera).ok())
    }
}

impl Iterator for Propagation<'_> {
    type Item = Result<Option<ImagePoint>, TrackingError>;

    fn next(&mut self) -> Option<Self::Item> {
        let t = self.tracker;
        let k = self.next;
        if k >= t.len() {
            return None;
        }
        self.next += 1;
        if k == self.start {
            return Some(Ok(Some(self.reference)));
        }
        Some(self.advance(k))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::depth::DepthImage;
    use crate::geometry::rotation::rot_z;
    use crate::ingestion::{Convention, PoseSource};
    use approx::assert_abs_diff_eq;
    use nalgebra::{Matrix3, Vector3};
    use std::collections::BTreeMap;
    use std::sync::Arc;

    fn constant_depth(cam: &CameraModel, depth: f64) -> DepthProvider {
        let data = vec![Some(depth); cam.width as usize * cam.height as usize];
        let img = DepthImage::from_data(cam.width, cam.height, data).unwrap();
        DepthProvider::Sensor { frames: Arc::new(BTreeMap::from([(0, img.clone()), (1, img)])) }
    }

    /// Camera looking along body +x with image x along body -y.
    fn forward_rig() -> RigConfig {
        RigConfig::from_parts(Matrix3::new(0.0, 0.0, 1.0, -1.0, 0.0, 0.0, 0.0, -1.0, 0.0), Vector3::zeros()).unwrap()
    }

    fn yaw_trajectory(theta: f64, n: usize) -> PoseTrajectory {
        PoseTrajectory::from_samples(
            (0..n).map(|k| (Timestamp(k as i64 * 100), rot_z(theta * k as f64), Vector3::zeros())),
            Convention::Absolute,
            PoseSource::OnBoard,
        )
        .unwrap()
    }

    #[test]
    fn identity_motion_keeps_the_reference() {
        let cam = CameraModel::euroc_cam0();
        let poses = PoseTrajectory::from_samples(
            (0..5).map(|k| (Timestamp(k), Matrix3::identity(), Vector3::new(0.0, 0.0, 1.0))),
            Convention::Absolute,
            PoseSource::OnBoard,
        )
        .unwrap();
        let tracker = Tracker::new(&poses, &forward_rig(), &cam, &constant_depth(&cam, 3.0)).unwrap();
        let r = ImagePoint::new(100.25, 300.5);
        let seg = tracker.track_point(&r, 0).unwrap();
        for p in &seg.points {
            assert!(p.unwrap().distance(&r) < 1e-9);
        }
    }

    #[test]
    fn pure_yaw_moves_the_pixel_by_fx_tan() {
        // Hand derivation: the point (5,0,0) in B_0 is (5 cos kθ, -5 sin kθ, 0)
        // in B_k, i.e. camera (5 sin kθ, 0, 5 cos kθ), so u = cx + fx tan kθ.
        let cam = CameraModel::pinhole(400.0, 400.0, 320.0, 240.0, 640, 480).unwrap();
        let theta = 0.1;
        let tracker = Tracker::new(&yaw_trajectory(theta, 4), &forward_rig(), &cam, &constant_depth(&cam, 5.0)).unwrap();
        let seg = tracker.track_point(&ImagePoint::new(320.0, 240.0), 0).unwrap();
        let expected_u = [320.0, 320.0 + 400.0 * 0.1f64.tan(), 320.0 + 400.0 * 0.2f64.tan(), 320.0 + 400.0 * 0.3f64.tan()];
        for (p, u) in seg.points.iter().zip(expected_u) {
            let p = p.unwrap();
            assert_abs_diff_eq!(p.u, u, epsilon = 1e-9);
            assert_abs_diff_eq!(p.v, 240.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn point_behind_camera_is_absent() {
        let cam = CameraModel::pinhole(400.0, 400.0, 320.0, 240.0, 640, 480).unwrap();
        let tracker = Tracker::new(&yaw_trajectory(1.2, 3), &forward_rig(), &cam, &constant_depth(&cam, 5.0)).unwrap();
        let seg = tracker.track_point(&ImagePoint::new(320.0, 240.0), 0).unwrap();
        assert!(seg.points[1].is_some());
        assert!(seg.points[2].is_none());
    }

    #[test]
    fn accumulated_steps_equal_direct_relative_pose() {
        use crate::geometry::rotation::rotation_exp;
        let poses = PoseTrajectory::from_samples(
            (0..30).map(|k| {
                let k = k as f64;
                (
                    Timestamp(k as i64),
                    rotation_exp(&Vector3::new(0.05 * k.sin(), 0.03 * k, -0.02 * k.cos())),
                    Vector3::new(k.cos(), 0.2 * k, 1.0 + 0.1 * k.sin()),
                )
            }),
            Convention::Absolute,
            PoseSource::OnBoard,
        )
        .unwrap();
        let cam = CameraModel::euroc_cam0();
        let tracker = Tracker::new(&poses, &RigConfig::identity(), &cam, &constant_depth(&cam, 1.0)).unwrap();
        let start = 4;
        let point = ScenePoint { position: Vector3::new(0.3, -0.2, 2.0), frame: FrameId::Body(Timestamp(start as i64)) };
        let mut it = tracker.propagate(&ImagePoint::new(0.0, 0.0), &point, start);
        it.next();
        for k in start + 1..30 {
            it.next();
            let abs = poses.entries();
            let direct = abs[k].pose.inverse().compose(&abs[start].pose).unwrap();
            assert!(it.accumulated.max_abs_diff(&direct) < 1e-9, "frame {k}");
        }
    }
}
