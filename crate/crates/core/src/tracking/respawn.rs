use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::geometry::{CameraModel, ImagePoint};
use crate::ingestion::AnnotationTrack;

use super::{KeypointTrack, TrackSegment, Tracker, TrackingError};

/// Where the reference pixel of a new segment comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum Initializer {
    /// The same image location at every segment start.
    Fixed(ImagePoint),
    /// Uniform in the central 60% of the image; one stream per track.
    SeededRandom { seed: u64 },
    /// The annotation of the segment's first frame.
    FromAnnotations,
}

impl Initializer {
    fn rng(seed: u64, track_id: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(track_id);
        rng
    }

    fn pick(
        &self,
        frame: usize,
        camera: &CameraModel,
        annotations: Option<&AnnotationTrack>,
        rng: &mut Option<ChaCha8Rng>,
    ) -> Result<ImagePoint, TrackingError> {
        let p = match self {
            Initializer::Fixed(p) => *p,
            Initializer::SeededRandom { .. } => {
                let rng = rng.as_mut().expect("seeded initializer has a generator");
                let (w, h) = (camera.width as f64, camera.height as f64);
                ImagePoint::new(rng.random_range(0.2 * w..0.8 * w), rng.random_range(0.2 * h..0.8 * h))
            }
            Initializer::FromAnnotations => annotations
                .and_then(|a| a.point_at(frame))
                .map(|a| a.pixel())
                .ok_or(TrackingError::Respawn { frame, reason: "no annotation at this frame".into() })?,
        };
        if !camera.contains(&p) {
            return Err(TrackingError::Respawn { frame, reason: format!("reference ({}, {}) is outside the image", p.u, p.v) });
        }
        Ok(p)
    }
}

/// Track one keypoint over the whole sequence, starting a new segment
/// whenever the predicted pixel leaves the image or the annotation of the
/// frame is flagged as a respawn.
///
/// Each segment lifts its own reference and accumulates motion from its
/// own first frame.
pub fn run_track_with_respawn(
    track_id: u64,
    initializer: &Initializer,
    tracker: &Tracker,
    annotations: Option<&AnnotationTrack>,
) -> Result<KeypointTrack, TrackingError> {
    if tracker.is_empty() {
        return Err(TrackingError::FrameOutOfRange { frame: 0, len: 0 });
    }
    let camera = tracker.camera();
    let mut rng = match initializer {
        Initializer::SeededRandom { seed } => Some(Initializer::rng(*seed, track_id)),
        _ => None,
    };
    let respawn_flags = annotations.map(|a| a.respawn_frames()).unwrap_or_default();
    let mut segments = Vec::new();
    let mut start = 0;
    while start < tracker.len() {
        let reference = initializer.pick(start, camera, annotations, &mut rng)?;
        let point = tracker.lift(&reference, start).map_err(|e| match e {
            TrackingError::Depth { frame, source } => TrackingError::Respawn { frame, reason: source.to_string() },
            other => other,
        })?;
        let mut propagation = tracker.propagate(&reference, &point, start);
        let mut points = Vec::new();
        loop {
            let frame = propagation.frame();
            if frame > start && respawn_flags.contains(&frame) {
                break;
            }
            let Some(p) = propagation.next() else { break };
            let p = p?;
            if p.is_some_and(|p| !camera.contains(&p)) {
                break;
            }
            points.push(p);
        }
        start += points.len();
        segments.push(TrackSegment { start_frame: start - points.len(), reference, reference_point: Some(point), points });
    }
    Ok(KeypointTrack { track_id, segments })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::depth::DepthProvider;
    use crate::geometry::rotation::rot_x;
    use crate::geometry::{FrameId, Pose, Timestamp};
    use crate::ingestion::{AnnotatedPoint, Convention, PoseSource, PoseTrajectory};
    use crate::tracking::RigConfig;
    use nalgebra::{Matrix3, Vector3};

    /// Camera 2 m above the floor looking down, translating along +x by
    /// `speed` per frame.
    fn pan(n: usize, speed: f64) -> (Tracker, CameraModel) {
        let cam = CameraModel::pinhole(400.0, 400.0, 320.0, 240.0, 640, 480).unwrap();
        let poses = PoseTrajectory::from_samples(
            (0..n).map(|k| (Timestamp(k as i64), Matrix3::identity(), Vector3::new(speed * k as f64, 0.0, 2.0))),
            Convention::Absolute,
            PoseSource::OnBoard,
        )
        .unwrap();
        let rig = RigConfig::from_parts(rot_x(std::f64::consts::PI), Vector3::zeros()).unwrap();
        let initial = Pose::new(rot_x(std::f64::consts::PI), Vector3::new(0.0, 0.0, 2.0), FrameId::Camera(Timestamp(0)), FrameId::Fixed).unwrap();
        let depth = DepthProvider::FloorPlane { initial_camera_to_fixed: initial };
        (Tracker::new(&poses, &rig, &cam, &depth).unwrap(), cam)
    }

    #[test]
    fn point_in_view_gives_one_segment() {
        let (tracker, _) = pan(10, 0.01);
        let t = run_track_with_respawn(0, &Initializer::Fixed(ImagePoint::new(320.0, 240.0)), &tracker, None).unwrap();
        assert_eq!(t.segments.len(), 1);
        assert_eq!(t.segments[0].points.len(), 10);
    }

    #[test]
    fn pan_out_of_view_splits_at_the_exit_frame() {
        // Camera x = body x; the floor point slides to -u by 400 * 0.5 / 2
        // = 100 px per frame from u = 320: at frame 4 it sits at u = -80.
        let (tracker, cam) = pan(8, 0.5);
        let t = run_track_with_respawn(0, &Initializer::Fixed(ImagePoint::new(320.0, 240.0)), &tracker, None).unwrap();
        let first_exit = (0..8)
            .find(|&k| !cam.contains(&ImagePoint::new(320.0 - 100.0 * k as f64, 240.0)))
            .unwrap();
        assert_eq!(first_exit, 4);
        assert_eq!(t.respawn_frames(), vec![4]);
        assert_eq!(t.segments.len(), 2);
        assert_eq!(t.segments[1].points[0], Some(ImagePoint::new(320.0, 240.0)));
        assert_eq!(t.frame_count(), 8);
        t.validate().unwrap();
    }

    #[test]
    fn annotation_respawn_flag_starts_a_segment() {
        let (tracker, _) = pan(6, 0.01);
        let mut ann = AnnotationTrack::new(1);
        for k in 0..6 {
            ann.upsert(AnnotatedPoint::new(k, 300.0 + k as f64, 200.0, k == 3));
        }
        let t = run_track_with_respawn(1, &Initializer::FromAnnotations, &tracker, Some(&ann)).unwrap();
        assert_eq!(t.respawn_frames(), vec![3]);
        assert_eq!(t.segments[1].reference, ImagePoint::new(303.0, 200.0));
    }

    #[test]
    fn single_frame_sequence() {
        let (tracker, _) = pan(1, 0.0);
        let r = ImagePoint::new(12.5, 7.0);
        let t = run_track_with_respawn(0, &Initializer::Fixed(r), &tracker, None).unwrap();
        assert_eq!(t.segments.len(), 1);
        assert_eq!(t.segments[0].points, vec![Some(r)]);
    }

    #[test]
    fn missing_annotation_is_a_located_respawn_error() {
        let (tracker, _) = pan(8, 0.5);
        let mut ann = AnnotationTrack::new(0);
        ann.upsert(AnnotatedPoint::new(0, 320.0, 240.0, false));
        let err = run_track_with_respawn(0, &Initializer::FromAnnotations, &tracker, Some(&ann)).unwrap_err();
        assert!(matches!(err, TrackingError::Respawn { frame: 4, .. }), "{err}");
    }

    #[test]
    fn seeded_random_is_reproducible_and_central() {
        let (tracker, cam) = pan(8, 0.5);
        let init = Initializer::SeededRandom { seed: 9 };
        let a = run_track_with_respawn(3, &init, &tracker, None).unwrap();
        let b = run_track_with_respawn(3, &init, &tracker, None).unwrap();
        assert_eq!(a, b);
        for s in &a.segments {
            assert!(s.reference.u >= 0.2 * cam.width as f64 && s.reference.u < 0.8 * cam.width as f64);
            assert!(s.reference.v >= 0.2 * cam.height as f64 && s.reference.v < 0.8 * cam.height as f64);
        }
        let c = run_track_with_respawn(4, &init, &tracker, None).unwrap();
        assert_ne!(a.segments[0].reference, c.segments[0].reference);
    }
}
