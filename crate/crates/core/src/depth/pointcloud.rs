use nalgebra::Vector3;

use crate::geometry::{CameraModel, FrameId, ImagePoint, Pose};

use super::{DepthError, SparseDepthImage};

/// Project a fixed-frame point cloud into the camera at `fixed_to_camera`,
/// keeping one sample per pixel.
///
/// Points behind the camera or outside the image are dropped. Points are
/// bucketed by their rounded pixel and the nearest one of each bucket is
/// kept at its exact sub-pixel location. Samples come out in row-major
/// bucket order.
pub fn project_pointcloud(
    cloud: &[Vector3<f64>],
    fixed_to_camera: &Pose,
    cam: &CameraModel,
) -> Result<Vec<(ImagePoint, f64)>, DepthError> {
    if fixed_to_camera.from_frame() != FrameId::Fixed || !fixed_to_camera.to_frame().is_camera() {
        return Err(DepthError::WrongFrames {
            expected: "Fixed -> Camera",
            found: format!("{} -> {}", fixed_to_camera.from_frame(), fixed_to_camera.to_frame()),
        });
    }
    let width = cam.width as usize;
    let mut buckets: Vec<Option<(ImagePoint, f64)>> = vec![None; width * cam.height as usize];
    for point in cloud {
        let p = fixed_to_camera.apply(point);
        let Ok(px) = cam.project_coords(&p) else {
            continue;
        };
        if !cam.contains(&px) {
            continue;
        }
        let x = (px.u.round() as usize).min(width - 1);
        let y = (px.v.round() as usize).min(cam.height as usize - 1);
        let slot = &mut buckets[y * width + x];
        match slot {
            Some((_, existing)) if *existing <= p.z => {}
            _ => *slot = Some((px, p.z)),
        }
    }
    let samples: Vec<(ImagePoint, f64)> = buckets.into_iter().flatten().collect();
    if samples.is_empty() {
        return Err(DepthError::EmptyDepthImage);
    }
    Ok(samples)
}

/// Render a scanned point cloud (fixed-frame coordinates) into a sparse
/// depth image for the camera at `fixed_to_camera`.
///
/// Each visible point writes its camera-frame z at its rounded pixel. Points
/// behind the camera or outside the image are dropped; when several points
/// land on one pixel the nearest one wins.
pub fn depth_from_pointcloud(
    cloud: &[Vector3<f64>],
    fixed_to_camera: &Pose,
    cam: &CameraModel,
) -> Result<SparseDepthImage, DepthError> {
    let mut image = SparseDepthImage::empty(cam.width, cam.height);
    for (px, z) in project_pointcloud(cloud, fixed_to_camera, cam)? {
        let x = (px.u.round() as u32).min(cam.width - 1);
        let y = (px.v.round() as u32).min(cam.height - 1);
        image.set(x, y, Some(z));
    }
    Ok(image)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::rotation::rot_x;
    use crate::geometry::Timestamp;

    const CAM: FrameId = FrameId::Camera(Timestamp(0));

    fn camera() -> CameraModel {
        CameraModel::pinhole(100.0, 100.0, 32.0, 24.0, 64, 48).unwrap()
    }

    #[test]
    fn single_point_on_axis() {
        let pose = Pose::identity(FrameId::Fixed).relabel(FrameId::Fixed, CAM);
        let img = depth_from_pointcloud(&[Vector3::new(0.0, 0.0, 4.0)], &pose, &camera()).unwrap();
        assert_eq!(img.sample_count(), 1);
        assert_eq!(img.get(32, 24), Some(4.0));
    }

    #[test]
    fn nearest_surface_wins() {
        let pose = Pose::identity(FrameId::Fixed).relabel(FrameId::Fixed, CAM);
        for cloud in [
            [Vector3::new(0.0, 0.0, 5.0), Vector3::new(0.0, 0.0, 3.0)],
            [Vector3::new(0.0, 0.0, 3.0), Vector3::new(0.0, 0.0, 5.0)],
        ] {
            let img = depth_from_pointcloud(&cloud, &pose, &camera()).unwrap();
            assert_eq!(img.get(32, 24), Some(3.0));
        }
    }

    #[test]
    fn nothing_in_view_is_an_error() {
        let pose = Pose::identity(FrameId::Fixed).relabel(FrameId::Fixed, CAM);
        let cloud = [Vector3::new(0.0, 0.0, -4.0), Vector3::new(100.0, 0.0, 1.0)];
        assert!(matches!(depth_from_pointcloud(&cloud, &pose, &camera()), Err(DepthError::EmptyDepthImage)));
    }

    #[test]
    fn floor_grid_matches_per_point_projection() {
        // camera 2 m above the floor, looking down, slightly offset
        let camera_to_fixed =
            Pose::new(rot_x(std::f64::consts::PI), Vector3::new(0.1, -0.2, 2.0), CAM, FrameId::Fixed).unwrap();
        let fixed_to_camera = camera_to_fixed.inverse();
        let cloud: Vec<_> = (0..10)
            .flat_map(|i| (0..10).map(move |j| Vector3::new(-0.45 + 0.1 * i as f64, -0.45 + 0.1 * j as f64, 0.0)))
            .collect();
        let cam = camera();
        let img = depth_from_pointcloud(&cloud, &fixed_to_camera, &cam).unwrap();
        let mut expected = 0;
        for p in &cloud {
            let pc = fixed_to_camera.apply(p);
            let px = cam.project_coords(&pc).unwrap();
            if !cam.contains(&px) {
                continue;
            }
            expected += 1;
            assert_eq!(img.get(px.u.round() as u32, px.v.round() as u32), Some(pc.z));
        }
        assert_eq!(img.sample_count(), expected);
        assert!(expected > 10);
    }
}
