use crate::geometry::{CameraModel, FrameId, ImagePoint, Pose, ScenePoint};

use super::DepthError;

/// Camera placement relative to a floor that is the `z = 0` plane of the
/// fixed frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FloorPlaneConfig {
    camera_to_fixed: Pose,
    altitude: f64,
}

impl FloorPlaneConfig {
    /// `camera_to_fixed` maps camera coordinates into the fixed frame; the
    /// camera altitude is the z component of its translation.
    pub fn new(camera_to_fixed: Pose) -> Result<Self, DepthError> {
        if !camera_to_fixed.from_frame().is_camera() || camera_to_fixed.to_frame() != FrameId::Fixed {
            return Err(DepthError::WrongFrames {
                expected: "Camera -> Fixed",
                found: format!("{} -> {}", camera_to_fixed.from_frame(), camera_to_fixed.to_frame()),
            });
        }
        let altitude = camera_to_fixed.translation().z;
        if !(altitude > 0.0) || !altitude.is_finite() {
            return Err(DepthError::InvalidAltitude(altitude));
        }
        Ok(FloorPlaneConfig { camera_to_fixed, altitude })
    }

    /// Orientation plus measured altitude, with the camera above the fixed
    /// frame origin.
    pub fn from_attitude(
        rotation: nalgebra::Matrix3<f64>,
        altitude: f64,
        camera: FrameId,
    ) -> Result<Self, DepthError> {
        let pose = Pose::new(rotation, nalgebra::Vector3::new(0.0, 0.0, altitude), camera, FrameId::Fixed)?;
        FloorPlaneConfig::new(pose)
    }

    pub fn camera_to_fixed(&self) -> &Pose {
        &self.camera_to_fixed
    }

    pub fn altitude(&self) -> f64 {
        self.altitude
    }
}

/// Intersect the viewing ray of `pixel` with the floor.
///
/// The unit-depth ray point `p̃` is rotated into the fixed frame; its
/// altitude drop below the optical centre `z₁` and the camera altitude `z₂`
/// give the floor point `(z₂ / z₁) p̃` in camera coordinates.
pub fn floor_depth(cfg: &FloorPlaneConfig, cam: &CameraModel, pixel: &ImagePoint) -> Result<ScenePoint, DepthError> {
    let ray = cam.unproject_coords(pixel, 1.0)?;
    let drop = -(cfg.camera_to_fixed.rotation() * ray).z;
    if !(drop > 0.0) {
        return Err(DepthError::NoIntersection { pixel: *pixel, drop });
    }
    Ok(ScenePoint::new(ray * (cfg.altitude / drop), cfg.camera_to_fixed.from_frame()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::rotation::{rot_x, rotation_exp};
    use crate::geometry::Timestamp;
    use approx::assert_abs_diff_eq;
    use nalgebra::{Matrix3, Vector3};

    const CAM: FrameId = FrameId::Camera(Timestamp(0));

    fn camera() -> CameraModel {
        CameraModel::pinhole(400.0, 400.0, 320.0, 240.0, 640, 480).unwrap()
    }

    /// Camera looking straight down: optical axis = -z of the fixed frame.
    fn nadir() -> Matrix3<f64> {
        rot_x(std::f64::consts::PI)
    }

    /// Camera whose optical axis is pitched `angle` below the horizon,
    /// looking along +y of the fixed frame.
    fn pitched(angle: f64) -> Matrix3<f64> {
        // columns: camera x -> +x, camera z -> forward-and-down, camera y = z × x
        let z = Vector3::new(0.0, angle.cos(), -angle.sin());
        let x = Vector3::x();
        let y = z.cross(&x);
        Matrix3::from_columns(&[x, y, z])
    }

    #[test]
    fn straight_down_at_principal_point() {
        let cfg = FloorPlaneConfig::from_attitude(nadir(), 1.5, CAM).unwrap();
        let p = floor_depth(&cfg, &camera(), &ImagePoint::new(320.0, 240.0)).unwrap();
        assert_abs_diff_eq!(p.position, Vector3::new(0.0, 0.0, 1.5), epsilon = 1e-12);
    }

    #[test]
    fn pitched_45_degrees() {
        let cfg = FloorPlaneConfig::from_attitude(pitched(std::f64::consts::FRAC_PI_4), 2.0, CAM).unwrap();
        let p = floor_depth(&cfg, &camera(), &ImagePoint::new(320.0, 240.0)).unwrap();
        assert_abs_diff_eq!(p.position.norm(), 2.0 * 2f64.sqrt(), epsilon = 1e-12);
    }

    /// Marches along the viewing ray in the fixed frame and bisects the
    /// z = 0 crossing, without using the closed-form intersection.
    fn ray_march_oracle(cfg: &FloorPlaneConfig, cam: &CameraModel, px: &ImagePoint) -> Vector3<f64> {
        let ray = cam.unproject_coords(px, 1.0).unwrap();
        let altitude_at = |s: f64| cfg.camera_to_fixed().apply(&(ray * s)).z;
        let (mut lo, mut hi) = (0.0, 1e-3);
        while altitude_at(hi) > 0.0 {
            lo = hi;
            hi *= 1.5;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if altitude_at(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        ray * (0.5 * (lo + hi))
    }

    #[test]
    fn off_axis_matches_ray_march() {
        let pose = Pose::new(pitched(30f64.to_radians()), Vector3::new(0.3, -2.0, 1.0), CAM, FrameId::Fixed).unwrap();
        let cfg = FloorPlaneConfig::new(pose).unwrap();
        let cam = camera();
        for px in [ImagePoint::new(100.0, 400.0), ImagePoint::new(600.0, 300.0), ImagePoint::new(10.0, 470.0)] {
            let p = floor_depth(&cfg, &cam, &px).unwrap();
            let oracle = ray_march_oracle(&cfg, &cam, &px);
            assert_abs_diff_eq!(p.position, oracle, epsilon = 1e-6);
            assert!(cfg.camera_to_fixed().apply(&p.position).z.abs() < 1e-9);
            let ray = cam.unproject_coords(&px, 1.0).unwrap();
            assert!(p.position.cross(&ray).amax() < 1e-9);
        }
    }

    #[test]
    fn horizontal_or_rising_rays_do_not_intersect() {
        let cfg = FloorPlaneConfig::from_attitude(pitched(0.0), 1.0, CAM).unwrap();
        // optical axis is horizontal, upper half of the image looks up
        for v in [240.0, 100.0] {
            assert!(matches!(
                floor_depth(&cfg, &camera(), &ImagePoint::new(320.0, v)),
                Err(DepthError::NoIntersection { .. })
            ));
        }
        assert!(floor_depth(&cfg, &camera(), &ImagePoint::new(320.0, 300.0)).is_ok());
    }

    #[test]
    fn invariant_to_planar_origin_shift() {
        let r = rotation_exp(&Vector3::new(2.5, 0.3, -0.2));
        let a = FloorPlaneConfig::new(Pose::new(r, Vector3::new(0.0, 0.0, 1.7), CAM, FrameId::Fixed).unwrap()).unwrap();
        let b = FloorPlaneConfig::new(Pose::new(r, Vector3::new(12.0, -4.0, 1.7), CAM, FrameId::Fixed).unwrap()).unwrap();
        let px = ImagePoint::new(300.0, 200.0);
        let (pa, pb) = (floor_depth(&a, &camera(), &px), floor_depth(&b, &camera(), &px));
        assert_eq!(pa.unwrap().position, pb.unwrap().position);
    }

    #[test]
    fn rejects_camera_below_floor() {
        assert!(matches!(
            FloorPlaneConfig::from_attitude(nadir(), -1.0, CAM),
            Err(DepthError::InvalidAltitude(_))
        ));
    }
}
