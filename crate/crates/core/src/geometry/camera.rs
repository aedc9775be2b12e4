//! Pinhole camera with Brown–Conrady rational distortion.
//!
//! A camera-frame point `(x, y, z)` is normalized to `(x/z, y/z)`, distorted
//! in normalized coordinates by
//!
//! ```text
//! r² = x² + y²
//! radial = (1 + k1 r² + k2 r⁴ + k3 r⁶) / (1 + k4 r² + k5 r⁴ + k6 r⁶)
//! x_d = x radial + 2 p1 x y + p2 (r² + 2 x²)
//! y_d = y radial + p1 (r² + 2 y²) + 2 p2 x y
//! ```
//!
//! and mapped to pixels with `u = fx x_d + cx`, `v = fy y_d + cy`.
//! Unprojection inverts the distortion with a damped Newton iteration.

use nalgebra::{Matrix2, Vector2, Vector3};
use serde::{Deserialize, Serialize};

use super::{FrameId, GeometryError, ImagePoint, ScenePoint};

pub const UNDISTORT_MAX_ITERATIONS: usize = 50;
/// Convergence threshold on the distortion residual, in normalized units.
pub const UNDISTORT_TOLERANCE: f64 = 1e-12;

/// Radial `k1..k6` and tangential `p1, p2` coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Distortion {
    pub radial: [f64; 6],
    pub p1: f64,
    pub p2: f64,
}

impl Distortion {
    pub fn none() -> Self {
        Distortion::default()
    }

    /// OpenCV coefficient order: `k1, k2, p1, p2[, k3[, k4, k5, k6]]`.
    pub fn from_opencv(coeffs: &[f64]) -> Result<Self, GeometryError> {
        let mut d = Distortion::none();
        match coeffs.len() {
            0 => {}
            4 | 5 | 8 => {
                d.radial[0] = coeffs[0];
                d.radial[1] = coeffs[1];
                d.p1 = coeffs[2];
                d.p2 = coeffs[3];
                for (slot, &k) in d.radial[2..].iter_mut().zip(&coeffs[4..]) {
                    *slot = k;
                }
            }
            n => {
                return Err(GeometryError::InvalidCamera(format!(
                    "expected 0, 4, 5 or 8 distortion coefficients, got {n}"
                )))
            }
        }
        Ok(d)
    }

    pub fn to_opencv(&self) -> [f64; 8] {
        let k = &self.radial;
        [k[0], k[1], self.p1, self.p2, k[2], k[3], k[4], k[5]]
    }

    pub fn is_zero(&self) -> bool {
        self.radial.iter().all(|&k| k == 0.0) && self.p1 == 0.0 && self.p2 == 0.0
    }

    /// Returns the radial factor and its derivative with respect to r².
    fn radial_factor(&self, r2: f64) -> (f64, f64) {
        let k = &self.radial;
        let r4 = r2 * r2;
        let num = 1.0 + r2 * (k[0] + r2 * (k[1] + r2 * k[2]));
        let den = 1.0 + r2 * (k[3] + r2 * (k[4] + r2 * k[5]));
        let dnum = k[0] + 2.0 * k[1] * r2 + 3.0 * k[2] * r4;
        let dden = k[3] + 2.0 * k[4] * r2 + 3.0 * k[5] * r4;
        (num / den, (dnum * den - num * dden) / (den * den))
    }

    /// Distort a normalized point.
    pub fn distort(&self, p: &Vector2<f64>) -> Vector2<f64> {
        if self.is_zero() {
            return *p;
        }
        let (x, y) = (p.x, p.y);
        let r2 = x * x + y * y;
        let (radial, _) = self.radial_factor(r2);
        Vector2::new(
            x * radial + 2.0 * self.p1 * x * y + self.p2 * (r2 + 2.0 * x * x),
            y * radial + self.p1 * (r2 + 2.0 * y * y) + 2.0 * self.p2 * x * y,
        )
    }

    fn jacobian(&self, p: &Vector2<f64>) -> Matrix2<f64> {
        let (x, y) = (p.x, p.y);
        let (radial, dradial) = self.radial_factor(x * x + y * y);
        let (p1, p2) = (self.p1, self.p2);
        let cross = 2.0 * x * y * dradial + 2.0 * p1 * x + 2.0 * p2 * y;
        Matrix2::new(
            radial + 2.0 * x * x * dradial + 2.0 * p1 * y + 6.0 * p2 * x,
            cross,
            cross,
            radial + 2.0 * y * y * dradial + 6.0 * p1 * y + 2.0 * p2 * x,
        )
    }

    /// Invert [`Distortion::distort`].
    pub fn undistort(&self, target: &Vector2<f64>) -> Result<Vector2<f64>, GeometryError> {
        if self.is_zero() {
            return Ok(*target);
        }
        let residual_of = |p: &Vector2<f64>| self.distort(p) - target;
        let mut p = *target;
        let mut residual = residual_of(&p);
        let mut norm = residual.amax();
        for _ in 0..UNDISTORT_MAX_ITERATIONS {
            if norm <= UNDISTORT_TOLERANCE {
                return Ok(p);
            }
            let Some(step) = self.jacobian(&p).lu().solve(&residual) else {
                break;
            };
            let mut scale = 1.0;
            let mut accepted = false;
            for _ in 0..20 {
                let candidate = p - step * scale;
                let r = residual_of(&candidate);
                let n = r.amax();
                if n.is_finite() && n < norm {
                    p = candidate;
                    residual = r;
                    norm = n;
                    accepted = true;
                    break;
                }
                scale *= 0.5;
            }
            if !accepted {
                break;
            }
        }
        if norm <= UNDISTORT_TOLERANCE {
            Ok(p)
        } else {
            Err(GeometryError::NonConvergence { residual: norm, iterations: UNDISTORT_MAX_ITERATIONS })
        }
    }
}

/// Intrinsics, distortion and image size of a calibrated camera.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraModel {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub distortion: Distortion,
    pub width: u32,
    pub height: u32,
}

impl CameraModel {
    pub fn new(
        fx: f64,
        fy: f64,
        cx: f64,
        cy: f64,
        distortion: Distortion,
        width: u32,
        height: u32,
    ) -> Result<Self, GeometryError> {
        if !(fx > 0.0 && fy > 0.0 && fx.is_finite() && fy.is_finite()) {
            return Err(GeometryError::InvalidCamera(format!("focal lengths must be positive, got fx={fx} fy={fy}")));
        }
        if !(cx.is_finite() && cy.is_finite()) {
            return Err(GeometryError::InvalidCamera("principal point must be finite".into()));
        }
        if width == 0 || height == 0 {
            return Err(GeometryError::InvalidCamera(format!("image size must be positive, got {width}x{height}")));
        }
        if !distortion.to_opencv().iter().all(|k| k.is_finite()) {
            return Err(GeometryError::InvalidCamera("distortion coefficients must be finite".into()));
        }
        Ok(CameraModel { fx, fy, cx, cy, distortion, width, height })
    }

    /// Intrinsics of the left camera of the EuRoC MAV rig (752×480,
    /// radial-tangential distortion).
    pub fn euroc_cam0() -> Self {
        CameraModel {
            fx: 458.654,
            fy: 457.296,
            cx: 367.215,
            cy: 248.375,
            distortion: Distortion {
                radial: [-0.28340811, 0.07395907, 0.0, 0.0, 0.0, 0.0],
                p1: 0.00019359,
                p2: 1.76187114e-05,
            },
            width: 752,
            height: 480,
        }
    }

    pub fn pinhole(fx: f64, fy: f64, cx: f64, cy: f64, width: u32, height: u32) -> Result<Self, GeometryError> {
        CameraModel::new(fx, fy, cx, cy, Distortion::none(), width, height)
    }

    /// Pixel bounds test, `[0, width) × [0, height)`.
    pub fn contains(&self, p: &ImagePoint) -> bool {
        p.u >= 0.0 && p.v >= 0.0 && p.u < self.width as f64 && p.v < self.height as f64
    }

    /// Project raw camera-frame coordinates.
    pub fn project_coords(&self, p: &Vector3<f64>) -> Result<ImagePoint, GeometryError> {
        if !(p.z > 0.0) {
            return Err(GeometryError::BehindCamera { z: p.z });
        }
        let normalized = Vector2::new(p.x / p.z, p.y / p.z);
        let d = self.distortion.distort(&normalized);
        Ok(ImagePoint::new(self.fx * d.x + self.cx, self.fy * d.y + self.cy))
    }

    pub fn project(&self, p: &ScenePoint) -> Result<ImagePoint, GeometryError> {
        if !p.frame.is_camera() {
            return Err(GeometryError::NotInCameraFrame(p.frame));
        }
        self.project_coords(&p.position)
    }

    /// Undistorted normalized coordinates `(x/z, y/z)` of a pixel.
    pub fn normalized_ray(&self, p: &ImagePoint) -> Result<Vector2<f64>, GeometryError> {
        let distorted = Vector2::new((p.u - self.cx) / self.fx, (p.v - self.cy) / self.fy);
        self.distortion.undistort(&distorted)
    }

    /// Raw camera-frame coordinates of the pixel at the given depth (z).
    pub fn unproject_coords(&self, p: &ImagePoint, depth: f64) -> Result<Vector3<f64>, GeometryError> {
        if !(depth > 0.0) || !depth.is_finite() {
            return Err(GeometryError::InvalidDepth(depth));
        }
        let n = self.normalized_ray(p)?;
        Ok(Vector3::new(n.x * depth, n.y * depth, depth))
    }

    pub fn unproject(&self, p: &ImagePoint, depth: f64, frame: FrameId) -> Result<ScenePoint, GeometryError> {
        if !frame.is_camera() {
            return Err(GeometryError::NotInCameraFrame(frame));
        }
        Ok(ScenePoint::new(self.unproject_coords(p, depth)?, frame))
    }
}
