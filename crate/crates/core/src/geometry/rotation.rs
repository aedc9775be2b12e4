//! Rotation exponential and logarithm maps on SO(3).
//!
//! Rotations are plain `Matrix3<f64>` values. The logarithm returns the
//! axis-angle vector whose norm is the rotation angle in `[0, pi]`.

use std::f64::consts::PI;

use nalgebra::{Matrix3, UnitQuaternion, Vector3};

use super::GeometryError;

/// Tolerance used by [`rotation_log`] when deciding whether its input is a
/// rotation at all.
pub const LOG_INPUT_TOLERANCE: f64 = 1e-6;

const SMALL_ANGLE: f64 = 1e-6;
const NEAR_PI: f64 = 1e-3;

pub fn skew(v: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

/// Largest absolute deviation of `r` from being orthonormal with unit
/// determinant: `max(max |RᵀR − I|, |det R − 1|)`.
pub fn orthonormality_error(r: &Matrix3<f64>) -> f64 {
    let gram = r.transpose() * r - Matrix3::identity();
    let det = r.determinant();
    gram.amax().max((det - 1.0).abs())
}

/// Rodrigues' formula. Exact identity for the zero vector.
pub fn rotation_exp(v: &Vector3<f64>) -> Matrix3<f64> {
    let theta2 = v.norm_squared();
    let k = skew(v);
    if theta2 == 0.0 {
        return Matrix3::identity();
    }
    let theta = theta2.sqrt();
    let (a, b) = if theta < 1e-4 {
        // sin(t)/t and (1 - cos t)/t^2 to fourth order
        (1.0 - theta2 / 6.0 + theta2 * theta2 / 120.0, 0.5 - theta2 / 24.0 + theta2 * theta2 / 720.0)
    } else {
        (theta.sin() / theta, (1.0 - theta.cos()) / theta2)
    };
    Matrix3::identity() + k * a + k * k * b
}

/// Logarithm map of a rotation matrix.
///
/// Fails with [`GeometryError::InvalidRotation`] when `r` deviates from
/// SO(3) by more than [`LOG_INPUT_TOLERANCE`].
pub fn rotation_log(r: &Matrix3<f64>) -> Result<Vector3<f64>, GeometryError> {
    let deviation = orthonormality_error(r);
    if !deviation.is_finite() || deviation > LOG_INPUT_TOLERANCE {
        return Err(GeometryError::InvalidRotation { deviation });
    }

    // w = sin(theta) * axis
    let w = Vector3::new(r[(2, 1)] - r[(1, 2)], r[(0, 2)] - r[(2, 0)], r[(1, 0)] - r[(0, 1)]) * 0.5;
    let s = w.norm();
    let c = ((r.trace() - 1.0) * 0.5).clamp(-1.0, 1.0);
    let theta = s.atan2(c);

    if theta < SMALL_ANGLE {
        return Ok(w * (1.0 + theta * theta / 6.0));
    }
    if PI - theta > NEAR_PI {
        return Ok(w * (theta / s));
    }

    // Near pi the antisymmetric part vanishes; recover the axis from the
    // symmetric part, cos(t) I + (1 - cos t) a aᵀ, using its largest diagonal.
    let sym = (r + r.transpose()) * 0.5;
    let i = (0..3)
        .max_by(|&a, &b| sym[(a, a)].total_cmp(&sym[(b, b)]))
        .unwrap_or(0);
    let one_minus_c = 1.0 - c;
    let ai = ((sym[(i, i)] - c) / one_minus_c).max(0.0).sqrt();
    let mut axis = Vector3::zeros();
    for j in 0..3 {
        axis[j] = if j == i { ai } else { sym[(i, j)] / (one_minus_c * ai) };
    }
    axis.normalize_mut();
    if axis.dot(&w) < 0.0 {
        axis = -axis;
    }
    Ok(axis * theta)
}

/// Geodesic angle of a rotation, `‖log R‖`.
pub fn rotation_angle(r: &Matrix3<f64>) -> Result<f64, GeometryError> {
    rotation_log(r).map(|v| v.norm())
}

/// Rotation matrix of a unit quaternion.
pub fn quaternion_to_matrix(q: &UnitQuaternion<f64>) -> Matrix3<f64> {
    q.to_rotation_matrix().into_inner()
}

/// Unit quaternion from `(w, x, y, z)` components, normalizing them.
///
/// Returns `None` for a zero or non-finite quaternion.
pub fn quaternion_from_wxyz(w: f64, x: f64, y: f64, z: f64) -> Option<UnitQuaternion<f64>> {
    let q = nalgebra::Quaternion::new(w, x, y, z);
    let n = q.norm();
    if !n.is_finite() || n == 0.0 {
        return None;
    }
    Some(UnitQuaternion::new_unchecked(q / n))
}

/// Elementary rotation about the x axis.
pub fn rot_x(angle: f64) -> Matrix3<f64> {
    let (s, c) = angle.sin_cos();
    Matrix3::new(1.0, 0.0, 0.0, 0.0, c, -s, 0.0, s, c)
}

/// Elementary rotation about the y axis.
pub fn rot_y(angle: f64) -> Matrix3<f64> {
    let (s, c) = angle.sin_cos();
    Matrix3::new(c, 0.0, s, 0.0, 1.0, 0.0, -s, 0.0, c)
}

/// Elementary rotation about the z axis.
pub fn rot_z(angle: f64) -> Matrix3<f64> {
    let (s, c) = angle.sin_cos();
    Matrix3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0)
}
