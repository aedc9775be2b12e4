use nalgebra::{Matrix3, Matrix4, UnitQuaternion, Vector3};

use super::rotation::{orthonormality_error, quaternion_to_matrix};
use super::{FrameId, GeometryError, ScenePoint};

/// Entry-wise tolerance on `RᵀR = I` and `det R = 1` for a valid pose.
pub const ROTATION_TOLERANCE: f64 = 1e-9;

/// Rigid transform mapping coordinates expressed in `from` into `to`:
/// `p_to = R p_from + d`.
///
/// In superscript notation a pose `T^{A,B}` has `to = A` and `from = B`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    rotation: Matrix3<f64>,
    translation: Vector3<f64>,
    from: FrameId,
    to: FrameId,
}

impl Pose {
    pub fn new(
        rotation: Matrix3<f64>,
        translation: Vector3<f64>,
        from: FrameId,
        to: FrameId,
    ) -> Result<Self, GeometryError> {
        let deviation = orthonormality_error(&rotation);
        if !deviation.is_finite() || deviation > ROTATION_TOLERANCE {
            return Err(GeometryError::InvalidRotation { deviation });
        }
        if !translation.iter().all(|x| x.is_finite()) {
            return Err(GeometryError::NonFinite("pose translation"));
        }
        Ok(Pose { rotation, translation, from, to })
    }

    pub fn from_quaternion(
        rotation: &UnitQuaternion<f64>,
        translation: Vector3<f64>,
        from: FrameId,
        to: FrameId,
    ) -> Result<Self, GeometryError> {
        Pose::new(quaternion_to_matrix(rotation), translation, from, to)
    }

    pub fn identity(frame: FrameId) -> Self {
        Pose { rotation: Matrix3::identity(), translation: Vector3::zeros(), from: frame, to: frame }
    }

    /// Identity rotation and zero translation between two distinct labels.
    pub fn coincident(from: FrameId, to: FrameId) -> Self {
        Pose { rotation: Matrix3::identity(), translation: Vector3::zeros(), from, to }
    }

    pub fn rotation(&self) -> &Matrix3<f64> {
        &self.rotation
    }

    pub fn translation(&self) -> &Vector3<f64> {
        &self.translation
    }

    pub fn from_frame(&self) -> FrameId {
        self.from
    }

    pub fn to_frame(&self) -> FrameId {
        self.to
    }

    pub fn quaternion(&self) -> UnitQuaternion<f64> {
        UnitQuaternion::from_matrix(&self.rotation)
    }

    /// The same rigid motion between relabelled frames.
    pub fn relabel(&self, from: FrameId, to: FrameId) -> Pose {
        Pose { from, to, ..*self }
    }

    /// `self ∘ other`: first apply `other`, then `self`.
    ///
    /// Requires `self.from == other.to`; the result maps `other.from`
    /// directly to `self.to`.
    pub fn compose(&self, other: &Pose) -> Result<Pose, GeometryError> {
        if self.from != other.to {
            return Err(GeometryError::FrameMismatch { left_from: self.from, right_to: other.to });
        }
        Ok(Pose {
            rotation: self.rotation * other.rotation,
            translation: self.rotation * other.translation + self.translation,
            from: other.from,
            to: self.to,
        })
    }

    pub fn inverse(&self) -> Pose {
        let rt = self.rotation.transpose();
        Pose { rotation: rt, translation: -(rt * self.translation), from: self.to, to: self.from }
    }

    /// Apply the transform to raw coordinates, ignoring frame labels.
    pub fn apply(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * p + self.translation
    }

    pub fn transform(&self, p: &ScenePoint) -> Result<ScenePoint, GeometryError> {
        if p.frame != self.from {
            return Err(GeometryError::FrameMismatch { left_from: self.from, right_to: p.frame });
        }
        Ok(ScenePoint::new(self.apply(&p.position), self.to))
    }

    pub fn to_homogeneous(&self) -> Matrix4<f64> {
        let mut m = Matrix4::identity();
        m.fixed_view_mut::<3, 3>(0, 0).copy_from(&self.rotation);
        m.fixed_view_mut::<3, 1>(0, 3).copy_from(&self.translation);
        m
    }

    /// Parse a 4×4 homogeneous matrix. The bottom row must be `[0 0 0 1]`.
    pub fn from_homogeneous(m: &Matrix4<f64>, from: FrameId, to: FrameId) -> Result<Pose, GeometryError> {
        let bottom = [m[(3, 0)], m[(3, 1)], m[(3, 2)], m[(3, 3)]];
        let expected = [0.0, 0.0, 0.0, 1.0];
        if bottom.iter().zip(expected).any(|(a, b)| (a - b).abs() > 1e-9) {
            return Err(GeometryError::InvalidTransform(format!("bottom row {bottom:?}")));
        }
        Pose::new(m.fixed_view::<3, 3>(0, 0).into_owned(), m.fixed_view::<3, 1>(0, 3).into_owned(), from, to)
    }

    /// Maximum entry-wise difference of rotation and translation.
    pub fn max_abs_diff(&self, other: &Pose) -> f64 {
        (self.rotation - other.rotation).amax().max((self.translation - other.translation).amax())
    }
}
