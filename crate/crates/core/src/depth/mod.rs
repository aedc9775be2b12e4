//! Depth recovery for the reference pixel of a track segment.
//!
//! Unprojecting a pixel needs its depth. Three providers answer that
//! query: intersection of the viewing ray with the floor plane, a depth map
//! rendered from a scanned point cloud, and per-frame depth images from a
//! depth sensor.

mod densify;
mod floor;
pub mod io;
mod pointcloud;
mod provider;

use thiserror::Error;

use crate::geometry::{GeometryError, ImagePoint};

pub use densify::{densify, DepthInterpolant};
pub use floor::{floor_depth, FloorPlaneConfig};
pub use pointcloud::{depth_from_pointcloud, project_pointcloud};
pub use provider::{DepthMode, DepthProvider, DepthQuery, HULL_FALLBACK_PX};

#[derive(Debug, Error)]
pub enum DepthError {
    #[error("ray through ({}, {}) does not descend to the floor plane (altitude drop {drop})", pixel.u, pixel.v)]
    NoIntersection { pixel: ImagePoint, drop: f64 },
    #[error("camera altitude must be positive, got {0}")]
    InvalidAltitude(f64),
    #[error("pose must map {expected}, got {found}")]
    WrongFrames { expected: &'static str, found: String },
    #[error("densification needs at least 3 non-collinear samples, got {samples}{}", if *.collinear { " (all collinear)" } else { "" })]
    InsufficientSupport { samples: usize, collinear: bool },
    #[error("no point of the cloud falls inside the field of view")]
    EmptyDepthImage,
    #[error("no depth available at ({}, {}){}", pixel.u, pixel.v, frame.map(|f| format!(" in frame {f}")).unwrap_or_default())]
    NoDepthAt { pixel: ImagePoint, frame: Option<usize> },
    #[error("dimension mismatch: {0}")]
    Dimensions(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("{path}: {message}")]
    Format { path: String, message: String },
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
}

/// Row-major grid of optional depth values (meters), one per pixel.
///
/// Pixel `(x, y)` is centred on image coordinates `u = x`, `v = y`.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthImage {
    width: u32,
    height: u32,
    data: Vec<Option<f64>>,
}

/// Depth samples at a subset of pixels.
pub type SparseDepthImage = DepthImage;
/// Densified depth; pixels outside the support hull stay absent.
pub type DenseDepthImage = DepthImage;

impl DepthImage {
    pub fn empty(width: u32, height: u32) -> Self {
        DepthImage { width, height, data: vec![None; width as usize * height as usize] }
    }

    pub fn from_data(width: u32, height: u32, data: Vec<Option<f64>>) -> Result<Self, DepthError> {
        if data.len() != width as usize * height as usize {
            return Err(DepthError::Dimensions(format!(
                "{} values for a {width}x{height} image",
                data.len()
            )));
        }
        Ok(DepthImage { width, height, data })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    fn index(&self, x: u32, y: u32) -> Option<usize> {
        (x < self.width && y < self.height).then(|| y as usize * self.width as usize + x as usize)
    }

    pub fn get(&self, x: u32, y: u32) -> Option<f64> {
        self.index(x, y).and_then(|i| self.data[i])
    }

    /// Set a sample. Panics when `(x, y)` is out of bounds.
    pub fn set(&mut self, x: u32, y: u32, depth: Option<f64>) {
        let i = self.index(x, y).expect("pixel out of bounds");
        self.data[i] = depth;
    }

    pub fn data(&self) -> &[Option<f64>] {
        &self.data
    }

    /// Present samples as `(x, y, depth)`, row-major order.
    pub fn samples(&self) -> impl Iterator<Item = (u32, u32, f64)> + '_ {
        let w = self.width as usize;
        self.data
            .iter()
            .enumerate()
            .filter_map(move |(i, d)| d.map(|d| ((i % w) as u32, (i / w) as u32, d)))
    }

    pub fn sample_count(&self) -> usize {
        self.data.iter().filter(|d| d.is_some()).count()
    }

    /// Depth at a sub-pixel location: bilinear when the four surrounding
    /// samples exist, otherwise the nearest present sample within one pixel.
    pub fn sample_at(&self, p: &ImagePoint) -> Option<f64> {
        if !p.is_finite() || p.u < -0.5 || p.v < -0.5 {
            return None;
        }
        let (x0, y0) = (p.u.floor(), p.v.floor());
        let (fx, fy) = (p.u - x0, p.v - y0);
        if x0 >= 0.0 && y0 >= 0.0 {
            let (x, y) = (x0 as u32, y0 as u32);
            let corners = [
                self.get(x, y),
                self.get(x.saturating_add(1), y),
                self.get(x, y.saturating_add(1)),
                self.get(x.saturating_add(1), y.saturating_add(1)),
            ];
            if let [Some(a), Some(b), Some(c), Some(d)] = corners {
                return Some(
                    a * (1.0 - fx) * (1.0 - fy) + b * fx * (1.0 - fy) + c * (1.0 - fx) * fy + d * fx * fy,
                );
            }
        }
        let (x, y) = (p.u.round(), p.v.round());
        if x < 0.0 || y < 0.0 {
            return None;
        }
        self.get(x as u32, y as u32)
    }
}
