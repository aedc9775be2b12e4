use rayon::prelude::*;
use spade::{DelaunayTriangulation, FloatTriangulation, HasPosition, Point2, Triangulation};

use crate::geometry::ImagePoint;

use super::{DenseDepthImage, DepthError, SparseDepthImage};

#[derive(Debug, Clone, Copy)]
struct Sample {
    position: Point2<f64>,
    depth: f64,
}

impl HasPosition for Sample {
    type Scalar = f64;

    fn position(&self) -> Point2<f64> {
        self.position
    }
}

/// Piecewise-linear interpolant over a Delaunay triangulation of the depth
/// samples. Undefined (absent) outside their convex hull.
pub struct DepthInterpolant {
    triangulation: DelaunayTriangulation<Sample>,
    width: u32,
    height: u32,
}

impl DepthInterpolant {
    pub fn new(sparse: &SparseDepthImage) -> Result<Self, DepthError> {
        let samples = sparse.samples().map(|(x, y, depth)| (ImagePoint::new(x as f64, y as f64), depth));
        DepthInterpolant::from_points(samples, sparse.width(), sparse.height())
    }

    /// Interpolant over samples at arbitrary sub-pixel positions of a
    /// `width × height` image.
    pub fn from_points(points: impl IntoIterator<Item = (ImagePoint, f64)>, width: u32, height: u32) -> Result<Self, DepthError> {
        let samples: Vec<Sample> =
            points.into_iter().map(|(p, depth)| Sample { position: Point2::new(p.u, p.v), depth }).collect();
        let count = samples.len();
        if count < 3 {
            return Err(DepthError::InsufficientSupport { samples: count, collinear: false });
        }
        let triangulation = DelaunayTriangulation::<Sample>::bulk_load(samples)
            .map_err(|e| DepthError::Format { path: "<samples>".into(), message: e.to_string() })?;
        if triangulation.num_inner_faces() == 0 {
            return Err(DepthError::InsufficientSupport { samples: count, collinear: true });
        }
        Ok(DepthInterpolant { triangulation, width, height })
    }

    /// Interpolated depth at a sub-pixel location, `None` outside the hull.
    pub fn depth_at(&self, p: &ImagePoint) -> Option<f64> {
        if !p.is_finite() {
            return None;
        }
        self.triangulation.barycentric().interpolate(|v| v.data().depth, Point2::new(p.u, p.v))
    }

    /// Depth of the sample closest to `p` and its distance in pixels.
    pub fn nearest_sample(&self, p: &ImagePoint) -> Option<(f64, f64)> {
        if !p.is_finite() {
            return None;
        }
        let v = self.triangulation.nearest_neighbor(Point2::new(p.u, p.v))?;
        let q = v.position();
        Some(((q.x - p.u).hypot(q.y - p.v), v.data().depth))
    }

    /// Triangles of the triangulation as `[(u, v, depth); 3]`.
    pub fn triangles(&self) -> Vec<[(f64, f64, f64); 3]> {
        self.triangulation
            .inner_faces()
            .map(|f| {
                f.vertices().map(|v| {
                    let s = v.data();
                    (s.position.x, s.position.y, s.depth)
                })
            })
            .collect()
    }

    /// Evaluate at every pixel of the image grid.
    pub fn rasterize(&self) -> DenseDepthImage {
        let w = self.width as usize;
        let mut data = vec![None; w * self.height as usize];
        data.par_chunks_mut(w.max(1)).enumerate().for_each(|(y, row)| {
            let bary = self.triangulation.barycentric();
            for (x, slot) in row.iter_mut().enumerate() {
                *slot = bary.interpolate(|v| v.data().depth, Point2::new(x as f64, y as f64));
            }
        });
        DenseDepthImage::from_data(self.width, self.height, data).expect("grid size matches")
    }
}

/// Fill the sample hull by linear interpolation over a Delaunay
/// triangulation. Sample pixels keep their exact input values.
pub fn densify(sparse: &SparseDepthImage) -> Result<DenseDepthImage, DepthError> {
    let interpolant = DepthInterpolant::new(sparse)?;
    let mut dense = interpolant.rasterize();
    for (x, y, d) in sparse.samples() {
        dense.set(x, y, Some(d));
    }
    Ok(dense)
}
