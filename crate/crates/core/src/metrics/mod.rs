//! Pixel-space and pose-space error metrics, subset aggregation and
//! report export.

mod report;
pub mod stats;
mod timeseries;

use std::collections::BTreeMap;

use itertools::Itertools;
use nalgebra::Matrix3;
use thiserror::Error;

use crate::geometry::{rotation_angle, GeometryError, ImagePoint};
use crate::ingestion::PoseTrajectory;

pub use report::{delta_report, per_point_rmse2d, MetricReport, MetricRow, ReportContext, SourceResult};
pub use timeseries::{error_timeseries, pixel_error_series, ErrorTimeSeries, PixelErrorSeries, TimeSeriesRow};

/// Default ROE sampling stride in frames: one second at 10 FPS.
pub const DEFAULT_ROE_STRIDE: usize = 10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricsError {
    #[error("the two series share no frame")]
    NoOverlap,
    #[error("trajectories are not aligned: {gt} ground-truth vs {est} estimated entries")]
    LengthMismatch { gt: usize, est: usize },
    #[error("stride {stride} leaves no sample in a trajectory of {len} poses")]
    DegenerateSampling { stride: usize, len: usize },
    #[error("subset size {k} is not in 1..={count}")]
    InvalidSubset { k: usize, count: usize },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// Root-mean-square pixel distance over the frames present in both series.
pub fn rmse2d(predicted: &BTreeMap<usize, ImagePoint>, annotated: &BTreeMap<usize, ImagePoint>) -> Result<f64, MetricsError> {
    let (sum, count) = predicted
        .iter()
        .filter_map(|(f, p)| annotated.get(f).map(|a| p.distance_squared(a)))
        .fold((0.0, 0usize), |(s, n), d| (s + d, n + 1));
    if count == 0 {
        return Err(MetricsError::NoOverlap);
    }
    Ok((sum / count as f64).sqrt())
}

fn check_lengths(gt: usize, est: usize) -> Result<(), MetricsError> {
    if gt != est || gt == 0 {
        return Err(MetricsError::LengthMismatch { gt, est });
    }
    Ok(())
}

/// Root-mean-square distance between absolute positions.
pub fn rmse3d(gt: &PoseTrajectory, est: &PoseTrajectory) -> Result<f64, MetricsError> {
    check_lengths(gt.len(), est.len())?;
    let (a, b) = (gt.positions(), est.positions());
    let sum: f64 = a.iter().zip(&b).map(|(p, q)| (p - q).norm_squared()).sum();
    Ok((sum / a.len() as f64).sqrt())
}

/// Root-mean-square geodesic distance `‖log(RₜᵀR̂ₜ)‖`.
pub fn aoe(gt: &[Matrix3<f64>], est: &[Matrix3<f64>]) -> Result<f64, MetricsError> {
    check_lengths(gt.len(), est.len())?;
    let mut sum = 0.0;
    for (r, r_hat) in gt.iter().zip(est) {
        let angle = rotation_angle(&(r.transpose() * r_hat))?;
        sum += angle * angle;
    }
    Ok((sum / gt.len() as f64).sqrt())
}

/// Sample indices `0, stride, 2·stride, …` that have a successor.
pub fn roe_samples(len: usize, stride: usize) -> Result<Vec<usize>, MetricsError> {
    if stride == 0 || stride >= len {
        return Err(MetricsError::DegenerateSampling { stride, len });
    }
    Ok((0..len - 1).step_by(stride).collect())
}

/// Mean geodesic distance between true and estimated one-step rotation
/// increments `δRₜ = RₜᵀRₜ₊₁`, sampled every `stride` frames.
pub fn roe(gt: &PoseTrajectory, est: &PoseTrajectory, stride: usize) -> Result<f64, MetricsError> {
    check_lengths(gt.len(), est.len())?;
    let (r, r_hat) = (gt.rotations(), est.rotations());
    let samples = roe_samples(r.len(), stride)?;
    let mut sum = 0.0;
    for &t in &samples {
        let delta = r[t].transpose() * r[t + 1];
        let delta_hat = r_hat[t].transpose() * r_hat[t + 1];
        sum += rotation_angle(&(delta.transpose() * delta_hat))?;
    }
    Ok(sum / samples.len() as f64)
}

/// Mean and population standard deviation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
}

impl MeanStd {
    pub fn of(values: &[f64]) -> MeanStd {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        MeanStd { mean, std: var.sqrt() }
    }
}

/// Statistics of the average over every `k`-subset of `values`.
pub fn subset_aggregate(values: &[f64], k: usize) -> Result<MeanStd, MetricsError> {
    if k == 0 || k > values.len() {
        return Err(MetricsError::InvalidSubset { k, count: values.len() });
    }
    if k == values.len() {
        return Ok(MeanStd { mean: values.iter().sum::<f64>() / k as f64, std: 0.0 });
    }
    let means: Vec<f64> = values.iter().combinations(k).map(|c| c.into_iter().sum::<f64>() / k as f64).collect();
    Ok(MeanStd::of(&means))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::rotation::{rot_x, rot_z, rotation_exp};
    use crate::geometry::Timestamp;
    use crate::ingestion::{Convention, PoseSource};
    use approx::assert_abs_diff_eq;
    use nalgebra::{UnitQuaternion, Vector3};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn series(points: &[(usize, f64, f64)]) -> BTreeMap<usize, ImagePoint> {
        points.iter().map(|&(f, u, v)| (f, ImagePoint::new(u, v))).collect()
    }

    #[test]
    fn rmse2d_examples() {
        let a = series(&[(0, 1.0, 2.0), (1, 3.0, 4.0)]);
        assert_eq!(rmse2d(&a, &a).unwrap(), 0.0);
        assert_eq!(rmse2d(&series(&[(0, 0.0, 0.0)]), &series(&[(0, 3.0, 4.0)])).unwrap(), 5.0);
        let p = series(&[(0, 0.0, 0.0), (1, 0.0, 0.0), (2, 9.0, 9.0)]);
        let q = series(&[(0, 3.0, 0.0), (1, 0.0, 4.0)]);
        assert_abs_diff_eq!(rmse2d(&p, &q).unwrap(), (12.5f64).sqrt(), epsilon = 1e-15);
        assert_eq!(rmse2d(&series(&[(0, 0.0, 0.0)]), &series(&[(1, 0.0, 0.0)])), Err(MetricsError::NoOverlap));
    }

    fn random_rotations(rng: &mut ChaCha8Rng, n: usize) -> Vec<Matrix3<f64>> {
        (0..n)
            .map(|_| rotation_exp(&Vector3::new(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0))))
            .collect()
    }

    fn trajectory(rotations: &[Matrix3<f64>], positions: &[Vector3<f64>]) -> PoseTrajectory {
        PoseTrajectory::from_samples(
            rotations.iter().zip(positions).enumerate().map(|(i, (r, d))| (Timestamp(i as i64), *r, *d)),
            Convention::Absolute,
            PoseSource::Mocap,
        )
        .unwrap()
    }

    #[test]
    fn rmse3d_constant_offset_and_resummation() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let rots = random_rotations(&mut rng, 100);
        let pos: Vec<Vector3<f64>> = (0..100).map(|_| Vector3::new(rng.random(), rng.random(), rng.random())).collect();
        let shifted: Vec<Vector3<f64>> = pos.iter().map(|p| p + Vector3::new(0.04, 0.0, 0.0)).collect();
        let gt = trajectory(&rots, &pos);
        assert_eq!(rmse3d(&gt, &gt).unwrap(), 0.0);
        assert_abs_diff_eq!(rmse3d(&gt, &trajectory(&rots, &shifted)).unwrap(), 0.04, epsilon = 1e-12);

        let other: Vec<Vector3<f64>> = (0..100).map(|_| Vector3::new(rng.random(), rng.random(), rng.random())).collect();
        let mut acc = 0.0;
        for i in 0..100 {
            for c in 0..3 {
                acc += (pos[i][c] - other[i][c]).powi(2);
            }
        }
        let oracle = (acc / 100.0).sqrt();
        assert_abs_diff_eq!(rmse3d(&gt, &trajectory(&rots, &other)).unwrap(), oracle, epsilon = 1e-12);
        assert!(matches!(rmse3d(&gt, &trajectory(&rots[..5], &pos[..5])), Err(MetricsError::LengthMismatch { .. })));
    }

    #[test]
    fn aoe_constant_yaw_offset() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let gt = random_rotations(&mut rng, 50);
        let est: Vec<Matrix3<f64>> = gt.iter().map(|r| r * rot_z(0.05)).collect();
        assert_eq!(aoe(&gt, &gt).unwrap(), 0.0);
        assert_abs_diff_eq!(aoe(&gt, &est).unwrap(), 0.05, epsilon = 1e-9);
    }

    #[test]
    fn aoe_matches_quaternion_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let (gt, est) = (random_rotations(&mut rng, 40), random_rotations(&mut rng, 40));
        let mut acc = 0.0;
        for (a, b) in gt.iter().zip(&est) {
            let qa = UnitQuaternion::from_matrix(a);
            let qb = UnitQuaternion::from_matrix(b);
            let w = (qa.inverse() * qb).w.abs().min(1.0);
            let angle = 2.0 * w.acos();
            acc += angle * angle;
        }
        assert_abs_diff_eq!(aoe(&gt, &est).unwrap(), (acc / 40.0).sqrt(), epsilon = 1e-9);
    }

    #[test]
    fn roe_per_step_offset() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let gt_rots = random_rotations(&mut rng, 60);
        let mut est_rots = vec![gt_rots[0]];
        for t in 0..59 {
            let step = gt_rots[t].transpose() * gt_rots[t + 1];
            let next = est_rots[t] * step * rot_x(0.01);
            est_rots.push(next);
        }
        let pos = vec![Vector3::zeros(); 60];
        let (gt, est) = (trajectory(&gt_rots, &pos), trajectory(&est_rots, &pos));
        assert_eq!(roe(&gt, &gt, 10).unwrap(), 0.0);
        assert_abs_diff_eq!(roe(&gt, &est, 1).unwrap(), 0.01, epsilon = 1e-9);
        assert_abs_diff_eq!(roe(&gt, &est, 10).unwrap(), 0.01, epsilon = 1e-9);
    }

    #[test]
    fn roe_brute_force_and_degenerate_stride() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let pos = vec![Vector3::zeros(); 95];
        let (a, b) = (random_rotations(&mut rng, 95), random_rotations(&mut rng, 95));
        let (gt, est) = (trajectory(&a, &pos), trajectory(&b, &pos));
        let mut acc = Vec::new();
        let mut t = 0;
        while t + 1 < 95 {
            let d = (a[t].transpose() * a[t + 1]).transpose() * (b[t].transpose() * b[t + 1]);
            acc.push(crate::geometry::rotation_log(&d).unwrap().norm());
            t += 10;
        }
        assert_eq!(acc.len(), 10);
        let oracle = acc.iter().sum::<f64>() / acc.len() as f64;
        assert_abs_diff_eq!(roe(&gt, &est, 10).unwrap(), oracle, epsilon = 1e-12);
        assert!(matches!(roe(&gt, &est, 95), Err(MetricsError::DegenerateSampling { .. })));
        assert!(matches!(roe(&gt, &est, 0), Err(MetricsError::DegenerateSampling { .. })));
    }

    #[test]
    fn subset_examples() {
        assert_eq!(subset_aggregate(&[3.5], 1).unwrap(), MeanStd { mean: 3.5, std: 0.0 });
        assert_eq!(subset_aggregate(&[4.0, 8.0], 1).unwrap(), MeanStd { mean: 6.0, std: 2.0 });
        assert_eq!(subset_aggregate(&[4.0, 8.0], 2).unwrap(), MeanStd { mean: 6.0, std: 0.0 });
        assert!(subset_aggregate(&[4.0, 8.0], 3).is_err());
        assert!(subset_aggregate(&[4.0, 8.0], 0).is_err());
    }

    #[test]
    fn subset_pairs_brute_force() {
        let v = [8.1, 8.9, 9.5, 7.5];
        let pairs = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];
        let means: Vec<f64> = pairs.iter().map(|&(i, j)| (v[i] + v[j]) / 2.0).collect();
        let m = means.iter().sum::<f64>() / 6.0;
        let s = (means.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / 6.0).sqrt();
        let got = subset_aggregate(&v, 2).unwrap();
        assert_abs_diff_eq!(got.mean, m, epsilon = 1e-12);
        assert_abs_diff_eq!(got.std, s, epsilon = 1e-12);
    }

    proptest! {
        #[test]
        fn rmse2d_is_symmetric(pts in proptest::collection::vec((0usize..20, -1e3..1e3f64, -1e3..1e3f64, -1e3..1e3f64, -1e3..1e3f64), 1..20)) {
            let a: BTreeMap<usize, ImagePoint> = pts.iter().map(|&(f, u, v, _, _)| (f, ImagePoint::new(u, v))).collect();
            let b: BTreeMap<usize, ImagePoint> = pts.iter().map(|&(f, _, _, u, v)| (f, ImagePoint::new(u, v))).collect();
            prop_assert_eq!(rmse2d(&a, &b).unwrap(), rmse2d(&b, &a).unwrap());
            prop_assert_eq!(rmse2d(&a, &a).unwrap(), 0.0);
        }

        #[test]
        fn rotation_metrics_ignore_global_frame(seed in any::<u64>(), g in proptest::array::uniform3(-3.0..3.0f64)) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let (a, b) = (random_rotations(&mut rng, 25), random_rotations(&mut rng, 25));
            let g = rotation_exp(&Vector3::from(g));
            let ga: Vec<_> = a.iter().map(|r| g * r).collect();
            let gb: Vec<_> = b.iter().map(|r| g * r).collect();
            prop_assert!((aoe(&a, &b).unwrap() - aoe(&ga, &gb).unwrap()).abs() < 1e-12);
            let pos = vec![Vector3::zeros(); 25];
            let plain = roe(&trajectory(&a, &pos), &trajectory(&b, &pos), 3).unwrap();
            let moved = roe(&trajectory(&ga, &pos), &trajectory(&gb, &pos), 3).unwrap();
            prop_assert!((plain - moved).abs() < 1e-12);
        }

        #[test]
        fn full_subset_has_zero_std(values in proptest::collection::vec(0.0..100.0f64, 1..8)) {
            prop_assert_eq!(subset_aggregate(&values, values.len()).unwrap().std, 0.0);
        }
    }
}
