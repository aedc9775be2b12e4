//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line for
//! each and exits non-zero when any fails.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::sync::Arc;
use std::time::Instant;

use nalgebra::{Matrix3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use vice_core::depth::{floor_depth, DepthError, DepthMode, FloorPlaneConfig};
use vice_core::geometry::rotation::{rot_x, rot_z, rotation_exp};
use vice_core::geometry::{CameraModel, FrameId, ImagePoint, Pose, Timestamp};
use vice_core::ingestion::synth::{synth_scene, SynthScene, SynthSpec};
use vice_core::ingestion::{
    align_and_resample, load_euroc_sequence, read_pose_csv, AnnotationSet, Convention, IngestError, PoseSource,
    PoseTrajectory,
};
use vice_core::metrics::stats::{median, spearman};
use vice_core::metrics::{aoe, per_point_rmse2d, rmse2d, roe, subset_aggregate};
use vice_core::pipeline::{track_all, DepthInputs, ReferencePolicy};
use vice_core::tracking::KeypointTrack;

type Outcome = Result<String, String>;
type Criterion<'a> = Box<dyn Fn() -> Outcome + 'a>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn vice() -> Command {
    Command::new(env!("CARGO_BIN_EXE_vice"))
}

fn run_vice(args: &[&str]) -> Result<std::process::Output, String> {
    let out = vice().args(args).output().map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(format!("vice {} failed: {}", args.join(" "), String::from_utf8_lossy(&out.stderr).trim()));
    }
    Ok(out)
}

fn track_with(scene: &SynthScene, poses: &PoseTrajectory, mode: DepthMode) -> Result<Vec<KeypointTrack>, String> {
    let inputs = DepthInputs { cloud: Some(Arc::new(scene.point_cloud.clone())), sensor: None };
    track_all(poses, &scene.rig, &scene.camera, mode, &inputs, &ReferencePolicy::FromAnnotations, Some(&scene.annotations))
        .map_err(|e| e.to_string())
}

fn onboard_at_frames(scene: &SynthScene) -> Result<PoseTrajectory, String> {
    align_and_resample(&scene.frames, &scene.noisy, &Default::default()).map(|a| a.poses).map_err(|e| e.to_string())
}

fn mean_rmse2d(scene: &SynthScene, tracks: &[KeypointTrack]) -> Result<f64, String> {
    let scores = per_point_rmse2d(&scene.annotations, tracks).map_err(|e| e.to_string())?;
    Ok(scores.iter().map(|(_, e)| e).sum::<f64>() / scores.len() as f64)
}

fn noisy_spec(seed: u64, sigma_rot: f64, sigma_trans: f64) -> SynthSpec {
    let mut spec = SynthSpec { seed, ..Default::default() };
    spec.noise.sigma_rot = sigma_rot;
    spec.noise.sigma_trans = sigma_trans;
    spec
}

fn exactness_oracle() -> Outcome {
    let start = Instant::now();
    let scene = synth_scene(&SynthSpec::default()).map_err(|e| e.to_string())?;
    let truth = scene.truth_at_frames();
    let tracks = track_with(&scene, &truth, DepthMode::Floor)?;
    let elapsed = start.elapsed().as_secs_f64();
    let worst = per_point_rmse2d(&scene.annotations, &tracks)
        .map_err(|e| e.to_string())?
        .into_iter()
        .map(|(_, e)| e)
        .fold(0.0, f64::max);
    let frames = scene.frames.len();
    check(
        frames == 300 && tracks.len() == 8 && worst < 1e-6 && elapsed < 5.0,
        format!("{frames} frames, {} tracks, max RMSE2D {worst:.2e} px, {elapsed:.2} s", tracks.len()),
    )
}

fn projection_round_trip() -> Outcome {
    let cam = CameraModel::euroc_cam0();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let start = Instant::now();
    let (mut pixel_err, mut point_err) = (0.0f64, 0.0f64);
    for _ in 0..10_000 {
        let p = ImagePoint::new(rng.random_range(0.0..752.0), rng.random_range(0.0..480.0));
        let depth = rng.random_range(0.1..20.0);
        let x = cam.unproject_coords(&p, depth).map_err(|e| e.to_string())?;
        let q = cam.project_coords(&x).map_err(|e| e.to_string())?;
        pixel_err = pixel_err.max(p.distance(&q));
    }
    let mut pairs = 0;
    while pairs < 10_000 {
        let z = rng.random_range(0.1..20.0);
        let x = Vector3::new(rng.random_range(-0.7..0.7) * z, rng.random_range(-0.5..0.5) * z, z);
        let p = cam.project_coords(&x).map_err(|e| e.to_string())?;
        if !cam.contains(&p) {
            continue;
        }
        let y = cam.unproject_coords(&p, z).map_err(|e| e.to_string())?;
        point_err = point_err.max((x - y).norm());
        pairs += 1;
    }
    let elapsed = start.elapsed().as_secs_f64();
    check(
        pixel_err < 1e-6 && point_err < 1e-9 && elapsed < 1.0,
        format!("max pixel error {pixel_err:.2e} px, max point error {point_err:.2e} m, {elapsed:.3} s"),
    )
}

fn random_rotations(rng: &mut ChaCha8Rng, n: usize) -> Vec<Matrix3<f64>> {
    (0..n)
        .map(|_| rotation_exp(&Vector3::new(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0))))
        .collect()
}

fn rotation_metrics() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let gt = random_rotations(&mut rng, 200);
    let est: Vec<Matrix3<f64>> = gt.iter().map(|r| r * rot_z(0.05)).collect();
    let aoe_value = aoe(&gt, &est).map_err(|e| e.to_string())?;

    let mut est_abs = vec![gt[0]];
    for i in 0..gt.len() - 1 {
        let step = gt[i].transpose() * gt[i + 1];
        est_abs.push(est_abs[i] * step * rot_x(0.01));
    }
    let traj = |rs: &[Matrix3<f64>]| {
        PoseTrajectory::from_samples(
            rs.iter().enumerate().map(|(i, r)| (Timestamp(i as i64 * 100_000_000), *r, Vector3::zeros())),
            Convention::Absolute,
            PoseSource::OnBoard,
        )
        .unwrap()
    };
    let roe_value = roe(&traj(&gt), &traj(&est_abs), 1).map_err(|e| e.to_string())?;
    check(
        (aoe_value - 0.05).abs() <= 1e-9 && (roe_value - 0.01).abs() <= 1e-9,
        format!("AOE {aoe_value:.12} (err {:.1e}), ROE {roe_value:.12} (err {:.1e})", (aoe_value - 0.05).abs(), (roe_value - 0.01).abs()),
    )
}

fn floor_postcondition() -> Outcome {
    let cam = CameraModel::euroc_cam0();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let camera = FrameId::Camera(Timestamp(0));
    let (mut worst_z, mut hits, mut misses, mut wrong) = (0.0f64, 0, 0, 0);
    for _ in 0..1000 {
        let r = random_rotations(&mut rng, 1)[0];
        let d = Vector3::new(rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0), rng.random_range(0.2..10.0));
        let pose = Pose::new(r, d, camera, FrameId::Fixed).map_err(|e| e.to_string())?;
        let cfg = FloorPlaneConfig::new(pose).map_err(|e| e.to_string())?;
        let pixel = ImagePoint::new(rng.random_range(0.0..752.0), rng.random_range(0.0..480.0));
        // Independent descent test: a point one unit of depth along the
        // ray must lie below the optical centre.
        let along = pose.apply(&cam.unproject_coords(&pixel, 1.0).map_err(|e| e.to_string())?);
        let descends = along.z < d.z;
        match floor_depth(&cfg, &cam, &pixel) {
            Ok(p) => {
                hits += 1;
                worst_z = worst_z.max(pose.apply(&p.position).z.abs());
                wrong += usize::from(!descends);
            }
            Err(DepthError::NoIntersection { .. }) => {
                misses += 1;
                wrong += usize::from(descends);
            }
            Err(e) => return Err(e.to_string()),
        }
    }
    check(
        worst_z < 1e-9 && wrong == 0 && hits > 0 && misses > 0,
        format!("{hits} intersections (max |z| {worst_z:.2e} m), {misses} rejections, {wrong} misclassified"),
    )
}

fn provider_equivalence() -> Outcome {
    // True poses, then on-board poses with sigma 0.002 rad and m per step.
    let mut worst = [0.0f64; 2];
    for seed in 0u64..10 {
        let scene = synth_scene(&noisy_spec(seed, 0.002, 0.002)).map_err(|e| e.to_string())?;
        for (slot, poses) in [scene.truth_at_frames(), onboard_at_frames(&scene)?].iter().enumerate() {
            let floor = track_with(&scene, poses, DepthMode::Floor)?;
            let zmap = track_with(&scene, poses, DepthMode::ZMap)?;
            for (a, b) in floor.iter().zip(&zmap) {
                worst[slot] = worst[slot].max(rmse2d(&a.by_frame(), &b.by_frame()).map_err(|e| e.to_string())?);
            }
        }
    }
    check(
        worst[0] < 1e-3 && worst[1] < 1e-3,
        format!("max floor vs z-map RMSE2D over 10 seeds: {:.2e} px with true poses, {:.2e} px with noisy poses", worst[0], worst[1]),
    )
}

/// Mean RMSE₂D and AOE of the on-board stream of one noisy scene. A run
/// whose tracking fails (the estimate drifts below the floor, so a
/// reference cannot be lifted) scores an infinite pixel error.
fn noisy_run(seed: u64, sigma_rot: f64) -> Result<(f64, f64), String> {
    let scene = synth_scene(&noisy_spec(seed, sigma_rot, 0.0)).map_err(|e| e.to_string())?;
    let poses = onboard_at_frames(&scene)?;
    let orientation = aoe(&scene.truth_at_frames().rotations(), &poses.rotations()).map_err(|e| e.to_string())?;
    let pixel = match track_with(&scene, &poses, DepthMode::Floor) {
        Ok(tracks) => mean_rmse2d(&scene, &tracks)?,
        Err(_) => f64::INFINITY,
    };
    Ok((pixel, orientation))
}

fn failures(values: &[f64]) -> usize {
    values.iter().filter(|v| v.is_infinite()).count()
}

fn monotone_degradation() -> Outcome {
    use rayon::prelude::*;
    let runs = |sigma: f64| -> Result<(Vec<f64>, Vec<f64>), String> {
        let pairs = (0..20u64).into_par_iter().map(|seed| noisy_run(seed, sigma)).collect::<Result<Vec<_>, _>>()?;
        Ok(pairs.into_iter().unzip())
    };
    let levels = [0.001, 0.005, 0.02];
    let mut medians = Vec::new();
    let mut failed = Vec::new();
    for &sigma in &levels {
        let (px, _) = runs(sigma)?;
        medians.push(median(&px));
        failed.push(failures(&px));
    }
    let increasing = medians.windows(2).all(|w| w[1] > w[0]);
    // Ten geometrically spaced levels from 0.0005 to 0.02 rad per step.
    let sweep: Vec<f64> = (0..10).map(|i| 0.0005 * 40f64.powf(i as f64 / 9.0)).collect();
    let (mut px, mut rot, mut sweep_failed) = (Vec::new(), Vec::new(), 0);
    for &sigma in &sweep {
        let (p, r) = runs(sigma)?;
        sweep_failed += failures(&p);
        px.push(median(&p));
        rot.push(median(&r));
    }
    let rho = spearman(&px, &rot);
    check(
        increasing && rho > 0.9,
        format!(
            "median RMSE2D {} px at sigma_r {:?} (failed runs {:?}); Spearman(median RMSE2D, median AOE) = {rho:.3} over 10 levels x 20 seeds ({sweep_failed} failed runs)",
            medians.iter().map(|m| format!("{m:.2}")).collect::<Vec<_>>().join(" < "),
            levels,
            failed
        ),
    )
}

fn subset_aggregation() -> Outcome {
    let values = [8.1, 9.4, 7.7, 8.9];
    let mut exact = true;
    for k in 1..=4 {
        // Brute force over index bitmasks.
        let means: Vec<f64> = (0u32..16)
            .filter(|m| m.count_ones() as usize == k)
            .map(|m| (0..4).filter(|i| m & (1 << i) != 0).map(|i| values[i]).sum::<f64>() / k as f64)
            .collect();
        let mean = means.iter().sum::<f64>() / means.len() as f64;
        let std = (means.iter().map(|m| (m - mean) * (m - mean)).sum::<f64>() / means.len() as f64).sqrt();
        let got = subset_aggregate(&values, k).map_err(|e| e.to_string())?;
        exact &= (got.mean - mean).abs() <= 1e-12 && (got.std - std).abs() <= 1e-12;
    }
    let full = subset_aggregate(&values, 4).map_err(|e| e.to_string())?;

    let mut spec = noisy_spec(7, 0.003, 0.002);
    spec.scene.landmarks = 4;
    let scene = synth_scene(&spec).map_err(|e| e.to_string())?;
    let tracks = track_with(&scene, &onboard_at_frames(&scene)?, DepthMode::Floor)?;
    let scores: Vec<f64> = per_point_rmse2d(&scene.annotations, &tracks).map_err(|e| e.to_string())?.into_iter().map(|(_, e)| e).collect();
    let stds = (1..=4).map(|k| subset_aggregate(&scores, k).map(|m| m.std)).collect::<Result<Vec<_>, _>>().map_err(|e| e.to_string())?;
    let non_increasing = stds.windows(2).all(|w| w[1] <= w[0]);
    check(
        exact && full.std == 0.0 && non_increasing && scores.len() == 4,
        format!(
            "brute force match: {exact}, std(k=4) = {}, synthetic stds {}",
            full.std,
            stds.iter().map(|s| format!("{s:.3}")).collect::<Vec<_>>().join(" >= ")
        ),
    )
}

fn desynchronization(tmp: &Path) -> Outcome {
    let (seed, sr, st) = (21u64, 0.0002, 0.0005);
    let synced = synth_scene(&noisy_spec(seed, sr, st)).map_err(|e| e.to_string())?;
    let mut shifted_spec = noisy_spec(seed, sr, st);
    shifted_spec.noise.time_offset_s = 0.1;
    let shifted = synth_scene(&shifted_spec).map_err(|e| e.to_string())?;
    let base = mean_rmse2d(&synced, &track_with(&synced, &onboard_at_frames(&synced)?, DepthMode::Floor)?)?;
    let off = mean_rmse2d(&shifted, &track_with(&shifted, &onboard_at_frames(&shifted)?, DepthMode::Floor)?)?;

    let root = tmp.join("desync");
    let root_s = root.to_str().unwrap();
    run_vice(&["synth", "--out", root_s, "--seed", "21", "--sigma-rot", "0.0002", "--sigma-trans", "0.0005", "--time-offset", "0.1", "--no-images"])?;
    let csv = root.join("sweep.csv");
    run_vice(&["sweep-offset", "--dataset", root_s, "--source", "onboard", "--range", "-0.3:0.3:0.02", "--out", csv.to_str().unwrap()])?;
    let text = std::fs::read_to_string(&csv).map_err(|e| e.to_string())?;
    let best = text
        .lines()
        .skip(1)
        .filter_map(|l| {
            let (o, e) = l.split_once(',')?;
            Some((o.parse::<f64>().ok()?, e.parse::<f64>().ok()?))
        })
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .ok_or("empty sweep")?;
    let period = 1.0 / synced.frames.rate_hz();
    check(
        off > 2.0 * base && (best.0 - 0.1).abs() <= period,
        format!(
            "RMSE2D {base:.3} px synced vs {off:.3} px with 100 ms offset (x{:.1}); sweep minimum at {} s ({:.3} px)",
            off / base,
            best.0,
            best.1
        ),
    )
}

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures")
}

fn ingestion_golden() -> Outcome {
    let root = fixtures().join("euroc_mini");
    let seq = load_euroc_sequence(&root).map_err(|e| e.to_string())?;
    let gt = seq.groundtruth.as_ref().ok_or("no ground truth")?;
    let quarter = (gt.entries()[0].pose.rotation() - rot_z(std::f64::consts::FRAC_PI_2)).abs().max();
    let structure = seq.frames.len() == 3
        && gt.len() == 5
        && seq.camera == CameraModel::euroc_cam0()
        && seq.frames.frames()[1].timestamp == Timestamp(1403715273312143104)
        && *gt.entries()[4].pose.translation() == Vector3::new(0.879814, 2.140698, 0.946990)
        && quarter < 1e-6;

    let malformed = |name: &str| read_pose_csv(&fixtures().join("malformed").join(name), Convention::Absolute, PoseSource::OnBoard);
    let located = matches!(malformed("swapped_timestamps.csv"), Err(IngestError::NonMonotonic { line: 4, .. }))
        && matches!(malformed("wrong_columns.csv"), Err(IngestError::MalformedRow { line: 3, .. }))
        && matches!(malformed("non_numeric.csv"), Err(IngestError::MalformedRow { line: 4, .. }));

    let path = fixtures().join("annotations.json");
    let text = std::fs::read_to_string(&path).map_err(|e| e.to_string())?;
    let round_trip = AnnotationSet::read(&path, None).map_err(|e| e.to_string())?.to_canonical_json() == text;
    check(
        structure && located && round_trip,
        format!("fixture structures: {structure}, located errors: {located}, byte-identical round trip: {round_trip}"),
    )
}

fn tree(root: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in std::fs::read_dir(&dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                out.insert(path.strip_prefix(root).unwrap().to_path_buf(), std::fs::read(&path).unwrap());
            }
        }
    }
    out
}

fn determinism(tmp: &Path) -> Outcome {
    let dirs: Vec<PathBuf> = ["det_a", "det_b"].iter().map(|d| tmp.join(d)).collect();
    for d in &dirs {
        run_vice(&["synth", "--out", d.to_str().unwrap(), "--seed", "5", "--frames", "60"])?;
    }
    let (a, b) = (tree(&dirs[0]), tree(&dirs[1]));
    let synth_same = a == b;
    let mut track_trees = Vec::new();
    for run in ["t1", "t2"] {
        let out = tmp.join(run);
        let data = dirs[0].to_str().unwrap();
        run_vice(&["track", "--dataset", data, "--depth", "floor,zmap", "--tracks-dir", out.join("ann").to_str().unwrap()])?;
        run_vice(&[
            "track", "--dataset", data, "--initializer", "random", "--seed", "9", "--points", "6",
            "--tracks-dir", out.join("rand").to_str().unwrap(),
        ])?;
        track_trees.push(tree(&out));
    }
    let track_same = track_trees[0] == track_trees[1];
    check(
        synth_same && track_same,
        format!(
            "synth: {} files identical: {synth_same}; track: {} files identical: {track_same}",
            a.len(),
            track_trees[0].len()
        ),
    )
}

fn main() {
    let tmp = tempfile::tempdir().expect("temp dir");
    let criteria: Vec<(&str, Criterion<'_>)> = vec![
        ("1 exactness oracle", Box::new(exactness_oracle)),
        ("2 projection round trip", Box::new(projection_round_trip)),
        ("3 rotation metrics", Box::new(rotation_metrics)),
        ("4 floor-plane postcondition", Box::new(floor_postcondition)),
        ("5 depth-provider equivalence", Box::new(provider_equivalence)),
        ("6 monotone degradation and correlation", Box::new(monotone_degradation)),
        ("7 subset aggregation", Box::new(subset_aggregation)),
        ("8 desynchronization sensitivity", Box::new(|| desynchronization(tmp.path()))),
        ("9 ingestion golden files", Box::new(ingestion_golden)),
        ("10 determinism", Box::new(|| determinism(tmp.path()))),
    ];
    let mut failed = 0;
    for (name, f) in &criteria {
        let outcome = std::panic::catch_unwind(std::panic::AssertUnwindSafe(f)).unwrap_or_else(|p| {
            Err(p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default())
        });
        match outcome {
            Ok(detail) => println!("PASS criterion {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL criterion {name}: {detail}");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
