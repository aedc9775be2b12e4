use std::sync::Arc;
use std::time::Instant;

use vice_core::depth::DepthMode;
use vice_core::ingestion::synth::{synth_scene, true_projection, SynthSpec};
use vice_core::metrics::{per_point_rmse2d, rmse2d};
use vice_core::pipeline::{track_all, DepthInputs, ReferencePolicy};

#[test]
fn true_poses_reproduce_exact_annotations() {
    let scene = synth_scene(&SynthSpec { seed: 11, ..Default::default() }).unwrap();
    let truth = scene.truth_at_frames();
    let start = Instant::now();
    let tracks = track_all(
        &truth,
        &scene.rig,
        &scene.camera,
        DepthMode::Floor,
        &DepthInputs::default(),
        &ReferencePolicy::FromAnnotations,
        Some(&scene.annotations),
    )
    .unwrap();
    println!("tracked in {:?}", start.elapsed());
    let segments: usize = tracks.iter().map(|t| t.segments.len()).sum();
    println!("{segments} segments");
    for (id, e) in per_point_rmse2d(&scene.annotations, &tracks).unwrap() {
        assert!(e < 1e-6, "track {id}: {e}");
    }
    // Respawns coincide with the annotation respawn flags.
    for t in &tracks {
        let flags: Vec<usize> = scene.annotations.track(t.track_id).unwrap().respawn_frames().into_iter().collect();
        assert_eq!(t.respawn_frames(), flags);
    }
    // Independent oracle: landmark projections under true camera poses.
    for t in &tracks {
        for seg in &t.segments {
            let lm = scene.landmarks.iter().find(|l| l.track == t.track_id && l.start_frame == seg.start_frame).unwrap();
            for (frame, p) in seg.frames() {
                let q = true_projection(&scene, frame, &lm.position).unwrap();
                assert!(p.unwrap().distance(&q) < 1e-6);
            }
        }
    }
}

#[test]
fn floor_and_point_cloud_depth_agree() {
    let mut spec = SynthSpec { seed: 12, ..Default::default() };
    spec.noise.sigma_rot = 0.002;
    spec.noise.sigma_trans = 0.002;
    let scene = synth_scene(&spec).unwrap();
    let aligned = vice_core::ingestion::align_and_resample(&scene.frames, &scene.noisy, &Default::default()).unwrap();
    let inputs = DepthInputs { cloud: Some(Arc::new(scene.point_cloud.clone())), sensor: None };
    let run = |mode| {
        track_all(&aligned.poses, &scene.rig, &scene.camera, mode, &inputs, &ReferencePolicy::FromAnnotations, Some(&scene.annotations)).unwrap()
    };
    let start = Instant::now();
    let floor = run(DepthMode::Floor);
    let zmap = run(DepthMode::ZMap);
    println!("both modes in {:?}", start.elapsed());
    for (a, b) in floor.iter().zip(&zmap) {
        let e = rmse2d(&a.by_frame(), &b.by_frame()).unwrap();
        println!("track {}: {e:e}", a.track_id);
        assert!(e < 1e-3);
    }
}
