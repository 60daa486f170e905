//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any
//! failure. Runs as part of `cargo test`; alone with
//! `cargo test -p lidar-mot-cli --test acceptance`.

#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::Instant;

use common::*;
use lidar_mot::clustering::{dbscan, ClusteringParams};
use lidar_mot::dataset_io::{load_sequence, PointCloud, Sequence};
use lidar_mot::detection::{Detection3D, DetectorConfig};
use lidar_mot::evaluation::{hypotheses_from_records, mota, Hypothesis};
use lidar_mot::geometry::{RigidTransform, CITY_FRAME, EGO_FRAME};
use lidar_mot::pipeline::run_sequence;
use lidar_mot::preprocess::{fit_ground_plane, PreprocessConfig};
use lidar_mot::spatial_index::{KdTree, RadiusSearch};
use lidar_mot::synth::{build_scene, generate, SynthConfig};
use lidar_mot::tracking::{
    hungarian, kalman_predict, kalman_update, KalmanCv, TrackStatus, Tracker, TrackerConfig,
};
use lidar_mot::Vec3;
use lidar_mot_cli::run::run_track;
use lidar_mot_cli::PipelineConfig;
use nalgebra::{Matrix4, Vector4};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

/// Outcome of one criterion: pass flag and a one-line measurement.
type Verdict = (bool, String);
type Check<'a> = Box<dyn Fn() -> Verdict + 'a>;

fn lidar_mot_bin(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_lidar-mot"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn run_ok(args: &[&str]) -> String {
    let out = lidar_mot_bin(args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn dbscan_oracle_equivalence() -> Verdict {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut mismatches = 0;
    let mut total_points = 0;
    for _ in 0..1000 {
        let n = rng.random_range(1..=300);
        let points = blob_cloud(&mut rng, n);
        let eps = rng.random_range(0.05..2.0);
        let min_points = rng.random_range(1..=20);
        let got = dbscan(
            &points,
            &ClusteringParams { eps, min_points },
            &KdTree::build(&points),
        )
        .unwrap();
        let want = reference_dbscan(&points, eps, min_points);
        let got = labels_of(&got);
        let same_partition = canonical(&got) == canonical(&want);
        let same_noise = got
            .iter()
            .zip(&want)
            .all(|(a, b)| a.is_none() == b.is_none());
        if !(same_partition && same_noise) {
            mismatches += 1;
        }
        total_points += n;
    }
    let secs = start.elapsed().as_secs_f64();
    (
        mismatches == 0 && secs < 60.0,
        format!(
            "{mismatches}/1000 clouds differ ({total_points} points), {secs:.2} s (limit 60 s)"
        ),
    )
}

fn kd_tree_exactness(scratch: &Path) -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut wrong = 0;
    for _ in 0..20 {
        let n = rng.random_range(1..=2000);
        let points = blob_cloud(&mut rng, n);
        let tree = KdTree::with_leaf_size(&points, rng.random_range(1..=32));
        for _ in 0..50 {
            let c = Vec3::new(
                rng.random_range(-12.0..12.0),
                rng.random_range(-12.0..12.0),
                rng.random_range(-12.0..12.0),
            );
            let r = rng.random_range(0.0..5.0);
            if tree.radius_query(c, r).unwrap() != linear_radius(&points, c, r) {
                wrong += 1;
            }
        }
    }

    // a denser scene so that 20,000 points survive full-resolution preprocessing
    let cfg = scratch.join("bench_synth.json");
    fs::write(&cfg, r#"{"n_frames": 1, "points_per_car": 6000}"#).unwrap();
    let seq = scratch.join("bench_seq");
    run_ok(&["synth", path_str(&seq), "--config", path_str(&cfg)]);
    let report: Value = serde_json::from_str(&run_ok(&[
        "bench",
        path_str(&seq),
        "--cluster-points",
        "20000",
        "--json",
    ]))
    .unwrap();
    let c = &report["clustering"];
    let (n, tree_ms, brute_ms) = (
        c["points"].as_u64().unwrap(),
        c["kdtree_ms"].as_f64().unwrap(),
        c["brute_force_ms"].as_f64().unwrap(),
    );
    let speedup = brute_ms / tree_ms;
    (
        wrong == 0 && n == 20_000 && speedup >= 2.0,
        format!(
            "{wrong}/1000 queries differ; DBSCAN at N={n}: kd-tree {tree_ms:.1} ms, brute force {brute_ms:.1} ms, speedup {speedup:.2}x (need >= 2x)"
        ),
    )
}

fn hungarian_optimality() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(500);
    let mut wrong = 0;
    for _ in 0..500 {
        let cost = random_cost_matrix(&mut rng);
        if assignment_cost(&cost, &hungarian(&cost).matches) != brute_force_min_cost(&cost) {
            wrong += 1;
        }
    }
    (
        wrong == 0,
        format!("{wrong}/500 matrices differ from the permutation minimum"),
    )
}

fn ransac_ground_plane() -> Verdict {
    let mut good = 0;
    let mut worst = (0.0f64, 0.0f64);
    for seed in 0..100u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(9000 + seed);
        let cloud = noisy_plane_cloud(&mut rng, 500, 0.2, 0.01);
        let (n, d) = least_squares_plane(&cloud.points[..cloud.inliers]);
        let cfg = PreprocessConfig {
            rng_seed: seed,
            ..PreprocessConfig::default()
        };
        let plane = fit_ground_plane(&cloud.points, &cfg).unwrap();
        let (deg, off) = plane_error(plane.normal, plane.offset, n, d);
        worst = (worst.0.max(deg), worst.1.max(off));
        if deg < 2.0 && off < 0.05 {
            good += 1;
        }
    }
    (
        good >= 95,
        format!("{good}/100 seeds within 2 deg / 0.05 m of the least-squares inlier plane (worst {:.3} deg, {:.4} m)", worst.0, worst.1),
    )
}

fn det(x: f64, y: f64) -> Detection3D {
    Detection3D {
        center: Vec3::new(x, y, -0.8),
        length: 4.5,
        width: 1.8,
        height: 1.5,
        n_points: 100,
        frame_index: 0,
    }
}

fn kalman_convergence() -> Verdict {
    let (v, dt) = ([6.0, -2.0], 0.5);
    let mut tracker = Tracker::new(TrackerConfig::default()).unwrap();
    let mut worst_velocity = 0.0f64;
    let mut confirmed_frames = 0;
    for f in 0..20 {
        let t = f as f64 * dt;
        for s in tracker.step(&[det(v[0] * t, v[1] * t)], t).unwrap() {
            confirmed_frames += 1;
            worst_velocity = worst_velocity.max((s.vx - v[0]).hypot(s.vy - v[1]));
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let mut k = KalmanCv::new(
        [0.0; 4],
        Matrix4::from_diagonal(&Vector4::new(0.25, 0.25, 100.0, 100.0)),
    );
    let (mut min_eig, mut asymmetric) = (f64::INFINITY, 0);
    for _ in 0..1000 {
        k = kalman_predict(&k, rng.random_range(0.0..2.0), rng.random_range(0.01..5.0)).unwrap();
        k = kalman_update(
            &k,
            [
                rng.random_range(-100.0..100.0),
                rng.random_range(-100.0..100.0),
            ],
            rng.random_range(0.01..3.0),
        )
        .unwrap();
        asymmetric += usize::from(k.covariance != k.covariance.transpose());
        min_eig = min_eig.min(k.covariance.symmetric_eigen().eigenvalues.min());
    }
    (
        confirmed_frames == 16 && worst_velocity < 0.05 && asymmetric == 0 && min_eig >= -1e-9,
        format!(
            "velocity error after confirmation <= {worst_velocity:.2e} m/s over {confirmed_frames} frames; \
             1000 cycles: {asymmetric} asymmetric, min eigenvalue {min_eig:.3e}"
        ),
    )
}

fn lifecycle_thresholds() -> Verdict {
    let mut notes = Vec::new();
    let mut all = true;
    for threshold in [1u32, 3, 5] {
        let cfg = TrackerConfig {
            hit_confirm_threshold: threshold,
            miss_delete_threshold: threshold,
            ..TrackerConfig::default()
        };
        let mut tracker = Tracker::new(cfg).unwrap();
        let mut t = 0.0;
        let mut first_emit = None;
        for frame in 1..=threshold + 2 {
            if !tracker.step(&[det(0.0, 0.0)], t).unwrap().is_empty() && first_emit.is_none() {
                first_emit = Some(frame);
            }
            t += 0.1;
        }
        let mut deleted_after = None;
        for miss in 1..=threshold + 2 {
            tracker.step(&[], t).unwrap();
            t += 0.1;
            let alive = tracker
                .tracks()
                .iter()
                .any(|tr| tr.status == TrackStatus::Confirmed);
            if !alive && deleted_after.is_none() {
                deleted_after = Some(miss);
            }
        }
        all &= first_emit == Some(threshold) && deleted_after == Some(threshold);
        notes.push(format!(
            "k={threshold}: confirmed at hit {}, deleted after miss {}",
            first_emit.map_or("-".into(), |v| v.to_string()),
            deleted_after.map_or("-".into(), |v| v.to_string())
        ));
    }
    (all, notes.join("; "))
}

fn mota_fixture_and_relabeling() -> Verdict {
    let (gt, hy) = mota_fixture();
    let fixture = mota(&gt, &hy, 2.0).unwrap().mota;

    let mut rng = ChaCha8Rng::seed_from_u64(50);
    let mut changed = 0;
    for _ in 0..50 {
        let (gt, hy) = random_mota_scenario(&mut rng);
        let ids: BTreeSet<u64> = hy.values().flatten().map(|h| h.id).collect();
        let mut targets: Vec<u64> = (0..ids.len() as u64).map(|i| 500 + 3 * i).collect();
        targets.shuffle(&mut rng);
        let map: BTreeMap<u64, u64> = ids.into_iter().zip(targets).collect();
        let relabeled: BTreeMap<usize, Vec<Hypothesis>> = hy
            .iter()
            .map(|(&f, v)| {
                (
                    f,
                    v.iter()
                        .map(|h| Hypothesis {
                            id: map[&h.id],
                            ..*h
                        })
                        .collect(),
                )
            })
            .collect();
        if mota(&gt, &hy, 2.0).unwrap() != mota(&gt, &relabeled, 2.0).unwrap() {
            changed += 1;
        }
    }
    (
        fixture == 0.5 && changed == 0,
        format!("fixture mota = {fixture}; {changed}/50 relabelings changed the result"),
    )
}

fn end_to_end(scratch: &Path) -> Verdict {
    let cfg = SynthConfig::default();
    let dir = scratch.join("golden");
    let scene = generate(&cfg, &dir).unwrap();
    let start = Instant::now();
    let seq = load_sequence(&dir).unwrap();
    let run = run_track(&seq, &PipelineConfig::default(), 1).unwrap();
    let secs = start.elapsed().as_secs_f64();
    let gt = seq.ground_truth.as_ref().unwrap();
    let score = mota(gt, &hypotheses_from_records(&run.records), 2.0).unwrap();

    let last = cfg.n_frames - 1;
    let mut speed_ok = 0;
    let mut speed_notes = Vec::new();
    for car in &scene.cars {
        let c = gt[&last]
            .iter()
            .find(|b| b.track_id == car.id)
            .unwrap()
            .center;
        let est = run
            .records
            .iter()
            .filter(|r| r.frame == last && (r.x - c.x).hypot(r.y - c.y) <= 2.0)
            .map(|r| r.vx.hypot(r.vy))
            .next();
        let truth = car.velocity.norm();
        let ok = est.is_some_and(|s| (s - truth).abs() <= 0.1 * truth);
        speed_ok += usize::from(ok);
        speed_notes.push(format!(
            "{truth:.2}->{}",
            est.map_or("none".into(), |s| format!("{s:.2}"))
        ));
    }
    (
        score.mota >= 0.90 && score.id_switches == 0 && speed_ok >= 4 && secs < 30.0,
        format!(
            "mota {:.3} (FN {}, FP {}, IDSW {}, GT {}); speeds within 10% for {speed_ok}/5 [{}]; {secs:.2} s serial",
            score.mota,
            score.false_negatives,
            score.false_positives,
            score.id_switches,
            score.gt_count,
            speed_notes.join(", ")
        ),
    )
}

fn ego_motion_invariance() -> Verdict {
    let moving: Sequence = build_scene(&SynthConfig::default()).unwrap().sequence;
    let mut pinned = moving.clone();
    let origin = RigidTransform::identity(EGO_FRAME).with_frames(EGO_FRAME, CITY_FRAME);
    for f in &mut pinned.frames {
        let city = f
            .cloud
            .points
            .iter()
            .map(|&p| f.ego_pose.transform_point(p))
            .collect();
        f.cloud = PointCloud::new(city, EGO_FRAME);
        f.ego_pose = origin.clone();
    }
    let run = |s: &Sequence| {
        run_sequence(s, &DetectorConfig::default(), &TrackerConfig::default()).unwrap()
    };
    let (a, b) = (run(&moving), run(&pinned));
    let same_keys = a.len() == b.len()
        && a.iter()
            .zip(&b)
            .all(|(x, y)| (x.frame, x.track_id) == (y.frame, y.track_id));
    let max_diff = a
        .iter()
        .zip(&b)
        .map(|(x, y)| {
            (x.x - y.x)
                .abs()
                .max((x.y - y.y).abs())
                .max((x.z - y.z).abs())
        })
        .fold(0.0, f64::max);
    (
        same_keys && !a.is_empty() && max_diff <= 1e-6,
        format!(
            "{} records, identical ids: {same_keys}, max position difference {max_diff:.2e} m",
            a.len()
        ),
    )
}

fn determinism(scratch: &Path) -> Verdict {
    let seq = scratch.join("determinism");
    run_ok(&["synth", path_str(&seq), "--seed", "7"]);
    let (one, four) = (scratch.join("w1.jsonl"), scratch.join("w4.jsonl"));
    run_ok(&[
        "track",
        path_str(&seq),
        "--workers",
        "1",
        "--output",
        path_str(&one),
    ]);
    run_ok(&[
        "track",
        path_str(&seq),
        "--workers",
        "4",
        "--output",
        path_str(&four),
    ]);
    let (a, b) = (fs::read(&one).unwrap(), fs::read(&four).unwrap());
    (
        a == b,
        format!(
            "track files {} and {} bytes, identical: {}",
            a.len(),
            b.len(),
            a == b
        ),
    )
}

fn main() -> ExitCode {
    let scratch = tempfile::tempdir().expect("scratch directory");
    let s = scratch.path();
    let criteria: Vec<(&str, Check)> = vec![
        (
            "DBSCAN oracle equivalence",
            Box::new(dbscan_oracle_equivalence),
        ),
        (
            "KD-tree exactness and speedup",
            Box::new(|| kd_tree_exactness(s)),
        ),
        ("Hungarian optimality", Box::new(hungarian_optimality)),
        ("RANSAC ground plane", Box::new(ransac_ground_plane)),
        ("Kalman CV convergence", Box::new(kalman_convergence)),
        ("Lifecycle thresholds", Box::new(lifecycle_thresholds)),
        ("MOTA fixture", Box::new(mota_fixture_and_relabeling)),
        (
            "End-to-end synthetic golden run",
            Box::new(|| end_to_end(s)),
        ),
        ("Ego-motion invariance", Box::new(ego_motion_invariance)),
        ("Determinism across workers", Box::new(|| determinism(s))),
    ];
    println!("\nacceptance criteria");
    let mut failed = 0;
    for (name, check) in &criteria {
        let (pass, detail) = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            (false, format!("panicked: {msg}"))
        });
        failed += usize::from(!pass);
        println!("{} {name}: {detail}", if pass { "PASS" } else { "FAIL" });
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
