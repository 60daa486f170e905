mod common;

use common::{least_squares_plane, noisy_plane_cloud, plane_error};
use lidar_mot::dataset_io::{Calibration, DrivableGrid, Frame, PointCloud};
use lidar_mot::detection::preprocess_frame;
use lidar_mot::geometry::{RigidTransform, CITY_FRAME, EGO_FRAME};
use lidar_mot::preprocess::{
    fit_ground_plane, remove_ground, remove_ground_indices, PreprocessConfig,
};
use lidar_mot::Vec3;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn ransac_recovers_noisy_plane_for_most_seeds() {
    let mut good = 0;
    for seed in 0..100 {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
        let cloud = noisy_plane_cloud(&mut rng, 500, 0.2, 0.01);
        let (n, d) = least_squares_plane(&cloud.points[..cloud.inliers]);
        let (truth_deg, truth_off) = plane_error(n, d, cloud.normal, cloud.offset);
        assert!(truth_deg < 0.1 && truth_off < 0.005, "oracle itself is off");
        let cfg = PreprocessConfig {
            rng_seed: seed,
            ..PreprocessConfig::default()
        };
        let plane = fit_ground_plane(&cloud.points, &cfg).unwrap();
        let (deg, off) = plane_error(plane.normal, plane.offset, n, d);
        if deg < 2.0 && off < 0.05 {
            good += 1;
        }
    }
    assert!(good >= 95, "{good}/100 seeds recovered the plane");
}

#[test]
fn ground_scene_keeps_only_obstacles() {
    let mut points: Vec<Vec3> = (0..100)
        .map(|i| {
            Vec3::new(
                (i % 10) as f64 * 2.0 - 9.0,
                (i / 10) as f64 * 2.0 - 9.0,
                -1.7,
            )
        })
        .collect();
    points.extend((0..30).map(|i| {
        Vec3::new(
            5.0 + (i % 3) as f64 * 0.3,
            (i / 3) as f64 * 0.2,
            -1.0 + (i % 5) as f64 * 0.3,
        )
    }));
    let cloud = PointCloud::new(points, EGO_FRAME);
    let (kept, warning) = remove_ground(&cloud, &PreprocessConfig::default());
    assert!(warning.is_none());
    assert_eq!(kept.points, cloud.points[100..].to_vec());
}

#[test]
fn too_few_candidates_pass_cloud_through_with_warning() {
    let cloud = PointCloud::new(
        (0..10).map(|i| Vec3::new(i as f64, 0.0, -1.7)).collect(),
        EGO_FRAME,
    );
    let r = remove_ground_indices(&cloud, &PreprocessConfig::default());
    assert_eq!(r.kept, (0..10).collect::<Vec<_>>());
    assert!(r.plane.is_none());
    assert!(r.warning.unwrap().contains("ground"));
}

fn frame_from(points: Vec<Vec3>) -> Frame {
    Frame {
        index: 0,
        timestamp: 0.0,
        cloud: PointCloud::new(points, EGO_FRAME),
        ego_pose: RigidTransform::identity(EGO_FRAME).with_frames(EGO_FRAME, CITY_FRAME),
        masks: Vec::new(),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn preprocessing_returns_a_subset(
        raw in prop::collection::vec((-30.0..30.0f64, -30.0..30.0f64, -2.0..2.0f64), 0..400),
        stride in 1usize..5,
        seed in 0u64..1000,
    ) {
        let points: Vec<Vec3> = raw.into_iter().map(|(x, y, z)| Vec3::new(x, y, z)).collect();
        let frame = frame_from(points.clone());
        let mut grid = DrivableGrid::filled([-30.0, -30.0], 1.0, 60, 60, false).unwrap();
        grid.fill_rect([-10.0, -30.0], [10.0, 30.0], true);
        let cfg = PreprocessConfig { stride, rng_seed: seed, min_plane_points: 10, ..PreprocessConfig::default() };
        let out = preprocess_frame(&frame, &Calibration::default(), &grid, &cfg).unwrap();
        prop_assert!(out.len() <= points.len().div_ceil(stride));
        for p in &out.points {
            prop_assert!(points.contains(p));
            prop_assert!(grid.is_drivable(p.x, p.y));
        }
    }
}
