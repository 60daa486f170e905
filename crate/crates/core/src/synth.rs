//! Deterministic synthetic scenes with exact ground truth.
//!
//! Cars are boxes driving straight at constant city-frame velocity, one per
//! lane, rendered as noisy points on their top and side faces. The ground is a
//! flat plane at `ground_z` in the ego frame and the ego vehicle is either
//! parked or driving straight. Clouds are written in each frame's ego frame.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::dataset_io::{
    write_sequence, Calibration, DrivableGrid, Frame, GroundTruth, GroundTruthBox, PointCloud,
    Sequence,
};
use crate::error::{Error, Result};
use crate::geometry::{CameraModel, RigidTransform, Vec3, CITY_FRAME, EGO_FRAME};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum EgoMotion {
    Static,
    /// Straight line along `heading` (radians from city +x) at `speed` m/s.
    Straight {
        speed: f64,
        heading: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub n_cars: usize,
    pub n_frames: usize,
    /// Seconds between frames.
    pub dt: f64,
    pub car_length: f64,
    pub car_width: f64,
    pub car_height: f64,
    pub speed_min: f64,
    pub speed_max: f64,
    /// Cars start within `±start_spread` meters of the ego along the road.
    pub start_spread: f64,
    pub lane_spacing: f64,
    pub ego: EgoMotion,
    pub points_per_car: usize,
    /// Ground returns per square meter.
    pub ground_density: f64,
    /// Ground is sampled over the ego-centered square `±ground_half_extent`.
    pub ground_half_extent: f64,
    pub ground_z: f64,
    pub clutter_points: usize,
    /// Per-axis Gaussian noise, truncated at three standard deviations.
    pub noise_sigma: f64,
    pub drivable_resolution: f64,
    pub rng_seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            n_cars: 5,
            n_frames: 50,
            dt: 0.1,
            car_length: 4.5,
            car_width: 1.8,
            car_height: 1.5,
            speed_min: 5.0,
            speed_max: 15.0,
            start_spread: 20.0,
            lane_spacing: 3.5,
            ego: EgoMotion::Straight {
                speed: 10.0,
                heading: 0.0,
            },
            points_per_car: 4000,
            ground_density: 8.0,
            ground_half_extent: 50.0,
            ground_z: -1.7,
            clutter_points: 200,
            noise_sigma: 0.02,
            drivable_resolution: 0.5,
            rng_seed: 42,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "synth.dt must be > 0, got {}",
                self.dt
            )));
        }
        let positive = [
            ("car_length", self.car_length),
            ("car_width", self.car_width),
            ("car_height", self.car_height),
            ("lane_spacing", self.lane_spacing),
            ("ground_half_extent", self.ground_half_extent),
            ("drivable_resolution", self.drivable_resolution),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidArgument(format!(
                    "synth.{name} must be > 0, got {v}"
                )));
            }
        }
        if !(self.speed_min <= self.speed_max)
            || self.noise_sigma < 0.0
            || self.ground_density < 0.0
            || self.start_spread < 0.0
        {
            return Err(Error::InvalidArgument(
                "synth: need speed_min <= speed_max and non-negative noise, density and spread"
                    .into(),
            ));
        }
        Ok(())
    }
}

/// Constant-velocity car trajectory in the city frame.
#[derive(Debug, Clone, PartialEq)]
pub struct CarPath {
    pub id: String,
    pub start: Vec3,
    pub velocity: Vec3,
    pub length: f64,
    pub width: f64,
    pub height: f64,
}

impl CarPath {
    pub fn center_at(&self, t: f64) -> Vec3 {
        self.start + self.velocity * t
    }

    pub fn heading(&self) -> f64 {
        self.velocity.y.atan2(self.velocity.x)
    }
}

/// A generated scene: the sequence plus the car trajectories behind it.
#[derive(Debug, Clone)]
pub struct Scene {
    pub sequence: Sequence,
    pub cars: Vec<CarPath>,
}

fn ego_pose(cfg: &SynthConfig, t: f64) -> RigidTransform {
    match cfg.ego {
        EgoMotion::Static => RigidTransform::identity(EGO_FRAME).with_frames(EGO_FRAME, CITY_FRAME),
        EgoMotion::Straight { speed, heading } => RigidTransform::from_yaw(
            heading,
            Vec3::new(speed * t * heading.cos(), speed * t * heading.sin(), 0.0),
            EGO_FRAME,
            CITY_FRAME,
        ),
    }
}

/// Lane offsets 1, -1, 2, -2, ... lane widths from the ego lane.
fn lane_offset(i: usize, spacing: f64) -> f64 {
    let k = (i / 2 + 1) as f64;
    if i.is_multiple_of(2) {
        k * spacing
    } else {
        -k * spacing
    }
}

fn front_camera() -> CameraModel {
    // camera 1.5 m ahead of the sensor, looking along ego +x
    let ext = RigidTransform::from_rotation_matrix(
        [[0.0, -1.0, 0.0], [0.0, 0.0, -1.0], [1.0, 0.0, 0.0]],
        Vec3::new(0.0, -0.2, -1.5),
        EGO_FRAME,
        "front",
    );
    CameraModel::new("front", (1000.0, 1000.0, 960.0, 600.0), (1920, 1200), ext)
        .expect("valid camera")
}

fn distance_to_segment(p: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
    let len2 = dx * dx + dy * dy;
    let s = if len2 > 0.0 {
        (((p[0] - a[0]) * dx + (p[1] - a[1]) * dy) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    (p[0] - a[0] - s * dx).hypot(p[1] - a[1] - s * dy)
}

fn drivable_grid(cfg: &SynthConfig, cars: &[CarPath], t_end: f64) -> Result<DrivableGrid> {
    let margin = cfg.lane_spacing;
    let mut segments: Vec<([f64; 2], [f64; 2])> = cars
        .iter()
        .map(|c| {
            let (a, b) = (c.center_at(0.0), c.center_at(t_end));
            ([a.x, a.y], [b.x, b.y])
        })
        .collect();
    let (e0, e1) = (
        ego_pose(cfg, 0.0).translation(),
        ego_pose(cfg, t_end).translation(),
    );
    segments.push(([e0.x, e0.y], [e1.x, e1.y]));

    let pad = margin + cfg.car_length;
    let xs = segments.iter().flat_map(|(a, b)| [a[0], b[0]]);
    let ys = segments.iter().flat_map(|(a, b)| [a[1], b[1]]);
    let (min_x, max_x) = xs.fold((f64::MAX, f64::MIN), |(lo, hi), v| (lo.min(v), hi.max(v)));
    let (min_y, max_y) = ys.fold((f64::MAX, f64::MIN), |(lo, hi), v| (lo.min(v), hi.max(v)));
    let res = cfg.drivable_resolution;
    let origin = [
        ((min_x - pad) / res).floor() * res,
        ((min_y - pad) / res).floor() * res,
    ];
    let width = ((max_x + pad - origin[0]) / res).ceil() as usize;
    let height = ((max_y + pad - origin[1]) / res).ceil() as usize;
    let mut grid = DrivableGrid::filled(origin, res, width, height, false)?;
    for row in 0..height {
        for col in 0..width {
            let p = [
                origin[0] + (col as f64 + 0.5) * res,
                origin[1] + (row as f64 + 0.5) * res,
            ];
            if segments
                .iter()
                .any(|&(a, b)| distance_to_segment(p, a, b) <= margin)
            {
                grid.set(col, row, true);
            }
        }
    }
    Ok(grid)
}

/// Samples a point on the top or one of the four sides of a box centered at
/// the origin, with probability proportional to face area.
fn sample_box_surface(rng: &mut ChaCha8Rng, l: f64, w: f64, h: f64) -> Vec3 {
    let faces = [l * w, l * h, l * h, w * h, w * h];
    let total: f64 = faces.iter().sum();
    let mut pick = rng.random_range(0.0..total);
    let mut face = 0;
    while face < faces.len() - 1 && pick >= faces[face] {
        pick -= faces[face];
        face += 1;
    }
    let (a, b) = (rng.random_range(-0.5..=0.5), rng.random_range(-0.5..=0.5));
    match face {
        0 => Vec3::new(a * l, b * w, h / 2.0),
        1 => Vec3::new(a * l, w / 2.0, b * h),
        2 => Vec3::new(a * l, -w / 2.0, b * h),
        3 => Vec3::new(l / 2.0, a * w, b * h),
        _ => Vec3::new(-l / 2.0, a * w, b * h),
    }
}

fn round_f32(p: Vec3) -> Vec3 {
    Vec3::new(p.x as f32 as f64, p.y as f32 as f64, p.z as f32 as f64)
}

/// Builds a scene in memory. Point coordinates are rounded to `f32`, so the
/// sequence survives [`write_sequence`] / `load_sequence` unchanged.
pub fn build_scene(cfg: &SynthConfig) -> Result<Scene> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    let noise = Normal::new(0.0, cfg.noise_sigma.max(f64::MIN_POSITIVE)).expect("valid sigma");
    let clip = 3.0 * cfg.noise_sigma;
    let jitter = |rng: &mut ChaCha8Rng| {
        if cfg.noise_sigma == 0.0 {
            return Vec3::ZERO;
        }
        let mut s = || noise.sample(rng).clamp(-clip, clip);
        Vec3::new(s(), s(), s())
    };

    let road_heading = match cfg.ego {
        EgoMotion::Static => 0.0,
        EgoMotion::Straight { heading, .. } => heading,
    };
    let (dir, lateral) = (
        Vec3::new(road_heading.cos(), road_heading.sin(), 0.0),
        Vec3::new(-road_heading.sin(), road_heading.cos(), 0.0),
    );
    let cars: Vec<CarPath> = (0..cfg.n_cars)
        .map(|i| {
            let along = if cfg.start_spread > 0.0 {
                rng.random_range(-cfg.start_spread..=cfg.start_spread)
            } else {
                0.0
            };
            let speed = if cfg.speed_max > cfg.speed_min {
                rng.random_range(cfg.speed_min..=cfg.speed_max)
            } else {
                cfg.speed_min
            };
            let start = dir * along
                + lateral * lane_offset(i, cfg.lane_spacing)
                + Vec3::new(0.0, 0.0, cfg.ground_z + cfg.car_height / 2.0);
            CarPath {
                id: format!("car_{i}"),
                start,
                velocity: dir * speed,
                length: cfg.car_length,
                width: cfg.car_width,
                height: cfg.car_height,
            }
        })
        .collect();

    let t_end = cfg.dt * cfg.n_frames.saturating_sub(1) as f64;
    let drivable = drivable_grid(cfg, &cars, t_end)?;

    let half = cfg.ground_half_extent;
    let n_ground = (cfg.ground_density * 4.0 * half * half).round() as usize;
    let mut frames = Vec::with_capacity(cfg.n_frames);
    let mut gt = GroundTruth::new();
    for k in 0..cfg.n_frames {
        let t = k as f64 * cfg.dt;
        let pose = ego_pose(cfg, t);
        let city_to_ego = pose.inverse();
        let mut points =
            Vec::with_capacity(n_ground + cfg.n_cars * cfg.points_per_car + cfg.clutter_points);

        for _ in 0..n_ground {
            let p = Vec3::new(
                rng.random_range(-half..half),
                rng.random_range(-half..half),
                cfg.ground_z,
            );
            points.push(round_f32(p + jitter(&mut rng)));
        }
        let mut boxes = Vec::with_capacity(cars.len());
        for car in &cars {
            let center = car.center_at(t);
            let body = RigidTransform::from_yaw(car.heading(), center, "car", CITY_FRAME);
            for _ in 0..cfg.points_per_car {
                let local = sample_box_surface(&mut rng, car.length, car.width, car.height);
                let city = body.transform_point(local);
                points.push(round_f32(
                    city_to_ego.transform_point(city) + jitter(&mut rng),
                ));
            }
            boxes.push(GroundTruthBox {
                track_id: car.id.clone(),
                center,
                length: car.length,
                width: car.width,
                height: car.height,
            });
        }
        for _ in 0..cfg.clutter_points {
            let p = Vec3::new(
                rng.random_range(-half..half),
                rng.random_range(-half..half),
                rng.random_range(cfg.ground_z + 0.2..cfg.ground_z + 2.7),
            );
            points.push(round_f32(p));
        }

        gt.insert(k, boxes);
        frames.push(Frame {
            index: k,
            timestamp: t,
            cloud: PointCloud::new(points, EGO_FRAME),
            ego_pose: pose,
            masks: Vec::new(),
        });
    }

    Ok(Scene {
        sequence: Sequence {
            frames,
            calibration: Calibration {
                cameras: vec![front_camera()],
            },
            drivable,
            ground_truth: Some(gt),
        },
        cars,
    })
}

/// Writes a generated sequence to `out` in the dataset directory layout.
pub fn generate(cfg: &SynthConfig, out: impl AsRef<Path>) -> Result<Scene> {
    let scene = build_scene(cfg)?;
    write_sequence(out, &scene.sequence)?;
    Ok(scene)
}
