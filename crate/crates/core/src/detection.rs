//! Axis-aligned box fitting and vehicle-size gating.

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::clustering::{dbscan, ClusteringParams};
use crate::dataset_io::{Calibration, DrivableGrid, Frame, PointCloud};
use crate::error::{Error, Result};
use crate::geometry::Vec3;
use crate::preprocess::{
    downsample_stride_indices, filter_by_masks_indices, filter_drivable_indices,
    remove_ground_indices, PreprocessConfig,
};
use crate::spatial_index::KdTree;
use crate::tracking::compensate_to_city;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Detection3D {
    pub center: Vec3,
    /// Extent along x.
    pub length: f64,
    /// Extent along y.
    pub width: f64,
    /// Extent along z.
    pub height: f64,
    pub n_points: usize,
    pub frame_index: usize,
}

/// Size bounds for vehicle-like boxes. Horizontal extents are compared
/// orientation-agnostically: the larger one is checked against `length`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BoxLimits {
    pub min_length: f64,
    pub max_length: f64,
    pub min_width: f64,
    pub max_width: f64,
    pub min_height: f64,
    pub max_height: f64,
    pub min_area: f64,
    pub max_area: f64,
}

impl Default for BoxLimits {
    fn default() -> Self {
        // passenger cars through vans; no published bounds to follow
        Self {
            min_length: 1.0,
            max_length: 7.0,
            min_width: 0.5,
            max_width: 3.0,
            min_height: 0.5,
            max_height: 3.0,
            min_area: 0.5,
            max_area: 20.0,
        }
    }
}

impl BoxLimits {
    pub fn validate(&self) -> Result<()> {
        let pairs = [
            ("length", self.min_length, self.max_length),
            ("width", self.min_width, self.max_width),
            ("height", self.min_height, self.max_height),
            ("area", self.min_area, self.max_area),
        ];
        for (name, lo, hi) in pairs {
            if !(lo > 0.0 && lo < hi) {
                return Err(Error::InvalidArgument(format!(
                    "limits: need 0 < min_{name} < max_{name}, got [{lo}, {hi}]"
                )));
            }
        }
        Ok(())
    }
}

/// Box spanned by the per-axis extremes of the points.
pub fn fit_box(points: &[Vec3]) -> Result<Detection3D> {
    let Some(&first) = points.first() else {
        return Err(Error::InvalidArgument(
            "cannot fit a box to an empty cluster".into(),
        ));
    };
    let (mut lo, mut hi) = (first, first);
    for p in &points[1..] {
        lo = Vec3::new(lo.x.min(p.x), lo.y.min(p.y), lo.z.min(p.z));
        hi = Vec3::new(hi.x.max(p.x), hi.y.max(p.y), hi.z.max(p.z));
    }
    Ok(Detection3D {
        center: (lo + hi) * 0.5,
        length: hi.x - lo.x,
        width: hi.y - lo.y,
        height: hi.z - lo.z,
        n_points: points.len(),
        frame_index: 0,
    })
}

pub fn passes_heuristics(d: &Detection3D, limits: &BoxLimits) -> bool {
    let long = d.length.max(d.width);
    let short = d.length.min(d.width);
    let area = d.length * d.width;
    (limits.min_length..=limits.max_length).contains(&long)
        && (limits.min_width..=limits.max_width).contains(&short)
        && (limits.min_height..=limits.max_height).contains(&d.height)
        && (limits.min_area..=limits.max_area).contains(&area)
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetectorConfig {
    pub preprocess: PreprocessConfig,
    pub clustering: ClusteringParams,
    pub limits: BoxLimits,
}

impl DetectorConfig {
    pub fn validate(&self) -> Result<()> {
        self.preprocess.validate()?;
        self.clustering.validate()?;
        self.limits.validate()
    }
}

/// Pipeline stage names, in execution order.
pub const STAGES: [&str; 7] = [
    "downsample",
    "ground",
    "drivable",
    "masks",
    "index",
    "cluster",
    "boxes",
];

/// Per-frame bookkeeping from [`detect_with_stats`].
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DetectStats {
    pub points_in: usize,
    pub after_downsample: usize,
    pub after_ground: usize,
    pub after_drivable: usize,
    pub after_masks: usize,
    pub clusters: usize,
    pub noise_points: usize,
    pub boxes: usize,
    pub detections: usize,
    pub ground_warning: Option<String>,
    /// Wall time per entry of [`STAGES`].
    pub stage_times: [Duration; 7],
}

/// Ego-frame points that reach the clustering stage.
pub fn preprocess_frame(
    frame: &Frame,
    calibration: &Calibration,
    drivable: &DrivableGrid,
    cfg: &PreprocessConfig,
) -> Result<PointCloud> {
    let mut stats = DetectStats::default();
    preprocess_with_stats(frame, calibration, drivable, cfg, &mut stats)
}

fn preprocess_with_stats(
    frame: &Frame,
    calibration: &Calibration,
    drivable: &DrivableGrid,
    cfg: &PreprocessConfig,
    stats: &mut DetectStats,
) -> Result<PointCloud> {
    stats.points_in = frame.cloud.len();

    let t = Instant::now();
    let cloud = frame
        .cloud
        .select(&downsample_stride_indices(frame.cloud.len(), cfg.stride)?);
    stats.after_downsample = cloud.len();
    stats.stage_times[0] = t.elapsed();

    let t = Instant::now();
    let ground = remove_ground_indices(&cloud, cfg);
    let cloud = cloud.select(&ground.kept);
    stats.ground_warning = ground.warning;
    stats.after_ground = cloud.len();
    stats.stage_times[1] = t.elapsed();

    let t = Instant::now();
    let cloud = if cfg.drivable_filter_enabled {
        cloud.select(&filter_drivable_indices(&cloud, drivable, &frame.ego_pose))
    } else {
        cloud
    };
    stats.after_drivable = cloud.len();
    stats.stage_times[2] = t.elapsed();

    // frames without mask files carry no mask information and skip the filter
    let t = Instant::now();
    let cloud = if cfg.mask_filter_enabled && !frame.masks.is_empty() {
        cloud.select(&filter_by_masks_indices(
            &cloud,
            calibration,
            &frame.masks,
            cfg.mask_filter_strict,
        )?)
    } else {
        cloud
    };
    stats.after_masks = cloud.len();
    stats.stage_times[3] = t.elapsed();
    Ok(cloud)
}

/// Runs preprocessing, clustering and box fitting on one frame and returns
/// city-frame detections sorted by center x, then y.
pub fn detect(
    frame: &Frame,
    calibration: &Calibration,
    drivable: &DrivableGrid,
    cfg: &DetectorConfig,
) -> Result<Vec<Detection3D>> {
    detect_with_stats(frame, calibration, drivable, cfg).map(|(d, _)| d)
}

pub fn detect_with_stats(
    frame: &Frame,
    calibration: &Calibration,
    drivable: &DrivableGrid,
    cfg: &DetectorConfig,
) -> Result<(Vec<Detection3D>, DetectStats)> {
    let mut stats = DetectStats::default();
    let cloud = preprocess_with_stats(frame, calibration, drivable, &cfg.preprocess, &mut stats)?;

    let t = Instant::now();
    let tree = KdTree::build(&cloud.points);
    stats.stage_times[4] = t.elapsed();

    let t = Instant::now();
    let labels = dbscan(&cloud.points, &cfg.clustering, &tree)?;
    stats.clusters = labels.num_clusters;
    stats.noise_points = labels.noise_count();
    stats.stage_times[5] = t.elapsed();

    let t = Instant::now();
    let mut boxes = Vec::with_capacity(labels.num_clusters);
    for members in labels.clusters() {
        let pts: Vec<Vec3> = members.iter().map(|&i| cloud.points[i]).collect();
        let mut b = fit_box(&pts)?;
        b.frame_index = frame.index;
        boxes.push(b);
    }
    stats.boxes = boxes.len();
    boxes.retain(|b| passes_heuristics(b, &cfg.limits));
    let mut detections = compensate_to_city(&boxes, &frame.ego_pose);
    detections.sort_by(|a, b| {
        a.center
            .x
            .total_cmp(&b.center.x)
            .then(a.center.y.total_cmp(&b.center.y))
    });
    stats.detections = detections.len();
    stats.stage_times[6] = t.elapsed();
    Ok((detections, stats))
}
