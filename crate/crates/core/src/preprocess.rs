//! Point removal ahead of clustering.
//!
//! Every filter comes in two flavours: an `*_indices` function returning the
//! ascending indices of the points it keeps, and a cloud-returning wrapper.
//! No filter reorders, duplicates or invents points.

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset_io::{Calibration, DrivableGrid, MaskRegion, PointCloud};
use crate::error::{Error, Result};
use crate::geometry::{RigidTransform, Vec3};

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct PreprocessConfig {
    /// Keep every `stride`-th point.
    pub stride: usize,
    /// Points with `z < -ground_split_height` (sensor frame) are ground candidates.
    pub ground_split_height: f64,
    pub ransac_iterations: usize,
    pub ransac_inlier_tol: f64,
    pub min_plane_points: usize,
    pub drivable_filter_enabled: bool,
    pub mask_filter_enabled: bool,
    /// Drop points that no camera sees, instead of keeping them.
    pub mask_filter_strict: bool,
    pub rng_seed: u64,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        Self {
            stride: 10,
            ground_split_height: 1.5,
            ransac_iterations: 100,
            ransac_inlier_tol: 0.15,
            min_plane_points: 50,
            drivable_filter_enabled: true,
            mask_filter_enabled: false,
            mask_filter_strict: false,
            rng_seed: 0,
        }
    }
}

impl PreprocessConfig {
    pub fn validate(&self) -> Result<()> {
        if self.stride < 1 {
            return Err(Error::InvalidArgument(
                "preprocess.stride must be >= 1".into(),
            ));
        }
        if self.ransac_iterations < 1 || self.min_plane_points < 1 {
            return Err(Error::InvalidArgument(
                "preprocess.ransac_iterations and min_plane_points must be >= 1".into(),
            ));
        }
        if !(self.ransac_inlier_tol > 0.0) || !self.ground_split_height.is_finite() {
            return Err(Error::InvalidArgument(
                "preprocess.ransac_inlier_tol must be > 0 and ground_split_height finite".into(),
            ));
        }
        Ok(())
    }
}

/// The plane `{p : normal · p + offset = 0}` with a unit normal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Plane {
    pub normal: Vec3,
    pub offset: f64,
}

impl Plane {
    pub fn signed_distance(&self, p: Vec3) -> f64 {
        self.normal.dot(p) + self.offset
    }

    /// Plane through three points, oriented so that `normal.z >= 0`.
    /// `None` if the points are (nearly) collinear.
    pub fn through(a: Vec3, b: Vec3, c: Vec3) -> Option<Plane> {
        let n = (b - a).cross(c - a);
        let len = n.norm();
        if !(len > 1e-12) {
            return None;
        }
        let mut normal = n * (1.0 / len);
        if normal.z < 0.0 {
            normal = -normal;
        }
        Some(Plane {
            normal,
            offset: -normal.dot(a),
        })
    }
}

pub fn downsample_stride_indices(len: usize, stride: usize) -> Result<Vec<usize>> {
    if stride == 0 {
        return Err(Error::InvalidArgument("stride must be >= 1".into()));
    }
    Ok((0..len).step_by(stride).collect())
}

pub fn downsample_stride(cloud: &PointCloud, stride: usize) -> Result<PointCloud> {
    Ok(cloud.select(&downsample_stride_indices(cloud.len(), stride)?))
}

/// RANSAC plane fit: the 3-point hypothesis with the most inliers wins,
/// earliest hypothesis on ties.
pub fn fit_ground_plane(points: &[Vec3], cfg: &PreprocessConfig) -> Result<Plane> {
    let required = cfg.min_plane_points.max(3);
    if points.len() < required {
        return Err(Error::InsufficientGroundCandidates {
            found: points.len(),
            required,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    let mut best: Option<(usize, Plane)> = None;
    for _ in 0..cfg.ransac_iterations {
        let idx = sample(&mut rng, points.len(), 3);
        let Some(plane) = Plane::through(
            points[idx.index(0)],
            points[idx.index(1)],
            points[idx.index(2)],
        ) else {
            continue;
        };
        let inliers = points
            .iter()
            .filter(|&&p| plane.signed_distance(p).abs() <= cfg.ransac_inlier_tol)
            .count();
        if best.is_none_or(|(n, _)| inliers > n) {
            best = Some((inliers, plane));
        }
    }
    best.map(|(_, plane)| plane).ok_or_else(|| {
        Error::Numerical("every RANSAC sample was degenerate (collinear points)".into())
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroundRemoval {
    /// Ascending indices of retained points.
    pub kept: Vec<usize>,
    pub plane: Option<Plane>,
    /// Set when no plane could be fitted and the cloud was passed through unchanged.
    pub warning: Option<String>,
}

pub fn remove_ground_indices(cloud: &PointCloud, cfg: &PreprocessConfig) -> GroundRemoval {
    let split = -cfg.ground_split_height;
    let lower: Vec<usize> = (0..cloud.len())
        .filter(|&i| cloud.points[i].z < split)
        .collect();
    let candidates: Vec<Vec3> = lower.iter().map(|&i| cloud.points[i]).collect();
    match fit_ground_plane(&candidates, cfg) {
        Ok(plane) => {
            let kept = (0..cloud.len())
                .filter(|&i| {
                    let p = cloud.points[i];
                    p.z >= split || plane.signed_distance(p).abs() > cfg.ransac_inlier_tol
                })
                .collect();
            GroundRemoval {
                kept,
                plane: Some(plane),
                warning: None,
            }
        }
        Err(e) => GroundRemoval {
            kept: (0..cloud.len()).collect(),
            plane: None,
            warning: Some(format!("ground plane not removed: {e}")),
        },
    }
}

/// Removes ground points; returns the filtered cloud and the warning, if any.
pub fn remove_ground(cloud: &PointCloud, cfg: &PreprocessConfig) -> (PointCloud, Option<String>) {
    let r = remove_ground_indices(cloud, cfg);
    (cloud.select(&r.kept), r.warning)
}

pub fn filter_drivable_indices(
    cloud: &PointCloud,
    grid: &DrivableGrid,
    ego_pose: &RigidTransform,
) -> Vec<usize> {
    (0..cloud.len())
        .filter(|&i| {
            let p = ego_pose.transform_point(cloud.points[i]);
            grid.is_drivable(p.x, p.y)
        })
        .collect()
}

pub fn filter_drivable(
    cloud: &PointCloud,
    grid: &DrivableGrid,
    ego_pose: &RigidTransform,
) -> PointCloud {
    cloud.select(&filter_drivable_indices(cloud, grid, ego_pose))
}

/// Ray-casting point-in-polygon test; points on an edge or vertex count as inside.
pub fn point_in_polygon(u: f64, v: f64, polygon: &[[f64; 2]]) -> bool {
    let n = polygon.len();
    if n < 3 {
        return false;
    }
    let mut inside = false;
    let mut j = n - 1;
    for i in 0..n {
        let [xi, yi] = polygon[i];
        let [xj, yj] = polygon[j];
        if on_segment(u, v, [xi, yi], [xj, yj]) {
            return true;
        }
        if (yi > v) != (yj > v) {
            let x_cross = xi + (v - yi) * (xj - xi) / (yj - yi);
            if u < x_cross {
                inside = !inside;
            }
        }
        j = i;
    }
    inside
}

fn on_segment(u: f64, v: f64, a: [f64; 2], b: [f64; 2]) -> bool {
    let cross = (b[0] - a[0]) * (v - a[1]) - (b[1] - a[1]) * (u - a[0]);
    let scale = (b[0] - a[0]).abs().max((b[1] - a[1]).abs()).max(1.0);
    if cross.abs() > 1e-9 * scale {
        return false;
    }
    u >= a[0].min(b[0]) && u <= a[0].max(b[0]) && v >= a[1].min(b[1]) && v <= a[1].max(b[1])
}

/// Keeps points lying inside at least one mask of a camera that sees them.
/// Points no camera sees are kept unless `strict`.
pub fn filter_by_masks_indices(
    cloud: &PointCloud,
    calibration: &Calibration,
    masks: &[MaskRegion],
    strict: bool,
) -> Result<Vec<usize>> {
    if let Some(bad) = masks
        .iter()
        .find(|m| calibration.camera(&m.camera_id).is_none())
    {
        return Err(Error::UnknownCamera(bad.camera_id.clone()));
    }
    if calibration.cameras.is_empty() {
        return Ok((0..cloud.len()).collect());
    }
    let per_camera: Vec<Vec<&MaskRegion>> = calibration
        .cameras
        .iter()
        .map(|c| masks.iter().filter(|m| m.camera_id == c.id).collect())
        .collect();
    Ok((0..cloud.len())
        .filter(|&i| {
            let p = cloud.points[i];
            let mut visible = false;
            for (cam, cam_masks) in calibration.cameras.iter().zip(&per_camera) {
                if let Some(px) = cam.project(p) {
                    visible = true;
                    if cam_masks
                        .iter()
                        .any(|m| point_in_polygon(px.u, px.v, &m.polygon))
                    {
                        return true;
                    }
                }
            }
            !visible && !strict
        })
        .collect())
}

pub fn filter_by_masks(
    cloud: &PointCloud,
    calibration: &Calibration,
    masks: &[MaskRegion],
    strict: bool,
) -> Result<PointCloud> {
    Ok(cloud.select(&filter_by_masks_indices(cloud, calibration, masks, strict)?))
}
