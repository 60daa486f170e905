//! Per-stage timing and indexed-versus-brute-force clustering comparison.

use std::fmt::Write as _;
use std::time::{Duration, Instant};

use lidar_mot::clustering::{dbscan, ClusteringParams};
use lidar_mot::dataset_io::Sequence;
use lidar_mot::detection::{detect_with_stats, preprocess_frame, STAGES};
use lidar_mot::geometry::Vec3;
use lidar_mot::spatial_index::{KdTree, LinearScan};
use lidar_mot::tracking::Tracker;
use lidar_mot::Error;
use serde::Serialize;

use crate::config::PipelineConfig;
use crate::exit::CliResult;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StageRow {
    pub stage: String,
    pub median_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClusterComparison {
    pub points: usize,
    pub clusters: usize,
    /// Best of the repeats, tree construction included.
    pub kdtree_ms: f64,
    pub brute_force_ms: f64,
}

impl ClusterComparison {
    pub fn speedup(&self) -> f64 {
        self.brute_force_ms / self.kdtree_ms
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchReport {
    pub frames: usize,
    /// One row per detection stage plus `track`.
    pub stages: Vec<StageRow>,
    pub clustering: Option<ClusterComparison>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BenchOptions {
    /// Size of the clustering comparison cloud; `None` uses the densest
    /// frame as preprocessed with the configured stride.
    pub cluster_points: Option<usize>,
    pub repeats: usize,
}

impl Default for BenchOptions {
    fn default() -> Self {
        BenchOptions {
            cluster_points: None,
            repeats: 3,
        }
    }
}

fn ms(d: Duration) -> f64 {
    d.as_secs_f64() * 1e3
}

fn median(mut v: Vec<f64>) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        (v[m - 1] + v[m]) / 2.0
    }
}

/// Preprocessed points of the densest frame. With `n` set, preprocessing runs
/// at full resolution and the result is thinned to `n` evenly spaced points.
pub fn comparison_cloud(
    seq: &Sequence,
    cfg: &PipelineConfig,
    n: Option<usize>,
) -> lidar_mot::Result<Vec<Vec3>> {
    let mut pre = cfg.preprocess.clone();
    if n.is_some() {
        pre.stride = 1;
    }
    let mut best: Vec<Vec3> = Vec::new();
    for f in &seq.frames {
        let cloud = preprocess_frame(f, &seq.calibration, &seq.drivable, &pre)?;
        if cloud.len() > best.len() {
            best = cloud.points;
        }
    }
    Ok(match n {
        Some(n) if n < best.len() => (0..n).map(|i| best[i * best.len() / n]).collect(),
        _ => best,
    })
}

/// Times DBSCAN over a KD-tree and over a linear scan on the same cloud;
/// the two labelings must agree.
pub fn compare_clustering(
    points: &[Vec3],
    params: &ClusteringParams,
    repeats: usize,
) -> lidar_mot::Result<ClusterComparison> {
    let repeats = repeats.max(1);
    let (mut tree_best, mut brute_best) = (Duration::MAX, Duration::MAX);
    let mut clusters = 0;
    for _ in 0..repeats {
        let t = Instant::now();
        let tree = KdTree::build(points);
        let a = dbscan(points, params, &tree)?;
        tree_best = tree_best.min(t.elapsed());

        let t = Instant::now();
        let b = dbscan(points, params, &LinearScan::new(points))?;
        brute_best = brute_best.min(t.elapsed());

        if a != b {
            return Err(Error::Numerical(
                "indexed and brute-force clusterings differ".into(),
            ));
        }
        clusters = a.num_clusters;
    }
    Ok(ClusterComparison {
        points: points.len(),
        clusters,
        kdtree_ms: ms(tree_best),
        brute_force_ms: ms(brute_best),
    })
}

pub fn run_bench(
    seq: &Sequence,
    cfg: &PipelineConfig,
    opts: &BenchOptions,
) -> CliResult<BenchReport> {
    cfg.validate()?;
    let detector = cfg.detector();
    let mut tracker = Tracker::new(cfg.tracker.clone())?;
    let mut per_stage: Vec<Vec<f64>> = vec![Vec::with_capacity(seq.frames.len()); STAGES.len() + 1];
    for f in &seq.frames {
        let (dets, stats) = detect_with_stats(f, &seq.calibration, &seq.drivable, &detector)?;
        for (i, d) in stats.stage_times.iter().enumerate() {
            per_stage[i].push(ms(*d));
        }
        let t = Instant::now();
        tracker.step(&dets, f.timestamp)?;
        per_stage[STAGES.len()].push(ms(t.elapsed()));
    }
    let stages = STAGES
        .iter()
        .copied()
        .chain(["track"])
        .zip(per_stage)
        .map(|(name, times)| StageRow {
            stage: name.to_string(),
            median_ms: median(times),
        })
        .collect();

    let cloud = comparison_cloud(seq, cfg, opts.cluster_points)?;
    let clustering = if cloud.is_empty() {
        None
    } else {
        Some(compare_clustering(&cloud, &cfg.clustering, opts.repeats)?)
    };
    Ok(BenchReport {
        frames: seq.frames.len(),
        stages,
        clustering,
    })
}

pub fn format_bench(report: &BenchReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "frames: {}", report.frames);
    let _ = writeln!(out, "{:<12} {:>12}", "stage", "median_ms");
    for row in &report.stages {
        let _ = writeln!(out, "{:<12} {:>12.3}", row.stage, row.median_ms);
    }
    match &report.clustering {
        Some(c) => {
            let _ = writeln!(
                out,
                "clustering comparison: {} points, {} clusters",
                c.points, c.clusters
            );
            let _ = writeln!(out, "  kd-tree      {:>12.3} ms", c.kdtree_ms);
            let _ = writeln!(out, "  brute force  {:>12.3} ms", c.brute_force_ms);
            let _ = writeln!(out, "  speedup      {:>12.2}x", c.speedup());
        }
        None => {
            let _ = writeln!(out, "clustering comparison: no points after preprocessing");
        }
    }
    out
}
