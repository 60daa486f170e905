//! `track` and `eval`: detection fan-out, ordered tracking, scoring.

use std::fmt::Write as _;
use std::path::Path;
use std::time::Duration;

use anyhow::Context;
use lidar_mot::dataset_io::{GroundTruth, Sequence, TrackRecord};
use lidar_mot::detection::{detect_with_stats, DetectStats, Detection3D, DetectorConfig, STAGES};
use lidar_mot::evaluation::{
    evaluate_frames, hypotheses_from_records, summarize, FrameCounts, MotaResult,
};
use lidar_mot::tracking::{TrackStatus, Tracker};
use rayon::prelude::*;

use crate::config::PipelineConfig;
use crate::exit::{CliError, CliResult};

/// Outcome of one frame of `track`.
#[derive(Debug, Clone)]
pub struct FrameReport {
    pub index: usize,
    pub stats: DetectStats,
    /// Tracks alive after the step, tentative ones included.
    pub live_tracks: usize,
    pub confirmed: usize,
}

#[derive(Debug, Clone)]
pub struct TrackRun {
    pub records: Vec<TrackRecord>,
    pub frames: Vec<FrameReport>,
}

/// Detects every frame with at most `workers` threads; results come back in
/// frame order. One worker runs on the calling thread.
pub fn detect_frames(
    seq: &Sequence,
    cfg: &DetectorConfig,
    workers: usize,
) -> CliResult<Vec<(Vec<Detection3D>, DetectStats)>> {
    let one = |f| detect_with_stats(f, &seq.calibration, &seq.drivable, cfg);
    let results = match workers {
        0 => {
            return Err(CliError::usage(anyhow::anyhow!(
                "--workers must be at least 1"
            )))
        }
        1 => seq
            .frames
            .iter()
            .map(one)
            .collect::<lidar_mot::Result<Vec<_>>>(),
        n => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .context("cannot start worker pool")
            .map_err(CliError::usage)?
            .install(|| seq.frames.par_iter().map(one).collect()),
    };
    Ok(results?)
}

pub fn run_track(seq: &Sequence, cfg: &PipelineConfig, workers: usize) -> CliResult<TrackRun> {
    cfg.validate()?;
    let detections = detect_frames(seq, &cfg.detector(), workers)?;
    let mut tracker = Tracker::new(cfg.tracker.clone())?;
    let mut records = Vec::new();
    let mut frames = Vec::with_capacity(seq.frames.len());
    for (frame, (dets, stats)) in seq.frames.iter().zip(detections) {
        let emitted = tracker.step(&dets, frame.timestamp)?;
        records.extend(emitted.iter().map(|s| s.to_record(frame.index)));
        frames.push(FrameReport {
            index: frame.index,
            stats,
            live_tracks: tracker.tracks().len(),
            confirmed: tracker
                .tracks()
                .iter()
                .filter(|t| t.status == TrackStatus::Confirmed)
                .count(),
        });
    }
    Ok(TrackRun { records, frames })
}

fn ms(d: Duration) -> f64 {
    d.as_secs_f64() * 1e3
}

/// Totals over all frames: point counts through each filter, clusters,
/// detections, tracks and time per stage.
pub fn format_track_summary(run: &TrackRun) -> String {
    let sum = |f: fn(&DetectStats) -> usize| run.frames.iter().map(|r| f(&r.stats)).sum::<usize>();
    let mut out = String::new();
    let _ = writeln!(out, "frames             {}", run.frames.len());
    for (label, value) in [
        ("points in", sum(|s| s.points_in)),
        ("after downsample", sum(|s| s.after_downsample)),
        ("after ground", sum(|s| s.after_ground)),
        ("after drivable", sum(|s| s.after_drivable)),
        ("after masks", sum(|s| s.after_masks)),
        ("clusters", sum(|s| s.clusters)),
        ("noise points", sum(|s| s.noise_points)),
        ("boxes", sum(|s| s.boxes)),
        ("detections", sum(|s| s.detections)),
    ] {
        let _ = writeln!(out, "{label:<18} {value}");
    }
    let warnings = run
        .frames
        .iter()
        .filter(|r| r.stats.ground_warning.is_some())
        .count();
    let _ = writeln!(out, "ground warnings    {warnings}");
    let last = run.frames.last();
    let _ = writeln!(
        out,
        "live tracks (end)  {}",
        last.map_or(0, |r| r.live_tracks)
    );
    let _ = writeln!(
        out,
        "confirmed (end)    {}",
        last.map_or(0, |r| r.confirmed)
    );
    let ids: std::collections::BTreeSet<u64> = run.records.iter().map(|r| r.track_id).collect();
    let _ = writeln!(out, "confirmed ids      {}", ids.len());
    let _ = writeln!(out, "stage time (ms, total over frames)");
    for (i, name) in STAGES.iter().enumerate() {
        let total: Duration = run.frames.iter().map(|r| r.stats.stage_times[i]).sum();
        let _ = writeln!(out, "  {name:<12} {:>10.3}", ms(total));
    }
    out
}

pub fn evaluate_records(
    gt: &GroundTruth,
    records: &[TrackRecord],
    match_distance: f64,
) -> CliResult<(MotaResult, Vec<FrameCounts>)> {
    let frames = evaluate_frames(gt, &hypotheses_from_records(records), match_distance)?;
    Ok((summarize(&frames)?, frames))
}

pub fn write_frame_csv(path: &Path, frames: &[FrameCounts]) -> CliResult<()> {
    let write = || -> anyhow::Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        for f in frames {
            w.serialize(f)?;
        }
        w.flush()?;
        Ok(())
    };
    write()
        .with_context(|| format!("cannot write {}", path.display()))
        .map_err(CliError::data)
}
