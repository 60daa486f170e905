//! Whole-sequence driver: per-frame detection followed by in-order tracking.

use crate::dataset_io::{Sequence, TrackRecord};
use crate::detection::{detect, Detection3D, DetectorConfig};
use crate::error::Result;
use crate::tracking::{Tracker, TrackerConfig};

/// Feeds per-frame detections to a fresh tracker in frame order.
///
/// `frames` holds `(frame index, timestamp, detections)` with strictly
/// increasing timestamps.
pub fn track_frames<'a, I>(frames: I, tracker_cfg: &TrackerConfig) -> Result<Vec<TrackRecord>>
where
    I: IntoIterator<Item = (usize, f64, &'a [Detection3D])>,
{
    let mut tracker = Tracker::new(tracker_cfg.clone())?;
    let mut out = Vec::new();
    for (index, timestamp, detections) in frames {
        out.extend(
            tracker
                .step(detections, timestamp)?
                .iter()
                .map(|s| s.to_record(index)),
        );
    }
    Ok(out)
}

/// Detects every frame serially and tracks the result.
pub fn run_sequence(
    seq: &Sequence,
    detector: &DetectorConfig,
    tracker: &TrackerConfig,
) -> Result<Vec<TrackRecord>> {
    detector.validate()?;
    let detections = seq
        .frames
        .iter()
        .map(|f| detect(f, &seq.calibration, &seq.drivable, detector))
        .collect::<Result<Vec<_>>>()?;
    track_frames(
        seq.frames
            .iter()
            .zip(&detections)
            .map(|(f, d)| (f.index, f.timestamp, d.as_slice())),
        tracker,
    )
}
