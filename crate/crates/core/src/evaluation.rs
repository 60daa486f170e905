//! CLEAR-MOT accuracy (MOTA) with BEV centroid matching.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::dataset_io::{GroundTruth, GroundTruthBox, TrackRecord};
use crate::error::{Error, Result};
use crate::tracking::{hungarian, GATE_SENTINEL};

pub const DEFAULT_MATCH_DISTANCE: f64 = 2.0;

/// A tracker hypothesis in one frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hypothesis {
    pub id: u64,
    pub x: f64,
    pub y: f64,
}

impl From<&TrackRecord> for Hypothesis {
    fn from(r: &TrackRecord) -> Self {
        Hypothesis {
            id: r.track_id,
            x: r.x,
            y: r.y,
        }
    }
}

/// Correspondences carried between frames.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Correspondence {
    /// Ground-truth id -> hypothesis id matched in the previous frame.
    pub previous: BTreeMap<String, u64>,
    /// Ground-truth id -> hypothesis id of its most recent match.
    pub last_matched: BTreeMap<String, u64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FrameCounts {
    pub frame: usize,
    pub gt: usize,
    pub matches: usize,
    pub false_negatives: usize,
    pub false_positives: usize,
    pub id_switches: usize,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct FrameMatch {
    /// `(gt_id, hyp_id)` pairs matched in this frame.
    pub pairs: Vec<(String, u64)>,
    pub counts: FrameCounts,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MotaResult {
    pub false_negatives: usize,
    pub false_positives: usize,
    pub id_switches: usize,
    pub gt_count: usize,
    pub matches: usize,
    pub mota: f64,
}

fn bev_distance(g: &GroundTruthBox, h: &Hypothesis) -> f64 {
    (g.center.x - h.x).hypot(g.center.y - h.y)
}

/// Matches one frame: previous pairs still within `match_distance` are kept,
/// the rest are assigned by minimum total distance under the same gate.
pub fn match_frame(
    gt: &[GroundTruthBox],
    hyps: &[Hypothesis],
    match_distance: f64,
    prior: &Correspondence,
) -> FrameMatch {
    let mut gt_used = vec![false; gt.len()];
    let mut hyp_used = vec![false; hyps.len()];
    let mut pairs = Vec::new();

    for (gi, g) in gt.iter().enumerate() {
        let Some(&prev_hyp) = prior.previous.get(&g.track_id) else {
            continue;
        };
        if let Some(hi) = hyps.iter().position(|h| h.id == prev_hyp) {
            if !hyp_used[hi] && bev_distance(g, &hyps[hi]) <= match_distance {
                gt_used[gi] = true;
                hyp_used[hi] = true;
                pairs.push((gi, hi));
            }
        }
    }

    let free_gt: Vec<usize> = (0..gt.len()).filter(|&i| !gt_used[i]).collect();
    let free_hyp: Vec<usize> = (0..hyps.len()).filter(|&i| !hyp_used[i]).collect();
    let cost: Vec<Vec<f64>> = free_gt
        .iter()
        .map(|&gi| {
            free_hyp
                .iter()
                .map(|&hi| {
                    let d = bev_distance(&gt[gi], &hyps[hi]);
                    if d <= match_distance {
                        d
                    } else {
                        GATE_SENTINEL
                    }
                })
                .collect()
        })
        .collect();
    let assignment = hungarian(&cost);

    let mut id_switches = 0;
    for &(r, c) in &assignment.matches {
        let (gi, hi) = (free_gt[r], free_hyp[c]);
        if prior
            .last_matched
            .get(&gt[gi].track_id)
            .is_some_and(|&last| last != hyps[hi].id)
        {
            id_switches += 1;
        }
        pairs.push((gi, hi));
    }
    pairs.sort_unstable();

    let matches = pairs.len();
    FrameMatch {
        pairs: pairs
            .into_iter()
            .map(|(gi, hi)| (gt[gi].track_id.clone(), hyps[hi].id))
            .collect(),
        counts: FrameCounts {
            frame: 0,
            gt: gt.len(),
            matches,
            false_negatives: gt.len() - matches,
            false_positives: hyps.len() - matches,
            id_switches,
        },
    }
}

/// Per-frame counts over the union of frames present in either input.
pub fn evaluate_frames(
    gt: &GroundTruth,
    hyps: &BTreeMap<usize, Vec<Hypothesis>>,
    match_distance: f64,
) -> Result<Vec<FrameCounts>> {
    if !(match_distance > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "match distance must be > 0, got {match_distance}"
        )));
    }
    let frames: BTreeSet<usize> = gt.keys().chain(hyps.keys()).copied().collect();
    let mut state = Correspondence::default();
    let mut out = Vec::with_capacity(frames.len());
    for frame in frames {
        let g = gt.get(&frame).map_or(&[][..], Vec::as_slice);
        let h = hyps.get(&frame).map_or(&[][..], Vec::as_slice);
        let m = match_frame(g, h, match_distance, &state);
        state.previous = m.pairs.iter().cloned().collect();
        state.last_matched.extend(m.pairs.iter().cloned());
        out.push(FrameCounts { frame, ..m.counts });
    }
    Ok(out)
}

pub fn summarize(frames: &[FrameCounts]) -> Result<MotaResult> {
    let sum = |f: fn(&FrameCounts) -> usize| frames.iter().map(f).sum::<usize>();
    let (fn_, fp, idsw, gt, matches) = (
        sum(|f| f.false_negatives),
        sum(|f| f.false_positives),
        sum(|f| f.id_switches),
        sum(|f| f.gt),
        sum(|f| f.matches),
    );
    let mota = if gt == 0 {
        if fp > 0 {
            return Err(Error::UndefinedScore {
                false_positives: fp,
            });
        }
        1.0
    } else {
        1.0 - (fn_ + fp + idsw) as f64 / gt as f64
    };
    Ok(MotaResult {
        false_negatives: fn_,
        false_positives: fp,
        id_switches: idsw,
        gt_count: gt,
        matches,
        mota,
    })
}

pub fn mota(
    gt: &GroundTruth,
    hyps: &BTreeMap<usize, Vec<Hypothesis>>,
    match_distance: f64,
) -> Result<MotaResult> {
    summarize(&evaluate_frames(gt, hyps, match_distance)?)
}

/// Groups track-file records into per-frame hypotheses.
pub fn hypotheses_from_records(records: &[TrackRecord]) -> BTreeMap<usize, Vec<Hypothesis>> {
    let mut out: BTreeMap<usize, Vec<Hypothesis>> = BTreeMap::new();
    for r in records {
        out.entry(r.frame).or_default().push(Hypothesis::from(r));
    }
    out
}
