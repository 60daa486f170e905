//! City-frame bird's-eye-view tracker.
//!
//! Each track runs a linear Kalman filter over planar position and velocity
//! (plus acceleration for the constant-acceleration model). Detections are
//! associated to predicted tracks by gated centroid distance solved with the
//! Hungarian method, and tracks move through a tentative/confirmed/deleted
//! lifecycle driven by hit and miss counters.

use nalgebra::{Matrix2, SMatrix, SVector, Vector2};
use serde::{Deserialize, Serialize};

use crate::dataset_io::TrackRecord;
use crate::detection::Detection3D;
use crate::error::{Error, Result};
use crate::geometry::RigidTransform;

/// Cost assigned to track/detection pairs outside the gate.
pub const GATE_SENTINEL: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MotionModel {
    /// Position random walk; velocity is not propagated.
    Static,
    #[default]
    ConstantVelocity,
    ConstantAcceleration,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrackerConfig {
    pub hit_confirm_threshold: u32,
    pub miss_delete_threshold: u32,
    /// Meters, BEV centroid distance.
    pub gate_distance: f64,
    /// Standard deviation of the white acceleration noise, m/s².
    pub process_noise_accel: f64,
    /// Standard deviation of measured positions, m.
    pub measurement_noise_pos: f64,
    /// Standard deviation of the unknown initial velocity, m/s.
    pub initial_velocity_std: f64,
    pub motion_model: MotionModel,
}

impl Default for TrackerConfig {
    fn default() -> Self {
        Self {
            hit_confirm_threshold: 5,
            miss_delete_threshold: 5,
            gate_distance: 4.0,
            process_noise_accel: 2.0,
            measurement_noise_pos: 0.5,
            initial_velocity_std: 10.0,
            motion_model: MotionModel::ConstantVelocity,
        }
    }
}

impl TrackerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.hit_confirm_threshold == 0 || self.miss_delete_threshold == 0 {
            return Err(Error::InvalidArgument(
                "tracker hit/miss thresholds must be >= 1".into(),
            ));
        }
        let reals = [
            ("gate_distance", self.gate_distance),
            ("process_noise_accel", self.process_noise_accel),
            ("measurement_noise_pos", self.measurement_noise_pos),
            ("initial_velocity_std", self.initial_velocity_std),
        ];
        for (name, v) in reals {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidArgument(format!(
                    "tracker.{name} must be > 0, got {v}"
                )));
            }
        }
        Ok(())
    }
}

/// Linear Kalman filter whose state starts with planar position `(x, y)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearKalman<const N: usize> {
    pub state: SVector<f64, N>,
    pub covariance: SMatrix<f64, N, N>,
}

/// Constant-velocity filter over `[x, y, vx, vy]`.
pub type KalmanCv = LinearKalman<4>;
/// Constant-acceleration filter over `[x, y, vx, vy, ax, ay]`.
pub type KalmanCa = LinearKalman<6>;

impl<const N: usize> LinearKalman<N> {
    pub fn predict_with(&self, f: &SMatrix<f64, N, N>, q: &SMatrix<f64, N, N>) -> Self {
        let p = f * self.covariance * f.transpose() + q;
        Self {
            state: f * self.state,
            covariance: symmetrize(p),
        }
    }

    /// Position measurement update in Joseph form.
    pub fn update_position(&self, z: [f64; 2], r_pos: f64) -> Result<Self> {
        if !(z[0].is_finite() && z[1].is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "measurement {z:?} is not finite"
            )));
        }
        let h = SMatrix::<f64, 2, N>::from_fn(|r, c| if r == c { 1.0 } else { 0.0 });
        let r = Matrix2::from_diagonal_element(r_pos * r_pos);
        let s = h * self.covariance * h.transpose() + r;
        let s_inv = s
            .try_inverse()
            .ok_or_else(|| Error::Numerical("singular innovation covariance".into()))?;
        let k = self.covariance * h.transpose() * s_inv;
        let innovation = Vector2::new(z[0], z[1]) - h * self.state;
        let i_kh = SMatrix::<f64, N, N>::identity() - k * h;
        let p = i_kh * self.covariance * i_kh.transpose() + k * r * k.transpose();
        Ok(Self {
            state: self.state + k * innovation,
            covariance: symmetrize(p),
        })
    }

    pub fn position(&self) -> [f64; 2] {
        [self.state[0], self.state[1]]
    }
}

fn symmetrize<const N: usize>(p: SMatrix<f64, N, N>) -> SMatrix<f64, N, N> {
    (p + p.transpose()) * 0.5
}

impl KalmanCv {
    pub fn new(state: [f64; 4], covariance: SMatrix<f64, 4, 4>) -> Self {
        Self {
            state: SVector::from(state),
            covariance,
        }
    }

    pub fn velocity(&self) -> [f64; 2] {
        [self.state[2], self.state[3]]
    }
}

/// Constant-velocity transition over `[x, y, vx, vy]`.
pub fn cv_transition(dt: f64) -> SMatrix<f64, 4, 4> {
    let mut f = SMatrix::<f64, 4, 4>::identity();
    f[(0, 2)] = dt;
    f[(1, 3)] = dt;
    f
}

/// Discrete white-acceleration process noise for the constant-velocity model.
pub fn cv_process_noise(dt: f64, q_accel: f64) -> SMatrix<f64, 4, 4> {
    let q2 = q_accel * q_accel;
    let (dt2, dt3, dt4) = (dt * dt, dt * dt * dt, dt * dt * dt * dt);
    let mut q = SMatrix::<f64, 4, 4>::zeros();
    for axis in 0..2 {
        let (p, v) = (axis, axis + 2);
        q[(p, p)] = q2 * dt4 / 4.0;
        q[(p, v)] = q2 * dt3 / 2.0;
        q[(v, p)] = q2 * dt3 / 2.0;
        q[(v, v)] = q2 * dt2;
    }
    q
}

fn check_dt(dt: f64) -> Result<()> {
    if dt >= 0.0 && dt.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "prediction interval must be >= 0, got {dt}"
        )))
    }
}

/// Constant-velocity prediction: `x' = F x`, `P' = F P Fᵀ + Q`.
pub fn kalman_predict(k: &KalmanCv, dt: f64, q_accel: f64) -> Result<KalmanCv> {
    check_dt(dt)?;
    Ok(k.predict_with(&cv_transition(dt), &cv_process_noise(dt, q_accel)))
}

pub fn kalman_update(k: &KalmanCv, z: [f64; 2], r_pos: f64) -> Result<KalmanCv> {
    k.update_position(z, r_pos)
}

fn static_predict(k: &KalmanCv, dt: f64, q_accel: f64) -> KalmanCv {
    let mut q = SMatrix::<f64, 4, 4>::zeros();
    let var = (q_accel * dt).powi(2);
    q[(0, 0)] = var;
    q[(1, 1)] = var;
    k.predict_with(&SMatrix::identity(), &q)
}

fn ca_predict(k: &KalmanCa, dt: f64, q_accel: f64) -> KalmanCa {
    let mut f = SMatrix::<f64, 6, 6>::identity();
    let g = [dt * dt / 2.0, dt, 1.0];
    let mut q = SMatrix::<f64, 6, 6>::zeros();
    for axis in 0..2 {
        let (p, v, a) = (axis, axis + 2, axis + 4);
        f[(p, v)] = dt;
        f[(p, a)] = dt * dt / 2.0;
        f[(v, a)] = dt;
        let idx = [p, v, a];
        for i in 0..3 {
            for j in 0..3 {
                q[(idx[i], idx[j])] = q_accel * q_accel * g[i] * g[j];
            }
        }
    }
    k.predict_with(&f, &q)
}

/// Per-track motion filter, selected by [`MotionModel`].
#[derive(Debug, Clone, PartialEq)]
pub enum TrackFilter {
    Static(KalmanCv),
    ConstantVelocity(KalmanCv),
    ConstantAcceleration(KalmanCa),
}

impl TrackFilter {
    fn init(model: MotionModel, xy: [f64; 2], cfg: &TrackerConfig) -> Self {
        let pos_var = cfg.measurement_noise_pos.powi(2);
        let vel_var = cfg.initial_velocity_std.powi(2);
        match model {
            MotionModel::Static | MotionModel::ConstantVelocity => {
                let k = KalmanCv::new(
                    [xy[0], xy[1], 0.0, 0.0],
                    SMatrix::from_diagonal(&SVector::from([pos_var, pos_var, vel_var, vel_var])),
                );
                if model == MotionModel::Static {
                    TrackFilter::Static(k)
                } else {
                    TrackFilter::ConstantVelocity(k)
                }
            }
            MotionModel::ConstantAcceleration => {
                let diag = SVector::from([pos_var, pos_var, vel_var, vel_var, vel_var, vel_var]);
                TrackFilter::ConstantAcceleration(KalmanCa {
                    state: SVector::from([xy[0], xy[1], 0.0, 0.0, 0.0, 0.0]),
                    covariance: SMatrix::from_diagonal(&diag),
                })
            }
        }
    }

    pub fn predict(&self, dt: f64, q_accel: f64) -> Result<Self> {
        check_dt(dt)?;
        Ok(match self {
            TrackFilter::Static(k) => TrackFilter::Static(static_predict(k, dt, q_accel)),
            TrackFilter::ConstantVelocity(k) => {
                TrackFilter::ConstantVelocity(kalman_predict(k, dt, q_accel)?)
            }
            TrackFilter::ConstantAcceleration(k) => {
                TrackFilter::ConstantAcceleration(ca_predict(k, dt, q_accel))
            }
        })
    }

    pub fn update(&self, z: [f64; 2], r_pos: f64) -> Result<Self> {
        Ok(match self {
            TrackFilter::Static(k) => TrackFilter::Static(k.update_position(z, r_pos)?),
            TrackFilter::ConstantVelocity(k) => {
                TrackFilter::ConstantVelocity(k.update_position(z, r_pos)?)
            }
            TrackFilter::ConstantAcceleration(k) => {
                TrackFilter::ConstantAcceleration(k.update_position(z, r_pos)?)
            }
        })
    }

    pub fn position(&self) -> [f64; 2] {
        match self {
            TrackFilter::Static(k) | TrackFilter::ConstantVelocity(k) => k.position(),
            TrackFilter::ConstantAcceleration(k) => k.position(),
        }
    }

    pub fn velocity(&self) -> [f64; 2] {
        match self {
            TrackFilter::Static(_) => [0.0, 0.0],
            TrackFilter::ConstantVelocity(k) => k.velocity(),
            TrackFilter::ConstantAcceleration(k) => [k.state[2], k.state[3]],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TrackStatus {
    Tentative,
    Confirmed,
    Deleted,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Track {
    pub id: u64,
    pub filter: TrackFilter,
    pub hits: u32,
    pub consecutive_misses: u32,
    pub status: TrackStatus,
    /// Height and box extents carried from the latest associated detection.
    pub z: f64,
    pub length: f64,
    pub width: f64,
    pub height: f64,
}

/// A confirmed track as emitted after one tracker step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackSnapshot {
    pub id: u64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub vx: f64,
    pub vy: f64,
    pub length: f64,
    pub width: f64,
    pub height: f64,
    pub hits: u32,
    pub consecutive_misses: u32,
}

impl TrackSnapshot {
    pub fn to_record(&self, frame: usize) -> TrackRecord {
        TrackRecord {
            frame,
            track_id: self.id,
            x: self.x,
            y: self.y,
            z: self.z,
            vx: self.vx,
            vy: self.vy,
            length: self.length,
            width: self.width,
            height: self.height,
        }
    }

    pub fn speed(&self) -> f64 {
        self.vx.hypot(self.vy)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Assignment {
    /// `(row, column)` pairs, ascending by row.
    pub matches: Vec<(usize, usize)>,
    pub unmatched_rows: Vec<usize>,
    pub unmatched_cols: Vec<usize>,
}

/// BEV distances between predicted track positions (rows) and detection
/// centers (columns); pairs farther apart than `gate` get [`GATE_SENTINEL`].
pub fn cost_matrix(track_xy: &[[f64; 2]], detections: &[Detection3D], gate: f64) -> Vec<Vec<f64>> {
    track_xy
        .iter()
        .map(|t| {
            detections
                .iter()
                .map(|d| {
                    let dist = (t[0] - d.center.x).hypot(t[1] - d.center.y);
                    if dist > gate {
                        GATE_SENTINEL
                    } else {
                        dist
                    }
                })
                .collect()
        })
        .collect()
}

/// Minimum-cost one-to-one assignment on a rectangular matrix (Kuhn–Munkres
/// with potentials, O(n³) on the matrix padded to square with zeros). Pairs
/// whose cost is at least [`GATE_SENTINEL`] are reported as unmatched.
pub fn hungarian(cost: &[Vec<f64>]) -> Assignment {
    let rows = cost.len();
    let cols = cost.first().map_or(0, Vec::len);
    debug_assert!(cost.iter().all(|r| r.len() == cols), "ragged cost matrix");
    let n = rows.max(cols);
    if rows == 0 || cols == 0 {
        return Assignment {
            matches: Vec::new(),
            unmatched_rows: (0..rows).collect(),
            unmatched_cols: (0..cols).collect(),
        };
    }
    let at = |i: usize, j: usize| {
        if i < rows && j < cols {
            cost[i][j]
        } else {
            0.0
        }
    };

    // 1-based arrays; column 0 is the virtual start of each augmenting path
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut row_of_col = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        row_of_col[0] = i;
        let mut j0 = 0;
        let mut min_v = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = row_of_col[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let reduced = at(i0 - 1, j - 1) - u[i0] - v[j];
                if reduced < min_v[j] {
                    min_v[j] = reduced;
                    way[j] = j0;
                }
                if min_v[j] < delta {
                    delta = min_v[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[row_of_col[j]] += delta;
                    v[j] -= delta;
                } else {
                    min_v[j] -= delta;
                }
            }
            j0 = j1;
            if row_of_col[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            row_of_col[j0] = row_of_col[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    let mut col_of_row = vec![usize::MAX; rows];
    for j in 1..=n {
        let i = row_of_col[j];
        if i >= 1 && i <= rows && j <= cols && cost[i - 1][j - 1] < GATE_SENTINEL {
            col_of_row[i - 1] = j - 1;
        }
    }
    let mut out = Assignment::default();
    let mut col_used = vec![false; cols];
    for (i, &j) in col_of_row.iter().enumerate() {
        if j == usize::MAX {
            out.unmatched_rows.push(i);
        } else {
            out.matches.push((i, j));
            col_used[j] = true;
        }
    }
    out.unmatched_cols = (0..cols).filter(|&j| !col_used[j]).collect();
    out
}

/// Moves ego-frame detections into the city frame; box extents are unchanged.
pub fn compensate_to_city(
    detections: &[Detection3D],
    ego_pose: &RigidTransform,
) -> Vec<Detection3D> {
    detections
        .iter()
        .map(|d| Detection3D {
            center: ego_pose.transform_point(d.center),
            ..*d
        })
        .collect()
}

/// Multi-object tracker state. Drive it with [`Tracker::step`] in strictly
/// increasing timestamp order.
#[derive(Debug, Clone)]
pub struct Tracker {
    config: TrackerConfig,
    tracks: Vec<Track>,
    next_id: u64,
    last_timestamp: Option<f64>,
}

impl Tracker {
    pub fn new(config: TrackerConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            config,
            tracks: Vec::new(),
            next_id: 0,
            last_timestamp: None,
        })
    }

    pub fn config(&self) -> &TrackerConfig {
        &self.config
    }

    /// Live (tentative or confirmed) tracks.
    pub fn tracks(&self) -> &[Track] {
        &self.tracks
    }

    /// Predicts, associates and updates; returns every confirmed track, ascending by id.
    pub fn step(
        &mut self,
        detections: &[Detection3D],
        timestamp: f64,
    ) -> Result<Vec<TrackSnapshot>> {
        let dt = match self.last_timestamp {
            Some(last) if !(timestamp > last) => {
                return Err(Error::InvalidArgument(format!(
                    "timestamp {timestamp} does not follow previous timestamp {last}"
                )))
            }
            Some(last) => timestamp - last,
            None => 0.0,
        };
        if !timestamp.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "timestamp {timestamp} is not finite"
            )));
        }
        let cfg = &self.config;

        for t in &mut self.tracks {
            t.filter = t.filter.predict(dt, cfg.process_noise_accel)?;
        }

        let predicted: Vec<[f64; 2]> = self.tracks.iter().map(|t| t.filter.position()).collect();
        let mut assignment = hungarian(&cost_matrix(&predicted, detections, cfg.gate_distance));
        if predicted.is_empty() {
            // an empty matrix carries no column count
            assignment.unmatched_cols = (0..detections.len()).collect();
        }

        for &(ti, di) in &assignment.matches {
            let d = &detections[di];
            let t = &mut self.tracks[ti];
            t.filter = t
                .filter
                .update([d.center.x, d.center.y], cfg.measurement_noise_pos)?;
            t.hits += 1;
            t.consecutive_misses = 0;
            t.z = d.center.z;
            t.length = d.length;
            t.width = d.width;
            t.height = d.height;
        }
        for &ti in &assignment.unmatched_rows {
            let t = &mut self.tracks[ti];
            t.consecutive_misses += 1;
            if t.consecutive_misses >= cfg.miss_delete_threshold {
                t.status = TrackStatus::Deleted;
            }
        }
        for &di in &assignment.unmatched_cols {
            let d = &detections[di];
            self.tracks.push(Track {
                id: self.next_id,
                filter: TrackFilter::init(cfg.motion_model, [d.center.x, d.center.y], cfg),
                hits: 1,
                consecutive_misses: 0,
                status: TrackStatus::Tentative,
                z: d.center.z,
                length: d.length,
                width: d.width,
                height: d.height,
            });
            self.next_id += 1;
        }
        for t in &mut self.tracks {
            if t.status == TrackStatus::Tentative && t.hits >= cfg.hit_confirm_threshold {
                t.status = TrackStatus::Confirmed;
            }
        }
        self.tracks.retain(|t| t.status != TrackStatus::Deleted);
        self.last_timestamp = Some(timestamp);

        Ok(self
            .tracks
            .iter()
            .filter(|t| t.status == TrackStatus::Confirmed)
            .map(|t| {
                let [x, y] = t.filter.position();
                let [vx, vy] = t.filter.velocity();
                TrackSnapshot {
                    id: t.id,
                    x,
                    y,
                    z: t.z,
                    vx,
                    vy,
                    length: t.length,
                    width: t.width,
                    height: t.height,
                    hits: t.hits,
                    consecutive_misses: t.consecutive_misses,
                }
            })
            .collect())
    }
}

/// `tracker_step` as a free function.
pub fn tracker_step(
    tracker: &mut Tracker,
    detections: &[Detection3D],
    timestamp: f64,
) -> Result<Vec<TrackSnapshot>> {
    tracker.step(detections, timestamp)
}
