//! On-disk sequence layout and track/ground-truth files.
//!
//! A sequence directory contains:
//!
//! ```text
//! manifest.json        {"version": 1, "frames": [{"index", "timestamp", "num_points"}, ...]}
//! calibration.json     {"cameras": [{"id", "intrinsics": {fx, fy, cx, cy, width, height},
//!                                    "ego_to_camera": {"rotation": [w,x,y,z], "translation": [x,y,z]}}]}
//! poses.json           {"poses": [{"index", "rotation": [w,x,y,z], "translation": [x,y,z]}]}  (ego -> city)
//! drivable.json        {"origin_xy": [x, y], "resolution", "width", "height"}
//! drivable.bin         row-major occupancy bits, LSB-first within each byte
//! frames/NNNNNN.bin    little-endian f32 triples (x, y, z), ego frame, 12 bytes per point
//! masks/NNNNNN.json    optional, {"masks": [{"camera_id", "polygon": [[u, v], ...]}]}
//! gt.jsonl             optional, one box per line: {"frame", "track_id", "center", "length", "width", "height"}
//! ```
//!
//! Points are stored as 32-bit floats, so only clouds whose coordinates are
//! exactly representable in `f32` survive a write/load cycle unchanged.

use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{CameraModel, RigidTransform, Vec3, CITY_FRAME, EGO_FRAME};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const CALIBRATION_FILE: &str = "calibration.json";
pub const POSES_FILE: &str = "poses.json";
pub const DRIVABLE_FILE: &str = "drivable.json";
pub const DRIVABLE_BITS_FILE: &str = "drivable.bin";
pub const GROUND_TRUTH_FILE: &str = "gt.jsonl";
pub const TRACKS_FORMAT: &str = "lidar-mot/tracks";
const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct PointCloud {
    pub points: Vec<Vec3>,
    pub frame: String,
}

impl PointCloud {
    pub fn new(points: Vec<Vec3>, frame: impl Into<String>) -> Self {
        Self {
            points,
            frame: frame.into(),
        }
    }

    pub fn empty(frame: impl Into<String>) -> Self {
        Self::new(Vec::new(), frame)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Sub-cloud made of the points at `indices`, in that order.
    pub fn select(&self, indices: &[usize]) -> PointCloud {
        PointCloud {
            points: indices.iter().map(|&i| self.points[i]).collect(),
            frame: self.frame.clone(),
        }
    }

    pub fn transformed(&self, t: &RigidTransform) -> PointCloud {
        PointCloud {
            points: self.points.iter().map(|&p| t.transform_point(p)).collect(),
            frame: t.to_frame().to_owned(),
        }
    }
}

/// A precomputed instance mask, as an image-space polygon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaskRegion {
    pub camera_id: String,
    pub polygon: Vec<[f64; 2]>,
}

/// City-frame occupancy grid of drivable cells.
#[derive(Debug, Clone, PartialEq)]
pub struct DrivableGrid {
    pub origin_xy: [f64; 2],
    pub resolution: f64,
    pub width: usize,
    pub height: usize,
    bits: Vec<bool>,
}

impl DrivableGrid {
    pub fn new(
        origin_xy: [f64; 2],
        resolution: f64,
        width: usize,
        height: usize,
        bits: Vec<bool>,
    ) -> Result<Self> {
        if !(resolution > 0.0) || !resolution.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "grid resolution must be positive, got {resolution}"
            )));
        }
        if bits.len() != width * height {
            return Err(Error::InvalidArgument(format!(
                "grid has {} cells but {}x{} = {} expected",
                bits.len(),
                width,
                height,
                width * height
            )));
        }
        Ok(Self {
            origin_xy,
            resolution,
            width,
            height,
            bits,
        })
    }

    pub fn filled(
        origin_xy: [f64; 2],
        resolution: f64,
        width: usize,
        height: usize,
        value: bool,
    ) -> Result<Self> {
        Self::new(
            origin_xy,
            resolution,
            width,
            height,
            vec![value; width * height],
        )
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    /// Cell `(col, row)` containing the city-frame point, if inside the grid.
    pub fn cell_of(&self, x: f64, y: f64) -> Option<(usize, usize)> {
        let col = ((x - self.origin_xy[0]) / self.resolution).floor();
        let row = ((y - self.origin_xy[1]) / self.resolution).floor();
        if col < 0.0 || row < 0.0 || !col.is_finite() || !row.is_finite() {
            return None;
        }
        let (col, row) = (col as usize, row as usize);
        (col < self.width && row < self.height).then_some((col, row))
    }

    pub fn get(&self, col: usize, row: usize) -> bool {
        self.bits[row * self.width + col]
    }

    pub fn set(&mut self, col: usize, row: usize, value: bool) {
        self.bits[row * self.width + col] = value;
    }

    pub fn is_drivable(&self, x: f64, y: f64) -> bool {
        self.cell_of(x, y).is_some_and(|(c, r)| self.get(c, r))
    }

    /// Marks every cell whose center lies in the axis-aligned rectangle.
    pub fn fill_rect(&mut self, min_xy: [f64; 2], max_xy: [f64; 2], value: bool) {
        for row in 0..self.height {
            let cy = self.origin_xy[1] + (row as f64 + 0.5) * self.resolution;
            if cy < min_xy[1] || cy > max_xy[1] {
                continue;
            }
            for col in 0..self.width {
                let cx = self.origin_xy[0] + (col as f64 + 0.5) * self.resolution;
                if cx >= min_xy[0] && cx <= max_xy[0] {
                    self.set(col, row, value);
                }
            }
        }
    }

    fn pack(&self) -> Vec<u8> {
        let mut out = vec![0u8; self.bits.len().div_ceil(8)];
        for (i, &b) in self.bits.iter().enumerate() {
            if b {
                out[i / 8] |= 1 << (i % 8);
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruthBox {
    pub track_id: String,
    pub center: Vec3,
    pub length: f64,
    pub width: f64,
    pub height: f64,
}

/// Ground-truth boxes keyed by frame index.
pub type GroundTruth = BTreeMap<usize, Vec<GroundTruthBox>>;

#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub index: usize,
    pub timestamp: f64,
    /// Ego-frame point cloud.
    pub cloud: PointCloud,
    /// Maps the ego frame into the city frame.
    pub ego_pose: RigidTransform,
    pub masks: Vec<MaskRegion>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Calibration {
    pub cameras: Vec<CameraModel>,
}

impl Calibration {
    pub fn camera(&self, id: &str) -> Option<&CameraModel> {
        self.cameras.iter().find(|c| c.id == id)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sequence {
    pub frames: Vec<Frame>,
    pub calibration: Calibration,
    pub drivable: DrivableGrid,
    pub ground_truth: Option<GroundTruth>,
}

/// One confirmed track at one frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackRecord {
    pub frame: usize,
    pub track_id: u64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub vx: f64,
    pub vy: f64,
    pub length: f64,
    pub width: f64,
    pub height: f64,
}

// ---- file schemas ----

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ManifestFile {
    version: u32,
    frames: Vec<ManifestEntry>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ManifestEntry {
    index: usize,
    timestamp: f64,
    num_points: usize,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PoseFile {
    poses: Vec<PoseEntry>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PoseEntry {
    index: usize,
    rotation: [f64; 4],
    translation: [f64; 3],
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CalibrationFile {
    cameras: Vec<CameraEntry>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CameraEntry {
    id: String,
    intrinsics: Intrinsics,
    ego_to_camera: TransformEntry,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Intrinsics {
    fx: f64,
    fy: f64,
    cx: f64,
    cy: f64,
    width: u32,
    height: u32,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TransformEntry {
    rotation: [f64; 4],
    translation: [f64; 3],
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DrivableHeader {
    origin_xy: [f64; 2],
    resolution: f64,
    width: usize,
    height: usize,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MaskFile {
    masks: Vec<MaskRegion>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GroundTruthLine {
    frame: usize,
    track_id: String,
    center: Vec3,
    length: f64,
    width: f64,
    height: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TracksHeader {
    format: String,
    version: u32,
}

pub fn frame_file_name(index: usize) -> String {
    format!("{index:06}.bin")
}

pub fn mask_file_name(index: usize) -> String {
    format!("{index:06}.json")
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::json(path, e))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).expect("serializable");
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn require_file(dir: &Path, name: &str, what: &str) -> Result<PathBuf> {
    let path = dir.join(name);
    if path.is_file() {
        Ok(path)
    } else {
        Err(Error::data(&path, format!("missing {what} ({name})")))
    }
}

pub fn read_points(path: &Path, expected: Option<usize>) -> Result<Vec<Vec3>> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.len() % 12 != 0 {
        return Err(Error::data(
            path,
            format!(
                "length {} is not a multiple of 12 bytes; trailing record starts at byte offset {}",
                bytes.len(),
                bytes.len() / 12 * 12
            ),
        ));
    }
    let n = bytes.len() / 12;
    if let Some(expected) = expected {
        if n != expected {
            return Err(Error::data(
                path,
                format!("manifest lists {expected} points but file holds {n}"),
            ));
        }
    }
    let mut points = Vec::with_capacity(n);
    for (i, rec) in bytes.chunks_exact(12).enumerate() {
        let f = |k: usize| f32::from_le_bytes(rec[4 * k..4 * k + 4].try_into().unwrap()) as f64;
        let p = Vec3::new(f(0), f(1), f(2));
        if !p.is_finite() {
            return Err(Error::data(
                path,
                format!("non-finite point at byte offset {}", i * 12),
            ));
        }
        points.push(p);
    }
    Ok(points)
}

pub fn write_points(path: &Path, points: &[Vec3]) -> Result<()> {
    let mut bytes = Vec::with_capacity(points.len() * 12);
    for p in points {
        for c in [p.x, p.y, p.z] {
            bytes.extend_from_slice(&(c as f32).to_le_bytes());
        }
    }
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn transform_from_entry(
    path: &Path,
    rotation: [f64; 4],
    translation: [f64; 3],
    from: &str,
    to: &str,
) -> Result<RigidTransform> {
    RigidTransform::new(rotation, Vec3::from(translation), from, to)
        .map_err(|e| Error::data(path, e.to_string()))
}

fn load_calibration(dir: &Path) -> Result<Calibration> {
    let path = require_file(dir, CALIBRATION_FILE, "calibration")?;
    let file: CalibrationFile = read_json(&path)?;
    let mut cameras = Vec::with_capacity(file.cameras.len());
    let mut seen = HashSet::new();
    for cam in file.cameras {
        if !seen.insert(cam.id.clone()) {
            return Err(Error::data(
                &path,
                format!("duplicate camera id '{}'", cam.id),
            ));
        }
        let ext = transform_from_entry(
            &path,
            cam.ego_to_camera.rotation,
            cam.ego_to_camera.translation,
            EGO_FRAME,
            cam.id.as_str(),
        )?;
        let i = &cam.intrinsics;
        let model = CameraModel::new(
            cam.id.clone(),
            (i.fx, i.fy, i.cx, i.cy),
            (i.width, i.height),
            ext,
        )
        .map_err(|e| Error::data(&path, e.to_string()))?;
        cameras.push(model);
    }
    Ok(Calibration { cameras })
}

pub fn load_drivable(dir: &Path) -> Result<DrivableGrid> {
    let path = require_file(dir, DRIVABLE_FILE, "drivable-area header")?;
    let header: DrivableHeader = read_json(&path)?;
    let bits_path = require_file(dir, DRIVABLE_BITS_FILE, "drivable-area bitmask")?;
    let bytes = fs::read(&bits_path).map_err(|e| Error::io(&bits_path, e))?;
    let cells = header.width * header.height;
    if bytes.len() != cells.div_ceil(8) {
        return Err(Error::data(
            &bits_path,
            format!(
                "expected {} bytes for {} cells, found {}",
                cells.div_ceil(8),
                cells,
                bytes.len()
            ),
        ));
    }
    let bits = (0..cells)
        .map(|i| bytes[i / 8] >> (i % 8) & 1 == 1)
        .collect();
    DrivableGrid::new(
        header.origin_xy,
        header.resolution,
        header.width,
        header.height,
        bits,
    )
    .map_err(|e| Error::data(&path, e.to_string()))
}

pub fn load_ground_truth(path: &Path) -> Result<GroundTruth> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut gt = GroundTruth::new();
    for (n, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: GroundTruthLine = serde_json::from_str(&line).map_err(|e| Error::Parse {
            path: path.to_owned(),
            line: n + 1,
            column: e.column(),
            message: e.to_string(),
        })?;
        if !(rec.length > 0.0 && rec.width > 0.0 && rec.height > 0.0) {
            return Err(Error::data(
                path,
                format!("line {}: box dimensions must be positive", n + 1),
            ));
        }
        gt.entry(rec.frame).or_default().push(GroundTruthBox {
            track_id: rec.track_id,
            center: rec.center,
            length: rec.length,
            width: rec.width,
            height: rec.height,
        });
    }
    Ok(gt)
}

pub fn write_ground_truth(path: &Path, gt: &GroundTruth) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for (&frame, boxes) in gt {
        for b in boxes {
            let line = GroundTruthLine {
                frame,
                track_id: b.track_id.clone(),
                center: b.center,
                length: b.length,
                width: b.width,
                height: b.height,
            };
            write_line(&mut w, path, &line)?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Loads and validates a sequence directory.
pub fn load_sequence(dir: impl AsRef<Path>) -> Result<Sequence> {
    let dir = dir.as_ref();
    let manifest_path = dir.join(MANIFEST_FILE);
    if !manifest_path.is_file() {
        return Err(Error::data(&manifest_path, "missing manifest"));
    }
    let mut manifest: ManifestFile = read_json(&manifest_path)?;
    if manifest.version != FORMAT_VERSION {
        return Err(Error::data(
            &manifest_path,
            format!("unsupported manifest version {}", manifest.version),
        ));
    }
    manifest.frames.sort_by_key(|f| f.index);
    for pair in manifest.frames.windows(2) {
        if pair[0].index == pair[1].index {
            return Err(Error::data(
                &manifest_path,
                format!("duplicate frame index {}", pair[0].index),
            ));
        }
        if !(pair[1].timestamp > pair[0].timestamp) {
            return Err(Error::data(
                &manifest_path,
                format!(
                    "timestamps must be strictly increasing: frame {} at {} follows frame {} at {}",
                    pair[1].index, pair[1].timestamp, pair[0].index, pair[0].timestamp
                ),
            ));
        }
    }
    if let Some(bad) = manifest.frames.iter().find(|f| !f.timestamp.is_finite()) {
        return Err(Error::data(
            &manifest_path,
            format!("frame {} has a non-finite timestamp", bad.index),
        ));
    }

    let calibration = load_calibration(dir)?;
    let drivable = load_drivable(dir)?;

    let poses_path = require_file(dir, POSES_FILE, "ego poses")?;
    let pose_file: PoseFile = read_json(&poses_path)?;
    let mut poses = BTreeMap::new();
    for p in pose_file.poses {
        let t = transform_from_entry(
            &poses_path,
            p.rotation,
            p.translation,
            EGO_FRAME,
            CITY_FRAME,
        )?;
        if poses.insert(p.index, t).is_some() {
            return Err(Error::data(
                &poses_path,
                format!("duplicate pose for frame {}", p.index),
            ));
        }
    }

    let mut frames = Vec::with_capacity(manifest.frames.len());
    for entry in &manifest.frames {
        let ego_pose = poses.remove(&entry.index).ok_or_else(|| {
            Error::data(&poses_path, format!("no pose for frame {}", entry.index))
        })?;
        let points_path = dir.join("frames").join(frame_file_name(entry.index));
        if !points_path.is_file() {
            return Err(Error::data(
                &points_path,
                format!("missing point file for frame {}", entry.index),
            ));
        }
        let points = read_points(&points_path, Some(entry.num_points))?;
        let mask_path = dir.join("masks").join(mask_file_name(entry.index));
        let masks = if mask_path.is_file() {
            let file: MaskFile = read_json(&mask_path)?;
            for m in &file.masks {
                if calibration.camera(&m.camera_id).is_none() {
                    return Err(Error::data(
                        &mask_path,
                        format!("mask references unknown camera '{}'", m.camera_id),
                    ));
                }
                if m.polygon.len() < 3 {
                    return Err(Error::data(
                        &mask_path,
                        "mask polygon needs at least 3 vertices",
                    ));
                }
            }
            file.masks
        } else {
            Vec::new()
        };
        frames.push(Frame {
            index: entry.index,
            timestamp: entry.timestamp,
            cloud: PointCloud::new(points, EGO_FRAME),
            ego_pose,
            masks,
        });
    }

    let gt_path = dir.join(GROUND_TRUTH_FILE);
    let ground_truth = if gt_path.is_file() {
        Some(load_ground_truth(&gt_path)?)
    } else {
        None
    };

    Ok(Sequence {
        frames,
        calibration,
        drivable,
        ground_truth,
    })
}

/// Writes a sequence in the directory layout read by [`load_sequence`].
pub fn write_sequence(dir: impl AsRef<Path>, seq: &Sequence) -> Result<()> {
    let dir = dir.as_ref();
    let frames_dir = dir.join("frames");
    fs::create_dir_all(&frames_dir).map_err(|e| Error::io(&frames_dir, e))?;

    let manifest = ManifestFile {
        version: FORMAT_VERSION,
        frames: seq
            .frames
            .iter()
            .map(|f| ManifestEntry {
                index: f.index,
                timestamp: f.timestamp,
                num_points: f.cloud.len(),
            })
            .collect(),
    };
    write_json(&dir.join(MANIFEST_FILE), &manifest)?;

    let calibration = CalibrationFile {
        cameras: seq
            .calibration
            .cameras
            .iter()
            .map(|c| CameraEntry {
                id: c.id.clone(),
                intrinsics: Intrinsics {
                    fx: c.fx,
                    fy: c.fy,
                    cx: c.cx,
                    cy: c.cy,
                    width: c.width,
                    height: c.height,
                },
                ego_to_camera: TransformEntry {
                    rotation: c.extrinsics.rotation_wxyz(),
                    translation: c.extrinsics.translation().into(),
                },
            })
            .collect(),
    };
    write_json(&dir.join(CALIBRATION_FILE), &calibration)?;

    let poses = PoseFile {
        poses: seq
            .frames
            .iter()
            .map(|f| PoseEntry {
                index: f.index,
                rotation: f.ego_pose.rotation_wxyz(),
                translation: f.ego_pose.translation().into(),
            })
            .collect(),
    };
    write_json(&dir.join(POSES_FILE), &poses)?;

    let g = &seq.drivable;
    write_json(
        &dir.join(DRIVABLE_FILE),
        &DrivableHeader {
            origin_xy: g.origin_xy,
            resolution: g.resolution,
            width: g.width,
            height: g.height,
        },
    )?;
    let bits_path = dir.join(DRIVABLE_BITS_FILE);
    fs::write(&bits_path, g.pack()).map_err(|e| Error::io(&bits_path, e))?;

    for f in &seq.frames {
        write_points(&frames_dir.join(frame_file_name(f.index)), &f.cloud.points)?;
        if !f.masks.is_empty() {
            let masks_dir = dir.join("masks");
            fs::create_dir_all(&masks_dir).map_err(|e| Error::io(&masks_dir, e))?;
            write_json(
                &masks_dir.join(mask_file_name(f.index)),
                &MaskFile {
                    masks: f.masks.clone(),
                },
            )?;
        }
    }

    if let Some(gt) = &seq.ground_truth {
        write_ground_truth(&dir.join(GROUND_TRUTH_FILE), gt)?;
    }
    Ok(())
}

/// Writes confirmed-track records as newline-delimited JSON after a format header line.
pub fn write_tracks(path: impl AsRef<Path>, records: &[TrackRecord]) -> Result<()> {
    let path = path.as_ref();
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let header = TracksHeader {
        format: TRACKS_FORMAT.to_owned(),
        version: FORMAT_VERSION,
    };
    write_line(&mut w, path, &header)?;
    for r in records {
        write_line(&mut w, path, r)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn write_line<W: Write, T: Serialize>(w: &mut W, path: &Path, value: &T) -> Result<()> {
    serde_json::to_writer(&mut *w, value).map_err(|e| Error::io(path, std::io::Error::other(e)))?;
    w.write_all(b"\n").map_err(|e| Error::io(path, e))
}

pub fn read_tracks(path: impl AsRef<Path>) -> Result<Vec<TrackRecord>> {
    let path = path.as_ref();
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut lines = BufReader::new(file).lines().enumerate();
    let parse_err = |n: usize, e: serde_json::Error| Error::Parse {
        path: path.to_owned(),
        line: n + 1,
        column: e.column(),
        message: e.to_string(),
    };
    let Some((n, first)) = lines.next() else {
        return Err(Error::data(path, "empty tracks file (missing header)"));
    };
    let first = first.map_err(|e| Error::io(path, e))?;
    let header: TracksHeader = serde_json::from_str(&first).map_err(|e| parse_err(n, e))?;
    if header.format != TRACKS_FORMAT || header.version != FORMAT_VERSION {
        return Err(Error::data(
            path,
            format!(
                "unsupported tracks format '{}' v{}",
                header.format, header.version
            ),
        ));
    }
    let mut out = Vec::new();
    for (n, line) in lines {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| parse_err(n, e))?);
    }
    Ok(out)
}

/// Groups track records by frame index.
pub fn tracks_by_frame(records: &[TrackRecord]) -> BTreeMap<usize, Vec<TrackRecord>> {
    let mut out: BTreeMap<usize, Vec<TrackRecord>> = BTreeMap::new();
    for r in records {
        out.entry(r.frame).or_default().push(r.clone());
    }
    out
}
