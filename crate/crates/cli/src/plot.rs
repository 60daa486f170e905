//! Bird's-eye-view SVG rendering, one file per frame.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context;
use lidar_mot::dataset_io::{DrivableGrid, TrackRecord};
use lidar_mot::detection::Detection3D;
use lidar_mot::geometry::{RigidTransform, Vec3};

use crate::exit::{CliError, CliResult};

/// Image side in pixels.
pub const IMAGE_SIZE: f64 = 800.0;

/// Everything drawn for one frame; positions in the city frame.
#[derive(Debug, Clone)]
pub struct FrameView<'a> {
    pub index: usize,
    pub ego_pose: &'a RigidTransform,
    /// Points that survived preprocessing.
    pub points: &'a [Vec3],
    pub detections: &'a [Detection3D],
    pub tracks: &'a [TrackRecord],
}

/// Maps city coordinates onto an ego-centered square of half-width `extent`.
struct Viewport {
    x0: f64,
    y0: f64,
    extent: f64,
    scale: f64,
}

impl Viewport {
    fn new(center: Vec3, extent: f64) -> Self {
        Viewport {
            x0: center.x,
            y0: center.y,
            extent,
            scale: IMAGE_SIZE / (2.0 * extent),
        }
    }

    fn px(&self, x: f64, y: f64) -> (f64, f64) {
        (
            (x - self.x0 + self.extent) * self.scale,
            (self.y0 + self.extent - y) * self.scale,
        )
    }

    fn contains(&self, x: f64, y: f64) -> bool {
        (x - self.x0).abs() <= self.extent && (y - self.y0).abs() <= self.extent
    }
}

fn rect(out: &mut String, vp: &Viewport, class: &str, c: Vec3, length: f64, width: f64, yaw: f64) {
    let (cx, cy) = vp.px(c.x, c.y);
    let (w, h) = (length * vp.scale, width * vp.scale);
    let _ = writeln!(
        out,
        r#"<rect class="{class}" x="{:.2}" y="{:.2}" width="{w:.2}" height="{h:.2}" transform="rotate({:.3} {cx:.2} {cy:.2})"/>"#,
        cx - w / 2.0,
        cy - h / 2.0,
        -yaw.to_degrees(),
    );
}

/// Boundary between drivable and non-drivable cells inside the viewport.
fn drivable_outline(vp: &Viewport, grid: &DrivableGrid) -> String {
    let r = grid.resolution;
    let [ox, oy] = grid.origin_xy;
    let inside = |c: isize, row: isize| {
        c >= 0
            && row >= 0
            && (c as usize) < grid.width
            && (row as usize) < grid.height
            && grid.get(c as usize, row as usize)
    };
    let mut d = String::new();
    let mut seg = |x1: f64, y1: f64, x2: f64, y2: f64| {
        if vp.contains(x1, y1) || vp.contains(x2, y2) {
            let (a, b) = vp.px(x1, y1);
            let (c, e) = vp.px(x2, y2);
            let _ = write!(d, "M{a:.2} {b:.2}L{c:.2} {e:.2}");
        }
    };
    for row in 0..grid.height as isize {
        for col in 0..grid.width as isize {
            if !inside(col, row) {
                continue;
            }
            let (x, y) = (ox + col as f64 * r, oy + row as f64 * r);
            if !inside(col - 1, row) {
                seg(x, y, x, y + r);
            }
            if !inside(col + 1, row) {
                seg(x + r, y, x + r, y + r);
            }
            if !inside(col, row - 1) {
                seg(x, y, x + r, y);
            }
            if !inside(col, row + 1) {
                seg(x, y + r, x + r, y + r);
            }
        }
    }
    d
}

/// Renders one frame. Output depends only on the inputs.
pub fn render_frame(view: &FrameView<'_>, grid: &DrivableGrid, extent: f64) -> String {
    let ego = view.ego_pose.translation();
    let yaw = view.ego_pose.yaw();
    let vp = Viewport::new(ego, extent);
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{IMAGE_SIZE}" height="{IMAGE_SIZE}" viewBox="0 0 {IMAGE_SIZE} {IMAGE_SIZE}">"#
    );
    let _ = writeln!(s, "<title>frame {}</title>", view.index);
    let _ = writeln!(
        s,
        "<style>.axis{{stroke:#888;stroke-width:1}} .drivable{{fill:none;stroke:#2a7;stroke-width:1}} \
         .pt{{fill:#333}} .detection{{fill:none;stroke:#c33;stroke-width:1.5}} \
         .track{{fill:none;stroke:#36c;stroke-width:2}} .track-id{{fill:#36c;font:12px sans-serif}}</style>"
    );
    let _ = writeln!(
        s,
        r#"<rect class="background" width="100%" height="100%" fill="white"/>"#
    );

    let mid = IMAGE_SIZE / 2.0;
    let _ = writeln!(s, r#"<g class="axes">"#);
    let _ = writeln!(
        s,
        r#"<line class="axis" x1="0" y1="{mid}" x2="{IMAGE_SIZE}" y2="{mid}"/>"#
    );
    let _ = writeln!(
        s,
        r#"<line class="axis" x1="{mid}" y1="0" x2="{mid}" y2="{IMAGE_SIZE}"/>"#
    );
    let _ = writeln!(
        s,
        r#"<text class="axis-label" x="{}" y="{}">x</text>"#,
        IMAGE_SIZE - 14.0,
        mid - 4.0
    );
    let _ = writeln!(
        s,
        r#"<text class="axis-label" x="{}" y="12">y</text>"#,
        mid + 4.0
    );
    let _ = writeln!(s, "</g>");

    let outline = drivable_outline(&vp, grid);
    if !outline.is_empty() {
        let _ = writeln!(s, r#"<path class="drivable" d="{outline}"/>"#);
    }

    if !view.points.is_empty() {
        let _ = writeln!(s, r#"<g class="points">"#);
        for p in view.points.iter().filter(|p| vp.contains(p.x, p.y)) {
            let (x, y) = vp.px(p.x, p.y);
            let _ = writeln!(s, r#"<circle class="pt" cx="{x:.2}" cy="{y:.2}" r="1"/>"#);
        }
        let _ = writeln!(s, "</g>");
    }

    if !view.detections.is_empty() {
        let _ = writeln!(s, r#"<g class="detections">"#);
        for d in view.detections {
            rect(&mut s, &vp, "detection", d.center, d.length, d.width, yaw);
        }
        let _ = writeln!(s, "</g>");
    }

    if !view.tracks.is_empty() {
        let _ = writeln!(s, r#"<g class="tracks">"#);
        for t in view.tracks {
            let c = Vec3::new(t.x, t.y, t.z);
            let _ = writeln!(s, r#"<g class="track-box" data-id="{}">"#, t.track_id);
            rect(&mut s, &vp, "track", c, t.length, t.width, yaw);
            let (x, y) = vp.px(t.x, t.y);
            let _ = writeln!(
                s,
                r#"<text class="track-id" x="{:.2}" y="{:.2}">{}</text>"#,
                x + 4.0,
                y - 4.0,
                t.track_id
            );
            let _ = writeln!(s, "</g>");
        }
        let _ = writeln!(s, "</g>");
    }
    s.push_str("</svg>\n");
    s
}

pub fn svg_file_name(index: usize) -> String {
    format!("frame_{index:06}.svg")
}

/// Writes `svg` as `out_dir/frame_NNNNNN.svg`.
pub fn write_svg(out_dir: &Path, index: usize, svg: &str) -> CliResult<PathBuf> {
    let path = out_dir.join(svg_file_name(index));
    fs::write(&path, svg)
        .with_context(|| format!("cannot write {}", path.display()))
        .map_err(CliError::data)?;
    Ok(path)
}
