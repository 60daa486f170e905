//! Coordinate frames, rigid transforms and the pinhole camera model.
//!
//! Quaternions are stored and serialized scalar-first, `(w, x, y, z)`.
//! Camera frames follow the usual optical convention: `+Z` along the optical
//! axis, `+X` to the right of the image and `+Y` down.

use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use nalgebra::{Matrix3, Quaternion, Rotation3, UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Frame label of the vehicle-fixed sensor frame.
pub const EGO_FRAME: &str = "ego";
/// Frame label of the fixed world frame.
pub const CITY_FRAME: &str = "city";

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "[f64; 3]", into = "[f64; 3]")]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const ZERO: Vec3 = Vec3 {
        x: 0.0,
        y: 0.0,
        z: 0.0,
    };

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn dot(self, o: Vec3) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn cross(self, o: Vec3) -> Vec3 {
        Vec3::new(
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        )
    }

    pub fn norm(self) -> f64 {
        self.norm_squared().sqrt()
    }

    pub fn norm_squared(self) -> f64 {
        self.dot(self)
    }

    pub fn distance_squared(self, o: Vec3) -> f64 {
        let dx = self.x - o.x;
        let dy = self.y - o.y;
        let dz = self.z - o.z;
        dx * dx + dy * dy + dz * dz
    }

    pub fn distance(self, o: Vec3) -> f64 {
        self.distance_squared(o).sqrt()
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    /// Component along `axis` (0 = x, 1 = y, 2 = z).
    #[inline]
    pub fn axis(self, axis: usize) -> f64 {
        match axis {
            0 => self.x,
            1 => self.y,
            _ => self.z,
        }
    }

    fn to_na(self) -> Vector3<f64> {
        Vector3::new(self.x, self.y, self.z)
    }

    fn from_na(v: Vector3<f64>) -> Self {
        Vec3::new(v.x, v.y, v.z)
    }
}

impl From<[f64; 3]> for Vec3 {
    fn from(a: [f64; 3]) -> Self {
        Vec3::new(a[0], a[1], a[2])
    }
}

impl From<Vec3> for [f64; 3] {
    fn from(v: Vec3) -> Self {
        [v.x, v.y, v.z]
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl AddAssign for Vec3 {
    fn add_assign(&mut self, o: Vec3) {
        *self = *self + o;
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, s: f64) -> Vec3 {
        Vec3::new(self.x * s, self.y * s, self.z * s)
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    fn neg(self) -> Vec3 {
        Vec3::new(-self.x, -self.y, -self.z)
    }
}

/// An SE(3) transform mapping points expressed in `from_frame` into `to_frame`.
#[derive(Debug, Clone, PartialEq)]
pub struct RigidTransform {
    rotation: UnitQuaternion<f64>,
    translation: Vec3,
    from_frame: String,
    to_frame: String,
}

impl RigidTransform {
    /// Builds a transform from a scalar-first quaternion, normalizing it unless
    /// it is already unit to within 1e-12.
    pub fn new(
        rotation_wxyz: [f64; 4],
        translation: Vec3,
        from_frame: impl Into<String>,
        to_frame: impl Into<String>,
    ) -> Result<Self> {
        let [w, x, y, z] = rotation_wxyz;
        let q = Quaternion::new(w, x, y, z);
        let n = q.norm();
        if !n.is_finite() || n < 1e-12 {
            return Err(Error::InvalidArgument(format!(
                "rotation quaternion {rotation_wxyz:?} cannot be normalized"
            )));
        }
        if !translation.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "translation {translation:?} is not finite"
            )));
        }
        // already-unit input is kept bit-exact so stored poses round-trip
        let rotation = if (n - 1.0).abs() <= 1e-12 {
            UnitQuaternion::new_unchecked(q)
        } else {
            UnitQuaternion::new_normalize(q)
        };
        Ok(Self {
            rotation,
            translation,
            from_frame: from_frame.into(),
            to_frame: to_frame.into(),
        })
    }

    pub fn identity(frame: impl Into<String>) -> Self {
        let frame = frame.into();
        Self {
            rotation: UnitQuaternion::identity(),
            translation: Vec3::ZERO,
            from_frame: frame.clone(),
            to_frame: frame,
        }
    }

    pub fn from_translation(
        translation: Vec3,
        from_frame: impl Into<String>,
        to_frame: impl Into<String>,
    ) -> Self {
        Self {
            rotation: UnitQuaternion::identity(),
            translation,
            from_frame: from_frame.into(),
            to_frame: to_frame.into(),
        }
    }

    /// Rotation about `+Z` by `yaw` radians followed by `translation`.
    pub fn from_yaw(
        yaw: f64,
        translation: Vec3,
        from_frame: impl Into<String>,
        to_frame: impl Into<String>,
    ) -> Self {
        Self::from_axis_angle(
            Vec3::new(0.0, 0.0, 1.0),
            yaw,
            translation,
            from_frame,
            to_frame,
        )
    }

    pub fn from_axis_angle(
        axis: Vec3,
        angle: f64,
        translation: Vec3,
        from_frame: impl Into<String>,
        to_frame: impl Into<String>,
    ) -> Self {
        let rotation = match nalgebra::Unit::try_new(axis.to_na(), 1e-12) {
            Some(axis) => UnitQuaternion::from_axis_angle(&axis, angle),
            None => UnitQuaternion::identity(),
        };
        Self {
            rotation,
            translation,
            from_frame: from_frame.into(),
            to_frame: to_frame.into(),
        }
    }

    /// Builds a transform from a row-major rotation matrix. The matrix is
    /// projected onto the nearest rotation.
    pub fn from_rotation_matrix(
        rows: [[f64; 3]; 3],
        translation: Vec3,
        from_frame: impl Into<String>,
        to_frame: impl Into<String>,
    ) -> Self {
        let m = Matrix3::from_fn(|r, c| rows[r][c]);
        let rot = Rotation3::from_matrix(&m);
        Self {
            rotation: UnitQuaternion::from_rotation_matrix(&rot),
            translation,
            from_frame: from_frame.into(),
            to_frame: to_frame.into(),
        }
    }

    /// Scalar-first unit quaternion.
    pub fn rotation_wxyz(&self) -> [f64; 4] {
        let q = self.rotation.quaternion();
        [q.w, q.i, q.j, q.k]
    }

    pub fn translation(&self) -> Vec3 {
        self.translation
    }

    pub fn from_frame(&self) -> &str {
        &self.from_frame
    }

    pub fn to_frame(&self) -> &str {
        &self.to_frame
    }

    /// Rotation angle about `+Z` when the rotation is a pure yaw.
    pub fn yaw(&self) -> f64 {
        self.rotation.euler_angles().2
    }

    pub fn transform_point(&self, p: Vec3) -> Vec3 {
        Vec3::from_na(self.rotation * p.to_na()) + self.translation
    }

    pub fn rotate_vector(&self, v: Vec3) -> Vec3 {
        Vec3::from_na(self.rotation * v.to_na())
    }

    pub fn inverse(&self) -> RigidTransform {
        let inv = self.rotation.inverse();
        RigidTransform {
            rotation: inv,
            translation: -Vec3::from_na(inv * self.translation.to_na()),
            from_frame: self.to_frame.clone(),
            to_frame: self.from_frame.clone(),
        }
    }

    /// `self ∘ other`: applies `other` first, then `self`.
    pub fn compose(&self, other: &RigidTransform) -> Result<RigidTransform> {
        if self.from_frame != other.to_frame {
            return Err(Error::FrameMismatch {
                expected: self.from_frame.clone(),
                found: other.to_frame.clone(),
            });
        }
        let rotation = UnitQuaternion::new_normalize((self.rotation * other.rotation).into_inner());
        Ok(RigidTransform {
            rotation,
            translation: self.transform_point(other.translation),
            from_frame: other.from_frame.clone(),
            to_frame: self.to_frame.clone(),
        })
    }

    /// Same transform relabeled with new frame names.
    pub fn with_frames(
        mut self,
        from_frame: impl Into<String>,
        to_frame: impl Into<String>,
    ) -> Self {
        self.from_frame = from_frame.into();
        self.to_frame = to_frame.into();
        self
    }
}

impl fmt::Display for RigidTransform {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [w, x, y, z] = self.rotation_wxyz();
        write!(
            f,
            "{}->{} q=({w:.6}, {x:.6}, {y:.6}, {z:.6}) t=({:.3}, {:.3}, {:.3})",
            self.from_frame,
            self.to_frame,
            self.translation.x,
            self.translation.y,
            self.translation.z
        )
    }
}

pub fn compose(a: &RigidTransform, b: &RigidTransform) -> Result<RigidTransform> {
    a.compose(b)
}

pub fn invert(t: &RigidTransform) -> RigidTransform {
    t.inverse()
}

pub fn transform_point(t: &RigidTransform, p: Vec3) -> Vec3 {
    t.transform_point(p)
}

/// Image-plane location of a projected point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pixel {
    pub u: f64,
    pub v: f64,
    /// Distance along the optical axis, always positive.
    pub depth: f64,
}

/// Ideal pinhole camera with its mounting pose on the ego vehicle.
#[derive(Debug, Clone, PartialEq)]
pub struct CameraModel {
    pub id: String,
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: u32,
    pub height: u32,
    /// Maps ego-frame points into this camera's optical frame.
    pub extrinsics: RigidTransform,
}

impl CameraModel {
    pub fn new(
        id: impl Into<String>,
        (fx, fy, cx, cy): (f64, f64, f64, f64),
        (width, height): (u32, u32),
        extrinsics: RigidTransform,
    ) -> Result<Self> {
        let id = id.into();
        if !(fx > 0.0 && fy > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "camera '{id}': focal lengths must be positive (fx={fx}, fy={fy})"
            )));
        }
        if width == 0 || height == 0 {
            return Err(Error::InvalidArgument(format!(
                "camera '{id}': image size must be positive"
            )));
        }
        if !(0.0..width as f64).contains(&cx) || !(0.0..height as f64).contains(&cy) {
            return Err(Error::InvalidArgument(format!(
                "camera '{id}': principal point ({cx}, {cy}) outside {width}x{height} image"
            )));
        }
        Ok(Self {
            id,
            fx,
            fy,
            cx,
            cy,
            width,
            height,
            extrinsics,
        })
    }

    /// Projects a point already expressed in the camera frame.
    pub fn project_camera_point(&self, p: Vec3) -> Option<Pixel> {
        if !(p.z > 0.0) {
            return None;
        }
        let u = self.fx * p.x / p.z + self.cx;
        let v = self.fy * p.y / p.z + self.cy;
        let inside =
            (0.0..self.width as f64).contains(&u) && (0.0..self.height as f64).contains(&v);
        inside.then_some(Pixel { u, v, depth: p.z })
    }

    /// Camera-frame point at the given pixel and depth.
    pub fn unproject(&self, px: Pixel) -> Vec3 {
        Vec3::new(
            (px.u - self.cx) * px.depth / self.fx,
            (px.v - self.cy) * px.depth / self.fy,
            px.depth,
        )
    }

    pub fn project(&self, p_ego: Vec3) -> Option<Pixel> {
        self.project_camera_point(self.extrinsics.transform_point(p_ego))
    }
}

pub fn project_to_image(cam: &CameraModel, p_ego: Vec3) -> Option<Pixel> {
    cam.project(p_ego)
}
