//! From a detection pixel and its depth patch to a point in the arm frame.

use nalgebra::{Matrix3, Vector3};

use crate::error::{Error, Result};
use crate::kinematics::ArmPoint;

/// Depth readings at or beyond this range are treated as invalid (m).
pub const MAX_VALID_DEPTH: f64 = 20.0;

/// Side length of the depth patch sampled around a detection.
pub const PATCH_SIDE: usize = 5;
pub const PATCH_LEN: usize = PATCH_SIDE * PATCH_SIDE;

/// Pinhole intrinsics of the depth camera plus both image resolutions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraIntrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub rgb_width: u32,
    pub rgb_height: u32,
    pub depth_width: u32,
    pub depth_height: u32,
}

impl Default for CameraIntrinsics {
    fn default() -> Self {
        CameraIntrinsics {
            fx: 365.0,
            fy: 365.0,
            cx: 256.0,
            cy: 212.0,
            rgb_width: 1920,
            rgb_height: 1080,
            depth_width: 512,
            depth_height: 424,
        }
    }
}

impl CameraIntrinsics {
    pub fn validate(&self) -> Result<()> {
        let ok = self.fx > 0.0
            && self.fy > 0.0
            && self.fx.is_finite()
            && self.fy.is_finite()
            && self.rgb_width > 0
            && self.rgb_height > 0
            && self.depth_width > 0
            && self.depth_height > 0
            && self.cx >= 0.0
            && self.cx < self.depth_width as f64
            && self.cy >= 0.0
            && self.cy < self.depth_height as f64;
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid camera intrinsics {self:?}")))
        }
    }

    /// Projects a camera-frame point to (sub-pixel) depth-image coordinates.
    pub fn project(&self, p: &CameraPoint) -> (f64, f64) {
        (p.x * self.fx / p.z + self.cx, p.y * self.fy / p.z + self.cy)
    }

    /// Scale factors from RGB to depth pixels, per axis.
    pub fn rgb_to_depth_scale(&self) -> (f64, f64) {
        (self.depth_width as f64 / self.rgb_width as f64, self.depth_height as f64 / self.rgb_height as f64)
    }
}

/// Rigid camera-to-arm transform `p_arm = R p_c + t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Extrinsics {
    pub rotation: Matrix3<f64>,
    pub translation: Vector3<f64>,
}

/// Translation measured for the field platform.
pub const FIELD_TRANSLATION: [f64; 3] = [0.76, 0.44, 0.485];

impl Default for Extrinsics {
    fn default() -> Self {
        Extrinsics { rotation: Matrix3::identity(), translation: Vector3::from(FIELD_TRANSLATION) }
    }
}

impl Extrinsics {
    pub fn new(rotation: Matrix3<f64>, translation: Vector3<f64>) -> Result<Self> {
        let ext = Extrinsics { rotation, translation };
        ext.validate()?;
        Ok(ext)
    }

    /// Camera whose optical axis points along arm +x with image right along
    /// arm -y and image down along arm -z.
    pub fn facing_wall(translation: Vector3<f64>) -> Self {
        #[rustfmt::skip]
        let rotation = Matrix3::new(
            0.0, 0.0, 1.0,
            -1.0, 0.0, 0.0,
            0.0, -1.0, 0.0,
        );
        Extrinsics { rotation, translation }
    }

    pub fn validate(&self) -> Result<()> {
        let r = &self.rotation;
        let orth = (r.transpose() * r - Matrix3::identity()).abs().max();
        let det = r.determinant();
        if !(orth <= 1e-9 && (det - 1.0).abs() <= 1e-9) || !self.translation.iter().all(|v| v.is_finite()) {
            return Err(Error::Config("extrinsic rotation must be orthonormal with det +1".into()));
        }
        Ok(())
    }

    /// Inverse map, arm frame to camera frame.
    pub fn arm_to_camera(&self, p: &ArmPoint) -> CameraPoint {
        let v = self.rotation.transpose() * (Vector3::new(p.x, p.y, p.z) - self.translation);
        CameraPoint::new(v.x, v.y, v.z)
    }
}

/// 5x5 depth readings around a detection, row-major, metres. Zero or
/// non-finite cells are invalid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DepthPatch {
    pub values: [f64; PATCH_LEN],
}

impl DepthPatch {
    pub fn new(values: [f64; PATCH_LEN]) -> Self {
        DepthPatch { values }
    }

    pub fn constant(z: f64) -> Self {
        DepthPatch { values: [z; PATCH_LEN] }
    }

    pub fn valid_values(&self) -> impl Iterator<Item = f64> + '_ {
        self.values.iter().copied().filter(|&v| is_valid_depth(v))
    }
}

pub fn is_valid_depth(v: f64) -> bool {
    v.is_finite() && v > 0.0 && v < MAX_VALID_DEPTH
}

/// Camera-frame point (m).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraPoint {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl CameraPoint {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        CameraPoint { x, y, z }
    }
}

/// Integer pixel in the depth image.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DepthPixel {
    pub u: u32,
    pub v: u32,
}

/// Maps an RGB pixel to the depth image with independent per-axis scaling.
pub fn map_rgb_to_depth_pixel(u: f64, v: f64, intr: &CameraIntrinsics) -> Result<DepthPixel> {
    let inside = u >= 0.0 && v >= 0.0 && u < intr.rgb_width as f64 && v < intr.rgb_height as f64;
    if !inside {
        return Err(Error::Boundary { u, v });
    }
    let (su, sv) = intr.rgb_to_depth_scale();
    let ud = (u * su).round().min((intr.depth_width - 1) as f64);
    let vd = (v * sv).round().min((intr.depth_height - 1) as f64);
    Ok(DepthPixel { u: ud as u32, v: vd as u32 })
}

/// Median of the valid patch cells; the mean of the two central values when
/// their count is even.
pub fn robust_depth(patch: &DepthPatch) -> Result<f64> {
    let mut vals: Vec<f64> = patch.valid_values().collect();
    if vals.is_empty() {
        return Err(Error::NoDepth);
    }
    vals.sort_by(f64::total_cmp);
    let n = vals.len();
    Ok(if n % 2 == 1 { vals[n / 2] } else { 0.5 * (vals[n / 2 - 1] + vals[n / 2]) })
}

/// Pinhole back-projection of depth pixel `(u, v)` at depth `z`.
pub fn back_project(u: f64, v: f64, z: f64, intr: &CameraIntrinsics) -> Result<CameraPoint> {
    if !(z > 0.0 && z.is_finite()) {
        return Err(Error::NoDepth);
    }
    Ok(CameraPoint::new((u - intr.cx) * z / intr.fx, (v - intr.cy) * z / intr.fy, z))
}

pub fn camera_to_arm(p: &CameraPoint, ext: &Extrinsics) -> ArmPoint {
    let v = ext.rotation * Vector3::new(p.x, p.y, p.z) + ext.translation;
    ArmPoint::new(v.x, v.y, v.z)
}
