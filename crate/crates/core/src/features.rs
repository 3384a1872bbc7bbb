//! Nine-dimensional feature vector fed to the reachability classifier.

use crate::error::Result;
use crate::kinematics::ArmPoint;
use crate::perception::{is_valid_depth, robust_depth, DepthPatch};

pub const FEATURE_DIM: usize = 9;

pub const FEATURE_NAMES: [&str; FEATURE_DIM] = ["x", "y", "z", "range", "az", "el", "sigma_z", "a_bbox", "d_local"];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeatureVector {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    /// Euclidean distance from the arm origin.
    pub range: f64,
    /// Bearing from the arm x-axis, in (-pi, pi].
    pub azimuth: f64,
    pub elevation: f64,
    /// Population variance of the valid patch cells (m^2).
    pub depth_var: f64,
    /// Bounding-box area over RGB image area.
    pub bbox_area: f64,
    /// Fraction of neighbourhood cells at the detection's depth.
    pub local_density: f64,
}

impl FeatureVector {
    pub fn to_array(&self) -> [f64; FEATURE_DIM] {
        [
            self.x,
            self.y,
            self.z,
            self.range,
            self.azimuth,
            self.elevation,
            self.depth_var,
            self.bbox_area,
            self.local_density,
        ]
    }

    pub fn from_array(a: [f64; FEATURE_DIM]) -> Self {
        FeatureVector {
            x: a[0],
            y: a[1],
            z: a[2],
            range: a[3],
            azimuth: a[4],
            elevation: a[5],
            depth_var: a[6],
            bbox_area: a[7],
            local_density: a[8],
        }
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|v| v.is_finite())
    }
}

/// Square window of depth readings centred on a detection, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Neighborhood {
    pub side: usize,
    pub values: Vec<f64>,
}

impl Neighborhood {
    pub fn new(side: usize, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), side * side, "neighbourhood must be side x side");
        Neighborhood { side, values }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Parameters of the local density descriptor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeatureConfig {
    /// Side of the square window materialised around each detection.
    pub window: usize,
    /// Half-width of the depth band counted as "same surface" (m).
    pub band: f64,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        FeatureConfig { window: 11, band: 0.05 }
    }
}

/// Builds the feature vector for one detection.
///
/// `image_dims` is the RGB resolution. Without a neighbourhood window the
/// density is computed over the 5x5 patch itself.
pub fn extract_features(
    p: &ArmPoint,
    patch: &DepthPatch,
    bbox: (f64, f64),
    image_dims: (u32, u32),
    neighborhood: Option<&Neighborhood>,
    cfg: &FeatureConfig,
) -> Result<FeatureVector> {
    let median = robust_depth(patch)?;
    let horizontal = p.x.hypot(p.y);

    let valid: Vec<f64> = patch.valid_values().collect();
    let n = valid.len() as f64;
    let mean = valid.iter().sum::<f64>() / n;
    let depth_var = valid.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;

    let area = (bbox.0 * bbox.1) / (image_dims.0 as f64 * image_dims.1 as f64);

    let within = |v: &f64| is_valid_depth(*v) && (v - median).abs() <= cfg.band;
    let local_density = match neighborhood {
        Some(w) if !w.is_empty() => w.values.iter().filter(|v| within(v)).count() as f64 / w.len() as f64,
        _ => patch.values.iter().filter(|v| within(v)).count() as f64 / patch.values.len() as f64,
    };

    Ok(FeatureVector {
        x: p.x,
        y: p.y,
        z: p.z,
        range: p.norm(),
        azimuth: p.y.atan2(p.x),
        elevation: p.z.atan2(horizontal),
        depth_var,
        bbox_area: area.clamp(0.0, 1.0),
        local_density,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::perception::PATCH_LEN;

    fn dims() -> (u32, u32) {
        (1920, 1080)
    }

    #[test]
    fn on_axis_point() {
        let f = extract_features(
            &ArmPoint::new(1.0, 0.0, 0.0),
            &DepthPatch::constant(1.5),
            (10.0, 10.0),
            dims(),
            None,
            &FeatureConfig::default(),
        )
        .unwrap();
        assert_eq!((f.range, f.azimuth, f.elevation), (1.0, 0.0, 0.0));
    }

    #[test]
    fn uniform_scene() {
        let window = Neighborhood::new(11, vec![1.5; 121]);
        let f = extract_features(
            &ArmPoint::new(1.0, 0.2, 0.3),
            &DepthPatch::constant(1.5),
            (10.0, 10.0),
            dims(),
            Some(&window),
            &FeatureConfig::default(),
        )
        .unwrap();
        assert_eq!(f.depth_var, 0.0);
        assert_eq!(f.local_density, 1.0);
    }

    #[test]
    fn hand_computed_vector() {
        let mut vals = [1.0; PATCH_LEN];
        vals[13..].fill(2.0);
        let f = extract_features(
            &ArmPoint::new(0.3, 0.4, 0.0),
            &DepthPatch::new(vals),
            (40.0, 40.0),
            dims(),
            None,
            &FeatureConfig::default(),
        )
        .unwrap();
        assert!((f.range - 0.5).abs() < 1e-12);
        assert!((f.azimuth - 0.927_295_218_001_612_2).abs() < 1e-12);
        assert_eq!(f.elevation, 0.0);
        // mean 1.48; (13 * 0.48^2 + 12 * 0.52^2) / 25
        assert!((f.depth_var - 0.2496).abs() < 1e-12);
        assert!((f.bbox_area - 1600.0 / 2_073_600.0).abs() < 1e-15);
        // median 1.0, 13 of 25 cells within 5 cm
        assert!((f.local_density - 13.0 / 25.0).abs() < 1e-15);
    }

    #[test]
    fn single_valid_cell_has_zero_variance() {
        let mut vals = [0.0; PATCH_LEN];
        vals[12] = 1.1;
        let f = extract_features(
            &ArmPoint::new(1.0, 0.0, 0.5),
            &DepthPatch::new(vals),
            (5.0, 5.0),
            dims(),
            None,
            &FeatureConfig::default(),
        )
        .unwrap();
        assert_eq!(f.depth_var, 0.0);
        assert!(f.is_finite());
    }

    #[test]
    fn invalid_patch_is_rejected() {
        let r = extract_features(
            &ArmPoint::new(1.0, 0.0, 0.5),
            &DepthPatch::constant(0.0),
            (5.0, 5.0),
            dims(),
            None,
            &FeatureConfig::default(),
        );
        assert!(r.is_err());
    }

    #[test]
    fn array_round_trip() {
        let a = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0];
        assert_eq!(FeatureVector::from_array(a).to_array(), a);
    }
}
