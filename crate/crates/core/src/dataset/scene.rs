//! Synthetic orchard scenes standing in for detector output.
//!
//! Apples are placed on a jittered fruit wall in front of the camera, some in
//! tight clusters. Each apple is rendered into a small depth window (its own
//! disc, neighbouring discs, foliage behind) with sensor noise and per-cell
//! dropout, which yields the 5x5 patch and the wider density window of a
//! detection record.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson};

use crate::dataset::DetectionRecord;
use crate::error::{Error, Result};
use crate::features::Neighborhood;
use crate::perception::{CameraIntrinsics, CameraPoint, DepthPatch, PATCH_LEN, PATCH_SIDE};

/// Apple diameter (m).
pub const APPLE_DIAMETER: f64 = 0.08;

/// Detector confidence threshold; synthetic confidences lie above it.
pub const DETECTION_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SceneConfig {
    pub n_images: usize,
    /// Poisson mean of apples per image.
    pub apples_per_image: f64,
    /// Mean camera-to-wall depth (m).
    pub wall_distance: f64,
    pub wall_depth_jitter: f64,
    /// Std of the lateral placement on the wall (m).
    pub lateral_spread: f64,
    pub depth_noise_std: f64,
    /// Probability that a single depth cell reads invalid.
    pub dropout_prob: f64,
    /// Probability that an apple seeds a cluster of 2-4 apples.
    pub cluster_prob: f64,
    /// Probability that an apple (or cluster) sits on the far row across the
    /// aisle rather than on the near wall.
    pub background_prob: f64,
    /// Mean camera-to-far-row depth (m).
    pub background_distance: f64,
    pub seed: u64,
}

impl Default for SceneConfig {
    fn default() -> Self {
        SceneConfig {
            n_images: 800,
            apples_per_image: 8.0,
            wall_distance: 0.75,
            wall_depth_jitter: 0.15,
            lateral_spread: 0.35,
            depth_noise_std: 0.01,
            dropout_prob: 0.05,
            cluster_prob: 0.3,
            background_prob: 0.0,
            background_distance: 2.5,
            seed: 7,
        }
    }
}

impl SceneConfig {
    pub fn validate(&self) -> Result<()> {
        let prob = |p: f64| (0.0..=1.0).contains(&p);
        let ok = prob(self.dropout_prob)
            && prob(self.cluster_prob)
            && prob(self.background_prob)
            && self.background_distance > 0.0
            && self.wall_distance > 0.0
            && self.wall_depth_jitter >= 0.0
            && self.lateral_spread >= 0.0
            && self.depth_noise_std >= 0.0
            && self.apples_per_image >= 0.0
            && self.apples_per_image.is_finite();
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid scene configuration {self:?}")))
        }
    }
}

struct Apple {
    pos: CameraPoint,
    /// Sub-pixel centre in the depth image.
    px: (f64, f64),
    /// Radius in depth pixels.
    radius_px: f64,
}

/// Minimum distance in front of the camera at which apples are placed (m).
const MIN_DEPTH: f64 = 0.3;

fn draw_apple_position<R: Rng>(
    rng: &mut R,
    cfg: &SceneConfig,
    intr: &CameraIntrinsics,
    anchor: Option<&CameraPoint>,
) -> CameraPoint {
    // Far-row apples keep the same angular spread as the near wall.
    let far = anchor.is_none() && rng.random::<f64>() < cfg.background_prob;
    let (mean_depth, scale) = if far {
        (cfg.background_distance, cfg.background_distance / cfg.wall_distance)
    } else {
        (cfg.wall_distance, 1.0)
    };
    let lateral = Normal::new(0.0, (scale * cfg.lateral_spread).max(1e-12)).unwrap();
    let depth = Normal::new(0.0, cfg.wall_depth_jitter.max(1e-12)).unwrap();
    let near = Normal::new(0.0, 0.6 * APPLE_DIAMETER).unwrap();
    let in_frame = |p: &CameraPoint| {
        let (u, v) = intr.project(p);
        p.z > MIN_DEPTH && u >= 0.0 && v >= 0.0 && u < intr.depth_width as f64 && v < intr.depth_height as f64
    };
    let mut last = CameraPoint::new(0.0, 0.0, mean_depth.max(MIN_DEPTH + 0.01));
    for _ in 0..100 {
        let p = match anchor {
            Some(a) => CameraPoint::new(a.x + near.sample(rng), a.y + near.sample(rng), a.z + 0.25 * near.sample(rng)),
            None => CameraPoint::new(lateral.sample(rng), lateral.sample(rng), mean_depth + depth.sample(rng)),
        };
        if in_frame(&p) {
            return p;
        }
        last = p;
    }
    // Fall back to the principal ray at the drawn depth.
    CameraPoint::new(0.0, 0.0, last.z.max(MIN_DEPTH + 0.01))
}

fn render_window<R: Rng>(rng: &mut R, cfg: &SceneConfig, apples: &[Apple], me: usize, side: usize) -> Vec<f64> {
    let noise = Normal::new(0.0, cfg.depth_noise_std.max(1e-12)).unwrap();
    let half = (side / 2) as f64;
    let centre = (apples[me].px.0.round(), apples[me].px.1.round());
    let own_z = apples[me].pos.z;
    let mut cells = Vec::with_capacity(side * side);
    for row in 0..side {
        for col in 0..side {
            let (u, v) = (centre.0 + col as f64 - half, centre.1 + row as f64 - half);
            // Frontmost apple disc covering this pixel, else foliage behind.
            let mut z = f64::INFINITY;
            for a in apples {
                let (du, dv) = (u - a.px.0, v - a.px.1);
                if du * du + dv * dv <= a.radius_px * a.radius_px {
                    z = z.min(a.pos.z);
                }
            }
            if !z.is_finite() {
                z = own_z + rng.random_range(0.1..0.5);
            }
            z += noise.sample(rng);
            if rng.random::<f64>() < cfg.dropout_prob || z <= 0.0 {
                z = 0.0;
            }
            cells.push(z);
        }
    }
    cells
}

/// Generates detection records for `cfg.n_images` synthetic images.
///
/// `window` is the side of the density window stored with each record (at
/// least the patch side). Output is a pure function of the arguments.
pub fn generate_scene(cfg: &SceneConfig, intr: &CameraIntrinsics, window: usize) -> Result<Vec<DetectionRecord>> {
    cfg.validate()?;
    intr.validate()?;
    let window = window.max(PATCH_SIDE);
    if window.is_multiple_of(2) {
        return Err(Error::Config("density window side must be odd".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let poisson = (cfg.apples_per_image > 0.0).then(|| Poisson::new(cfg.apples_per_image).unwrap());
    let (su, sv) = intr.rgb_to_depth_scale();
    let mut records = Vec::new();

    for image in 0..cfg.n_images {
        let n = poisson.as_ref().map_or(0, |p| p.sample(&mut rng) as usize);
        let mut apples: Vec<Apple> = Vec::with_capacity(n);
        let mut cluster_left = 0usize;
        let mut anchor: Option<CameraPoint> = None;
        for _ in 0..n {
            if cluster_left == 0 {
                anchor = None;
                if rng.random::<f64>() < cfg.cluster_prob {
                    cluster_left = rng.random_range(2..=4);
                }
            }
            let pos = draw_apple_position(&mut rng, cfg, intr, anchor.as_ref());
            if cluster_left > 0 {
                cluster_left -= 1;
                anchor.get_or_insert(pos);
            }
            let px = intr.project(&pos);
            let radius_px = 0.5 * APPLE_DIAMETER * intr.fx / pos.z;
            apples.push(Apple { pos, px, radius_px });
        }

        let half = window / 2;
        let off = half - PATCH_SIDE / 2;
        for me in 0..apples.len() {
            let cells = render_window(&mut rng, cfg, &apples, me, window);
            let mut patch = [0.0; PATCH_LEN];
            for r in 0..PATCH_SIDE {
                for c in 0..PATCH_SIDE {
                    patch[r * PATCH_SIDE + c] = cells[(r + off) * window + c + off];
                }
            }
            let a = &apples[me];
            let mut scale = |s: f64| (s * rng.random_range(0.9..1.1)).max(1.0);
            let (w, h) = (scale(2.0 * a.radius_px / su), scale(2.0 * a.radius_px * intr.fy / intr.fx / sv));
            records.push(DetectionRecord {
                image_id: format!("img{image:05}"),
                u: a.px.0 / su,
                v: a.px.1 / sv,
                bbox_w: w,
                bbox_h: h,
                confidence: rng.random_range(DETECTION_THRESHOLD..1.0),
                patch: DepthPatch::new(patch),
                neighborhood: Some(Neighborhood::new(window, cells)),
            });
        }
    }
    Ok(records)
}
