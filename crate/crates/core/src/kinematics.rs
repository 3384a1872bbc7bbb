//! Kinematic model of the 5-DOF harvesting arm.
//!
//! The arm carries two prismatic joints (`d1` along the orchard aisle, `d2`
//! toward the fruit wall), a base yaw, a shoulder pitch, and a wrist roll.
//! The end-effector is held horizontal, so the pitch joint alone determines
//! the height of the tool and the horizontal stand-off from the carriage is
//! `rho = L1 * cos(pitch) + Le`.
//!
//! Two reachability tests live here:
//!
//! * [`is_reachable`] solves the problem in closed form (pitch from height,
//!   then a circle/rectangle intersection for the carriage position).
//! * [`is_reachable_bruteforce`] enumerates a joint grid and compares forward
//!   kinematics images against the target. It shares no code with the closed
//!   form beyond [`forward_kinematics`] and is used to cross-check it.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_2, PI};

use crate::error::{Error, Result};

/// Slack used when comparing solved joint values against their limits.
const LIMIT_EPS: f64 = 1e-10;

/// Closed interval `[min, max]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub min: f64,
    pub max: f64,
}

impl Interval {
    pub const fn new(min: f64, max: f64) -> Self {
        Interval { min, max }
    }

    pub fn contains(&self, v: f64) -> bool {
        v >= self.min && v <= self.max
    }

    fn contains_eps(&self, v: f64, eps: f64) -> bool {
        v >= self.min - eps && v <= self.max + eps
    }

    pub fn clamp(&self, v: f64) -> f64 {
        v.clamp(self.min, self.max)
    }

    pub fn width(&self) -> f64 {
        self.max - self.min
    }

    /// `steps` evenly spaced values covering both endpoints.
    pub fn grid(&self, steps: usize) -> Vec<f64> {
        match steps {
            0 => Vec::new(),
            1 => vec![0.5 * (self.min + self.max)],
            n => (0..n).map(|i| self.min + self.width() * i as f64 / (n - 1) as f64).collect(),
        }
    }

    fn is_valid(&self) -> bool {
        self.min.is_finite() && self.max.is_finite() && self.min <= self.max
    }
}

/// Geometry and joint limits of the manipulator. Lengths in metres, angles in
/// radians.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ManipulatorParams {
    /// Upper-link length `L1`.
    pub upper_link: f64,
    /// Horizontal end-effector offset `Le`.
    pub effector_offset: f64,
    /// Shoulder height `h0` above the arm-frame origin.
    pub shoulder_height: f64,
    /// Prismatic travel along the aisle (`d1`, arm-frame y).
    pub aisle_travel: Interval,
    /// Prismatic travel toward the fruit wall (`d2`, arm-frame x).
    pub approach_travel: Interval,
    pub yaw_limits: Interval,
    pub pitch_limits: Interval,
    /// Minimum horizontal distance between target and carriage column.
    pub collision_margin: f64,
}

impl Default for ManipulatorParams {
    fn default() -> Self {
        ManipulatorParams {
            upper_link: 0.7,
            effector_offset: 0.25,
            shoulder_height: 0.5,
            aisle_travel: Interval::new(-0.5, 0.5),
            approach_travel: Interval::new(0.0, 0.6),
            yaw_limits: Interval::new(-80f64.to_radians(), 80f64.to_radians()),
            pitch_limits: Interval::new(-45f64.to_radians(), 60f64.to_radians()),
            collision_margin: 0.15,
        }
    }
}

impl ManipulatorParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::Config(format!("manipulator: {what}")));
        if !(self.upper_link > 0.0 && self.upper_link.is_finite()) {
            return bad("L1 must be positive");
        }
        if !(self.effector_offset >= 0.0 && self.effector_offset.is_finite()) {
            return bad("Le must be non-negative");
        }
        if !self.shoulder_height.is_finite() {
            return bad("h0 must be finite");
        }
        if !(self.collision_margin >= 0.0 && self.collision_margin.is_finite()) {
            return bad("collision margin must be non-negative");
        }
        for (name, r) in [
            ("d1", self.aisle_travel),
            ("d2", self.approach_travel),
            ("theta1", self.yaw_limits),
            ("theta2", self.pitch_limits),
        ] {
            if !r.is_valid() {
                return bad(&format!("{name} range must satisfy min <= max"));
            }
        }
        if self.yaw_limits.min < -PI || self.yaw_limits.max > PI {
            return bad("theta1 range must lie within [-pi, pi]");
        }
        if self.pitch_limits.min <= -FRAC_PI_2 || self.pitch_limits.max >= FRAC_PI_2 {
            return bad("theta2 range must lie within (-pi/2, pi/2)");
        }
        Ok(())
    }

    /// Horizontal stand-off of the tool from the carriage at a given pitch.
    pub fn standoff(&self, pitch: f64) -> f64 {
        self.upper_link * pitch.cos() + self.effector_offset
    }

    /// Axis-aligned bounding box of the reachable envelope.
    ///
    /// Conservative: the yaw and pitch extremes are taken independently.
    pub fn envelope_bounds(&self) -> (ArmPoint, ArmPoint) {
        let pitch = self.pitch_limits;
        let mut rho_max = self.standoff(pitch.min).max(self.standoff(pitch.max));
        if pitch.contains(0.0) {
            rho_max = self.standoff(0.0);
        }
        let yaw = self.yaw_limits;
        let cos_max = if yaw.contains(0.0) { 1.0 } else { yaw.min.cos().max(yaw.max.cos()) };
        let cos_min = if yaw.contains(PI) || yaw.contains(-PI) { -1.0 } else { yaw.min.cos().min(yaw.max.cos()) };
        let sin_max = if yaw.contains(FRAC_PI_2) { 1.0 } else { yaw.min.sin().max(yaw.max.sin()) };
        let sin_min = if yaw.contains(-FRAC_PI_2) { -1.0 } else { yaw.min.sin().min(yaw.max.sin()) };
        let lo = ArmPoint::new(
            self.approach_travel.min + (rho_max * cos_min).min(0.0),
            self.aisle_travel.min + (rho_max * sin_min).min(0.0),
            self.shoulder_height + self.upper_link * pitch.min.sin(),
        );
        let hi = ArmPoint::new(
            self.approach_travel.max + (rho_max * cos_max).max(0.0),
            self.aisle_travel.max + (rho_max * sin_max).max(0.0),
            self.shoulder_height + self.upper_link * pitch.max.sin(),
        );
        (lo, hi)
    }
}

/// One joint-space pose.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct JointConfig {
    /// Aisle translation.
    pub d1: f64,
    /// Wall-approach translation.
    pub d2: f64,
    /// Base yaw.
    pub theta1: f64,
    /// Shoulder pitch.
    pub theta2: f64,
    /// Wrist roll; does not move the tool centre.
    pub theta3: f64,
}

impl JointConfig {
    pub fn new(d1: f64, d2: f64, theta1: f64, theta2: f64, theta3: f64) -> Self {
        JointConfig { d1, d2, theta1, theta2, theta3 }
    }

    /// Whether every position-relevant joint lies within its limits.
    pub fn within_limits(&self, params: &ManipulatorParams) -> bool {
        params.aisle_travel.contains(self.d1)
            && params.approach_travel.contains(self.d2)
            && params.yaw_limits.contains(self.theta1)
            && params.pitch_limits.contains(self.theta2)
    }
}

/// Point in the manipulator base frame (metres).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ArmPoint {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl ArmPoint {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        ArmPoint { x, y, z }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn distance(&self, other: &ArmPoint) -> f64 {
        let (dx, dy, dz) = (self.x - other.x, self.y - other.y, self.z - other.z);
        (dx * dx + dy * dy + dz * dz).sqrt()
    }

    pub fn norm(&self) -> f64 {
        self.distance(&ArmPoint::default())
    }
}

/// Tool-centre position for a joint configuration. Limits are not checked.
pub fn forward_kinematics(q: &JointConfig, params: &ManipulatorParams) -> ArmPoint {
    let rho = params.standoff(q.theta2);
    ArmPoint {
        x: q.d2 + rho * q.theta1.cos(),
        y: q.d1 + rho * q.theta1.sin(),
        z: params.shoulder_height + params.upper_link * q.theta2.sin(),
    }
}

/// Outcome of a reachability query.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Reachability {
    /// Reachable, with one feasible configuration.
    Reachable(JointConfig),
    Unreachable,
}

impl Reachability {
    pub fn is_reachable(&self) -> bool {
        matches!(self, Reachability::Reachable(_))
    }

    pub fn witness(&self) -> Option<&JointConfig> {
        match self {
            Reachability::Reachable(q) => Some(q),
            Reachability::Unreachable => None,
        }
    }
}

fn wrap_angle(a: f64) -> f64 {
    let mut a = a % (2.0 * PI);
    if a <= -PI {
        a += 2.0 * PI;
    } else if a > PI {
        a -= 2.0 * PI;
    }
    a
}

/// Closed-form feasibility test used as the labelling oracle.
///
/// The pitch is fixed by the target height; the carriage must then sit on a
/// circle of radius `rho` around the target's horizontal projection, inside the
/// prismatic travel rectangle, with the bearing from carriage to target inside
/// the yaw limits. Among feasible witnesses the one with the smallest `|theta1|`
/// is returned (ties: smaller `d1`, then smaller `d2`).
pub fn is_reachable(p: &ArmPoint, params: &ManipulatorParams) -> Reachability {
    if !p.is_finite() {
        return Reachability::Unreachable;
    }
    let s = (p.z - params.shoulder_height) / params.upper_link;
    if s.abs() > 1.0 {
        return Reachability::Unreachable;
    }
    let pitch = s.asin();
    if !params.pitch_limits.contains_eps(pitch, LIMIT_EPS) {
        return Reachability::Unreachable;
    }
    let pitch = params.pitch_limits.clamp(pitch);
    let rho = params.standoff(pitch);
    // The carriage-to-target horizontal distance equals rho for any solution.
    if rho < params.collision_margin {
        return Reachability::Unreachable;
    }

    let yaw = params.yaw_limits;
    let (d1r, d2r) = (params.aisle_travel, params.approach_travel);

    if rho == 0.0 {
        if !(d1r.contains(p.y) && d2r.contains(p.x)) {
            return Reachability::Unreachable;
        }
        return Reachability::Reachable(JointConfig::new(p.y, p.x, yaw.clamp(0.0), pitch, 0.0));
    }

    // Endpoints of every feasible arc are among the yaw limits and the angles
    // at which the circle crosses a rectangle edge.
    let mut candidates = vec![0.0, yaw.min, yaw.max];
    for edge in [d2r.min, d2r.max] {
        let c = (p.x - edge) / rho;
        if c.abs() <= 1.0 + 1e-12 {
            let a = c.clamp(-1.0, 1.0).acos();
            candidates.push(a);
            candidates.push(-a);
        }
    }
    for edge in [d1r.min, d1r.max] {
        let c = (p.y - edge) / rho;
        if c.abs() <= 1.0 + 1e-12 {
            let a = c.clamp(-1.0, 1.0).asin();
            candidates.push(a);
            candidates.push(wrap_angle(PI - a));
        }
    }

    let mut best: Option<JointConfig> = None;
    for theta in candidates {
        if !yaw.contains_eps(theta, LIMIT_EPS) {
            continue;
        }
        let theta = yaw.clamp(theta);
        let d2 = p.x - rho * theta.cos();
        let d1 = p.y - rho * theta.sin();
        if !(d1r.contains_eps(d1, LIMIT_EPS) && d2r.contains_eps(d2, LIMIT_EPS)) {
            continue;
        }
        let q = JointConfig::new(d1r.clamp(d1), d2r.clamp(d2), theta, pitch, 0.0);
        let better = match &best {
            None => true,
            Some(b) => {
                let key = (q.theta1.abs(), q.d1, q.d2);
                let cur = (b.theta1.abs(), b.d1, b.d2);
                key.partial_cmp(&cur) == Some(std::cmp::Ordering::Less)
            }
        };
        if better {
            best = Some(q);
        }
    }
    match best {
        Some(q) => Reachability::Reachable(q),
        None => Reachability::Unreachable,
    }
}

/// Resolution of the brute-force joint grid.
///
/// The revolute joints are enumerated on a grid. The prismatic joints enter
/// forward kinematics as a pure translation, so for every revolute grid cell
/// the closest carriage position is found exactly by clamping into the travel
/// rectangle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BruteForceGrid {
    pub yaw_steps: usize,
    pub pitch_steps: usize,
    /// Acceptance distance between an FK image and the target (m).
    pub tol: f64,
}

impl Default for BruteForceGrid {
    fn default() -> Self {
        BruteForceGrid { yaw_steps: 40, pitch_steps: 40, tol: 0.02 }
    }
}

impl BruteForceGrid {
    /// Grid fine enough that its discretisation error stays below `tol / 2`
    /// for the given arm.
    pub fn fine(params: &ManipulatorParams, tol: f64) -> Self {
        let rho_max = params.upper_link + params.effector_offset;
        let step_for = |width: f64, radius: f64| {
            let max_step = tol / (2.0 * radius.max(1e-9));
            ((width / max_step).ceil() as usize + 1).max(2)
        };
        BruteForceGrid {
            yaw_steps: step_for(params.yaw_limits.width(), rho_max),
            pitch_steps: step_for(params.pitch_limits.width(), params.upper_link),
            tol,
        }
    }
}

/// Precomputed brute-force oracle. Building it once amortises the trig tables
/// across many queries.
#[derive(Debug, Clone)]
pub struct BruteForceOracle {
    params: ManipulatorParams,
    tol: f64,
    yaw: Vec<(f64, f64)>,
    /// (height, stand-off) per pitch grid value.
    pitch: Vec<(f64, f64)>,
}

impl BruteForceOracle {
    pub fn new(params: &ManipulatorParams, grid: &BruteForceGrid) -> Result<Self> {
        if grid.yaw_steps == 0 || grid.pitch_steps == 0 {
            return Err(Error::Config("brute-force grid needs at least one step per joint".into()));
        }
        if grid.tol.is_nan() || grid.tol <= 0.0 {
            return Err(Error::Config("brute-force tolerance must be positive".into()));
        }
        let yaw = params.yaw_limits.grid(grid.yaw_steps).into_iter().map(|t| (t.cos(), t.sin())).collect();
        let pitch = params
            .pitch_limits
            .grid(grid.pitch_steps)
            .into_iter()
            .map(|t| (params.shoulder_height + params.upper_link * t.sin(), params.standoff(t)))
            .collect();
        Ok(BruteForceOracle { params: *params, tol: grid.tol, yaw, pitch })
    }

    /// Distance from `p` to the closest grid image that respects the collision
    /// constraint, or `None` when no grid cell qualifies within `tol`.
    pub fn nearest(&self, p: &ArmPoint) -> Option<f64> {
        if !p.is_finite() {
            return None;
        }
        let tol2 = self.tol * self.tol;
        let mut best: Option<f64> = None;
        for &(z, rho) in &self.pitch {
            let dz2 = (z - p.z) * (z - p.z);
            if dz2 > tol2 || rho < self.params.collision_margin {
                continue;
            }
            for &(c, s) in &self.yaw {
                let (ox, oy) = (rho * c, rho * s);
                let d2 = self.params.approach_travel.clamp(p.x - ox);
                let d1 = self.params.aisle_travel.clamp(p.y - oy);
                let (ex, ey) = (d2 + ox - p.x, d1 + oy - p.y);
                let dist2 = ex * ex + ey * ey + dz2;
                if dist2 <= tol2 && best.is_none_or(|b| dist2 < b) {
                    best = Some(dist2);
                }
            }
        }
        best.map(f64::sqrt)
    }

    pub fn is_reachable(&self, p: &ArmPoint) -> bool {
        self.nearest(p).is_some()
    }
}

/// Grid-search reachability decision, independent of the closed form.
pub fn is_reachable_bruteforce(p: &ArmPoint, params: &ManipulatorParams, grid: &BruteForceGrid) -> Result<bool> {
    Ok(BruteForceOracle::new(params, grid)?.is_reachable(p))
}

/// Voxel edge used to deduplicate envelope samples.
pub const ENVELOPE_VOXEL: f64 = 0.01;

/// Forward-kinematics images of the full joint grid (wrist roll excluded),
/// one representative per 1 cm voxel, in voxel order.
pub fn sample_envelope(params: &ManipulatorParams, steps_per_joint: usize) -> Result<Vec<ArmPoint>> {
    if steps_per_joint < 2 {
        return Err(Error::Config("envelope sampling needs at least 2 steps per joint".into()));
    }
    let d1s = params.aisle_travel.grid(steps_per_joint);
    let d2s = params.approach_travel.grid(steps_per_joint);
    let yaws = params.yaw_limits.grid(steps_per_joint);
    let pitches = params.pitch_limits.grid(steps_per_joint);
    let mut voxels: BTreeMap<(i64, i64, i64), ArmPoint> = BTreeMap::new();
    for &theta2 in &pitches {
        if params.standoff(theta2) < params.collision_margin {
            continue;
        }
        for &theta1 in &yaws {
            for &d1 in &d1s {
                for &d2 in &d2s {
                    let p = forward_kinematics(&JointConfig::new(d1, d2, theta1, theta2, 0.0), params);
                    let key = (
                        (p.x / ENVELOPE_VOXEL).floor() as i64,
                        (p.y / ENVELOPE_VOXEL).floor() as i64,
                        (p.z / ENVELOPE_VOXEL).floor() as i64,
                    );
                    voxels.entry(key).or_insert(p);
                }
            }
        }
    }
    Ok(voxels.into_values().collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> ManipulatorParams {
        ManipulatorParams::default()
    }

    fn close(a: &ArmPoint, b: &ArmPoint, tol: f64) -> bool {
        a.distance(b) <= tol
    }

    #[test]
    fn fk_zero_config() {
        let p = forward_kinematics(&JointConfig::default(), &params());
        assert!(close(&p, &ArmPoint::new(0.95, 0.0, 0.5), 1e-12));
    }

    #[test]
    fn fk_quarter_yaw() {
        for roll in [0.0, 1.0, -2.5] {
            let q = JointConfig::new(0.1, 0.2, FRAC_PI_2, 0.0, roll);
            let p = forward_kinematics(&q, &params());
            assert!(close(&p, &ArmPoint::new(0.2, 1.05, 0.5), 1e-12), "{p:?}");
        }
    }

    #[test]
    fn fk_max_pitch() {
        let q = JointConfig::new(0.0, 0.0, 0.0, 60f64.to_radians(), 0.0);
        let p = forward_kinematics(&q, &params());
        // 0.25 + 0.7 cos 60 = 0.60, 0.5 + 0.7 sin 60 = 1.106218...
        assert!((p.x - 0.60).abs() < 1e-12);
        assert!(p.y.abs() < 1e-12);
        assert!((p.z - 1.106_217_782_649_107).abs() < 1e-12);
        let oracle = BruteForceOracle::new(&params(), &BruteForceGrid::default()).unwrap();
        assert_eq!(oracle.nearest(&p), Some(0.0));
    }

    #[test]
    fn zero_config_image_is_reachable_with_zero_witness() {
        let r = is_reachable(&ArmPoint::new(0.95, 0.0, 0.5), &params());
        let q = r.witness().copied().expect("reachable");
        assert!(q.theta1.abs() < 1e-12 && q.theta2.abs() < 1e-12);
        assert!(q.d1.abs() < 1e-12 && q.d2.abs() < 1e-12);
    }

    #[test]
    fn carriage_column_is_unreachable() {
        assert_eq!(is_reachable(&ArmPoint::new(0.0, 0.0, 0.5), &params()), Reachability::Unreachable);
    }

    #[test]
    fn too_high_is_unreachable() {
        assert_eq!(is_reachable(&ArmPoint::new(0.6, 0.3, 2.0), &params()), Reachability::Unreachable);
    }

    #[test]
    fn non_finite_is_unreachable() {
        assert!(!is_reachable(&ArmPoint::new(f64::NAN, 0.0, 0.5), &params()).is_reachable());
    }

    #[test]
    fn collision_margin_rejects_short_standoff() {
        let mut p = params();
        p.collision_margin = 1.0;
        assert!(!is_reachable(&ArmPoint::new(0.95, 0.0, 0.5), &p).is_reachable());
    }

    #[test]
    fn tiny_standoff_yields_sound_witness() {
        let mut p = params();
        p.effector_offset = 0.0;
        p.collision_margin = 0.0;
        p.upper_link = 0.5;
        p.pitch_limits = Interval::new(-1.5, 1.5);
        let target = ArmPoint::new(0.3, 0.1, 0.5 + 0.5 * 1.5f64.sin());
        let q = *is_reachable(&target, &p).witness().expect("reachable");
        assert!(close(&forward_kinematics(&q, &p), &target, 1e-9));
    }

    #[test]
    fn witness_prefers_small_yaw_then_small_d1() {
        // Target straight ahead within the travel rectangle: yaw 0 must win.
        let r = is_reachable(&ArmPoint::new(1.2, 0.2, 0.5), &params());
        let q = r.witness().unwrap();
        assert!(q.theta1.abs() < 1e-12);
        assert!((q.d1 - 0.2).abs() < 1e-12 && (q.d2 - 0.25).abs() < 1e-12);
    }

    #[test]
    fn witness_beyond_aisle_travel_needs_yaw() {
        let target = ArmPoint::new(1.0, 0.9, 0.5);
        let q = *is_reachable(&target, &params()).witness().unwrap();
        assert!(q.theta1 > 0.0);
        assert!(q.within_limits(&params()));
        assert!(close(&forward_kinematics(&q, &params()), &target, 1e-9));
    }

    #[test]
    fn bruteforce_mid_range_and_far() {
        let pr = params();
        let mid = JointConfig::new(0.0, 0.3, 0.0, 7.5f64.to_radians(), 0.0);
        let p = forward_kinematics(&mid, &pr);
        assert!(is_reachable_bruteforce(&p, &pr, &BruteForceGrid::default()).unwrap());
        let far = ArmPoint::new(10.0, 10.0, 10.0);
        assert!(!is_reachable_bruteforce(&far, &pr, &BruteForceGrid::default()).unwrap());
    }

    #[test]
    fn bruteforce_rejects_bad_grid() {
        let g = BruteForceGrid { yaw_steps: 0, ..Default::default() };
        assert!(BruteForceOracle::new(&params(), &g).is_err());
        let g = BruteForceGrid { tol: 0.0, ..Default::default() };
        assert!(BruteForceOracle::new(&params(), &g).is_err());
    }

    #[test]
    fn envelope_corners() {
        let pts = sample_envelope(&params(), 2).unwrap();
        assert!(!pts.is_empty() && pts.len() <= 16);
        assert!(sample_envelope(&params(), 1).is_err());
    }

    #[test]
    fn envelope_height_within_pitch_image() {
        let pr = params();
        let pts = sample_envelope(&pr, 12).unwrap();
        let lo = pr.shoulder_height + pr.upper_link * pr.pitch_limits.min.sin();
        let hi = pr.shoulder_height + pr.upper_link * pr.pitch_limits.max.sin();
        for p in &pts {
            assert!(p.z >= lo - 1e-12 && p.z <= hi + 1e-12);
        }
    }

    #[test]
    fn envelope_points_pass_bruteforce() {
        let pr = params();
        let pts = sample_envelope(&pr, 10).unwrap();
        let diag = ENVELOPE_VOXEL * 3f64.sqrt();
        let grid = BruteForceGrid { yaw_steps: 10, pitch_steps: 10, tol: diag };
        let oracle = BruteForceOracle::new(&pr, &grid).unwrap();
        for p in &pts {
            assert!(oracle.is_reachable(p), "{p:?}");
            assert!(is_reachable(p, &pr).is_reachable(), "{p:?}");
        }
    }

    #[test]
    fn default_params_validate() {
        params().validate().unwrap();
        let mut p = params();
        p.pitch_limits = Interval::new(-2.0, 0.0);
        assert!(p.validate().is_err());
        let mut p = params();
        p.aisle_travel = Interval::new(1.0, 0.0);
        assert!(p.validate().is_err());
        let mut p = params();
        p.upper_link = 0.0;
        assert!(p.validate().is_err());
    }

    #[test]
    fn envelope_bounds_contain_samples() {
        let pr = params();
        let (lo, hi) = pr.envelope_bounds();
        for p in sample_envelope(&pr, 9).unwrap() {
            assert!(p.x >= lo.x - 1e-9 && p.x <= hi.x + 1e-9);
            assert!(p.y >= lo.y - 1e-9 && p.y <= hi.y + 1e-9);
            assert!(p.z >= lo.z - 1e-9 && p.z <= hi.z + 1e-9);
        }
    }
}
