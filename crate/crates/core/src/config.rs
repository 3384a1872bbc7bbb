//! Flat `key = value` experiment configuration.
//!
//! Lines are `section.key = value`; `#` starts a comment. Unknown keys,
//! repeated keys and unparsable values are errors. Angles are given in degrees,
//! `cam.R` as nine row-major numbers and `cam.t` as three.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::Path;

use nalgebra::{Matrix3, Vector3};

use crate::active::Strategy;
use crate::dataset::{Pipeline, SceneConfig};
use crate::error::{Error, Result};
use crate::features::FeatureConfig;
use crate::forest::TrainConfig;
use crate::kinematics::ManipulatorParams;
use crate::perception::{CameraIntrinsics, Extrinsics};

/// Active-learning settings shared by every grid cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AlSettings {
    pub batch_size: usize,
    pub committee_size: usize,
    pub committee_trees: usize,
    pub score_cap: Option<usize>,
}

impl Default for AlSettings {
    fn default() -> Self {
        AlSettings { batch_size: 50, committee_size: 5, committee_trees: 25, score_cap: None }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GridSettings {
    pub strategies: Vec<Strategy>,
    pub init_sizes: Vec<usize>,
    pub budgets: Vec<usize>,
    /// Number of seeds; cells use `seed_base .. seed_base + seeds`.
    pub seeds: u64,
    pub seed_base: u64,
}

impl Default for GridSettings {
    fn default() -> Self {
        GridSettings {
            strategies: Strategy::ALL.to_vec(),
            init_sizes: vec![10, 30, 50],
            budgets: vec![50, 100],
            seeds: 20,
            seed_base: 0,
        }
    }
}

/// Benchmark sizes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DataSettings {
    /// Labelled samples from which the test set and initial set are drawn.
    pub n_samples: usize,
    /// Additional unlabelled candidates appended to the pool.
    pub pool_size: usize,
    pub test_frac: f64,
}

impl Default for DataSettings {
    fn default() -> Self {
        DataSettings { n_samples: 1000, pool_size: 5000, test_frac: 0.2 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub arm: ManipulatorParams,
    pub intrinsics: CameraIntrinsics,
    pub extrinsics: Extrinsics,
    pub features: FeatureConfig,
    pub scene: SceneConfig,
    pub forest: TrainConfig,
    pub al: AlSettings,
    pub grid: GridSettings,
    pub data: DataSettings,
}

impl Default for Config {
    fn default() -> Self {
        let pipe = Pipeline::benchmark();
        Config {
            arm: pipe.arm,
            intrinsics: pipe.intrinsics,
            extrinsics: pipe.extrinsics,
            features: pipe.features,
            scene: SceneConfig::default(),
            forest: TrainConfig::default(),
            al: AlSettings::default(),
            grid: GridSettings::default(),
            data: DataSettings::default(),
        }
    }
}

fn bad(key: &str, value: &str) -> Error {
    Error::Config(format!("invalid value '{value}' for {key}"))
}

fn num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse().map_err(|_| bad(key, v))
}

fn float(key: &str, v: &str) -> Result<f64> {
    let x: f64 = num(key, v)?;
    if x.is_finite() {
        Ok(x)
    } else {
        Err(bad(key, v))
    }
}

fn list<T: std::str::FromStr>(key: &str, v: &str) -> Result<Vec<T>> {
    let items: Vec<T> = v
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|s| !s.is_empty())
        .map(|s| num(key, s))
        .collect::<Result<_>>()?;
    if items.is_empty() {
        return Err(bad(key, v));
    }
    Ok(items)
}

fn floats<const N: usize>(key: &str, v: &str) -> Result<[f64; N]> {
    let xs: Vec<f64> = list(key, v)?;
    if xs.iter().any(|x| !x.is_finite()) {
        return Err(bad(key, v));
    }
    xs.try_into().map_err(|_| Error::Config(format!("{key} needs {N} numbers")))
}

fn flag(key: &str, v: &str) -> Result<bool> {
    match v {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(bad(key, v)),
    }
}

fn optional(key: &str, v: &str, none: &str) -> Result<Option<usize>> {
    if v == none {
        Ok(None)
    } else {
        num(key, v).map(Some)
    }
}

impl Config {
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Config::default();
        let mut seen = BTreeSet::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected 'key = value'", lineno + 1)))?;
            let (key, value) = (key.trim(), value.trim());
            if !seen.insert(key.to_string()) {
                return Err(Error::Config(format!("line {}: duplicate key {key}", lineno + 1)));
            }
            cfg.set(key, value)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    /// Applies one `key = value` assignment.
    pub fn set(&mut self, key: &str, v: &str) -> Result<()> {
        let a = &mut self.arm;
        let deg = |x: f64| x.to_radians();
        match key {
            "arm.L1" => a.upper_link = float(key, v)?,
            "arm.Le" => a.effector_offset = float(key, v)?,
            "arm.h0" => a.shoulder_height = float(key, v)?,
            "arm.d1_min" => a.aisle_travel.min = float(key, v)?,
            "arm.d1_max" => a.aisle_travel.max = float(key, v)?,
            "arm.d2_min" => a.approach_travel.min = float(key, v)?,
            "arm.d2_max" => a.approach_travel.max = float(key, v)?,
            "arm.theta1_min" => a.yaw_limits.min = deg(float(key, v)?),
            "arm.theta1_max" => a.yaw_limits.max = deg(float(key, v)?),
            "arm.theta2_min" => a.pitch_limits.min = deg(float(key, v)?),
            "arm.theta2_max" => a.pitch_limits.max = deg(float(key, v)?),
            "arm.collision_margin" => a.collision_margin = float(key, v)?,

            "cam.fx" => self.intrinsics.fx = float(key, v)?,
            "cam.fy" => self.intrinsics.fy = float(key, v)?,
            "cam.cx" => self.intrinsics.cx = float(key, v)?,
            "cam.cy" => self.intrinsics.cy = float(key, v)?,
            "cam.rgb_width" => self.intrinsics.rgb_width = num(key, v)?,
            "cam.rgb_height" => self.intrinsics.rgb_height = num(key, v)?,
            "cam.depth_width" => self.intrinsics.depth_width = num(key, v)?,
            "cam.depth_height" => self.intrinsics.depth_height = num(key, v)?,
            "cam.R" => self.extrinsics.rotation = Matrix3::from_row_slice(&floats::<9>(key, v)?),
            "cam.t" => self.extrinsics.translation = Vector3::from(floats::<3>(key, v)?),

            "features.window" => self.features.window = num(key, v)?,
            "features.band" => self.features.band = float(key, v)?,

            "scene.n_images" => self.scene.n_images = num(key, v)?,
            "scene.apples_per_image" => self.scene.apples_per_image = float(key, v)?,
            "scene.wall_distance" => self.scene.wall_distance = float(key, v)?,
            "scene.wall_depth_jitter" => self.scene.wall_depth_jitter = float(key, v)?,
            "scene.lateral_spread" => self.scene.lateral_spread = float(key, v)?,
            "scene.depth_noise_std" => self.scene.depth_noise_std = float(key, v)?,
            "scene.dropout_prob" => self.scene.dropout_prob = float(key, v)?,
            "scene.cluster_prob" => self.scene.cluster_prob = float(key, v)?,
            "scene.background_prob" => self.scene.background_prob = float(key, v)?,
            "scene.background_distance" => self.scene.background_distance = float(key, v)?,
            "scene.seed" => self.scene.seed = num(key, v)?,

            "forest.n_trees" => self.forest.n_trees = num(key, v)?,
            "forest.max_depth" => self.forest.max_depth = optional(key, v, "none")?,
            "forest.min_samples_leaf" => self.forest.min_samples_leaf = num(key, v)?,
            "forest.features_per_split" => self.forest.features_per_split = num(key, v)?,
            "forest.bootstrap" => self.forest.bootstrap = flag(key, v)?,

            "al.batch_size" => self.al.batch_size = num(key, v)?,
            "al.committee_size" => self.al.committee_size = num(key, v)?,
            "al.committee_trees" => self.al.committee_trees = num(key, v)?,
            "al.score_cap" => self.al.score_cap = optional(key, v, "all")?,

            "grid.strategies" => {
                self.grid.strategies = v
                    .split(|c: char| c == ',' || c.is_whitespace())
                    .filter(|s| !s.is_empty())
                    .map(str::parse)
                    .collect::<Result<_>>()?
            }
            "grid.init_sizes" => self.grid.init_sizes = list(key, v)?,
            "grid.budgets" => self.grid.budgets = list(key, v)?,
            "grid.seeds" => self.grid.seeds = num(key, v)?,
            "grid.seed_base" => self.grid.seed_base = num(key, v)?,

            "data.n_samples" => self.data.n_samples = num(key, v)?,
            "data.pool_size" => self.data.pool_size = num(key, v)?,
            "data.test_frac" => self.data.test_frac = float(key, v)?,

            _ => return Err(Error::Config(format!("unknown key '{key}'"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.arm.validate()?;
        self.intrinsics.validate()?;
        self.extrinsics.validate()?;
        self.scene.validate()?;
        self.forest.validate()?;
        if self.features.window < 1
            || self.features.window.is_multiple_of(2)
            || self.features.band.is_nan()
            || self.features.band < 0.0
        {
            return Err(Error::Config("features.window must be odd and features.band non-negative".into()));
        }
        let g = &self.grid;
        if g.strategies.is_empty() || g.init_sizes.is_empty() || g.budgets.is_empty() || g.seeds == 0 {
            return Err(Error::Config("grid lists must be nonempty and grid.seeds positive".into()));
        }
        if self.al.batch_size == 0 || self.al.committee_size < 2 || self.al.committee_trees == 0 {
            return Err(Error::Config("al.batch_size >= 1, al.committee_size >= 2, al.committee_trees >= 1".into()));
        }
        if self.al.score_cap == Some(0) {
            return Err(Error::Config("al.score_cap must be positive".into()));
        }
        if !(self.data.test_frac > 0.0 && self.data.test_frac < 1.0) || self.data.n_samples == 0 {
            return Err(Error::Config("data.test_frac must lie in (0, 1) and data.n_samples be positive".into()));
        }
        Ok(())
    }

    pub fn pipeline(&self) -> Pipeline {
        Pipeline { intrinsics: self.intrinsics, extrinsics: self.extrinsics, arm: self.arm, features: self.features }
    }

    pub fn seeds(&self) -> impl Iterator<Item = u64> + '_ {
        self.grid.seed_base..self.grid.seed_base + self.grid.seeds
    }

    /// Text form that `parse` maps back to an equal configuration.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let mut put = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        let a = &self.arm;
        put("arm.L1", a.upper_link.to_string());
        put("arm.Le", a.effector_offset.to_string());
        put("arm.h0", a.shoulder_height.to_string());
        put("arm.d1_min", a.aisle_travel.min.to_string());
        put("arm.d1_max", a.aisle_travel.max.to_string());
        put("arm.d2_min", a.approach_travel.min.to_string());
        put("arm.d2_max", a.approach_travel.max.to_string());
        put("arm.theta1_min", a.yaw_limits.min.to_degrees().to_string());
        put("arm.theta1_max", a.yaw_limits.max.to_degrees().to_string());
        put("arm.theta2_min", a.pitch_limits.min.to_degrees().to_string());
        put("arm.theta2_max", a.pitch_limits.max.to_degrees().to_string());
        put("arm.collision_margin", a.collision_margin.to_string());
        let c = &self.intrinsics;
        put("cam.fx", c.fx.to_string());
        put("cam.fy", c.fy.to_string());
        put("cam.cx", c.cx.to_string());
        put("cam.cy", c.cy.to_string());
        put("cam.rgb_width", c.rgb_width.to_string());
        put("cam.rgb_height", c.rgb_height.to_string());
        put("cam.depth_width", c.depth_width.to_string());
        put("cam.depth_height", c.depth_height.to_string());
        let r = &self.extrinsics.rotation;
        let rows: Vec<String> = (0..3).flat_map(|i| (0..3).map(move |j| r[(i, j)].to_string())).collect();
        put("cam.R", rows.join(" "));
        put("cam.t", self.extrinsics.translation.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" "));
        put("features.window", self.features.window.to_string());
        put("features.band", self.features.band.to_string());
        let sc = &self.scene;
        put("scene.n_images", sc.n_images.to_string());
        put("scene.apples_per_image", sc.apples_per_image.to_string());
        put("scene.wall_distance", sc.wall_distance.to_string());
        put("scene.wall_depth_jitter", sc.wall_depth_jitter.to_string());
        put("scene.lateral_spread", sc.lateral_spread.to_string());
        put("scene.depth_noise_std", sc.depth_noise_std.to_string());
        put("scene.dropout_prob", sc.dropout_prob.to_string());
        put("scene.cluster_prob", sc.cluster_prob.to_string());
        put("scene.background_prob", sc.background_prob.to_string());
        put("scene.background_distance", sc.background_distance.to_string());
        put("scene.seed", sc.seed.to_string());
        let f = &self.forest;
        put("forest.n_trees", f.n_trees.to_string());
        put("forest.max_depth", f.max_depth.map_or("none".into(), |d| d.to_string()));
        put("forest.min_samples_leaf", f.min_samples_leaf.to_string());
        put("forest.features_per_split", f.features_per_split.to_string());
        put("forest.bootstrap", f.bootstrap.to_string());
        put("al.batch_size", self.al.batch_size.to_string());
        put("al.committee_size", self.al.committee_size.to_string());
        put("al.committee_trees", self.al.committee_trees.to_string());
        put("al.score_cap", self.al.score_cap.map_or("all".into(), |d| d.to_string()));
        let g = &self.grid;
        put("grid.strategies", g.strategies.iter().map(|s| s.name()).collect::<Vec<_>>().join(","));
        put("grid.init_sizes", g.init_sizes.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(","));
        put("grid.budgets", g.budgets.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(","));
        put("grid.seeds", g.seeds.to_string());
        put("grid.seed_base", g.seed_base.to_string());
        put("data.n_samples", self.data.n_samples.to_string());
        put("data.pool_size", self.data.pool_size.to_string());
        put("data.test_frac", self.data.test_frac.to_string());
        s
    }
}
