//! Candidate pools: detection records, oracle labelling and train/test/pool
//! splits.

pub mod io;
pub mod scene;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::features::{extract_features, FeatureConfig, FeatureVector, Neighborhood};
use crate::kinematics::{is_reachable, ArmPoint, ManipulatorParams};
use crate::perception::{
    back_project, camera_to_arm, map_rgb_to_depth_pixel, robust_depth, CameraIntrinsics, DepthPatch, Extrinsics,
    PATCH_SIDE,
};
use crate::Label;

pub use io::{ingest_detections, read_labeled, write_detections, write_labeled, Ingested};
pub use scene::{generate_scene, SceneConfig};

/// One detected fruit.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectionRecord {
    pub image_id: String,
    /// Bounding-box centre in RGB pixels.
    pub u: f64,
    pub v: f64,
    pub bbox_w: f64,
    pub bbox_h: f64,
    pub confidence: f64,
    pub patch: DepthPatch,
    /// Wider depth window, when the source provides one.
    pub neighborhood: Option<Neighborhood>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LabeledSample {
    /// Position of the originating record in the labelled batch.
    pub id: usize,
    pub features: FeatureVector,
    pub label: Label,
    pub arm_point: ArmPoint,
}

/// Everything needed to turn a detection into an arm-frame point.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Pipeline {
    pub intrinsics: CameraIntrinsics,
    pub extrinsics: Extrinsics,
    pub arm: ManipulatorParams,
    pub features: FeatureConfig,
}

/// Why a record did not make it to a labelled sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DropReason {
    Boundary,
    NoDepth,
}

/// Camera position of the synthetic benchmark in the arm frame (m).
pub const BENCHMARK_TRANSLATION: [f64; 3] = [0.76, 0.44, 0.485];

impl Pipeline {
    /// Default arm and intrinsics with the camera looking along arm +x at the
    /// fruit wall.
    pub fn benchmark() -> Self {
        Pipeline { extrinsics: Extrinsics::facing_wall(BENCHMARK_TRANSLATION.into()), ..Default::default() }
    }

    /// Arm-frame point and feature vector for one record.
    pub fn localize(&self, r: &DetectionRecord) -> std::result::Result<(ArmPoint, FeatureVector), DropReason> {
        let intr = &self.intrinsics;
        let px = map_rgb_to_depth_pixel(r.u, r.v, intr).map_err(|_| DropReason::Boundary)?;
        // The 5x5 patch must fit inside the depth image.
        let margin = (PATCH_SIDE / 2) as u32;
        if px.u < margin || px.v < margin || px.u + margin >= intr.depth_width || px.v + margin >= intr.depth_height {
            return Err(DropReason::Boundary);
        }
        let z = robust_depth(&r.patch).map_err(|_| DropReason::NoDepth)?;
        let pc = back_project(px.u as f64, px.v as f64, z, intr).map_err(|_| DropReason::NoDepth)?;
        let p = camera_to_arm(&pc, &self.extrinsics);
        let f = extract_features(
            &p,
            &r.patch,
            (r.bbox_w, r.bbox_h),
            (intr.rgb_width, intr.rgb_height),
            r.neighborhood.as_ref(),
            &self.features,
        )
        .map_err(|_| DropReason::NoDepth)?;
        Ok((p, f))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabelingOutcome {
    pub samples: Vec<LabeledSample>,
    pub dropped_boundary: usize,
    pub dropped_depth: usize,
}

impl LabelingOutcome {
    pub fn dropped(&self) -> usize {
        self.dropped_boundary + self.dropped_depth
    }
}

/// Runs every record through the perception pipeline and labels the result
/// with the closed-form reachability test. Sample ids are record positions.
pub fn label_with_oracle(records: &[DetectionRecord], pipeline: &Pipeline) -> LabelingOutcome {
    let results: Vec<_> = records.par_iter().map(|r| pipeline.localize(r)).collect();
    let mut out = LabelingOutcome { samples: Vec::new(), dropped_boundary: 0, dropped_depth: 0 };
    for (id, res) in results.into_iter().enumerate() {
        match res {
            Ok((arm_point, features)) => out.samples.push(LabeledSample {
                id,
                features,
                label: Label::from_bool(is_reachable(&arm_point, &pipeline.arm).is_reachable()),
                arm_point,
            }),
            Err(DropReason::Boundary) => out.dropped_boundary += 1,
            Err(DropReason::NoDepth) => out.dropped_depth += 1,
        }
    }
    out
}

/// Unlabelled pool whose labels stay hidden until queried.
#[derive(Debug, Clone, PartialEq)]
pub struct UnlabeledPool {
    items: Vec<LabeledSample>,
}

impl UnlabeledPool {
    pub fn new(items: Vec<LabeledSample>) -> Self {
        UnlabeledPool { items }
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn features(&self, i: usize) -> &FeatureVector {
        &self.items[i].features
    }

    pub fn all_features(&self) -> Vec<FeatureVector> {
        self.items.iter().map(|s| s.features).collect()
    }

    pub fn id(&self, i: usize) -> usize {
        self.items[i].id
    }

    pub fn ids(&self) -> impl Iterator<Item = usize> + '_ {
        self.items.iter().map(|s| s.id)
    }

    /// Removes the instances at `indices` and returns them with their labels
    /// revealed by `oracle`.
    pub fn take(&mut self, indices: &[usize], oracle: &dyn Fn(&LabeledSample) -> Label) -> Vec<LabeledSample> {
        let mut sorted = indices.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        let taken: Vec<LabeledSample> = indices
            .iter()
            .map(|&i| {
                let mut s = self.items[i];
                s.label = oracle(&s);
                s
            })
            .collect();
        for &i in sorted.iter().rev() {
            self.items.remove(i);
        }
        taken
    }
}

/// Label source that reveals the precomputed feasibility label.
pub fn feasibility_oracle(s: &LabeledSample) -> Label {
    s.label
}

#[derive(Debug, Clone, PartialEq)]
pub struct PoolSplit {
    pub labeled: Vec<LabeledSample>,
    pub unlabeled: UnlabeledPool,
    pub test: Vec<LabeledSample>,
}

/// Seeded split into held-out test set, initial labelled set and pool.
///
/// `test_frac` of `samples` is held out; `init_size` of the remainder seeds
/// the labelled set (one per class first, when both are present); the rest of
/// `samples` followed by `candidates` form the unlabelled pool.
pub fn make_splits(
    samples: &[LabeledSample],
    candidates: &[LabeledSample],
    test_frac: f64,
    init_size: usize,
    seed: u64,
) -> Result<PoolSplit> {
    if !(test_frac > 0.0 && test_frac < 1.0) {
        return Err(Error::Config(format!("test fraction {test_frac} must lie in (0, 1)")));
    }
    let n_test = (test_frac * samples.len() as f64).round() as usize;
    let available = samples.len() - n_test;
    if init_size > available {
        return Err(Error::Config(format!(
            "initial labelled size {init_size} exceeds the {available} non-test samples"
        )));
    }
    let mut order: Vec<usize> = (0..samples.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1);
    order.shuffle(&mut rng);

    let test: Vec<LabeledSample> = order[..n_test].iter().map(|&i| samples[i]).collect();
    let rest = &order[n_test..];

    let mut chosen: Vec<usize> = Vec::with_capacity(init_size);
    if init_size >= 2 {
        for class in [Label::Unreachable, Label::Reachable] {
            if let Some(pos) = rest.iter().position(|&i| samples[i].label == class) {
                chosen.push(pos);
            }
        }
    }
    for pos in 0..rest.len() {
        if chosen.len() >= init_size {
            break;
        }
        if !chosen.contains(&pos) {
            chosen.push(pos);
        }
    }
    chosen.sort_unstable();
    let labeled: Vec<LabeledSample> = chosen.iter().map(|&p| samples[rest[p]]).collect();
    let mut pool: Vec<LabeledSample> =
        (0..rest.len()).filter(|p| chosen.binary_search(p).is_err()).map(|p| samples[rest[p]]).collect();
    pool.extend_from_slice(candidates);
    Ok(PoolSplit { labeled, unlabeled: UnlabeledPool::new(pool), test })
}

/// Labelled samples plus hidden-label candidates drawn from one batch.
#[derive(Debug, Clone, PartialEq)]
pub struct Benchmark {
    pub samples: Vec<LabeledSample>,
    pub candidates: Vec<LabeledSample>,
    pub dropped: usize,
}

impl Benchmark {
    /// The first `n_samples` retained detections become the labelled set and
    /// the next `pool_size` the candidate pool.
    pub fn from_records(records: &[DetectionRecord], pipeline: &Pipeline, n_samples: usize, pool_size: usize) -> Self {
        let outcome = label_with_oracle(records, pipeline);
        let dropped = outcome.dropped();
        Benchmark { dropped, ..Self::from_samples(outcome.samples, n_samples, pool_size) }
    }

    /// Same split over already-labelled samples, e.g. a labelled cache.
    pub fn from_samples(mut all: Vec<LabeledSample>, n_samples: usize, pool_size: usize) -> Self {
        let candidates = if all.len() > n_samples {
            let mut rest = all.split_off(n_samples);
            rest.truncate(pool_size);
            rest
        } else {
            Vec::new()
        };
        Benchmark { samples: all, candidates, dropped: 0 }
    }

    pub fn synthetic(scene: &SceneConfig, pipeline: &Pipeline, n_samples: usize, pool_size: usize) -> Result<Self> {
        let records = generate_scene(scene, &pipeline.intrinsics, pipeline.features.window)?;
        Ok(Self::from_records(&records, pipeline, n_samples, pool_size))
    }

    pub fn reachable_fraction(&self) -> f64 {
        let all = self.samples.iter().chain(&self.candidates);
        let n = self.samples.len() + self.candidates.len();
        all.filter(|s| s.label == Label::Reachable).count() as f64 / n.max(1) as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kinematics::{forward_kinematics, JointConfig};
    use crate::perception::{CameraPoint, PATCH_LEN};
    use std::collections::BTreeSet;

    fn sample(id: usize, label: Label) -> LabeledSample {
        let p = ArmPoint::new(id as f64, 0.0, 0.0);
        LabeledSample { id, features: FeatureVector::from_array([id as f64; 9]), label, arm_point: p }
    }

    fn samples(n: usize) -> Vec<LabeledSample> {
        (0..n).map(|i| sample(i, Label::from_bool(i % 3 == 0))).collect()
    }

    /// Detection whose arm point under `pipe` is `target` (up to pixel rounding).
    fn record_for(target: &ArmPoint, pipe: &Pipeline) -> DetectionRecord {
        let intr = &pipe.intrinsics;
        let pc = pipe.extrinsics.arm_to_camera(target);
        let (ud, vd) = intr.project(&pc);
        let (su, sv) = intr.rgb_to_depth_scale();
        DetectionRecord {
            image_id: "t".into(),
            u: ud / su,
            v: vd / sv,
            bbox_w: 30.0,
            bbox_h: 30.0,
            confidence: 0.9,
            patch: DepthPatch::constant(pc.z),
            neighborhood: None,
        }
    }

    fn wall_pipeline() -> Pipeline {
        Pipeline { extrinsics: Extrinsics::facing_wall(Extrinsics::default().translation), ..Default::default() }
    }

    #[test]
    fn known_reachable_point_is_labelled_reachable() {
        let pipe = wall_pipeline();
        // Lands on an integer depth pixel so no rounding moves it.
        let pc = CameraPoint::new(0.0, 0.0, 0.45);
        let p = camera_to_arm(&pc, &pipe.extrinsics);
        let out = label_with_oracle(&[record_for(&p, &pipe)], &pipe);
        assert_eq!(out.samples.len(), 1);
        assert_eq!(out.samples[0].label, Label::Reachable);
        assert!(out.samples[0].arm_point.distance(&p) < 1e-9);

        let home = forward_kinematics(&JointConfig::default(), &pipe.arm);
        assert_eq!(home, ArmPoint::new(0.95, 0.0, 0.5));
        assert!(is_reachable(&home, &pipe.arm).is_reachable());
    }

    #[test]
    fn invalid_patch_is_dropped() {
        let pipe = wall_pipeline();
        let mut r = record_for(&ArmPoint::new(1.4, 0.3, 0.5), &pipe);
        r.patch = DepthPatch::new([0.0; PATCH_LEN]);
        let out = label_with_oracle(&[r], &pipe);
        assert!(out.samples.is_empty());
        assert_eq!(out.dropped_depth, 1);
    }

    #[test]
    fn border_detection_is_dropped() {
        let pipe = wall_pipeline();
        let mut r = record_for(&ArmPoint::new(1.4, 0.3, 0.5), &pipe);
        r.u = 1.0;
        let out = label_with_oracle(&[r.clone()], &pipe);
        assert_eq!(out.dropped_boundary, 1);
        r.u = 5000.0;
        assert_eq!(label_with_oracle(&[r], &pipe).dropped_boundary, 1);
    }

    #[test]
    fn split_sizes() {
        let s = samples(1000);
        let split = make_splits(&s, &[], 0.2, 10, 1).unwrap();
        assert_eq!(split.test.len(), 200);
        assert_eq!(split.labeled.len(), 10);
        assert_eq!(split.unlabeled.len(), 790);
    }

    #[test]
    fn split_is_stratified() {
        let mut s: Vec<_> = (0..100).map(|i| sample(i, Label::Unreachable)).collect();
        s[57].label = Label::Reachable;
        for seed in 0..20 {
            let split = make_splits(&s, &[], 0.2, 2, seed).unwrap();
            let test_has = split.test.iter().any(|x| x.label == Label::Reachable);
            let l_has = split.labeled.iter().any(|x| x.label == Label::Reachable);
            assert!(test_has || l_has, "seed {seed}");
        }
    }

    #[test]
    fn split_is_deterministic_and_partitions() {
        let s = samples(300);
        let c: Vec<_> = (300..400).map(|i| sample(i, Label::Reachable)).collect();
        let a = make_splits(&s, &c, 0.2, 30, 5).unwrap();
        let b = make_splits(&s, &c, 0.2, 30, 5).unwrap();
        assert_eq!(a, b);
        let mut ids = BTreeSet::new();
        for id in a.labeled.iter().map(|x| x.id).chain(a.unlabeled.ids()).chain(a.test.iter().map(|x| x.id)) {
            assert!(ids.insert(id), "duplicate id {id}");
        }
        assert_eq!(ids, (0..400).collect());
    }

    #[test]
    fn oversized_init_is_config_error() {
        let s = samples(100);
        assert!(matches!(make_splits(&s, &[], 0.2, 81, 0), Err(Error::Config(_))));
        assert!(make_splits(&s, &[], 0.2, 80, 0).is_ok());
        assert!(make_splits(&s, &[], 0.0, 1, 0).is_err());
        assert!(make_splits(&s, &[], 1.0, 1, 0).is_err());
    }

    #[test]
    fn pool_take_reveals_labels() {
        let mut pool = UnlabeledPool::new(samples(10));
        let taken = pool.take(&[3, 0], &feasibility_oracle);
        assert_eq!(taken.iter().map(|s| s.id).collect::<Vec<_>>(), vec![3, 0]);
        assert_eq!(taken[1].label, Label::Reachable);
        assert_eq!(pool.len(), 8);
        assert_eq!(pool.ids().collect::<Vec<_>>(), vec![1, 2, 4, 5, 6, 7, 8, 9]);
        let constant = |_: &LabeledSample| Label::Unreachable;
        assert_eq!(pool.take(&[2], &constant)[0].label, Label::Unreachable);
    }
}
