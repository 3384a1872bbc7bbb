//! Random-forest binary classifier built from scratch.
//!
//! Trees are grown greedily on Gini impurity over a random subset of features
//! per node; leaves keep (bootstrap-weighted) class counts so the forest can
//! report averaged leaf frequencies as probabilities.
//!
//! Results depend only on the multiset of training samples and the seed:
//! samples are put in a canonical order before any random draw, and each tree
//! draws from its own ChaCha stream, so trees can be grown in parallel.

use std::cmp::Ordering;
use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::features::{FeatureVector, FEATURE_DIM};
use crate::Label;

const FORMAT_HEADER: &str = "reach-forest 1";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrainConfig {
    pub n_trees: usize,
    /// `None` grows until the other stopping rules apply.
    pub max_depth: Option<usize>,
    pub min_samples_leaf: usize,
    pub features_per_split: usize,
    pub bootstrap: bool,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            n_trees: 100,
            max_depth: None,
            min_samples_leaf: 1,
            features_per_split: 3,
            bootstrap: true,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_trees == 0 {
            return Err(Error::Config("forest needs at least one tree".into()));
        }
        if !(1..=FEATURE_DIM).contains(&self.features_per_split) {
            return Err(Error::Config(format!("features_per_split must be in [1, {FEATURE_DIM}]")));
        }
        if self.min_samples_leaf == 0 {
            return Err(Error::Config("min_samples_leaf must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    /// Counts of (unreachable, reachable) training samples.
    Leaf {
        counts: [u32; 2],
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecisionTree {
    /// Node 0 is the root.
    pub nodes: Vec<Node>,
}

impl DecisionTree {
    /// Fraction of reachable samples in the leaf `x` falls into.
    pub fn leaf_reachable_fraction(&self, x: &[f64; FEATURE_DIM]) -> f64 {
        let mut idx = 0;
        loop {
            match &self.nodes[idx] {
                Node::Split { feature, threshold, left, right } => {
                    idx = if x[*feature] <= *threshold { *left } else { *right };
                }
                Node::Leaf { counts } => {
                    return counts[1] as f64 / (counts[0] + counts[1]) as f64;
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], i: usize) -> usize {
            match &nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, *left).max(walk(nodes, *right)),
            }
        }
        walk(&self.nodes, 0)
    }
}

/// Class probabilities for one instance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassProba {
    pub unreachable: f64,
    pub reachable: f64,
}

impl ClassProba {
    pub fn from_reachable(p: f64) -> Self {
        ClassProba { unreachable: 1.0 - p, reachable: p }
    }

    /// Thresholded decision; an exact tie resolves to unreachable.
    pub fn label(&self) -> Label {
        if self.reachable > self.unreachable {
            Label::Reachable
        } else {
            Label::Unreachable
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForestModel {
    pub trees: Vec<DecisionTree>,
    pub config: TrainConfig,
}

impl ForestModel {
    pub fn feature_dim(&self) -> usize {
        FEATURE_DIM
    }

    pub fn predict_proba(&self, x: &FeatureVector) -> ClassProba {
        let row = x.to_array();
        let sum: f64 = self.trees.iter().map(|t| t.leaf_reachable_fraction(&row)).sum();
        ClassProba::from_reachable(sum / self.trees.len() as f64)
    }

    pub fn predict(&self, x: &FeatureVector) -> Label {
        self.predict_proba(x).label()
    }

    pub fn predict_proba_batch(&self, xs: &[FeatureVector]) -> Vec<ClassProba> {
        xs.par_iter().map(|x| self.predict_proba(x)).collect()
    }

    /// Stable text dump of the model.
    ///
    /// ```text
    /// reach-forest 1
    /// config <n_trees> <max_depth|none> <min_samples_leaf> <features_per_split> <bootstrap 0|1> <seed>
    /// tree <node_count>
    /// S <feature> <threshold> <left> <right>
    /// L <unreachable_count> <reachable_count>
    /// ```
    pub fn serialize(&self) -> String {
        let c = &self.config;
        let mut out = String::new();
        let depth = c.max_depth.map_or_else(|| "none".to_string(), |d| d.to_string());
        let _ = writeln!(out, "{FORMAT_HEADER}");
        let _ = writeln!(
            out,
            "config {} {} {} {} {} {}",
            c.n_trees, depth, c.min_samples_leaf, c.features_per_split, c.bootstrap as u8, c.seed
        );
        for tree in &self.trees {
            let _ = writeln!(out, "tree {}", tree.nodes.len());
            for node in &tree.nodes {
                match node {
                    Node::Split { feature, threshold, left, right } => {
                        let _ = writeln!(out, "S {feature} {threshold:?} {left} {right}");
                    }
                    Node::Leaf { counts } => {
                        let _ = writeln!(out, "L {} {}", counts[0], counts[1]);
                    }
                }
            }
        }
        out
    }

    pub fn deserialize(text: &str) -> Result<Self> {
        let bad = |msg: &str| Error::Format(msg.to_string());
        let mut lines = text.lines();
        if lines.next() != Some(FORMAT_HEADER) {
            return Err(bad("missing header"));
        }
        let cfg_line = lines.next().ok_or_else(|| bad("missing config line"))?;
        let f: Vec<&str> = cfg_line.split_whitespace().collect();
        if f.len() != 7 || f[0] != "config" {
            return Err(bad("malformed config line"));
        }
        let num = |s: &str| s.parse::<u64>().map_err(|_| bad("bad integer"));
        let config = TrainConfig {
            n_trees: num(f[1])? as usize,
            max_depth: if f[2] == "none" { None } else { Some(num(f[2])? as usize) },
            min_samples_leaf: num(f[3])? as usize,
            features_per_split: num(f[4])? as usize,
            bootstrap: num(f[5])? != 0,
            seed: num(f[6])?,
        };
        let mut trees = Vec::with_capacity(config.n_trees);
        while let Some(line) = lines.next() {
            let count = line
                .strip_prefix("tree ")
                .ok_or_else(|| bad("expected tree line"))?
                .parse::<usize>()
                .map_err(|_| bad("bad node count"))?;
            let mut nodes = Vec::with_capacity(count);
            for _ in 0..count {
                let l = lines.next().ok_or_else(|| bad("truncated tree"))?;
                let f: Vec<&str> = l.split_whitespace().collect();
                let node = match f.as_slice() {
                    ["S", feat, thr, left, right] => Node::Split {
                        feature: num(feat)? as usize,
                        threshold: thr.parse().map_err(|_| bad("bad threshold"))?,
                        left: num(left)? as usize,
                        right: num(right)? as usize,
                    },
                    ["L", c0, c1] => Node::Leaf { counts: [num(c0)? as u32, num(c1)? as u32] },
                    _ => return Err(bad("malformed node")),
                };
                if let Node::Split { feature, left, right, .. } = node {
                    if feature >= FEATURE_DIM || left >= count || right >= count {
                        return Err(bad("node reference out of range"));
                    }
                }
                nodes.push(node);
            }
            trees.push(DecisionTree { nodes });
        }
        if trees.len() != config.n_trees {
            return Err(bad("tree count does not match config"));
        }
        Ok(ForestModel { trees, config })
    }
}

fn gini(c0: u32, c1: u32) -> f64 {
    let n = (c0 + c1) as f64;
    if n == 0.0 {
        return 0.0;
    }
    let (p0, p1) = (c0 as f64 / n, c1 as f64 / n);
    1.0 - p0 * p0 - p1 * p1
}

fn canonical_order(a: &([f64; FEATURE_DIM], Label), b: &([f64; FEATURE_DIM], Label)) -> Ordering {
    a.0.iter()
        .zip(b.0.iter())
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or(Ordering::Equal)
        .then(a.1.cmp(&b.1))
}

struct Split {
    /// Weighted child impurity.
    impurity: f64,
    feature: usize,
    threshold: f64,
}

impl Split {
    fn better_than(&self, other: &Split) -> bool {
        (self.impurity, self.feature, self.threshold).partial_cmp(&(other.impurity, other.feature, other.threshold))
            == Some(Ordering::Less)
    }
}

struct TreeBuilder<'a> {
    rows: &'a [[f64; FEATURE_DIM]],
    labels: &'a [Label],
    cfg: &'a TrainConfig,
    rng: ChaCha8Rng,
    nodes: Vec<Node>,
    scratch: Vec<(f64, Label)>,
}

impl TreeBuilder<'_> {
    fn counts(&self, idx: &[usize]) -> [u32; 2] {
        let r = idx.iter().filter(|&&i| self.labels[i] == Label::Reachable).count() as u32;
        [idx.len() as u32 - r, r]
    }

    fn best_split_on(&mut self, idx: &[usize], feature: usize, total: [u32; 2]) -> Option<Split> {
        self.scratch.clear();
        self.scratch.extend(idx.iter().map(|&i| (self.rows[i][feature], self.labels[i])));
        self.scratch.sort_by(|a, b| a.0.total_cmp(&b.0));
        let n = self.scratch.len();
        let min_leaf = self.cfg.min_samples_leaf;
        let mut left = [0u32; 2];
        let mut best: Option<Split> = None;
        for i in 0..n - 1 {
            left[self.scratch[i].1 as usize] += 1;
            let (lo, hi) = (self.scratch[i].0, self.scratch[i + 1].0);
            if lo == hi {
                continue;
            }
            let nl = i + 1;
            if nl < min_leaf || n - nl < min_leaf {
                continue;
            }
            let right = [total[0] - left[0], total[1] - left[1]];
            let impurity = (nl as f64 * gini(left[0], left[1]) + (n - nl) as f64 * gini(right[0], right[1])) / n as f64;
            let mut threshold = 0.5 * (lo + hi);
            if threshold >= hi {
                threshold = lo;
            }
            let cand = Split { impurity, feature, threshold };
            if best.as_ref().is_none_or(|b| cand.better_than(b)) {
                best = Some(cand);
            }
        }
        best
    }

    fn build(&mut self, idx: &mut [usize], depth: usize) -> usize {
        let counts = self.counts(idx);
        let node_id = self.nodes.len();
        self.nodes.push(Node::Leaf { counts });

        let pure = counts[0] == 0 || counts[1] == 0;
        let depth_capped = self.cfg.max_depth.is_some_and(|d| depth >= d);
        if pure || depth_capped || idx.len() < 2 * self.cfg.min_samples_leaf {
            return node_id;
        }

        // Draw features without replacement until enough non-constant ones
        // have been examined.
        let mut order: Vec<usize> = (0..FEATURE_DIM).collect();
        order.shuffle(&mut self.rng);
        let mut visited = 0;
        let mut best: Option<Split> = None;
        for &f in &order {
            if visited >= self.cfg.features_per_split {
                break;
            }
            let first = self.rows[idx[0]][f];
            if idx.iter().all(|&i| self.rows[i][f] == first) {
                continue;
            }
            visited += 1;
            if let Some(s) = self.best_split_on(idx, f, counts) {
                if best.as_ref().is_none_or(|b| s.better_than(b)) {
                    best = Some(s);
                }
            }
        }

        // Zero-gain splits are taken: every split shrinks both sides, and
        // deeper splits can separate classes that no single cut improves
        // (XOR layouts).
        let Some(split) = best else {
            return node_id;
        };

        let rows = self.rows;
        let mid = partition(idx, |&i| rows[i][split.feature] <= split.threshold);
        let (l, r) = idx.split_at_mut(mid);
        let left = self.build(l, depth + 1);
        let right = self.build(r, depth + 1);
        self.nodes[node_id] = Node::Split { feature: split.feature, threshold: split.threshold, left, right };
        node_id
    }
}

/// Stable partition; returns the number of elements satisfying `pred`.
fn partition<T: Copy>(xs: &mut [T], pred: impl Fn(&T) -> bool) -> usize {
    let (yes, no): (Vec<T>, Vec<T>) = xs.iter().partition(|x| pred(x));
    let mid = yes.len();
    for (dst, src) in xs.iter_mut().zip(yes.into_iter().chain(no)) {
        *dst = src;
    }
    mid
}

fn tree_rng(seed: u64, tree: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(tree as u64);
    rng
}

/// Trains a forest on `(features, label)` pairs.
pub fn fit(samples: &[(FeatureVector, Label)], cfg: &TrainConfig) -> Result<ForestModel> {
    cfg.validate()?;
    if samples.is_empty() {
        return Err(Error::Training("cannot fit a forest on an empty sample set".into()));
    }
    let mut canon: Vec<([f64; FEATURE_DIM], Label)> = samples.iter().map(|(f, l)| (f.to_array(), *l)).collect();
    if canon.iter().any(|(r, _)| r.iter().any(|v| !v.is_finite())) {
        return Err(Error::Training("non-finite feature value".into()));
    }
    canon.sort_by(canonical_order);
    let rows: Vec<[f64; FEATURE_DIM]> = canon.iter().map(|c| c.0).collect();
    let labels: Vec<Label> = canon.iter().map(|c| c.1).collect();
    let n = rows.len();

    let trees = (0..cfg.n_trees)
        .into_par_iter()
        .map(|t| {
            let mut rng = tree_rng(cfg.seed, t);
            let mut idx: Vec<usize> =
                if cfg.bootstrap { (0..n).map(|_| rng.random_range(0..n)).collect() } else { (0..n).collect() };
            idx.sort_unstable();
            let mut builder = TreeBuilder {
                rows: &rows,
                labels: &labels,
                cfg,
                rng,
                nodes: Vec::new(),
                scratch: Vec::with_capacity(n),
            };
            builder.build(&mut idx, 0);
            DecisionTree { nodes: builder.nodes }
        })
        .collect();
    Ok(ForestModel { trees, config: *cfg })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fv(range: f64) -> FeatureVector {
        FeatureVector::from_array([0.5, 0.1, 0.3, range, 0.0, 0.0, 0.0, 0.0, 1.0])
    }

    fn leaf(c0: u32, c1: u32) -> DecisionTree {
        DecisionTree { nodes: vec![Node::Leaf { counts: [c0, c1] }] }
    }

    #[test]
    fn separable_by_range() {
        let samples: Vec<_> = (0..20)
            .map(|i| {
                let r = 0.1 * i as f64;
                (fv(r), if r < 1.0 { Label::Reachable } else { Label::Unreachable })
            })
            .collect();
        let model = fit(&samples, &TrainConfig::default()).unwrap();
        for (x, y) in &samples {
            assert_eq!(model.predict(x), *y);
        }
    }

    #[test]
    fn single_class_is_constant() {
        let samples: Vec<_> = (0..7).map(|i| (fv(i as f64), Label::Unreachable)).collect();
        let model = fit(&samples, &TrainConfig::default()).unwrap();
        let p = model.predict_proba(&fv(100.0));
        assert_eq!(p.unreachable, 1.0);
        assert_eq!(p.reachable, 0.0);
    }

    #[test]
    fn empty_input_is_error() {
        assert!(matches!(fit(&[], &TrainConfig::default()), Err(Error::Training(_))));
    }

    #[test]
    fn invalid_config_is_error() {
        let s = vec![(fv(1.0), Label::Reachable)];
        for cfg in [
            TrainConfig { n_trees: 0, ..Default::default() },
            TrainConfig { features_per_split: 0, ..Default::default() },
            TrainConfig { features_per_split: 10, ..Default::default() },
        ] {
            assert!(fit(&s, &cfg).is_err());
        }
    }

    #[test]
    fn unanimous_and_split_votes() {
        let x = fv(0.0);
        let all = ForestModel { trees: vec![leaf(0, 3); 10], config: TrainConfig::default() };
        assert_eq!(all.predict_proba(&x), ClassProba { unreachable: 0.0, reachable: 1.0 });

        let mut trees = vec![leaf(0, 5); 60];
        trees.extend(vec![leaf(2, 0); 40]);
        let mixed = ForestModel { trees, config: TrainConfig::default() };
        let p = mixed.predict_proba(&x);
        assert!((p.reachable - 0.6).abs() < 1e-12 && (p.unreachable - 0.4).abs() < 1e-12);
    }

    #[test]
    fn tie_resolves_to_unreachable() {
        assert_eq!(ClassProba::from_reachable(0.8).label(), Label::Reachable);
        assert_eq!(ClassProba::from_reachable(0.5).label(), Label::Unreachable);
    }

    #[test]
    fn deterministic_serialization() {
        let samples: Vec<_> = (0..40)
            .map(|i| {
                let r = ((i * 37) % 40) as f64 / 10.0;
                (fv(r), if (i * 7) % 3 == 0 { Label::Reachable } else { Label::Unreachable })
            })
            .collect();
        let cfg = TrainConfig { seed: 9, ..Default::default() };
        let a = fit(&samples, &cfg).unwrap().serialize();
        let b = fit(&samples, &cfg).unwrap().serialize();
        assert_eq!(a, b);
        let mut rev = samples.clone();
        rev.reverse();
        assert_eq!(fit(&rev, &cfg).unwrap().serialize(), a);
        let parsed = ForestModel::deserialize(&a).unwrap();
        assert_eq!(parsed.serialize(), a);
    }

    #[test]
    fn max_depth_is_respected() {
        let samples: Vec<_> =
            (0..64).map(|i| (fv(i as f64), if i % 2 == 0 { Label::Reachable } else { Label::Unreachable })).collect();
        let cfg = TrainConfig { max_depth: Some(3), n_trees: 5, ..Default::default() };
        let model = fit(&samples, &cfg).unwrap();
        assert!(model.trees.iter().all(|t| t.depth() <= 3));
    }

    #[test]
    fn min_samples_leaf_is_respected() {
        let samples: Vec<_> =
            (0..50).map(|i| (fv(i as f64), if i % 3 == 0 { Label::Reachable } else { Label::Unreachable })).collect();
        let cfg = TrainConfig { min_samples_leaf: 5, n_trees: 5, ..Default::default() };
        let model = fit(&samples, &cfg).unwrap();
        for t in &model.trees {
            for n in &t.nodes {
                if let Node::Leaf { counts } = n {
                    assert!(counts[0] + counts[1] >= 5);
                }
            }
        }
    }

    #[test]
    fn rejects_garbage_model_text() {
        assert!(ForestModel::deserialize("nope").is_err());
        assert!(ForestModel::deserialize("reach-forest 1\nconfig 1 none 1 3 1 0\ntree 1\nS 0 0.5 4 5\n").is_err());
    }
}
