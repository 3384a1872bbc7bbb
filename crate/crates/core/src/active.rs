//! Pool-based active learning with batch-mode query strategies.

use std::fmt;
use std::str::FromStr;

use rand::seq::index::sample as sample_indices;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::dataset::{feasibility_oracle, LabeledSample, PoolSplit};
use crate::error::{Error, Result};
use crate::features::FeatureVector;
use crate::forest::{fit, ClassProba, ForestModel, TrainConfig};
use crate::metrics::{evaluate, MetricSet};
use crate::Label;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Strategy {
    Random,
    LeastConfidence,
    Margin,
    Entropy,
    Qbc,
}

impl Strategy {
    pub const ALL: [Strategy; 5] =
        [Strategy::Random, Strategy::LeastConfidence, Strategy::Margin, Strategy::Entropy, Strategy::Qbc];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::Random => "random",
            Strategy::LeastConfidence => "least_confidence",
            Strategy::Margin => "margin",
            Strategy::Entropy => "entropy",
            Strategy::Qbc => "qbc",
        }
    }

    pub fn is_active(self) -> bool {
        self != Strategy::Random
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Strategy::ALL
            .into_iter()
            .find(|st| st.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown strategy '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ALConfig {
    pub strategy: Strategy,
    pub init_size: usize,
    pub batch_size: usize,
    /// Total labels to acquire beyond the initial set.
    pub n_queries: usize,
    pub committee_size: usize,
    pub committee_trees: usize,
    /// Upper bound on pool instances scored per round; `None` scores all.
    pub score_cap: Option<usize>,
    pub seed: u64,
}

impl Default for ALConfig {
    fn default() -> Self {
        ALConfig {
            strategy: Strategy::Entropy,
            init_size: 10,
            batch_size: 50,
            n_queries: 50,
            committee_size: 5,
            committee_trees: 25,
            score_cap: None,
            seed: 0,
        }
    }
}

impl ALConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::Config("batch size must be at least 1".into()));
        }
        if self.strategy == Strategy::Qbc && (self.committee_size < 2 || self.committee_trees == 0) {
            return Err(Error::Config("committee needs at least two members with at least one tree".into()));
        }
        if self.score_cap == Some(0) {
            return Err(Error::Config("score cap must be positive".into()));
        }
        Ok(())
    }

    /// Number of query rounds for an unbounded pool.
    pub fn rounds(&self) -> usize {
        self.n_queries.div_ceil(self.batch_size)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoundLog {
    /// 0 is the model trained on the initial labelled set.
    pub round: usize,
    pub n_labeled: usize,
    pub metrics: MetricSet,
    /// Sample ids acquired in this round.
    pub queried: Vec<usize>,
    /// Set on the final round when the pool ran out before the budget.
    pub truncated: bool,
}

pub fn score_least_confidence(p: &ClassProba) -> f64 {
    1.0 - p.reachable.max(p.unreachable)
}

pub fn score_margin(p: &ClassProba) -> f64 {
    -(p.reachable - p.unreachable).abs()
}

pub fn score_entropy(p: &ClassProba) -> f64 {
    -[p.reachable, p.unreachable].iter().filter(|&&q| q > 0.0).map(|q| q * q.log2()).sum::<f64>()
}

/// Vote entropy (bits) of the committee's thresholded predictions.
pub fn score_qbc(committee: &[ClassProba]) -> f64 {
    let k = committee.len() as f64;
    let yes = committee.iter().filter(|p| p.label() == Label::Reachable).count() as f64;
    -[yes / k, (k - yes) / k].iter().filter(|&&q| q > 0.0).map(|q| q * q.log2()).sum::<f64>()
}

/// Indices of the `b` highest scores; equal scores go to the lower index.
pub fn select_batch(scores: &[f64], b: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&i, &j| scores[j].total_cmp(&scores[i]).then(i.cmp(&j)));
    idx.truncate(b);
    idx
}

/// Stream-separated seed for one purpose within one round.
fn derive_seed(base: u64, purpose: u64, index: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(base);
    rng.set_stream(purpose << 32 | index);
    rng.random()
}

const PURPOSE_MODEL: u64 = 1;
const PURPOSE_COMMITTEE: u64 = 2;
const PURPOSE_RANDOM: u64 = 3;
const PURPOSE_CAP: u64 = 4;

fn train(labeled: &[LabeledSample], cfg: &TrainConfig) -> Result<ForestModel> {
    let data: Vec<(FeatureVector, Label)> = labeled.iter().map(|s| (s.features, s.label)).collect();
    fit(&data, cfg)
}

fn test_metrics(model: &ForestModel, test: &[LabeledSample]) -> Result<MetricSet> {
    let xs: Vec<FeatureVector> = test.iter().map(|s| s.features).collect();
    let probs: Vec<f64> = model.predict_proba_batch(&xs).iter().map(|p| p.reachable).collect();
    let truths: Vec<Label> = test.iter().map(|s| s.label).collect();
    evaluate(&probs, &truths)
}

/// Committee of forests, each fit on its own bootstrap resample of `labeled`.
fn committee(
    labeled: &[LabeledSample],
    cfg: &ALConfig,
    train_cfg: &TrainConfig,
    round: usize,
) -> Result<Vec<ForestModel>> {
    (0..cfg.committee_size)
        .into_par_iter()
        .map(|k| {
            let idx = (round * cfg.committee_size + k) as u64;
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, PURPOSE_COMMITTEE, idx));
            let n = labeled.len();
            let resample: Vec<LabeledSample> = (0..n).map(|_| labeled[rng.random_range(0..n)]).collect();
            let member_cfg = TrainConfig { n_trees: cfg.committee_trees, seed: rng.random(), ..*train_cfg };
            train(&resample, &member_cfg)
        })
        .collect()
}

fn score_pool(
    model: &ForestModel,
    xs: &[FeatureVector],
    labeled: &[LabeledSample],
    cfg: &ALConfig,
    train_cfg: &TrainConfig,
    round: usize,
) -> Result<Vec<f64>> {
    let uncertainty = |f: fn(&ClassProba) -> f64| model.predict_proba_batch(xs).iter().map(f).collect();
    Ok(match cfg.strategy {
        Strategy::Random => {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, PURPOSE_RANDOM, round as u64));
            xs.iter().map(|_| rng.random::<f64>()).collect()
        }
        Strategy::LeastConfidence => uncertainty(score_least_confidence),
        Strategy::Margin => uncertainty(score_margin),
        Strategy::Entropy => uncertainty(score_entropy),
        Strategy::Qbc => {
            let members = committee(labeled, cfg, train_cfg, round)?;
            let votes: Vec<Vec<ClassProba>> = members.iter().map(|m| m.predict_proba_batch(xs)).collect();
            (0..xs.len()).into_par_iter().map(|i| score_qbc(&votes.iter().map(|v| v[i]).collect::<Vec<_>>())).collect()
        }
    })
}

/// Runs the loop with the feasibility labels carried by the pool.
pub fn run_loop(split: PoolSplit, cfg: &ALConfig, train_cfg: &TrainConfig) -> Result<Vec<RoundLog>> {
    run_loop_with_oracle(split, cfg, train_cfg, &feasibility_oracle)
}

/// Fit on L, evaluate, then repeatedly score U, query a batch from `oracle`,
/// move it to L and refit until `n_queries` labels are acquired.
pub fn run_loop_with_oracle(
    split: PoolSplit,
    cfg: &ALConfig,
    train_cfg: &TrainConfig,
    oracle: &dyn Fn(&LabeledSample) -> Label,
) -> Result<Vec<RoundLog>> {
    cfg.validate()?;
    train_cfg.validate()?;
    let PoolSplit { mut labeled, mut unlabeled, test } = split;
    if labeled.is_empty() {
        return Err(Error::Training("initial labelled set is empty".into()));
    }
    if test.is_empty() {
        return Err(Error::Training("test set is empty".into()));
    }
    let model_cfg =
        |round: usize| TrainConfig { seed: derive_seed(cfg.seed, PURPOSE_MODEL, round as u64), ..*train_cfg };

    let mut model = train(&labeled, &model_cfg(0))?;
    let mut logs = vec![RoundLog {
        round: 0,
        n_labeled: labeled.len(),
        metrics: test_metrics(&model, &test)?,
        queried: Vec::new(),
        truncated: false,
    }];
    let mut acquired = 0;
    let mut round = 0;
    while acquired < cfg.n_queries && !unlabeled.is_empty() {
        round += 1;
        let want = cfg.batch_size.min(cfg.n_queries - acquired);
        let b = want.min(unlabeled.len());

        // Candidate subset scored this round.
        let candidates: Vec<usize> = match cfg.score_cap {
            Some(cap) if cap < unlabeled.len() => {
                let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, PURPOSE_CAP, round as u64));
                let mut c = sample_indices(&mut rng, unlabeled.len(), cap.max(b)).into_vec();
                c.sort_unstable();
                c
            }
            _ => (0..unlabeled.len()).collect(),
        };
        let xs: Vec<FeatureVector> = candidates.iter().map(|&i| *unlabeled.features(i)).collect();
        let scores = score_pool(&model, &xs, &labeled, cfg, train_cfg, round)?;
        let picked: Vec<usize> = select_batch(&scores, b).into_iter().map(|i| candidates[i]).collect();

        let batch = unlabeled.take(&picked, oracle);
        acquired += batch.len();
        let queried = batch.iter().map(|s| s.id).collect();
        labeled.extend(batch);
        model = train(&labeled, &model_cfg(round))?;
        logs.push(RoundLog {
            round,
            n_labeled: labeled.len(),
            metrics: test_metrics(&model, &test)?,
            queried,
            truncated: false,
        });
    }
    if acquired < cfg.n_queries {
        if let Some(last) = logs.last_mut() {
            last.truncated = true;
        }
    }
    Ok(logs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{make_splits, UnlabeledPool};

    fn p(r: f64) -> ClassProba {
        ClassProba::from_reachable(r)
    }

    #[test]
    fn least_confidence_examples() {
        assert_eq!(score_least_confidence(&p(0.5)), 0.5);
        assert_eq!(score_least_confidence(&p(0.0)), 0.0);
        assert!((score_least_confidence(&p(0.7)) - 0.3).abs() < 1e-15);
    }

    #[test]
    fn margin_examples() {
        assert_eq!(score_margin(&p(0.5)), 0.0);
        assert!((score_margin(&ClassProba { unreachable: 0.9, reachable: 0.1 }) + 0.8).abs() < 1e-15);
    }

    #[test]
    fn margin_and_least_confidence_order_agree_on_grid() {
        let grid: Vec<ClassProba> = (0..=100).map(|i| p(i as f64 / 100.0)).collect();
        for a in &grid {
            for b in &grid {
                let lc = score_least_confidence(a).partial_cmp(&score_least_confidence(b));
                let m = score_margin(a).partial_cmp(&score_margin(b));
                let close = (score_least_confidence(a) - score_least_confidence(b)).abs() < 1e-12;
                assert!(lc == m || close, "{a:?} {b:?}");
            }
        }
    }

    #[test]
    fn entropy_examples() {
        assert_eq!(score_entropy(&p(0.5)), 1.0);
        assert_eq!(score_entropy(&p(1.0)), 0.0);
        assert!((score_entropy(&p(0.75)) - 0.811_278_124_459_132_8).abs() < 1e-12);
    }

    #[test]
    fn qbc_examples() {
        assert_eq!(score_qbc(&[p(0.9), p(0.6), p(0.51)]), 0.0);
        assert_eq!(score_qbc(&[p(0.9), p(0.8), p(0.1), p(0.2)]), 1.0);
        let s = score_qbc(&[p(0.9), p(0.9), p(0.9), p(0.9), p(0.1)]);
        assert!((s - 0.721_928_094_887_362_3).abs() < 1e-12);
        // A 0.5 member votes unreachable.
        assert_eq!(score_qbc(&[p(0.5), p(0.2)]), 0.0);
    }

    #[test]
    fn select_batch_breaks_ties_by_index() {
        assert_eq!(select_batch(&[0.1, 0.9, 0.9, 0.2], 2), vec![1, 2]);
        assert_eq!(select_batch(&[0.3, 0.1, 0.2], 3), vec![0, 2, 1]);
    }

    #[test]
    fn strategy_names_round_trip() {
        for s in Strategy::ALL {
            assert_eq!(s.name().parse::<Strategy>().unwrap(), s);
        }
        assert!("uncertainty".parse::<Strategy>().is_err());
    }

    fn toy(n: usize) -> Vec<LabeledSample> {
        (0..n)
            .map(|i| {
                let x = i as f64 / n as f64;
                let f = FeatureVector::from_array([x, (i * 7 % 13) as f64, 0.0, x, 0.0, 0.0, 0.0, 0.0, 0.0]);
                LabeledSample {
                    id: i,
                    features: f,
                    label: Label::from_bool(x > 0.37),
                    arm_point: crate::kinematics::ArmPoint::new(x, 0.0, 0.0),
                }
            })
            .collect()
    }

    fn quick_train() -> TrainConfig {
        TrainConfig { n_trees: 10, ..Default::default() }
    }

    #[test]
    fn round_arithmetic() {
        let data = toy(400);
        for (init, budget, rounds, last) in [(10, 50, 1, 60), (50, 100, 2, 150), (30, 120, 3, 150)] {
            let split = make_splits(&data, &[], 0.2, init, 1).unwrap();
            let cfg = ALConfig { init_size: init, n_queries: budget, ..Default::default() };
            let logs = run_loop(split, &cfg, &quick_train()).unwrap();
            assert_eq!(logs.len(), rounds + 1);
            assert_eq!(logs.last().unwrap().n_labeled, last);
            assert!(!logs.last().unwrap().truncated);
            assert!(logs.windows(2).all(|w| w[0].n_labeled < w[1].n_labeled));
        }
    }

    #[test]
    fn queried_ids_are_fresh_and_disjoint_from_test() {
        let data = toy(300);
        for strategy in Strategy::ALL {
            let split = make_splits(&data, &[], 0.2, 10, 3).unwrap();
            let test_ids: Vec<usize> = split.test.iter().map(|s| s.id).collect();
            let init_ids: Vec<usize> = split.labeled.iter().map(|s| s.id).collect();
            let cfg = ALConfig { strategy, n_queries: 100, ..Default::default() };
            let logs = run_loop(split, &cfg, &quick_train()).unwrap();
            let mut seen: Vec<usize> = logs.iter().flat_map(|l| l.queried.clone()).collect();
            assert_eq!(seen.len(), 100);
            assert!(seen.iter().all(|id| !test_ids.contains(id) && !init_ids.contains(id)));
            seen.sort_unstable();
            seen.dedup();
            assert_eq!(seen.len(), 100, "{strategy}");
        }
    }

    #[test]
    fn deterministic_per_seed() {
        let data = toy(300);
        for strategy in [Strategy::Random, Strategy::Qbc] {
            let cfg = ALConfig { strategy, ..Default::default() };
            let a = run_loop(make_splits(&data, &[], 0.2, 10, 0).unwrap(), &cfg, &quick_train()).unwrap();
            let b = run_loop(make_splits(&data, &[], 0.2, 10, 0).unwrap(), &cfg, &quick_train()).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn pool_exhaustion_truncates() {
        let data = toy(100);
        let split = make_splits(&data, &[], 0.2, 10, 0).unwrap();
        let cfg = ALConfig { n_queries: 200, ..Default::default() };
        let logs = run_loop(split, &cfg, &quick_train()).unwrap();
        let last = logs.last().unwrap();
        assert!(last.truncated);
        assert_eq!(last.n_labeled, 80);
    }

    #[test]
    fn score_cap_limits_candidates() {
        let data = toy(400);
        let cfg = ALConfig { score_cap: Some(60), ..Default::default() };
        let logs = run_loop(make_splits(&data, &[], 0.2, 10, 0).unwrap(), &cfg, &quick_train()).unwrap();
        assert_eq!(logs.last().unwrap().n_labeled, 60);
    }

    #[test]
    fn constant_oracle_tracks_majority_rate() {
        let data = toy(500);
        let split = make_splits(&data, &[], 0.2, 10, 2).unwrap();
        let majority = {
            let r = split.test.iter().filter(|s| s.label == Label::Reachable).count() as f64;
            let n = split.test.len() as f64;
            (r / n).max(1.0 - r / n)
        };
        // Relabel the initial set too so the model only ever sees one class.
        let labeled = split.labeled.iter().map(|s| LabeledSample { label: Label::Reachable, ..*s }).collect();
        let split = PoolSplit {
            labeled,
            unlabeled: UnlabeledPool::new(split.unlabeled.ids().map(|i| data[i]).collect()),
            ..split
        };
        let cfg = ALConfig { n_queries: 100, ..Default::default() };
        let constant = |_: &LabeledSample| Label::Reachable;
        let logs = run_loop_with_oracle(split, &cfg, &quick_train(), &constant).unwrap();
        assert!((logs.last().unwrap().metrics.accuracy - majority).abs() < 1e-12);
    }

    #[test]
    fn invalid_configs() {
        assert!(ALConfig { batch_size: 0, ..Default::default() }.validate().is_err());
        assert!(ALConfig { strategy: Strategy::Qbc, committee_size: 1, ..Default::default() }.validate().is_err());
        assert_eq!(ALConfig { n_queries: 120, ..Default::default() }.rounds(), 3);
    }
}
