//! Classification metrics with reachable as the positive class.
//!
//! Metrics that are undefined for a given confusion table (precision with no
//! positive predictions, AUC with a single class) are `None`.

use crate::error::{Error, Result};
use crate::Label;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MetricSet {
    pub accuracy: f64,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub f1: Option<f64>,
    pub auc: Option<f64>,
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    pub fn_: usize,
}

impl MetricSet {
    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }

    /// Fraction of predictions that were unreachable.
    pub fn ik_reduction(&self) -> f64 {
        match self.total() {
            0 => 0.0,
            n => (self.tn + self.fn_) as f64 / n as f64,
        }
    }
}

fn ratio(num: usize, den: usize) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

pub fn confusion_and_rates(preds: &[Label], truths: &[Label]) -> Result<MetricSet> {
    if preds.len() != truths.len() {
        return Err(Error::Usage(format!("{} predictions for {} truths", preds.len(), truths.len())));
    }
    if preds.is_empty() {
        return Err(Error::Usage("metrics need at least one prediction".into()));
    }
    let mut m = MetricSet::default();
    for (p, t) in preds.iter().zip(truths) {
        match (p, t) {
            (Label::Reachable, Label::Reachable) => m.tp += 1,
            (Label::Reachable, Label::Unreachable) => m.fp += 1,
            (Label::Unreachable, Label::Unreachable) => m.tn += 1,
            (Label::Unreachable, Label::Reachable) => m.fn_ += 1,
        }
    }
    m.accuracy = (m.tp + m.tn) as f64 / m.total() as f64;
    m.precision = ratio(m.tp, m.tp + m.fp);
    m.recall = ratio(m.tp, m.tp + m.fn_);
    m.f1 = match (m.precision, m.recall) {
        (Some(p), Some(r)) if p + r > 0.0 => Some(2.0 * p * r / (p + r)),
        (Some(_), Some(_)) => Some(0.0),
        _ => None,
    };
    Ok(m)
}

/// Mann-Whitney AUC: probability that a random positive outscores a random
/// negative, ties counting one half. `None` unless both classes occur.
pub fn roc_auc(scores: &[f64], truths: &[Label]) -> Result<Option<f64>> {
    if scores.len() != truths.len() {
        return Err(Error::Usage(format!("{} scores for {} truths", scores.len(), truths.len())));
    }
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));

    let n_pos = truths.iter().filter(|&&t| t == Label::Reachable).count();
    let n_neg = truths.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Ok(None);
    }
    // Count, in half-units, pairs where the positive ranks above the negative.
    let mut halves: u128 = 0;
    let mut neg_below: u128 = 0;
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j < idx.len() && scores[idx[j]] == scores[idx[i]] {
            j += 1;
        }
        let pos_here = idx[i..j].iter().filter(|&&k| truths[k] == Label::Reachable).count() as u128;
        let neg_here = (j - i) as u128 - pos_here;
        halves += pos_here * (2 * neg_below + neg_here);
        neg_below += neg_here;
        i = j;
    }
    Ok(Some(halves as f64 / (2.0 * n_pos as f64 * n_neg as f64)))
}

/// O(P*N) pairwise AUC.
pub fn roc_auc_pairwise(scores: &[f64], truths: &[Label]) -> Option<f64> {
    let pos: Vec<f64> = scores.iter().zip(truths).filter(|(_, &t)| t == Label::Reachable).map(|(s, _)| *s).collect();
    let neg: Vec<f64> = scores.iter().zip(truths).filter(|(_, &t)| t == Label::Unreachable).map(|(s, _)| *s).collect();
    if pos.is_empty() || neg.is_empty() {
        return None;
    }
    let mut halves = 0u64;
    for p in &pos {
        for n in &neg {
            halves += match p.partial_cmp(n) {
                Some(std::cmp::Ordering::Greater) => 2,
                Some(std::cmp::Ordering::Equal) => 1,
                _ => 0,
            };
        }
    }
    Some(halves as f64 / (2.0 * pos.len() as f64 * neg.len() as f64))
}

/// Fraction of candidates predicted unreachable, i.e. kinematic checks skipped.
pub fn ik_call_reduction(preds: &[Label]) -> f64 {
    if preds.is_empty() {
        return 0.0;
    }
    preds.iter().filter(|&&p| p == Label::Unreachable).count() as f64 / preds.len() as f64
}

/// Metrics of a prediction batch including AUC from reachable probabilities.
pub fn evaluate(p_reachable: &[f64], truths: &[Label]) -> Result<MetricSet> {
    let preds: Vec<Label> = p_reachable.iter().map(|&p| Label::from_bool(p > 0.5)).collect();
    let mut m = confusion_and_rates(&preds, truths)?;
    m.auc = roc_auc(p_reachable, truths)?;
    Ok(m)
}

/// `(n_labeled, accuracy)` per round.
pub fn efficiency_curve(logs: &[crate::active::RoundLog]) -> Vec<(usize, f64)> {
    logs.iter().map(|l| (l.n_labeled, l.metrics.accuracy)).collect()
}

/// Mean and population standard deviation over the defined values.
pub fn mean_std(values: impl IntoIterator<Item = Option<f64>>) -> Option<(f64, f64)> {
    let vals: Vec<f64> = values.into_iter().flatten().collect();
    if vals.is_empty() {
        return None;
    }
    let n = vals.len() as f64;
    let mean = vals.iter().sum::<f64>() / n;
    let var = vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    Some((mean, var.sqrt()))
}
