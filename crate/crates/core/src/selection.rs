//! Selection rules: how a score vector is turned into a recommendation
//! distribution over a target set.
//!
//! Ties are always broken toward the lowest item id so that audits are
//! reproducible.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A stochastic (or degenerate) recommendation policy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "rule")]
pub enum SelectionRule {
    /// Boltzmann selection: item i drawn with probability proportional to
    /// exp(beta * score_i) over the target set.
    Softmax { beta: f64 },
    /// Top scorer with probability 1 - epsilon, uniform over the remaining
    /// targets otherwise.
    EpsilonGreedy { epsilon: f64 },
    /// Deterministic argmax.
    Top1,
}

impl SelectionRule {
    pub fn validate(&self) -> Result<()> {
        match *self {
            SelectionRule::Softmax { beta } => {
                if !beta.is_finite() || beta < 0.0 {
                    return Err(Error::Domain(format!("beta must be >= 0, got {beta}")));
                }
            }
            SelectionRule::EpsilonGreedy { epsilon } => {
                if !(0.0..=1.0).contains(&epsilon) {
                    return Err(Error::Domain(format!(
                        "epsilon must lie in [0, 1], got {epsilon}"
                    )));
                }
            }
            SelectionRule::Top1 => {}
        }
        Ok(())
    }
}

fn check_targets(scores: &[f64], targets: &[usize]) -> Result<()> {
    if targets.is_empty() {
        return Err(Error::Domain("empty target set".into()));
    }
    for &t in targets {
        if t >= scores.len() {
            return Err(Error::Domain(format!(
                "target item {t} outside score vector of length {}",
                scores.len()
            )));
        }
        if !scores[t].is_finite() {
            return Err(Error::Domain(format!("non-finite score for item {t}")));
        }
    }
    Ok(())
}

/// Numerically stable log(sum(exp(x))): m + log(sum(exp(x - m))) with m = max x.
pub fn log_sum_exp(values: &[f64]) -> f64 {
    let m = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    m + values.iter().map(|v| (v - m).exp()).sum::<f64>().ln()
}

/// Boltzmann distribution over the targets, aligned with `targets` order.
pub fn softmax_distribution(scores: &[f64], targets: &[usize], beta: f64) -> Result<Vec<f64>> {
    check_targets(scores, targets)?;
    if !beta.is_finite() || beta < 0.0 {
        return Err(Error::Domain(format!("beta must be >= 0, got {beta}")));
    }
    let scaled: Vec<f64> = targets.iter().map(|&t| beta * scores[t]).collect();
    let lse = log_sum_exp(&scaled);
    Ok(scaled.iter().map(|z| (z - lse).exp()).collect())
}

/// Highest scored target; ties resolved toward the lowest item id.
pub fn top1_select(scores: &[f64], targets: &[usize]) -> Result<usize> {
    check_targets(scores, targets)?;
    let mut best = targets[0];
    for &t in &targets[1..] {
        let s = scores[t];
        if s > scores[best] || (s == scores[best] && t < best) {
            best = t;
        }
    }
    Ok(best)
}

/// Epsilon-greedy distribution over the targets, aligned with `targets` order.
pub fn epsilon_greedy_distribution(
    scores: &[f64],
    targets: &[usize],
    epsilon: f64,
) -> Result<Vec<f64>> {
    check_targets(scores, targets)?;
    if targets.len() < 2 {
        return Err(Error::Domain(
            "epsilon-greedy needs at least two targets".into(),
        ));
    }
    if !(0.0..=1.0).contains(&epsilon) {
        return Err(Error::Domain(format!(
            "epsilon must lie in [0, 1], got {epsilon}"
        )));
    }
    let top = top1_select(scores, targets)?;
    let rest = epsilon / (targets.len() - 1) as f64;
    Ok(targets
        .iter()
        .map(|&t| if t == top { 1.0 - epsilon } else { rest })
        .collect())
}

/// Rank of `item` within the target set, 1 = highest score. An item is
/// outranked by strictly larger scores and by equal-scored items with a
/// lower id.
pub fn rank_of(scores: &[f64], targets: &[usize], item: usize) -> Result<usize> {
    check_targets(scores, targets)?;
    if !targets.contains(&item) {
        return Err(Error::Domain(format!("item {item} is not a target")));
    }
    let s = scores[item];
    let mut rank = 1;
    for &t in targets {
        if t == item {
            continue;
        }
        if scores[t] > s || (scores[t] == s && t < item) {
            rank += 1;
        }
    }
    Ok(rank)
}

/// Distribution induced by an arbitrary selection rule, aligned with
/// `targets` order.
pub fn rule_distribution(
    scores: &[f64],
    targets: &[usize],
    rule: &SelectionRule,
) -> Result<Vec<f64>> {
    rule.validate()?;
    match *rule {
        SelectionRule::Softmax { beta } => softmax_distribution(scores, targets, beta),
        SelectionRule::EpsilonGreedy { epsilon } => {
            epsilon_greedy_distribution(scores, targets, epsilon)
        }
        SelectionRule::Top1 => {
            let top = top1_select(scores, targets)?;
            Ok(targets
                .iter()
                .map(|&t| if t == top { 1.0 } else { 0.0 })
                .collect())
        }
    }
}
