//! Accuracy, coverage, allocation-fairness and popularity-bias metrics, and
//! the per-algorithm report that bundles them.

mod allocation;
mod bias;
mod ranking;

use serde::{Deserialize, Serialize};

use crate::dataset::{InteractionGraph, MatchSet, Side, UserProfile};
use crate::error::Result;
use crate::fairness::{fairness_score, group_distribution, GroupLabels};
use crate::recommenders::{Algorithm, Recommendations};

pub use allocation::{demographic_parity, jain_index};
pub use bias::{estimate_bias_model, estimate_bias_model_with, BiasFitParams, BiasModel};
pub use ranking::{
    count_hits, coverage_adjusted, coverage_from_counts, mean_ndcg, ndcg_at_k,
    precision_recall_at_k, HitCounts,
};

/// Everything a recommendation set is scored against.
#[derive(Debug, Clone, Copy)]
pub struct EvaluationContext<'a> {
    /// Graph the recommenders were trained on.
    pub graph: &'a InteractionGraph,
    pub heldout: &'a MatchSet,
    pub labels: &'a GroupLabels,
    /// In user-index order.
    pub profiles: &'a [UserProfile],
    /// Side whose lists count for precision, recall and NDCG.
    pub side: Side,
    pub bias: BiasFitParams,
    pub seed: u64,
}

/// One row of the comparison table. Metrics that are undefined on the input
/// (a single protected class, no exposure at all) are `None`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub algorithm: Algorithm,
    pub k: usize,
    pub seed: u64,
    pub precision_at_k: f64,
    pub recall_at_k: f64,
    pub ndcg_at_k: f64,
    pub crecall: f64,
    pub cprecision: f64,
    pub jain_index: Option<f64>,
    pub demographic_parity: Option<f64>,
    pub fairness_score: Option<f64>,
    pub bias_alpha: Option<f64>,
    pub bias_beta: Option<f64>,
    pub bias_log_likelihood: Option<f64>,
    /// Mean normalised group entropy of non-empty lists.
    pub mean_list_entropy: f64,
    pub cold_start_lists: usize,
    pub infeasible_lists: usize,
}

/// Exposure indicator per user: appears in at least one list.
pub fn exposed(recs: &Recommendations, num_users: usize) -> Vec<bool> {
    recs.exposure(num_users)
        .into_iter()
        .map(|x| x > 0)
        .collect()
}

fn mean_list_entropy(recs: &Recommendations, labels: &GroupLabels) -> f64 {
    let k = labels.num_groups();
    if k < 2 {
        return 0.0;
    }
    let (mut total, mut count) = (0.0, 0usize);
    for l in recs.lists.iter().filter(|l| !l.items.is_empty()) {
        let dist = group_distribution(l.items.iter().map(|s| labels.group(s.candidate)), k);
        total += dist
            .iter()
            .filter(|&&p| p > 0.0)
            .map(|&p| -p * p.ln())
            .sum::<f64>()
            / (k as f64).ln();
        count += 1;
    }
    if count == 0 {
        0.0
    } else {
        total / count as f64
    }
}

pub fn evaluate(
    algorithm: Algorithm,
    recs: &Recommendations,
    ctx: &EvaluationContext<'_>,
) -> Result<MetricsReport> {
    let graph = ctx.graph;
    let users = graph.num_users();
    let (precision_at_k, recall_at_k) =
        precision_recall_at_k(recs.side_lists(graph, ctx.side), ctx.heldout, recs.k)?;
    let (crecall, cprecision) = coverage_adjusted(recs, graph, ctx.heldout)?;
    let exposure: Vec<f64> = recs.exposure(users).into_iter().map(|x| x as f64).collect();
    let protected: Vec<bool> = (0..users).map(|u| ctx.labels.group(u) != 0).collect();
    let bias = estimate_bias_model_with(&recs.lists, ctx.profiles, ctx.bias).ok();
    let (cold_start_lists, infeasible_lists) = recs.count_flagged();
    Ok(MetricsReport {
        algorithm,
        k: recs.k,
        seed: ctx.seed,
        precision_at_k,
        recall_at_k,
        ndcg_at_k: mean_ndcg(recs, graph, ctx.heldout, ctx.side),
        crecall,
        cprecision,
        jain_index: jain_index(&exposure).ok(),
        demographic_parity: demographic_parity(&exposed(recs, users), &protected).ok(),
        fairness_score: fairness_score(&recs.lists, ctx.labels, |u| graph.side(u)).ok(),
        bias_alpha: bias.map(|b| b.alpha),
        bias_beta: bias.map(|b| b.beta),
        bias_log_likelihood: bias.map(|b| b.log_likelihood),
        mean_list_entropy: mean_list_entropy(recs, ctx.labels),
        cold_start_lists,
        infeasible_lists,
    })
}

/// Relative bias reduction of a treated run against a baseline run, per
/// dimension; `None` where the baseline has no bias or the metric is missing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BiasReduction {
    /// From `|alpha|`.
    pub popularity: Option<f64>,
    /// From demographic parity.
    pub demographic: Option<f64>,
    /// From `1 - fairness_score`.
    pub group_parity: Option<f64>,
}

/// `(baseline - treated) / baseline`, or `None` for a zero baseline.
pub fn reduction(baseline: f64, treated: f64) -> Option<f64> {
    (baseline != 0.0).then(|| (baseline - treated) / baseline)
}

pub fn bias_reduction_report(baseline: &MetricsReport, treated: &MetricsReport) -> BiasReduction {
    let pair = |f: fn(&MetricsReport) -> Option<f64>| match (f(baseline), f(treated)) {
        (Some(b), Some(t)) => reduction(b, t),
        _ => None,
    };
    BiasReduction {
        popularity: pair(|r| r.bias_alpha.map(f64::abs)),
        demographic: pair(|r| r.demographic_parity),
        group_parity: pair(|r| r.fairness_score.map(|s| 1.0 - s)),
    }
}
