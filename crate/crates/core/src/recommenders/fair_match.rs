use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{check_k, open_candidates, sort_ranked, RecommendationList, Recommendations, Scored};
use crate::dataset::{InteractionGraph, Side, UserIdx};
use crate::error::{Error, Result};
use crate::fairness::{
    fairness_filter, group_distribution, linf_distance, multi_objective_score, nsw_greedy_balance,
    BalanceList, BalanceOutcome, BalanceParams, FairnessConstraint, FilterOutcome, GroupLabels,
    ObjectiveWeights, SwapPolicy,
};
use crate::similarity::{ScoreTable, Scorer};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FairMatchParams {
    pub k: usize,
    pub epsilon: f64,
    pub weights: ObjectiveWeights,
    /// Working pool is `pool_factor * k` filtered candidates.
    pub pool_factor: usize,
    pub quality_floor: f64,
    /// Run the exposure rebalancing pass.
    pub nsw: bool,
    /// Swap budget; `None` means ten per list.
    pub max_iters: Option<usize>,
    pub scorer: Scorer,
}

impl Default for FairMatchParams {
    fn default() -> Self {
        FairMatchParams {
            k: 10,
            epsilon: 0.1,
            weights: ObjectiveWeights::default(),
            pool_factor: 5,
            quality_floor: 0.8,
            nsw: true,
            max_iters: None,
            scorer: Scorer::Harmonic,
        }
    }
}

impl FairMatchParams {
    pub fn validate(&self) -> Result<()> {
        check_k(self.k)?;
        if !(0.0..=1.0).contains(&self.epsilon) {
            return Err(Error::config(format!(
                "epsilon {} outside [0, 1]",
                self.epsilon
            )));
        }
        if self.pool_factor == 0 {
            return Err(Error::config("pool_factor must be at least 1"));
        }
        if !(self.quality_floor >= 0.0 && self.quality_floor.is_finite()) {
            return Err(Error::config(
                "quality_floor must be finite and non-negative",
            ));
        }
        self.weights.validate()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FairMatchOutput {
    pub recommendations: Recommendations,
    /// Rebalancing statistics, absent when the pass is disabled.
    pub balance: Option<BalanceOutcome>,
}

pub fn recommend_fair_match(
    graph: &InteractionGraph,
    labels: &GroupLabels,
    params: &FairMatchParams,
) -> Result<FairMatchOutput> {
    params.validate()?;
    let table = ScoreTable::compute(graph, params.scorer);
    fair_match_with_scores(graph, labels, params, |u, v| table.score(u, v))
}

/// FAIR-MATCH over an arbitrary reciprocal scorer `score(u, v)`.
pub fn fair_match_with_scores(
    graph: &InteractionGraph,
    labels: &GroupLabels,
    params: &FairMatchParams,
    score: impl Fn(UserIdx, UserIdx) -> f64 + Sync,
) -> Result<FairMatchOutput> {
    params.validate()?;
    // Constraint for lists owned by A users (drawing from B) and vice versa.
    let constraint_for = |side: Side| -> Result<Option<FairnessConstraint>> {
        if graph.members(side.opposite()).is_empty() {
            return Ok(None);
        }
        let population = labels.population(side.opposite()).to_vec();
        FairnessConstraint::new(params.epsilon, population).map(Some)
    };
    let constraints = [constraint_for(Side::A)?, constraint_for(Side::B)?];
    let constraint_of = |u: UserIdx| match graph.side(u) {
        Side::A => constraints[0].as_ref(),
        Side::B => constraints[1].as_ref(),
    };
    let k = params.k;
    let pool_size = params.pool_factor * k;

    let prepared: Vec<(BalanceList, bool)> = (0..graph.num_users())
        .into_par_iter()
        .map(|u| {
            let mut candidates: Vec<Scored> = open_candidates(graph, u)
                .map(|v| Scored::new(v, score(u, v)))
                .collect();
            sort_ranked(&mut candidates);
            let required = k.min(candidates.len());
            let outcome = match constraint_of(u) {
                Some(c) => {
                    fairness_filter(&candidates, |v| labels.group(v), c, pool_size, required)
                }
                None => FilterOutcome::Feasible(Vec::new()),
            };
            let (pool, infeasible) = match outcome {
                FilterOutcome::Feasible(pool) => (pool, false),
                FilterOutcome::Infeasible { .. } => {
                    candidates.truncate(pool_size);
                    (candidates, true)
                }
            };
            let items = pool[..required.min(pool.len())].to_vec();
            (
                BalanceList {
                    owner: u,
                    items,
                    pool,
                },
                infeasible,
            )
        })
        .collect();

    let (mut lists, flags): (Vec<BalanceList>, Vec<bool>) = prepared.into_iter().unzip();
    let balance = params.nsw.then(|| {
        let policy = FairMatchPolicy {
            labels,
            graph,
            constraints: &constraints,
            weights: params.weights,
        };
        let balance_params = BalanceParams {
            quality_floor: params.quality_floor,
            max_iters: params.max_iters.unwrap_or(10 * lists.len()),
        };
        nsw_greedy_balance(&mut lists, graph.num_users(), balance_params, &policy)
    });

    let lists = lists
        .into_iter()
        .zip(flags)
        .map(|(l, infeasible)| RecommendationList {
            user: l.owner,
            items: l.items,
            cold_start: false,
            infeasible,
        })
        .collect();
    Ok(FairMatchOutput {
        recommendations: Recommendations::new(k, lists),
        balance,
    })
}

/// Swaps may not push a list's group distribution further than the tolerance
/// (or its current distance, if already outside); among admissible swaps the
/// weighted quality/diversity/fairness objective decides.
struct FairMatchPolicy<'a> {
    labels: &'a GroupLabels,
    graph: &'a InteractionGraph,
    constraints: &'a [Option<FairnessConstraint>; 2],
    weights: ObjectiveWeights,
}

impl FairMatchPolicy<'_> {
    fn constraint(&self, owner: UserIdx) -> &FairnessConstraint {
        let slot = match self.graph.side(owner) {
            Side::A => 0,
            Side::B => 1,
        };
        self.constraints[slot]
            .as_ref()
            .expect("a list with items implies a non-empty opposite side")
    }
}

impl SwapPolicy for FairMatchPolicy<'_> {
    fn admissible(&self, list: &BalanceList, pos: usize, candidate: &Scored) -> bool {
        let (g_out, g_in) = (
            self.labels.group(list.items[pos].candidate),
            self.labels.group(candidate.candidate),
        );
        if g_out == g_in {
            return true;
        }
        let c = self.constraint(list.owner);
        let mut dist = group_distribution(
            list.items.iter().map(|s| self.labels.group(s.candidate)),
            self.labels.num_groups(),
        );
        let before = linf_distance(&dist, &c.population);
        let unit = 1.0 / list.items.len() as f64;
        dist[g_out] -= unit;
        dist[g_in] += unit;
        linf_distance(&dist, &c.population) <= before.max(c.epsilon) + 1e-12
    }

    fn preference(&self, list: &BalanceList, pos: usize, candidate: &Scored) -> f64 {
        let rest: Vec<Scored> = list
            .items
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != pos)
            .map(|(_, s)| *s)
            .collect();
        let c = self.constraint(list.owner);
        multi_objective_score(self.labels, &rest, *candidate, &self.weights, c)
    }
}
