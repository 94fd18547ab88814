use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{check_k, open_candidates, top_k, RecommendationList, Recommendations, Scored};
use crate::dataset::{InteractionGraph, Side, UserIdx};
use crate::error::Result;
use crate::similarity::interest_neighbours;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CfParams {
    pub k: usize,
    /// Same-side neighbours kept per user.
    pub neighbours: usize,
}

impl Default for CfParams {
    fn default() -> Self {
        CfParams {
            k: 10,
            neighbours: 20,
        }
    }
}

/// User-based collaborative filtering: `v` scores the summed interest
/// similarity of `u`'s nearest neighbours who contacted `v`. Users with no
/// positively scored candidate get a popularity-ordered list flagged as cold
/// start, scored by received contacts relative to the most contacted user.
pub fn recommend_cf(graph: &InteractionGraph, params: &CfParams) -> Result<Recommendations> {
    check_k(params.k)?;
    let max_received = |side: Side| {
        graph
            .members(side)
            .iter()
            .map(|&v| graph.received(v).len())
            .max()
            .unwrap_or(0)
            .max(1) as f64
    };
    let peaks = [max_received(Side::A), max_received(Side::B)];

    let lists = (0..graph.num_users())
        .into_par_iter()
        .map(|u| {
            let mut scores: BTreeMap<UserIdx, f64> = BTreeMap::new();
            for (z, sim) in interest_neighbours(graph, u)
                .into_iter()
                .take(params.neighbours)
            {
                for &v in graph.sent(z) {
                    if !graph.contacted(u, v) {
                        *scores.entry(v).or_default() += sim;
                    }
                }
            }
            let scored: Vec<Scored> = scores.into_iter().map(|(v, s)| Scored::new(v, s)).collect();
            if !scored.is_empty() {
                return RecommendationList::new(u, top_k(scored, params.k));
            }
            let peak = match graph.side(u).opposite() {
                Side::A => peaks[0],
                Side::B => peaks[1],
            };
            let popular = open_candidates(graph, u)
                .map(|v| Scored::new(v, graph.received(v).len() as f64 / peak))
                .collect();
            RecommendationList {
                cold_start: true,
                ..RecommendationList::new(u, top_k(popular, params.k))
            }
        })
        .collect();
    Ok(Recommendations::new(params.k, lists))
}
