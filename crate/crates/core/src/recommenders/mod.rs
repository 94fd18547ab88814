//! Top-K recommendation lists under FAIR-MATCH and the three baselines.

mod cf;
mod fair_match;
mod gale_shapley;
mod recon;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::dataset::{InteractionGraph, Side, UserIdx};
use crate::error::{Error, Result};

pub use cf::{recommend_cf, CfParams};
pub use fair_match::{
    fair_match_with_scores, recommend_fair_match, FairMatchOutput, FairMatchParams,
};
pub use gale_shapley::{
    check_stability, deferred_acceptance, recommend_gale_shapley, round_one_preferences,
    BlockingPair, Preferences, StableMatching,
};
pub use recon::{compatibility, recommend_recon};

/// A candidate with the score it was ranked by.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scored {
    pub candidate: UserIdx,
    pub score: f64,
}

impl Scored {
    pub fn new(candidate: UserIdx, score: f64) -> Self {
        Scored { candidate, score }
    }
}

/// Orders by score descending, ties by candidate ascending.
pub fn ranked_order(a: &Scored, b: &Scored) -> std::cmp::Ordering {
    b.score
        .total_cmp(&a.score)
        .then(a.candidate.cmp(&b.candidate))
}

pub fn sort_ranked(items: &mut [Scored]) {
    items.sort_by(ranked_order);
}

/// The best `k` of `items` in ranked order.
pub fn top_k(mut items: Vec<Scored>, k: usize) -> Vec<Scored> {
    if items.len() > k && k > 0 {
        items.select_nth_unstable_by(k - 1, ranked_order);
    }
    items.truncate(k);
    sort_ranked(&mut items);
    items
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecommendationList {
    pub user: UserIdx,
    pub items: Vec<Scored>,
    /// Filled from a popularity fallback because the user had no usable history.
    #[serde(default)]
    pub cold_start: bool,
    /// The fairness filter could not fill the list; holds unconstrained top-K.
    #[serde(default)]
    pub infeasible: bool,
}

impl RecommendationList {
    pub fn new(user: UserIdx, items: Vec<Scored>) -> Self {
        RecommendationList {
            user,
            items,
            cold_start: false,
            infeasible: false,
        }
    }

    pub fn contains(&self, candidate: UserIdx) -> bool {
        self.items.iter().any(|s| s.candidate == candidate)
    }

    /// Checks ordering, length, side and uniqueness.
    pub fn validate(&self, graph: &InteractionGraph, k: usize) -> Result<(), String> {
        if self.items.len() > k {
            return Err(format!(
                "list of user {} has {} > {k} items",
                self.user,
                self.items.len()
            ));
        }
        let side = graph.side(self.user);
        for (i, s) in self.items.iter().enumerate() {
            if graph.side(s.candidate) == side {
                return Err(format!(
                    "user {} recommended same-side {}",
                    self.user, s.candidate
                ));
            }
            if !s.score.is_finite() {
                return Err(format!("user {} has non-finite score", self.user));
            }
            if self.items[..i].iter().any(|p| p.candidate == s.candidate) {
                return Err(format!("user {} has duplicate {}", self.user, s.candidate));
            }
            if i > 0 && ranked_order(&self.items[i - 1], s) != std::cmp::Ordering::Less {
                return Err(format!("user {} list out of order at {i}", self.user));
            }
        }
        Ok(())
    }
}

/// One list per user of both sides, indexed by user.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Recommendations {
    pub k: usize,
    pub lists: Vec<RecommendationList>,
}

impl Recommendations {
    pub fn new(k: usize, mut lists: Vec<RecommendationList>) -> Self {
        lists.sort_by_key(|l| l.user);
        Recommendations { k, lists }
    }

    pub fn list(&self, user: UserIdx) -> Option<&RecommendationList> {
        self.lists
            .binary_search_by_key(&user, |l| l.user)
            .ok()
            .map(|i| &self.lists[i])
    }

    /// Lists owned by users of `side`.
    pub fn side_lists<'a>(
        &'a self,
        graph: &'a InteractionGraph,
        side: Side,
    ) -> impl Iterator<Item = &'a RecommendationList> + 'a {
        self.lists
            .iter()
            .filter(move |l| graph.side(l.user) == side)
    }

    /// Number of lists each user appears in.
    pub fn exposure(&self, num_users: usize) -> Vec<usize> {
        let mut x = vec![0usize; num_users];
        for l in &self.lists {
            for s in &l.items {
                x[s.candidate] += 1;
            }
        }
        x
    }

    pub fn validate(&self, graph: &InteractionGraph) -> Result<(), String> {
        self.lists
            .iter()
            .try_for_each(|l| l.validate(graph, self.k))
    }

    pub fn count_flagged(&self) -> (usize, usize) {
        let cold = self.lists.iter().filter(|l| l.cold_start).count();
        let infeasible = self.lists.iter().filter(|l| l.infeasible).count();
        (cold, infeasible)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    FairMatch,
    Cf,
    Recon,
    GaleShapley,
}

impl Algorithm {
    pub const ALL: [Algorithm; 4] = [
        Algorithm::FairMatch,
        Algorithm::Cf,
        Algorithm::Recon,
        Algorithm::GaleShapley,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Algorithm::FairMatch => "fair_match",
            Algorithm::Cf => "cf",
            Algorithm::Recon => "recon",
            Algorithm::GaleShapley => "gale_shapley",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.as_str() == s.trim().to_ascii_lowercase().replace('-', "_"))
            .ok_or_else(|| Error::config(format!("unknown algorithm '{s}'")))
    }
}

pub(crate) fn check_k(k: usize) -> Result<()> {
    if k == 0 {
        return Err(Error::config("K must be at least 1"));
    }
    Ok(())
}

/// Opposite-side users that `u` has not contacted.
pub(crate) fn open_candidates(
    graph: &InteractionGraph,
    u: UserIdx,
) -> impl Iterator<Item = UserIdx> + '_ {
    graph
        .members(graph.side(u).opposite())
        .iter()
        .copied()
        .filter(move |&v| !graph.contacted(u, v))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranking_breaks_ties_by_id() {
        let mut v = vec![
            Scored::new(3, 0.5),
            Scored::new(1, 0.5),
            Scored::new(2, 0.9),
        ];
        sort_ranked(&mut v);
        let ids: Vec<usize> = v.iter().map(|s| s.candidate).collect();
        assert_eq!(ids, vec![2, 1, 3]);
    }

    #[test]
    fn top_k_matches_full_sort() {
        let items: Vec<Scored> = (0..50)
            .map(|i| Scored::new(i, ((i * 37) % 11) as f64))
            .collect();
        let mut full = items.clone();
        sort_ranked(&mut full);
        for k in [0, 1, 5, 50, 80] {
            assert_eq!(top_k(items.clone(), k), full[..k.min(50)].to_vec());
        }
    }

    #[test]
    fn algorithm_names_round_trip() {
        for a in Algorithm::ALL {
            assert_eq!(a.as_str().parse::<Algorithm>().unwrap(), a);
        }
        assert_eq!(
            "Gale-Shapley".parse::<Algorithm>().unwrap(),
            Algorithm::GaleShapley
        );
        assert!("svd".parse::<Algorithm>().is_err());
    }

    #[test]
    fn validation_catches_bad_lists() {
        let g = InteractionGraph::from_edges(vec![Side::A, Side::B, Side::B], []);
        assert!(
            RecommendationList::new(0, vec![Scored::new(1, 0.5), Scored::new(2, 0.5)])
                .validate(&g, 2)
                .is_ok()
        );
        assert!(
            RecommendationList::new(0, vec![Scored::new(2, 0.5), Scored::new(1, 0.5)])
                .validate(&g, 2)
                .is_err()
        );
        assert!(
            RecommendationList::new(0, vec![Scored::new(1, 0.5), Scored::new(1, 0.5)])
                .validate(&g, 2)
                .is_err()
        );
        assert!(RecommendationList::new(1, vec![Scored::new(2, 0.5)])
            .validate(&g, 2)
            .is_err());
        assert!(RecommendationList::new(0, vec![Scored::new(1, 0.5)])
            .validate(&g, 0)
            .is_err());
    }

    #[test]
    fn exposure_counts_lists() {
        let recs = Recommendations::new(
            1,
            vec![
                RecommendationList::new(1, vec![Scored::new(0, 1.0)]),
                RecommendationList::new(2, vec![Scored::new(0, 1.0)]),
                RecommendationList::new(0, vec![Scored::new(2, 1.0)]),
            ],
        );
        assert_eq!(recs.exposure(3), vec![2, 0, 1]);
        assert_eq!(recs.list(2).unwrap().user, 2);
    }
}
