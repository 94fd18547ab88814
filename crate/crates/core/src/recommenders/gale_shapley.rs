//! Repeated A-proposing deferred acceptance. Round `r` matches users on the
//! preferences left after removing every pair matched in rounds `1..r`;
//! a user's list holds its partners in round order.

use rayon::prelude::*;

use super::{check_k, RecommendationList, Recommendations, Scored};
use crate::dataset::{InteractionGraph, Side, UserIdx};
use crate::error::Result;
use crate::similarity::ScoreTable;

const UNACCEPTABLE: u32 = u32::MAX;

/// Strict preferences between the two sides, in local indices. A partner is
/// acceptable when the user's directional score for it is positive; being
/// unmatched ranks below every acceptable partner.
#[derive(Debug, Clone, PartialEq)]
pub struct Preferences {
    a_users: Vec<UserIdx>,
    b_users: Vec<UserIdx>,
    /// Acceptable B partners of each A user, best first.
    a_lists: Vec<Vec<u32>>,
    /// `a_rank[i * m + j]`: position of B user `j` for A user `i`.
    a_rank: Vec<u32>,
    /// `b_rank[j * n + i]`: position of A user `i` for B user `j`.
    b_rank: Vec<u32>,
}

impl Preferences {
    /// Builds preferences from scores; ties are broken by lower index.
    pub fn from_scores(
        a_users: Vec<UserIdx>,
        b_users: Vec<UserIdx>,
        a_score: impl Fn(usize, usize) -> f64 + Sync,
        b_score: impl Fn(usize, usize) -> f64 + Sync,
    ) -> Self {
        let (n, m) = (a_users.len(), b_users.len());
        let rank_rows =
            |count: usize, others: usize, score: &(dyn Fn(usize, usize) -> f64 + Sync)| {
                (0..count)
                    .into_par_iter()
                    .map(|i| {
                        let mut order: Vec<(usize, f64)> = (0..others)
                            .map(|j| (j, score(i, j)))
                            .filter(|&(_, s)| s > 0.0)
                            .collect();
                        order.sort_by(|x, y| y.1.total_cmp(&x.1).then(x.0.cmp(&y.0)));
                        let mut rank = vec![UNACCEPTABLE; others];
                        for (pos, &(j, _)) in order.iter().enumerate() {
                            rank[j] = pos as u32;
                        }
                        (
                            order
                                .into_iter()
                                .map(|(j, _)| j as u32)
                                .collect::<Vec<u32>>(),
                            rank,
                        )
                    })
                    .collect::<Vec<_>>()
            };
        let (a_lists, a_rank): (Vec<Vec<u32>>, Vec<Vec<u32>>) =
            rank_rows(n, m, &a_score).into_iter().unzip();
        let b_rank: Vec<Vec<u32>> = rank_rows(m, n, &b_score)
            .into_iter()
            .map(|(_, r)| r)
            .collect();
        Preferences {
            a_users,
            b_users,
            a_lists,
            a_rank: a_rank.concat(),
            b_rank: b_rank.concat(),
        }
    }

    /// Preferences from directional scores on `graph`.
    pub fn from_graph(graph: &InteractionGraph, table: &ScoreTable) -> Self {
        let a_users = graph.members(Side::A).to_vec();
        let b_users = graph.members(Side::B).to_vec();
        let (au, bu) = (&a_users, &b_users);
        Preferences::from_scores(
            a_users.clone(),
            b_users.clone(),
            |i, j| table.directional(au[i], bu[j]),
            |j, i| table.directional(bu[j], au[i]),
        )
    }

    pub fn n(&self) -> usize {
        self.a_users.len()
    }

    pub fn m(&self) -> usize {
        self.b_users.len()
    }

    fn a_prefers(&self, i: usize, j: usize) -> u32 {
        self.a_rank[i * self.m() + j]
    }

    fn b_prefers(&self, j: usize, i: usize) -> u32 {
        self.b_rank[j * self.n() + i]
    }

    fn acceptable(&self, i: usize, j: usize) -> bool {
        self.a_prefers(i, j) != UNACCEPTABLE && self.b_prefers(j, i) != UNACCEPTABLE
    }

    /// Makes `(i, j)` mutually unacceptable.
    fn forbid(&mut self, i: usize, j: usize) {
        let (n, m) = (self.n(), self.m());
        self.a_rank[i * m + j] = UNACCEPTABLE;
        self.b_rank[j * n + i] = UNACCEPTABLE;
    }

    fn local(users: &[UserIdx], u: UserIdx) -> Option<usize> {
        users.binary_search(&u).ok()
    }
}

/// One-to-one partial matching, as `(a, b)` user pairs sorted by `a`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct StableMatching {
    pub pairs: Vec<(UserIdx, UserIdx)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BlockingPair {
    pub a: UserIdx,
    pub b: UserIdx,
}

/// A-proposing deferred acceptance.
pub fn deferred_acceptance(prefs: &Preferences) -> StableMatching {
    let (n, m) = (prefs.n(), prefs.m());
    let mut next = vec![0usize; n];
    let mut holder: Vec<Option<usize>> = vec![None; m];
    let mut free: Vec<usize> = (0..n).rev().collect();
    while let Some(i) = free.pop() {
        while next[i] < prefs.a_lists[i].len() {
            let j = prefs.a_lists[i][next[i]] as usize;
            next[i] += 1;
            if !prefs.acceptable(i, j) {
                continue;
            }
            match holder[j] {
                None => {
                    holder[j] = Some(i);
                    break;
                }
                Some(h) if prefs.b_prefers(j, i) < prefs.b_prefers(j, h) => {
                    holder[j] = Some(i);
                    free.push(h);
                    break;
                }
                Some(_) => {}
            }
        }
    }
    let mut pairs: Vec<(UserIdx, UserIdx)> = holder
        .iter()
        .enumerate()
        .filter_map(|(j, h)| h.map(|i| (prefs.a_users[i], prefs.b_users[j])))
        .collect();
    pairs.sort_unstable();
    StableMatching { pairs }
}

/// Every acceptable pair `(a, b)` not matched together where both strictly
/// prefer each other to their current partner (or to being unmatched).
pub fn check_stability(matching: &StableMatching, prefs: &Preferences) -> Vec<BlockingPair> {
    let (n, m) = (prefs.n(), prefs.m());
    let mut partner_of_a = vec![None; n];
    let mut partner_of_b = vec![None; m];
    for &(a, b) in &matching.pairs {
        if let (Some(i), Some(j)) = (
            Preferences::local(&prefs.a_users, a),
            Preferences::local(&prefs.b_users, b),
        ) {
            partner_of_a[i] = Some(j);
            partner_of_b[j] = Some(i);
        }
    }
    let mut blocking = Vec::new();
    for (i, &current_a) in partner_of_a.iter().enumerate() {
        for (j, &current_b) in partner_of_b.iter().enumerate() {
            if current_a == Some(j) || !prefs.acceptable(i, j) {
                continue;
            }
            let a_wants = current_a.is_none_or(|p| prefs.a_prefers(i, j) < prefs.a_prefers(i, p));
            let b_wants = current_b.is_none_or(|p| prefs.b_prefers(j, i) < prefs.b_prefers(j, p));
            if a_wants && b_wants {
                blocking.push(BlockingPair {
                    a: prefs.a_users[i],
                    b: prefs.b_users[j],
                });
            }
        }
    }
    blocking
}

/// Directional-score preferences with every already-contacted pair removed,
/// in either direction.
pub fn round_one_preferences(graph: &InteractionGraph) -> Preferences {
    let table = ScoreTable::compute(graph, Default::default());
    let mut prefs = Preferences::from_graph(graph, &table);
    for (x, y) in graph.edges() {
        let (a, b) = if graph.side(x) == Side::A {
            (x, y)
        } else {
            (y, x)
        };
        let i = Preferences::local(&prefs.a_users, a).expect("A user");
        let j = Preferences::local(&prefs.b_users, b).expect("B user");
        prefs.forbid(i, j);
    }
    prefs
}

/// `k` rounds of deferred acceptance; list entries are scored `1/round`.
pub fn recommend_gale_shapley(
    graph: &InteractionGraph,
    k: usize,
) -> Result<(Recommendations, Vec<StableMatching>)> {
    check_k(k)?;
    let mut prefs = round_one_preferences(graph);
    let mut items: Vec<Vec<Scored>> = vec![Vec::new(); graph.num_users()];
    let mut rounds = Vec::with_capacity(k);
    for round in 1..=k {
        let matching = deferred_acceptance(&prefs);
        if matching.pairs.is_empty() {
            break;
        }
        let score = 1.0 / round as f64;
        for &(a, b) in &matching.pairs {
            items[a].push(Scored::new(b, score));
            items[b].push(Scored::new(a, score));
            let i = Preferences::local(&prefs.a_users, a).expect("matched A user");
            let j = Preferences::local(&prefs.b_users, b).expect("matched B user");
            prefs.forbid(i, j);
        }
        rounds.push(matching);
    }
    let lists = items
        .into_iter()
        .enumerate()
        .map(|(u, items)| RecommendationList::new(u, items))
        .collect();
    Ok((Recommendations::new(k, lists), rounds))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn prefs_from(a: &[&[usize]], b: &[&[usize]]) -> Preferences {
        // Turn rankings into scores: earlier position scores higher.
        let score = |lists: Vec<Vec<usize>>| {
            move |i: usize, j: usize| {
                lists[i]
                    .iter()
                    .position(|&x| x == j)
                    .map_or(0.0, |p| 1.0 / (p + 1) as f64)
            }
        };
        let a_lists: Vec<Vec<usize>> = a.iter().map(|l| l.to_vec()).collect();
        let b_lists: Vec<Vec<usize>> = b.iter().map(|l| l.to_vec()).collect();
        let n = a.len();
        Preferences::from_scores(
            (0..n).collect(),
            (n..n + b.len()).collect(),
            score(a_lists),
            score(b_lists),
        )
    }

    #[test]
    fn singleton_matches() {
        let p = prefs_from(&[&[0]], &[&[0]]);
        let m = deferred_acceptance(&p);
        assert_eq!(m.pairs, vec![(0, 1)]);
        assert!(check_stability(&m, &p).is_empty());
    }

    #[test]
    fn a_optimal_on_classic_instance() {
        // a0: b0 > b1, a1: b1 > b0; b0: a1 > a0, b1: a0 > a1.
        // Both perfect matchings are stable; proposers get their first choice.
        let p = prefs_from(&[&[0, 1], &[1, 0]], &[&[1, 0], &[0, 1]]);
        let m = deferred_acceptance(&p);
        assert_eq!(m.pairs, vec![(0, 2), (1, 3)]);
        assert!(check_stability(&m, &p).is_empty());
    }

    #[test]
    fn swapped_partners_block() {
        // a0: b0 > b1, a1: b0 > b1; b0: a0 > a1, b1: a0 > a1.
        let p = prefs_from(&[&[0, 1], &[0, 1]], &[&[0, 1], &[0, 1]]);
        let m = deferred_acceptance(&p);
        assert_eq!(m.pairs, vec![(0, 2), (1, 3)]);
        let swapped = StableMatching {
            pairs: vec![(0, 3), (1, 2)],
        };
        assert_eq!(
            check_stability(&swapped, &p),
            vec![BlockingPair { a: 0, b: 2 }]
        );
    }

    #[test]
    fn empty_matching_blocked_by_mutual_interest() {
        let p = prefs_from(&[&[0], &[]], &[&[0]]);
        assert_eq!(
            check_stability(&StableMatching::default(), &p),
            vec![BlockingPair { a: 0, b: 2 }]
        );
    }

    #[test]
    fn every_round_is_stable() {
        let sides = vec![Side::A, Side::A, Side::A, Side::B, Side::B, Side::B];
        let edges = [
            (0, 3),
            (1, 3),
            (1, 4),
            (2, 4),
            (2, 5),
            (3, 0),
            (4, 1),
            (5, 2),
            (3, 1),
        ];
        let graph = InteractionGraph::from_edges(sides, edges);
        let (recs, rounds) = recommend_gale_shapley(&graph, 3).unwrap();
        recs.validate(&graph).unwrap();
        assert!(!rounds.is_empty());
        for l in &recs.lists {
            for (r, s) in l.items.iter().enumerate() {
                assert_eq!(s.score, 1.0 / (r + 1) as f64);
                assert!(!graph.contacted(l.user, s.candidate));
            }
        }
        let mut prefs = round_one_preferences(&graph);
        for m in &rounds {
            assert!(check_stability(m, &prefs).is_empty());
            for &(a, b) in &m.pairs {
                prefs.forbid(a, b - 3);
            }
        }
        assert!(recommend_gale_shapley(&graph, 0).is_err());
    }
}
