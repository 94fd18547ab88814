//! Random instance builders and naive re-implementations used as oracles.
#![allow(dead_code)]

use std::collections::BTreeSet;

use fairmatch::dataset::{InteractionGraph, MatchSet, Side, UserIdx};
use fairmatch::fairness::BalanceList;
use fairmatch::recommenders::{sort_ranked, RecommendationList, Recommendations, Scored};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Users `0..n` on side A, `n..n+m` on side B.
pub fn sides(n: usize, m: usize) -> Vec<Side> {
    (0..n)
        .map(|_| Side::A)
        .chain((0..m).map(|_| Side::B))
        .collect()
}

/// Every cross-side directed edge independently with probability `p`.
pub fn random_edges(rng: &mut impl Rng, n: usize, m: usize, p: f64) -> Vec<(UserIdx, UserIdx)> {
    let mut edges = Vec::new();
    for a in 0..n {
        for b in n..n + m {
            if rng.gen_bool(p) {
                edges.push((a, b));
            }
            if rng.gen_bool(p) {
                edges.push((b, a));
            }
        }
    }
    edges
}

pub fn random_graph(
    rng: &mut impl Rng,
    n: usize,
    m: usize,
    p: f64,
) -> (Vec<(UserIdx, UserIdx)>, InteractionGraph) {
    let edges = random_edges(rng, n, m, p);
    let graph = InteractionGraph::from_edges(sides(n, m), edges.iter().copied());
    (edges, graph)
}

/// Sent and received sets rebuilt from a raw edge list.
pub struct NaiveGraph {
    pub sides: Vec<Side>,
    pub se: Vec<BTreeSet<UserIdx>>,
    pub re: Vec<BTreeSet<UserIdx>>,
}

impl NaiveGraph {
    pub fn new(sides: Vec<Side>, edges: &[(UserIdx, UserIdx)]) -> Self {
        let mut se = vec![BTreeSet::new(); sides.len()];
        let mut re = vec![BTreeSet::new(); sides.len()];
        for &(x, y) in edges {
            se[x].insert(y);
            re[y].insert(x);
        }
        NaiveGraph { sides, se, re }
    }

    pub fn jaccard(a: &BTreeSet<UserIdx>, b: &BTreeSet<UserIdx>) -> f64 {
        let union: BTreeSet<_> = a.union(b).collect();
        if union.is_empty() {
            return 0.0;
        }
        a.intersection(b).count() as f64 / union.len() as f64
    }

    pub fn directional(&self, u: UserIdx, v: UserIdx) -> f64 {
        if self.re[v].is_empty() {
            return 0.0;
        }
        let total: f64 = self.re[v]
            .iter()
            .map(|&z| Self::jaccard(&self.se[u], &self.se[z]))
            .sum();
        total / self.re[v].len() as f64
    }

    pub fn reciprocal(&self, u: UserIdx, v: UserIdx) -> f64 {
        let (x, y) = (self.directional(u, v), self.directional(v, u));
        if x == 0.0 || y == 0.0 {
            0.0
        } else {
            2.0 / (1.0 / x + 1.0 / y)
        }
    }

    pub fn contacted_either(&self, u: UserIdx, v: UserIdx) -> bool {
        self.se[u].contains(&v) || self.se[v].contains(&u)
    }

    /// Opposite-side users `u` has not contacted.
    pub fn open(&self, u: UserIdx) -> Vec<UserIdx> {
        (0..self.sides.len())
            .filter(|&v| self.sides[v] != self.sides[u] && !self.se[u].contains(&v))
            .collect()
    }
}

/// A random subset of cross pairs, each stored as `(a, b)`.
pub fn random_heldout(rng: &mut impl Rng, n: usize, m: usize, p: f64) -> MatchSet {
    let mut set = MatchSet::new();
    for a in 0..n {
        for b in n..n + m {
            if rng.gen_bool(p) {
                set.insert(a, b);
            }
        }
    }
    if set.is_empty() {
        set.insert(rng.gen_range(0..n), n + rng.gen_range(0..m));
    }
    set
}

/// Lists of up to `k` distinct opposite-side candidates in random order with
/// strictly decreasing scores.
pub fn random_recommendations(rng: &mut impl Rng, n: usize, m: usize, k: usize) -> Recommendations {
    let sides = sides(n, m);
    let lists = (0..n + m)
        .map(|u| {
            let mut pool: Vec<UserIdx> = (0..n + m).filter(|&v| sides[v] != sides[u]).collect();
            pool.shuffle(rng);
            let len = rng.gen_range(0..=k.min(pool.len()));
            let items = pool[..len]
                .iter()
                .enumerate()
                .map(|(i, &v)| Scored::new(v, 1.0 - i as f64 / (len + 1) as f64))
                .collect();
            RecommendationList::new(u, items)
        })
        .collect();
    Recommendations::new(k, lists)
}

pub fn top_k(list: &RecommendationList, k: usize) -> Vec<UserIdx> {
    list.items.iter().take(k).map(|s| s.candidate).collect()
}

pub fn matched(heldout: &MatchSet, x: UserIdx, y: UserIdx) -> bool {
    heldout
        .iter()
        .any(|(a, b)| (a, b) == (x, y) || (a, b) == (y, x))
}

/// Precision and recall from the explicit set of hit `(owner, candidate)` pairs.
pub fn oracle_precision_recall(
    recs: &Recommendations,
    owners: &[UserIdx],
    heldout: &MatchSet,
) -> (f64, f64) {
    let mut hits = BTreeSet::new();
    for &u in owners {
        if let Some(l) = recs.list(u) {
            for v in top_k(l, recs.k) {
                if matched(heldout, u, v) {
                    hits.insert((u, v));
                }
            }
        }
    }
    let precision = if owners.is_empty() {
        0.0
    } else {
        hits.len() as f64 / (owners.len() * recs.k) as f64
    };
    (precision, hits.len() as f64 / heldout.len() as f64)
}

/// Coverage metrics from the union of matches hit from each side.
pub fn oracle_coverage(recs: &Recommendations, sides: &[Side], heldout: &MatchSet) -> (f64, f64) {
    let hit_from = |side: Side| -> BTreeSet<(UserIdx, UserIdx)> {
        heldout
            .iter()
            .filter(|&(a, b)| {
                let (owner, target) = if side == Side::A { (a, b) } else { (b, a) };
                recs.list(owner)
                    .is_some_and(|l| top_k(l, recs.k).contains(&target))
            })
            .collect()
    };
    let union: BTreeSet<_> = hit_from(Side::A)
        .union(&hit_from(Side::B))
        .copied()
        .collect();
    let slots = (sides.len() * recs.k) as f64;
    (
        union.len() as f64 / heldout.len() as f64,
        union.len() as f64 / slots,
    )
}

fn dcg(relevant: &[bool]) -> f64 {
    relevant
        .iter()
        .enumerate()
        .filter(|(_, &r)| r)
        .map(|(i, _)| 1.0 / ((i + 2) as f64).log2())
        .sum()
}

/// Best DCG over every placement of at most `relevant` relevant items in
/// `k` slots.
pub fn exhaustive_ideal_dcg(k: usize, relevant: usize) -> f64 {
    let mut best = 0.0f64;
    for mask in 0u32..(1 << k) {
        if mask.count_ones() as usize > relevant {
            continue;
        }
        let pattern: Vec<bool> = (0..k).map(|i| mask >> i & 1 == 1).collect();
        best = best.max(dcg(&pattern));
    }
    best
}

/// Mean NDCG over `owners` that have at least one held-out partner.
pub fn oracle_mean_ndcg(
    recs: &Recommendations,
    owners: &[UserIdx],
    sides: &[Side],
    heldout: &MatchSet,
) -> f64 {
    let (mut total, mut count) = (0.0, 0usize);
    for &u in owners {
        let partners: BTreeSet<UserIdx> = (0..sides.len())
            .filter(|&v| matched(heldout, u, v))
            .collect();
        if partners.is_empty() {
            continue;
        }
        let ideal = exhaustive_ideal_dcg(recs.k, partners.len());
        let ranked = recs.list(u).map(|l| top_k(l, recs.k)).unwrap_or_default();
        let flags: Vec<bool> = ranked.iter().map(|v| partners.contains(v)).collect();
        total += if ideal > 0.0 {
            dcg(&flags) / ideal
        } else {
            0.0
        };
        count += 1;
    }
    if count == 0 {
        0.0
    } else {
        total / count as f64
    }
}

/// Jain's index as `1 / (1 + CV^2)` with the population coefficient of variation.
pub fn oracle_jain(x: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    1.0 / (1.0 + var / (mean * mean))
}

/// Gap in exposure rates between the two protected classes, by explicit sets.
pub fn oracle_parity(recs: &Recommendations, protected: &[bool]) -> f64 {
    let exposed: BTreeSet<UserIdx> = recs
        .lists
        .iter()
        .flat_map(|l| l.items.iter().map(|s| s.candidate))
        .collect();
    let rate = |class: bool| {
        let members: Vec<UserIdx> = (0..protected.len())
            .filter(|&u| protected[u] == class)
            .collect();
        members.iter().filter(|u| exposed.contains(u)).count() as f64 / members.len() as f64
    };
    (rate(false) - rate(true)).abs()
}

/// Lists with pools drawn from a shared candidate universe; items are the
/// pool's best entries.
pub fn random_balance_instance(
    rng: &mut impl Rng,
    max_lists: usize,
    max_k: usize,
    max_universe: usize,
) -> (Vec<BalanceList>, usize) {
    let universe = rng.gen_range(2..=max_universe);
    let lists = (0..rng.gen_range(1..=max_lists))
        .map(|owner| {
            let mut cands: Vec<usize> = (0..universe).collect();
            cands.shuffle(rng);
            let size = rng.gen_range(1..=universe);
            let mut pool: Vec<Scored> = cands[..size]
                .iter()
                .map(|&c| Scored::new(c, rng.gen_range(0.01..1.0)))
                .collect();
            sort_ranked(&mut pool);
            let k = rng.gen_range(1..=max_k.min(size));
            BalanceList {
                owner,
                items: pool[..k].to_vec(),
                pool,
            }
        })
        .collect();
    (lists, universe)
}
