//! Jaccard similarities, directional preference scores and reciprocal scores.
//!
//! Interest similarity compares what two *same-side* users contacted;
//! attractiveness similarity compares who contacted them. A directional
//! score `s(u -> v)` averages the interest similarity between `u` and the
//! users who already contacted `v`. The reciprocal score is the harmonic mean
//! of both directions, and is zero whenever either direction is zero.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{InteractionGraph, Side, UserIdx};
use crate::error::{Error, Result};

/// Predicted preference of one user for an opposite-side user, in [0, 1].
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default)]
pub struct DirectionalScore(f64);

impl DirectionalScore {
    pub fn value(self) -> f64 {
        self.0
    }
}

/// Harmonic mean of two directional scores, in [0, 1].
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default)]
pub struct ReciprocalScore(f64);

impl ReciprocalScore {
    pub fn value(self) -> f64 {
        self.0
    }
}

/// Which aggregation produces the reciprocal score.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scorer {
    /// Harmonic mean of `s(u -> v)` and `s(v -> u)`.
    #[default]
    Harmonic,
    /// Harmonic mean of `u`'s mean interest similarity to `Re(v)` and its
    /// mean attractiveness similarity to `Se(v)`.
    Algorithmic,
}

impl std::str::FromStr for Scorer {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "harmonic" => Ok(Scorer::Harmonic),
            "algorithmic" => Ok(Scorer::Algorithmic),
            other => Err(format!("unknown scorer '{other}'")),
        }
    }
}

/// |a ∩ b| / |a ∪ b| over sorted, deduplicated slices; 0 when both are empty.
pub fn jaccard(a: &[UserIdx], b: &[UserIdx]) -> f64 {
    if a.is_empty() && b.is_empty() {
        return 0.0;
    }
    let (mut i, mut j, mut inter) = (0, 0, 0usize);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                inter += 1;
                i += 1;
                j += 1;
            }
        }
    }
    inter as f64 / (a.len() + b.len() - inter) as f64
}

/// `2ab / (a + b)`, with the zero limit taken when either input is 0.
pub fn harmonic_mean(a: f64, b: f64) -> f64 {
    if a <= 0.0 || b <= 0.0 {
        0.0
    } else {
        2.0 * a * b / (a + b)
    }
}

fn same_side(graph: &InteractionGraph, x: UserIdx, y: UserIdx) -> Result<()> {
    if graph.side(x) != graph.side(y) {
        return Err(Error::OppositeSides(format!("#{x}"), format!("#{y}")));
    }
    Ok(())
}

fn opposite_sides(graph: &InteractionGraph, x: UserIdx, y: UserIdx) -> Result<()> {
    if graph.side(x) == graph.side(y) {
        return Err(Error::SameSide(format!("#{x}"), format!("#{y}")));
    }
    Ok(())
}

/// Jaccard overlap of `Se(x)` and `Se(y)` for same-side users.
pub fn interest_similarity(graph: &InteractionGraph, x: UserIdx, y: UserIdx) -> Result<f64> {
    same_side(graph, x, y)?;
    Ok(jaccard(graph.sent(x), graph.sent(y)))
}

/// Jaccard overlap of `Re(x)` and `Re(y)` for same-side users.
pub fn attractiveness_similarity(graph: &InteractionGraph, x: UserIdx, y: UserIdx) -> Result<f64> {
    same_side(graph, x, y)?;
    Ok(jaccard(graph.received(x), graph.received(y)))
}

fn mean_similarity(over: &[UserIdx], mut sim: impl FnMut(UserIdx) -> f64) -> f64 {
    if over.is_empty() {
        return 0.0;
    }
    over.iter().map(|&z| sim(z)).sum::<f64>() / over.len() as f64
}

/// `s(u -> v)`: mean interest similarity of `u` to the users who contacted `v`.
pub fn directional_score(
    graph: &InteractionGraph,
    u: UserIdx,
    v: UserIdx,
) -> Result<DirectionalScore> {
    opposite_sides(graph, u, v)?;
    let su = graph.sent(u);
    Ok(DirectionalScore(mean_similarity(graph.received(v), |z| {
        jaccard(su, graph.sent(z))
    })))
}

pub fn reciprocal_score(
    graph: &InteractionGraph,
    u: UserIdx,
    v: UserIdx,
) -> Result<ReciprocalScore> {
    let forward = directional_score(graph, u, v)?.value();
    let backward = directional_score(graph, v, u)?.value();
    Ok(ReciprocalScore(harmonic_mean(forward, backward)))
}

/// Harmonic mean of `u`'s mean interest similarity to `Re(v)` and its mean
/// attractiveness similarity to `Se(v)`. Not symmetric in `u` and `v`.
pub fn algorithmic_reciprocal_score(
    graph: &InteractionGraph,
    u: UserIdx,
    v: UserIdx,
) -> Result<ReciprocalScore> {
    opposite_sides(graph, u, v)?;
    let interest = directional_score(graph, u, v)?.value();
    let ru = graph.received(u);
    let attract = mean_similarity(graph.sent(v), |z| jaccard(ru, graph.received(z)));
    Ok(ReciprocalScore(harmonic_mean(interest, attract)))
}

/// Dense directional and reciprocal scores for every cross-side pair.
///
/// Rows are computed in parallel, each with a fixed summation order, so the
/// table is identical regardless of thread count.
#[derive(Debug, Clone)]
pub struct ScoreTable {
    scorer: Scorer,
    n: usize,
    m: usize,
    local: Vec<usize>,
    sides: Vec<Side>,
    /// s(a -> b), row-major n x m.
    dir_ab: Vec<f64>,
    /// s(b -> a), row-major m x n.
    dir_ba: Vec<f64>,
    /// Attractiveness-side operand, only for [`Scorer::Algorithmic`].
    att_ab: Vec<f64>,
    att_ba: Vec<f64>,
}

impl ScoreTable {
    pub fn compute(graph: &InteractionGraph, scorer: Scorer) -> ScoreTable {
        let n = graph.n();
        let m = graph.m();
        let dir_ab = Self::rows(graph, Side::A, Relation::Interest);
        let dir_ba = Self::rows(graph, Side::B, Relation::Interest);
        let (att_ab, att_ba) = match scorer {
            Scorer::Harmonic => (Vec::new(), Vec::new()),
            Scorer::Algorithmic => (
                Self::rows(graph, Side::A, Relation::Attractiveness),
                Self::rows(graph, Side::B, Relation::Attractiveness),
            ),
        };
        ScoreTable {
            scorer,
            n,
            m,
            local: (0..graph.num_users())
                .map(|u| graph.local_index(u))
                .collect(),
            sides: graph.sides().to_vec(),
            dir_ab,
            dir_ba,
            att_ab,
            att_ba,
        }
    }

    fn rows(graph: &InteractionGraph, side: Side, relation: Relation) -> Vec<f64> {
        let users = graph.members(side);
        let rows: Vec<Vec<f64>> = users
            .par_iter()
            .map_init(
                || (Vec::new(), vec![0u32; graph.num_users()]),
                |(touched, overlap), &u| relation.row(graph, u, touched, overlap),
            )
            .collect();
        rows.concat()
    }

    pub fn scorer(&self) -> Scorer {
        self.scorer
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// `s(u -> v)` for opposite-side users.
    pub fn directional(&self, u: UserIdx, v: UserIdx) -> f64 {
        let (lu, lv) = (self.local[u], self.local[v]);
        match self.sides[u] {
            Side::A => self.dir_ab[lu * self.m + lv],
            Side::B => self.dir_ba[lu * self.n + lv],
        }
    }

    fn attractiveness_operand(&self, u: UserIdx, v: UserIdx) -> f64 {
        let (lu, lv) = (self.local[u], self.local[v]);
        match self.sides[u] {
            Side::A => self.att_ab[lu * self.m + lv],
            Side::B => self.att_ba[lu * self.n + lv],
        }
    }

    /// Reciprocal score of `v` from `u`'s perspective.
    pub fn score(&self, u: UserIdx, v: UserIdx) -> f64 {
        match self.scorer {
            Scorer::Harmonic => harmonic_mean(self.directional(u, v), self.directional(v, u)),
            Scorer::Algorithmic => {
                harmonic_mean(self.directional(u, v), self.attractiveness_operand(u, v))
            }
        }
    }

    /// Approximate bytes held by the dense tables.
    pub fn memory_bytes(&self) -> usize {
        (self.dir_ab.len() + self.dir_ba.len() + self.att_ab.len() + self.att_ba.len())
            * std::mem::size_of::<f64>()
    }
}

/// Same-side users with positive interest similarity to `u` (excluding `u`),
/// ordered by similarity descending, then index ascending.
pub fn interest_neighbours(graph: &InteractionGraph, u: UserIdx) -> Vec<(UserIdx, f64)> {
    let mut overlap: BTreeMap<UserIdx, usize> = BTreeMap::new();
    for &t in graph.sent(u) {
        for &z in graph.received(t) {
            *overlap.entry(z).or_default() += 1;
        }
    }
    let du = graph.sent(u).len();
    let mut out: Vec<(UserIdx, f64)> = overlap
        .into_iter()
        .filter(|&(z, _)| z != u)
        .map(|(z, inter)| (z, inter as f64 / (du + graph.sent(z).len() - inter) as f64))
        .collect();
    out.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    out
}

#[derive(Debug, Clone, Copy)]
enum Relation {
    /// mean over z ∈ Re(v) of J(Se(u), Se(z))
    Interest,
    /// mean over z ∈ Se(v) of J(Re(u), Re(z))
    Attractiveness,
}

impl Relation {
    /// The set compared by the similarity; also the inverse of `pool`.
    fn profile(self, graph: &InteractionGraph, x: UserIdx) -> &[UserIdx] {
        match self {
            Relation::Interest => graph.sent(x),
            Relation::Attractiveness => graph.received(x),
        }
    }

    /// Users averaged over when scoring target `v`.
    fn pool(self, graph: &InteractionGraph, v: UserIdx) -> &[UserIdx] {
        match self {
            Relation::Interest => graph.received(v),
            Relation::Attractiveness => graph.sent(v),
        }
    }

    /// Mean similarity from `u` to each opposite-side user's pool.
    ///
    /// Overlaps come from the inverted index (`pool` inverts `profile`), and
    /// each same-side neighbour `z` adds its similarity to every `v` with
    /// `z ∈ pool(v)`, i.e. every `v ∈ profile(z)`. `overlap` must be all zero
    /// on entry and is left all zero.
    fn row(
        self,
        graph: &InteractionGraph,
        u: UserIdx,
        touched: &mut Vec<UserIdx>,
        overlap: &mut [u32],
    ) -> Vec<f64> {
        let targets = graph.members(graph.side(u).opposite());
        let mut row = vec![0.0; targets.len()];
        touched.clear();
        for &t in self.profile(graph, u) {
            for &z in self.pool(graph, t) {
                if overlap[z] == 0 {
                    touched.push(z);
                }
                overlap[z] += 1;
            }
        }
        touched.sort_unstable();
        let du = self.profile(graph, u).len();
        for &z in touched.iter() {
            let inter = overlap[z] as usize;
            overlap[z] = 0;
            let sim = inter as f64 / (du + self.profile(graph, z).len() - inter) as f64;
            for &v in self.profile(graph, z) {
                row[graph.local_index(v)] += sim;
            }
        }
        for (slot, &v) in row.iter_mut().zip(targets) {
            let size = self.pool(graph, v).len();
            *slot = if size == 0 { 0.0 } else { *slot / size as f64 };
        }
        row
    }
}
