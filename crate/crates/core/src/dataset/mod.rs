//! User profiles, interaction records and the bipartite contact graph.
//!
//! A [`Dataset`] owns the validated profile table and the deduplicated
//! interaction stream. Everything downstream works on an
//! [`InteractionGraph`], which addresses users by their dense index into the
//! (id-sorted) profile table.

mod io;
mod split;
mod synthetic;

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub use io::{load_dataset, load_interactions, load_profiles, write_dataset, DataFormat};
pub use split::{split_holdout, DatasetSplit};
pub use synthetic::{generate_synthetic, SyntheticConfig, TargetSampler};

/// Dense index of a user in a [`Dataset`]'s profile table.
pub type UserIdx = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Side {
    A,
    B,
}

impl Side {
    pub fn opposite(self) -> Side {
        match self {
            Side::A => Side::B,
            Side::B => Side::A,
        }
    }

    fn slot(self) -> usize {
        match self {
            Side::A => 0,
            Side::B => 1,
        }
    }
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Side::A => "A",
            Side::B => "B",
        })
    }
}

impl std::str::FromStr for Side {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim() {
            "A" | "a" => Ok(Side::A),
            "B" | "b" => Ok(Side::B),
            other => Err(format!("unknown side '{other}' (expected A or B)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserProfile {
    pub id: String,
    pub side: Side,
    /// Demographic group label.
    pub group: String,
    /// Categorical attributes, positionally aligned across users.
    pub attributes: Vec<String>,
    /// Latent attractiveness in [0, 1]; zero for loaded data without the column.
    pub attractiveness: f64,
    /// Latent activity, non-negative.
    pub activity: f64,
}

impl UserProfile {
    pub fn new(id: impl Into<String>, side: Side, group: impl Into<String>) -> Self {
        UserProfile {
            id: id.into(),
            side,
            group: group.into(),
            attributes: Vec::new(),
            attractiveness: 0.0,
            activity: 0.0,
        }
    }

    pub fn with_attributes<I, S>(mut self, attrs: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.attributes = attrs.into_iter().map(Into::into).collect();
        self
    }

    pub fn with_latent(mut self, attractiveness: f64, activity: f64) -> Self {
        self.attractiveness = attractiveness;
        self.activity = activity;
        self
    }

    fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.attractiveness) {
            return Err(Error::InvalidProfile {
                id: self.id.clone(),
                message: format!("attractiveness {} outside [0, 1]", self.attractiveness),
            });
        }
        if !(self.activity >= 0.0 && self.activity.is_finite()) {
            return Err(Error::InvalidProfile {
                id: self.id.clone(),
                message: format!("activity {} must be finite and >= 0", self.activity),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InteractionRecord {
    pub from: String,
    pub to: String,
    pub timestamp: u64,
}

impl InteractionRecord {
    pub fn new(from: impl Into<String>, to: impl Into<String>, timestamp: u64) -> Self {
        InteractionRecord {
            from: from.into(),
            to: to.into(),
            timestamp,
        }
    }
}

/// Validated profile table plus deduplicated interaction records.
///
/// Profiles are kept sorted by id so that index order and id order agree;
/// every deterministic tie-break in the crate relies on that.
#[derive(Debug, Clone)]
pub struct Dataset {
    profiles: Vec<UserProfile>,
    records: Vec<InteractionRecord>,
    index: HashMap<String, UserIdx>,
}

impl Dataset {
    /// Validates the inputs and collapses duplicate `(from, to)` pairs to
    /// their earliest timestamp.
    pub fn new(mut profiles: Vec<UserProfile>, records: Vec<InteractionRecord>) -> Result<Self> {
        profiles.sort_by(|a, b| a.id.cmp(&b.id));
        let mut index = HashMap::with_capacity(profiles.len());
        for (i, p) in profiles.iter().enumerate() {
            p.validate()?;
            if index.insert(p.id.clone(), i).is_some() {
                return Err(Error::DuplicateUser(p.id.clone()));
            }
        }

        let mut earliest: HashMap<(UserIdx, UserIdx), usize> = HashMap::new();
        let mut kept: Vec<InteractionRecord> = Vec::with_capacity(records.len());
        for rec in records {
            let from = *index
                .get(&rec.from)
                .ok_or_else(|| Error::UnknownUser(rec.from.clone()))?;
            let to = *index
                .get(&rec.to)
                .ok_or_else(|| Error::UnknownUser(rec.to.clone()))?;
            if from == to {
                return Err(Error::SelfEdge(rec.from));
            }
            if profiles[from].side == profiles[to].side {
                return Err(Error::SameSideEdge {
                    from: rec.from,
                    to: rec.to,
                });
            }
            match earliest.get(&(from, to)) {
                Some(&pos) => {
                    if rec.timestamp < kept[pos].timestamp {
                        kept[pos].timestamp = rec.timestamp;
                    }
                }
                None => {
                    earliest.insert((from, to), kept.len());
                    kept.push(rec);
                }
            }
        }
        kept.sort_by(|a, b| {
            a.timestamp
                .cmp(&b.timestamp)
                .then_with(|| a.from.cmp(&b.from))
                .then_with(|| a.to.cmp(&b.to))
        });

        Ok(Dataset {
            profiles,
            records: kept,
            index,
        })
    }

    pub fn profiles(&self) -> &[UserProfile] {
        &self.profiles
    }

    pub fn records(&self) -> &[InteractionRecord] {
        &self.records
    }

    pub fn profile(&self, idx: UserIdx) -> &UserProfile {
        &self.profiles[idx]
    }

    pub fn index_of(&self, id: &str) -> Option<UserIdx> {
        self.index.get(id).copied()
    }

    pub fn len(&self) -> usize {
        self.profiles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.profiles.is_empty()
    }

    pub fn graph(&self) -> InteractionGraph {
        build_graph(self)
    }

    /// Group label of every user, by index.
    pub fn groups(&self) -> Vec<&str> {
        self.profiles.iter().map(|p| p.group.as_str()).collect()
    }

    /// SHA-256 over a canonical rendering of profiles and records.
    pub fn digest(&self) -> String {
        let mut h = Sha256::new();
        for p in &self.profiles {
            h.update(p.id.as_bytes());
            h.update([0, p.side.slot() as u8]);
            h.update(p.group.as_bytes());
            h.update([0]);
            for a in &p.attributes {
                h.update(a.as_bytes());
                h.update([0]);
            }
            h.update(p.attractiveness.to_le_bytes());
            h.update(p.activity.to_le_bytes());
        }
        h.update([0xff]);
        for r in &self.records {
            h.update(r.from.as_bytes());
            h.update([0]);
            h.update(r.to.as_bytes());
            h.update([0]);
            h.update(r.timestamp.to_le_bytes());
        }
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Immutable directed bipartite contact graph.
///
/// `sent(x)` is the set of users `x` contacted, `received(x)` the set of
/// users who contacted `x`. Both are sorted index slices.
#[derive(Debug, Clone, PartialEq)]
pub struct InteractionGraph {
    sides: Vec<Side>,
    local: Vec<usize>,
    members: [Vec<UserIdx>; 2],
    sent: Vec<Vec<UserIdx>>,
    received: Vec<Vec<UserIdx>>,
}

/// Builds the contact graph of a validated dataset.
pub fn build_graph(dataset: &Dataset) -> InteractionGraph {
    let sides: Vec<Side> = dataset.profiles.iter().map(|p| p.side).collect();
    let edges = dataset
        .records
        .iter()
        .map(|r| (dataset.index[r.from.as_str()], dataset.index[r.to.as_str()]));
    InteractionGraph::from_edges(sides, edges)
}

impl InteractionGraph {
    /// Builds a graph from per-user sides and directed edges given as index
    /// pairs. Duplicate edges collapse. Edges must join opposite sides.
    pub fn from_edges(
        sides: Vec<Side>,
        edges: impl IntoIterator<Item = (UserIdx, UserIdx)>,
    ) -> Self {
        let n = sides.len();
        let mut local = vec![0; n];
        let mut members: [Vec<UserIdx>; 2] = [Vec::new(), Vec::new()];
        for (u, side) in sides.iter().enumerate() {
            let slot = side.slot();
            local[u] = members[slot].len();
            members[slot].push(u);
        }
        let mut sent = vec![Vec::new(); n];
        let mut received = vec![Vec::new(); n];
        for (from, to) in edges {
            debug_assert_ne!(sides[from], sides[to], "edge must cross sides");
            sent[from].push(to);
            received[to].push(from);
        }
        for list in sent.iter_mut().chain(received.iter_mut()) {
            list.sort_unstable();
            list.dedup();
        }
        InteractionGraph {
            sides,
            local,
            members,
            sent,
            received,
        }
    }

    /// Total number of users on both sides.
    pub fn num_users(&self) -> usize {
        self.sides.len()
    }

    /// |U_A|.
    pub fn n(&self) -> usize {
        self.members[0].len()
    }

    /// |U_B|.
    pub fn m(&self) -> usize {
        self.members[1].len()
    }

    pub fn side(&self, u: UserIdx) -> Side {
        self.sides[u]
    }

    pub fn sides(&self) -> &[Side] {
        &self.sides
    }

    /// Users on `side`, in ascending index order.
    pub fn members(&self, side: Side) -> &[UserIdx] {
        &self.members[side.slot()]
    }

    /// Position of `u` within its own side.
    pub fn local_index(&self, u: UserIdx) -> usize {
        self.local[u]
    }

    /// Se(u): users contacted by `u`.
    pub fn sent(&self, u: UserIdx) -> &[UserIdx] {
        &self.sent[u]
    }

    /// Re(u): users who contacted `u`.
    pub fn received(&self, u: UserIdx) -> &[UserIdx] {
        &self.received[u]
    }

    pub fn contacted(&self, from: UserIdx, to: UserIdx) -> bool {
        self.sent[from].binary_search(&to).is_ok()
    }

    pub fn edge_count(&self) -> usize {
        self.sent.iter().map(Vec::len).sum()
    }

    /// All directed edges in (from, to) index order.
    pub fn edges(&self) -> impl Iterator<Item = (UserIdx, UserIdx)> + '_ {
        self.sent
            .iter()
            .enumerate()
            .flat_map(|(u, targets)| targets.iter().map(move |&v| (u, v)))
    }

    /// Copy of the graph with both directed edges of every listed pair removed.
    pub fn without_matches(&self, removed: &MatchSet) -> InteractionGraph {
        let edges = self.edges().filter(|&(u, v)| {
            let key = if self.sides[u] == Side::A {
                (u, v)
            } else {
                (v, u)
            };
            !removed.contains(key.0, key.1)
        });
        InteractionGraph::from_edges(self.sides.clone(), edges.collect::<Vec<_>>())
    }
}

/// Mutually-contacted pairs, each stored once as `(a, b)` with `a` on side A.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchSet {
    pairs: BTreeSet<(UserIdx, UserIdx)>,
}

impl MatchSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, a: UserIdx, b: UserIdx) -> bool {
        self.pairs.insert((a, b))
    }

    pub fn contains(&self, a: UserIdx, b: UserIdx) -> bool {
        self.pairs.contains(&(a, b))
    }

    /// Lookup with the pair given in either orientation.
    pub fn contains_unordered(&self, x: UserIdx, y: UserIdx) -> bool {
        self.pairs.contains(&(x, y)) || self.pairs.contains(&(y, x))
    }

    /// M, the number of matches.
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (UserIdx, UserIdx)> + '_ {
        self.pairs.iter().copied()
    }

    /// Held-out partners of every user, indexed by user.
    pub fn partners(&self, num_users: usize) -> Vec<Vec<UserIdx>> {
        let mut out = vec![Vec::new(); num_users];
        for &(a, b) in &self.pairs {
            out[a].push(b);
            out[b].push(a);
        }
        out
    }
}

impl FromIterator<(UserIdx, UserIdx)> for MatchSet {
    fn from_iter<T: IntoIterator<Item = (UserIdx, UserIdx)>>(iter: T) -> Self {
        MatchSet {
            pairs: iter.into_iter().collect(),
        }
    }
}

/// Pairs with contacts in both directions.
pub fn derive_matches(graph: &InteractionGraph) -> MatchSet {
    graph
        .members(Side::A)
        .iter()
        .flat_map(|&a| {
            graph
                .sent(a)
                .iter()
                .filter(move |&&b| graph.contacted(b, a))
                .map(move |&b| (a, b))
        })
        .collect()
}
