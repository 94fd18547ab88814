//! Group-fairness filtering, the statistical-parity score, the weighted
//! quality/diversity/fairness objective, and exposure rebalancing.

mod nsw;
mod subgradient;
mod submodular;

use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, Side, UserIdx};
use crate::error::{Error, Result};
use crate::recommenders::{RecommendationList, Scored};

pub use nsw::{
    log_nsw, nsw_brute_force, nsw_greedy_balance, BalanceList, BalanceOutcome, BalanceParams,
    SwapPolicy, Unconstrained, BRUTE_FORCE_SLOT_LIMIT,
};
pub use subgradient::{nsw_subgradient, BudgetedLogUtility, ConcaveObjective, SubgradientTrace};
pub use submodular::{submodularity_check, Violation, SUBMODULAR_UNIVERSE_LIMIT};

/// Which profile field defines the demographic group.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "index")]
pub enum GroupAttr {
    #[default]
    Group,
    /// Zero-based position in the categorical attribute vector.
    Attribute(usize),
}

/// Dense group index for every user plus per-side population shares.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupLabels {
    names: Vec<String>,
    of: Vec<usize>,
    population: [Vec<f64>; 2],
}

impl GroupLabels {
    pub fn from_dataset(dataset: &Dataset, attr: GroupAttr) -> Result<GroupLabels> {
        let mut raw = Vec::with_capacity(dataset.len());
        for p in dataset.profiles() {
            let label = match attr {
                GroupAttr::Group => p.group.as_str(),
                GroupAttr::Attribute(i) => {
                    p.attributes.get(i).map(String::as_str).ok_or_else(|| {
                        Error::config(format!("user '{}' has no attribute {}", p.id, i + 1))
                    })?
                }
            };
            raw.push((label, p.side));
        }
        let mut names: Vec<String> = raw.iter().map(|(l, _)| l.to_string()).collect();
        names.sort();
        names.dedup();
        let of = raw
            .iter()
            .map(|(l, _)| names.binary_search_by(|n| n.as_str().cmp(l)).unwrap())
            .collect();
        let sides: Vec<Side> = raw.iter().map(|&(_, s)| s).collect();
        Ok(GroupLabels::new(names, of, &sides))
    }

    /// Builds labels from explicit group indices. Population shares are the
    /// empirical group frequencies on each side.
    pub fn new(names: Vec<String>, of: Vec<usize>, sides: &[Side]) -> GroupLabels {
        let mut population = [vec![0.0; names.len()], vec![0.0; names.len()]];
        let mut totals = [0usize; 2];
        for (&g, &side) in of.iter().zip(sides) {
            let s = side_slot(side);
            population[s][g] += 1.0;
            totals[s] += 1;
        }
        for s in 0..2 {
            if totals[s] > 0 {
                for share in &mut population[s] {
                    *share /= totals[s] as f64;
                }
            }
        }
        GroupLabels {
            names,
            of,
            population,
        }
    }

    pub fn num_groups(&self) -> usize {
        self.names.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn group(&self, u: UserIdx) -> usize {
        self.of[u]
    }

    /// P(g | side): share of each group among the users of `side`.
    pub fn population(&self, side: Side) -> &[f64] {
        &self.population[side_slot(side)]
    }
}

fn side_slot(side: Side) -> usize {
    match side {
        Side::A => 0,
        Side::B => 1,
    }
}

/// Tolerance on the gap between a candidate pool's group distribution and
/// the population it is drawn from.
#[derive(Debug, Clone, PartialEq)]
pub struct FairnessConstraint {
    pub epsilon: f64,
    pub population: Vec<f64>,
}

impl FairnessConstraint {
    pub fn new(epsilon: f64, population: Vec<f64>) -> Result<Self> {
        if !(0.0..=1.0).contains(&epsilon) {
            return Err(Error::config(format!("epsilon {epsilon} outside [0, 1]")));
        }
        let sum: f64 = population.iter().sum();
        if (sum - 1.0).abs() > 1e-9 || population.iter().any(|&p| p < 0.0) {
            return Err(Error::config(format!(
                "population shares sum to {sum}, expected 1"
            )));
        }
        Ok(FairnessConstraint {
            epsilon,
            population,
        })
    }

    /// Most members of group `g` allowed in a prefix of length `t`: the
    /// rounded-up fair share, or the epsilon-widened share if larger.
    fn upper_quota(&self, g: usize, t: usize) -> usize {
        let p = self.population[g];
        let fair = (p * t as f64 - 1e-9).ceil().max(0.0) as usize;
        let widened = ((p + self.epsilon) * t as f64 + 1e-9).floor() as usize;
        fair.max(widened)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveWeights {
    pub quality: f64,
    pub diversity: f64,
    pub fairness: f64,
}

impl Default for ObjectiveWeights {
    fn default() -> Self {
        ObjectiveWeights {
            quality: 0.6,
            diversity: 0.2,
            fairness: 0.2,
        }
    }
}

impl ObjectiveWeights {
    pub fn new(quality: f64, diversity: f64, fairness: f64) -> Result<Self> {
        let w = ObjectiveWeights {
            quality,
            diversity,
            fairness,
        };
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<()> {
        let all = [self.quality, self.diversity, self.fairness];
        if all.iter().any(|w| !(*w >= 0.0 && w.is_finite())) || all.iter().sum::<f64>() <= 0.0 {
            return Err(Error::config(
                "objective weights must be non-negative with a positive sum",
            ));
        }
        Ok(())
    }
}

/// Candidates that survived [`fairness_filter`], or the partial pool when it
/// could not reach the required length.
#[derive(Debug, Clone, PartialEq)]
pub enum FilterOutcome {
    Feasible(Vec<Scored>),
    Infeasible { admitted: Vec<Scored> },
}

/// Greedy score-ordered admission under a running group quota.
///
/// Candidates are scanned in the given (descending score) order. One of
/// group `g` is admitted while the admitted prefix of length `t` keeps at
/// most `max(ceil(p_g t), floor((p_g + epsilon) t))` members of `g`. Scanning
/// stops once `pool_size` candidates are admitted. The outcome is infeasible
/// when fewer than `required` were admitted.
pub fn fairness_filter(
    candidates: &[Scored],
    group_of: impl Fn(UserIdx) -> usize,
    constraint: &FairnessConstraint,
    pool_size: usize,
    required: usize,
) -> FilterOutcome {
    let mut counts = vec![0usize; constraint.population.len()];
    let mut admitted = Vec::with_capacity(pool_size.min(candidates.len()));
    for c in candidates {
        if admitted.len() >= pool_size {
            break;
        }
        let g = group_of(c.candidate);
        if counts[g] < constraint.upper_quota(g, admitted.len() + 1) {
            counts[g] += 1;
            admitted.push(*c);
        }
    }
    if admitted.len() < required.min(pool_size) {
        FilterOutcome::Infeasible { admitted }
    } else {
        FilterOutcome::Feasible(admitted)
    }
}

/// Share of each group among `members`.
pub fn group_distribution(members: impl IntoIterator<Item = usize>, num_groups: usize) -> Vec<f64> {
    let mut counts = vec![0.0; num_groups];
    let mut total = 0usize;
    for g in members {
        counts[g] += 1.0;
        total += 1;
    }
    if total > 0 {
        for c in &mut counts {
            *c /= total as f64;
        }
    }
    counts
}

/// Largest per-group gap between two distributions.
pub fn linf_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// Half the L1 gap between two distributions.
pub fn total_variation(a: &[f64], b: &[f64]) -> f64 {
    0.5 * a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>()
}

/// Statistical-parity score of one list: 1 minus the total variation between
/// its group distribution and `population`.
pub fn list_fairness(list: &[Scored], labels: &GroupLabels, population: &[f64]) -> f64 {
    let dist = group_distribution(
        list.iter().map(|s| labels.group(s.candidate)),
        labels.num_groups(),
    );
    1.0 - total_variation(&dist, population)
}

/// Per-user statistical-parity score averaged over users with a non-empty
/// list. Each list is compared with the population of the side it
/// recommends from.
pub fn fairness_score<'a>(
    lists: impl IntoIterator<Item = &'a RecommendationList>,
    labels: &GroupLabels,
    side_of: impl Fn(UserIdx) -> Side,
) -> Result<f64> {
    let mut total = 0.0;
    let mut count = 0usize;
    for list in lists {
        if list.items.is_empty() {
            continue;
        }
        let population = labels.population(side_of(list.user).opposite());
        total += list_fairness(&list.items, labels, population);
        count += 1;
    }
    if count == 0 {
        return Err(Error::EmptyRecommendations);
    }
    Ok(total / count as f64)
}

fn entropy(dist: &[f64]) -> f64 {
    dist.iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| -p * p.ln())
        .sum()
}

/// Terms of the weighted objective for adding one candidate to a list.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObjectiveTerms {
    pub quality: f64,
    /// Entropy gain of the list's group distribution, normalised by ln |G|.
    pub diversity: f64,
    /// Reduction in total variation from the population. An empty list
    /// counts as total variation 1.
    pub fairness: f64,
}

impl ObjectiveTerms {
    pub fn weighted(&self, w: &ObjectiveWeights) -> f64 {
        w.quality * self.quality + w.diversity * self.diversity + w.fairness * self.fairness
    }
}

/// Quality, diversity and fairness of adding `candidate` (with reciprocal
/// score `quality`) to the groups already in `current`.
pub fn objective_terms(
    current: &[usize],
    candidate_group: usize,
    quality: f64,
    constraint: &FairnessConstraint,
) -> ObjectiveTerms {
    let k = constraint.population.len();
    let before = group_distribution(current.iter().copied(), k);
    let after = group_distribution(current.iter().copied().chain([candidate_group]), k);
    let diversity = if k > 1 {
        (entropy(&after) - entropy(&before)) / (k as f64).ln()
    } else {
        0.0
    };
    let tv_before = if current.is_empty() {
        1.0
    } else {
        total_variation(&before, &constraint.population)
    };
    let tv_after = total_variation(&after, &constraint.population);
    ObjectiveTerms {
        quality,
        diversity,
        fairness: tv_before - tv_after,
    }
}

/// `w1 Quality + w2 Diversity + w3 Fairness` for adding `v` to `current`.
pub fn multi_objective_score(
    labels: &GroupLabels,
    current: &[Scored],
    v: Scored,
    weights: &ObjectiveWeights,
    constraint: &FairnessConstraint,
) -> f64 {
    let groups: Vec<usize> = current.iter().map(|s| labels.group(s.candidate)).collect();
    objective_terms(&groups, labels.group(v.candidate), v.score, constraint).weighted(weights)
}
