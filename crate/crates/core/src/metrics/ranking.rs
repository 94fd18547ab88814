use crate::dataset::{InteractionGraph, MatchSet, Side, UserIdx};
use crate::error::{Error, Result};
use crate::recommenders::{RecommendationList, Recommendations};

fn hits(list: &RecommendationList, heldout: &MatchSet, k: usize) -> usize {
    list.items
        .iter()
        .take(k)
        .filter(|s| heldout.contains_unordered(list.user, s.candidate))
        .count()
}

/// `(hits / (lists * k), hits / M)` over the given lists.
pub fn precision_recall_at_k<'a>(
    lists: impl IntoIterator<Item = &'a RecommendationList>,
    heldout: &MatchSet,
    k: usize,
) -> Result<(f64, f64)> {
    if heldout.is_empty() {
        return Err(Error::EmptyHeldout);
    }
    let (mut total, mut count) = (0usize, 0usize);
    for list in lists {
        total += hits(list, heldout, k);
        count += 1;
    }
    let precision = if count == 0 || k == 0 {
        0.0
    } else {
        total as f64 / (count * k) as f64
    };
    Ok((precision, total as f64 / heldout.len() as f64))
}

/// Held-out matches found from the A side, from the B side, and from both.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct HitCounts {
    pub from_a: usize,
    pub from_b: usize,
    pub from_both: usize,
}

impl HitCounts {
    /// Distinct matches found from either side.
    pub fn union(&self) -> usize {
        self.from_a + self.from_b - self.from_both
    }
}

pub fn count_hits(recs: &Recommendations, heldout: &MatchSet) -> HitCounts {
    let listed = |u: UserIdx, v: UserIdx| {
        recs.list(u)
            .is_some_and(|l| l.items.iter().take(recs.k).any(|s| s.candidate == v))
    };
    let mut counts = HitCounts::default();
    for (a, b) in heldout.iter() {
        let (x, y) = (listed(a, b), listed(b, a));
        counts.from_a += x as usize;
        counts.from_b += y as usize;
        counts.from_both += (x && y) as usize;
    }
    counts
}

/// `(CRecall, CPrecision)` from hit counts: the de-duplicated hits over
/// `matches`, and over all `(n + m) * k` slots.
pub fn coverage_from_counts(
    counts: HitCounts,
    matches: usize,
    n: usize,
    m: usize,
    k: usize,
) -> Result<(f64, f64)> {
    if matches == 0 {
        return Err(Error::EmptyHeldout);
    }
    let union = counts.union() as f64;
    let slots = ((n + m) * k) as f64;
    Ok((
        union / matches as f64,
        if slots > 0.0 { union / slots } else { 0.0 },
    ))
}

pub fn coverage_adjusted(
    recs: &Recommendations,
    graph: &InteractionGraph,
    heldout: &MatchSet,
) -> Result<(f64, f64)> {
    coverage_from_counts(
        count_hits(recs, heldout),
        heldout.len(),
        graph.n(),
        graph.m(),
        recs.k,
    )
}

/// Binary-relevance NDCG of the first `k` entries of `ranked`, with
/// `num_relevant` relevant items in total. Zero when nothing is relevant.
pub fn ndcg_at_k(
    ranked: &[UserIdx],
    relevant: impl Fn(UserIdx) -> bool,
    num_relevant: usize,
    k: usize,
) -> f64 {
    let discount = |i: usize| 1.0 / ((i + 2) as f64).log2();
    let dcg: f64 = ranked
        .iter()
        .take(k)
        .enumerate()
        .filter(|&(_, &v)| relevant(v))
        .map(|(i, _)| discount(i))
        .sum();
    let idcg: f64 = (0..num_relevant.min(k)).map(discount).sum();
    if idcg == 0.0 {
        0.0
    } else {
        dcg / idcg
    }
}

/// Mean NDCG@K over `side`'s users that have at least one held-out partner.
pub fn mean_ndcg(
    recs: &Recommendations,
    graph: &InteractionGraph,
    heldout: &MatchSet,
    side: Side,
) -> f64 {
    let partners = heldout.partners(graph.num_users());
    let (mut total, mut count) = (0.0, 0usize);
    for &u in graph.members(side) {
        if partners[u].is_empty() {
            continue;
        }
        let ranked: Vec<UserIdx> = recs
            .list(u)
            .map(|l| l.items.iter().map(|s| s.candidate).collect())
            .unwrap_or_default();
        total += ndcg_at_k(
            &ranked,
            |v| partners[u].contains(&v),
            partners[u].len(),
            recs.k,
        );
        count += 1;
    }
    if count == 0 {
        0.0
    } else {
        total / count as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::recommenders::Scored;

    fn list(user: UserIdx, items: &[UserIdx]) -> RecommendationList {
        RecommendationList::new(user, items.iter().map(|&c| Scored::new(c, 1.0)).collect())
    }

    #[test]
    fn precision_recall_by_hand() {
        let heldout: MatchSet = [(0, 10), (1, 11), (2, 12), (3, 13)].into_iter().collect();
        let lists = [
            list(0, &[10, 20, 21, 22, 23]),
            list(1, &[24, 25, 26, 27, 28]),
        ];
        let (p, r) = precision_recall_at_k(&lists, &heldout, 5).unwrap();
        assert!((p - 0.1).abs() < 1e-15);
        assert!((r - 0.25).abs() < 1e-15);
        let miss = [list(0, &[20])];
        assert_eq!(
            precision_recall_at_k(&miss, &heldout, 1).unwrap(),
            (0.0, 0.0)
        );
        assert!(matches!(
            precision_recall_at_k(&lists, &MatchSet::new(), 5),
            Err(Error::EmptyHeldout)
        ));
    }

    #[test]
    fn coverage_by_hand() {
        let counts = HitCounts {
            from_a: 3,
            from_b: 2,
            from_both: 1,
        };
        let (cr, cp) = coverage_from_counts(counts, 5, 10, 10, 2).unwrap();
        assert!((cr - 0.8).abs() < 1e-15);
        assert!((cp - 0.1).abs() < 1e-15);
        assert!(coverage_from_counts(counts, 0, 10, 10, 2).is_err());
    }

    #[test]
    fn every_match_from_both_sides() {
        let heldout: MatchSet = [(0, 2), (1, 3)].into_iter().collect();
        let recs = Recommendations::new(
            1,
            vec![list(0, &[2]), list(1, &[3]), list(2, &[0]), list(3, &[1])],
        );
        let counts = count_hits(&recs, &heldout);
        assert_eq!(
            counts,
            HitCounts {
                from_a: 2,
                from_b: 2,
                from_both: 2
            }
        );
        assert_eq!(coverage_from_counts(counts, 2, 2, 2, 1).unwrap().0, 1.0);
    }

    #[test]
    fn ndcg_examples() {
        assert_eq!(ndcg_at_k(&[1, 2, 3], |v| v <= 2, 2, 3), 1.0);
        let expected = 1.0 / 3f64.log2();
        assert!((ndcg_at_k(&[5, 1], |v| v == 1, 1, 2) - expected).abs() < 1e-15);
        assert!((ndcg_at_k(&[5, 1], |v| v == 1, 1, 2) - 0.6309).abs() < 1e-4);
        assert_eq!(ndcg_at_k(&[5, 6], |v| v == 1, 1, 2), 0.0);
        assert_eq!(ndcg_at_k(&[5, 6], |_| false, 0, 2), 0.0);
    }
}
