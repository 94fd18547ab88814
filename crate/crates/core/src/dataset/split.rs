use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{derive_matches, InteractionGraph, MatchSet};
use crate::error::{Error, Result};

/// Training graph plus the matches held out of it.
#[derive(Debug, Clone)]
pub struct DatasetSplit {
    pub train: InteractionGraph,
    pub heldout: MatchSet,
    pub split_fraction: f64,
}

/// Holds out `ceil(fraction * M)` matches, removing both directed edges of
/// each from the training graph. One-sided edges are left untouched.
pub fn split_holdout(graph: &InteractionGraph, fraction: f64, seed: u64) -> Result<DatasetSplit> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::config(format!(
            "split fraction {fraction} not in (0, 1)"
        )));
    }
    let matches: Vec<_> = derive_matches(graph).iter().collect();
    if matches.is_empty() {
        return Err(Error::NoMatches);
    }
    let take = ((fraction * matches.len() as f64) - 1e-9).ceil().max(1.0) as usize;
    let mut shuffled = matches;
    shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let heldout: MatchSet = shuffled.into_iter().take(take).collect();
    Ok(DatasetSplit {
        train: graph.without_matches(&heldout),
        heldout,
        split_fraction: fraction,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::Side;

    /// 10 A users, 10 B users, a_i <-> b_i mutual plus a_i -> b_{i+1}.
    fn ten_matches() -> InteractionGraph {
        let sides: Vec<Side> = (0..20)
            .map(|i| if i < 10 { Side::A } else { Side::B })
            .collect();
        let mut edges = Vec::new();
        for i in 0..10 {
            edges.push((i, 10 + i));
            edges.push((10 + i, i));
            edges.push((i, 10 + (i + 1) % 10));
        }
        InteractionGraph::from_edges(sides, edges)
    }

    #[test]
    fn ceiling_count() {
        let g = ten_matches();
        let s = split_holdout(&g, 0.2, 7).unwrap();
        assert_eq!(s.heldout.len(), 2);
        assert!(derive_matches(&s.train)
            .iter()
            .all(|(a, b)| !s.heldout.contains(a, b)));
        assert_eq!(s.train.edge_count(), 30 - 4);
    }

    #[test]
    fn deterministic() {
        let g = ten_matches();
        let a = split_holdout(&g, 0.3, 42).unwrap();
        let b = split_holdout(&g, 0.3, 42).unwrap();
        assert_eq!(a.heldout, b.heldout);
        assert_eq!(a.train, b.train);
    }

    #[test]
    fn single_match_high_fraction() {
        let sides = vec![Side::A, Side::A, Side::B, Side::B];
        let g = InteractionGraph::from_edges(sides, vec![(0, 2), (2, 0), (1, 2), (0, 3)]);
        let s = split_holdout(&g, 0.99, 1).unwrap();
        assert_eq!(s.heldout.len(), 1);
        assert!(s.heldout.contains(0, 2));
        assert!(s.train.contacted(1, 2) && s.train.contacted(0, 3));
        assert!(!s.train.contacted(0, 2) && !s.train.contacted(2, 0));
    }

    #[test]
    fn errors() {
        let sides = vec![Side::A, Side::B];
        let g = InteractionGraph::from_edges(sides, vec![(0, 1)]);
        assert!(matches!(split_holdout(&g, 0.5, 0), Err(Error::NoMatches)));
        assert!(matches!(
            split_holdout(&ten_matches(), 1.0, 0),
            Err(Error::Config(_))
        ));
        assert!(matches!(
            split_holdout(&ten_matches(), 0.0, 0),
            Err(Error::Config(_))
        ));
    }
}
