use std::collections::BTreeMap;

use rayon::prelude::*;

use super::{check_k, open_candidates, top_k, RecommendationList, Recommendations, Scored};
use crate::dataset::{InteractionGraph, UserIdx, UserProfile};
use crate::error::{Error, Result};
use crate::similarity::harmonic_mean;

/// Attribute values interned per attribute position.
struct Encoded {
    values: Vec<Vec<usize>>,
    cardinality: Vec<usize>,
}

fn encode(profiles: &[UserProfile]) -> Result<Encoded> {
    let width = profiles.first().map_or(0, |p| p.attributes.len());
    if let Some(p) = profiles.iter().find(|p| p.attributes.len() != width) {
        return Err(Error::InvalidProfile {
            id: p.id.clone(),
            message: format!("expected {width} attributes, found {}", p.attributes.len()),
        });
    }
    let mut dictionaries: Vec<BTreeMap<&str, usize>> = vec![BTreeMap::new(); width];
    let values = profiles
        .iter()
        .map(|p| {
            p.attributes
                .iter()
                .zip(dictionaries.iter_mut())
                .map(|(a, dict)| {
                    let next = dict.len();
                    *dict.entry(a.as_str()).or_insert(next)
                })
                .collect()
        })
        .collect();
    Ok(Encoded {
        values,
        cardinality: dictionaries.iter().map(BTreeMap::len).collect(),
    })
}

/// Per attribute position, the share of `Se(u)` holding each value.
fn preference(enc: &Encoded, graph: &InteractionGraph, u: UserIdx) -> Vec<Vec<f64>> {
    let sent = graph.sent(u);
    let mut freq: Vec<Vec<f64>> = enc.cardinality.iter().map(|&c| vec![0.0; c]).collect();
    for &v in sent {
        for (j, &val) in enc.values[v].iter().enumerate() {
            freq[j][val] += 1.0;
        }
    }
    if !sent.is_empty() {
        let total = sent.len() as f64;
        freq.iter_mut().flatten().for_each(|f| *f /= total);
    }
    freq
}

fn compat(pref: &[Vec<f64>], target: &[usize]) -> f64 {
    if pref.is_empty() {
        return 0.0;
    }
    pref.iter().zip(target).map(|(f, &val)| f[val]).sum::<f64>() / pref.len() as f64
}

/// `c(u -> v)`: mean over attribute positions of how often `u` contacted
/// users sharing `v`'s value. Zero when `u` contacted nobody.
pub fn compatibility(
    profiles: &[UserProfile],
    graph: &InteractionGraph,
    u: UserIdx,
    v: UserIdx,
) -> Result<f64> {
    let enc = encode(profiles)?;
    Ok(compat(&preference(&enc, graph, u), &enc.values[v]))
}

/// Attribute-preference recommender; ranks by the harmonic mean of both
/// compatibilities. `profiles` must be in user-index order.
pub fn recommend_recon(
    profiles: &[UserProfile],
    graph: &InteractionGraph,
    k: usize,
) -> Result<Recommendations> {
    check_k(k)?;
    if profiles.len() != graph.num_users() {
        return Err(Error::config(format!(
            "{} profiles for {} users",
            profiles.len(),
            graph.num_users()
        )));
    }
    let enc = encode(profiles)?;
    let prefs: Vec<Vec<Vec<f64>>> = (0..graph.num_users())
        .into_par_iter()
        .map(|u| preference(&enc, graph, u))
        .collect();
    let lists = (0..graph.num_users())
        .into_par_iter()
        .map(|u| {
            let scored = open_candidates(graph, u)
                .map(|v| {
                    let s = harmonic_mean(
                        compat(&prefs[u], &enc.values[v]),
                        compat(&prefs[v], &enc.values[u]),
                    );
                    Scored::new(v, s)
                })
                .collect();
            RecommendationList::new(u, top_k(scored, k))
        })
        .collect();
    Ok(Recommendations::new(k, lists))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::Side;

    fn profile(id: &str, side: Side, attrs: &[&str]) -> UserProfile {
        UserProfile::new(id, side, "g").with_attributes(attrs.iter().copied())
    }

    // A: u=0; B: 1..=4
    fn market() -> (Vec<UserProfile>, InteractionGraph) {
        let profiles = vec![
            profile("a0", Side::A, &["x", "p"]),
            profile("b1", Side::B, &["x", "p"]),
            profile("b2", Side::B, &["y", "q"]),
            profile("b3", Side::B, &["x", "q"]),
            profile("b4", Side::B, &["y", "r"]),
        ];
        let sides = profiles.iter().map(|p| p.side).collect();
        (
            profiles,
            InteractionGraph::from_edges(sides, [(0, 1), (0, 2), (0, 3), (0, 4), (1, 0)]),
        )
    }

    #[test]
    fn mean_of_frequencies() {
        // Se(a0) attr1: x,y,x,y -> x=0.5; attr2: p,q,q,r -> r=0.25
        let (profiles, g) = market();
        let sides = g.sides().to_vec();
        let mut edges: Vec<_> = g.edges().collect();
        edges.retain(|&e| e != (0, 4));
        let g2 = InteractionGraph::from_edges(sides, edges);
        assert!((compatibility(&profiles, &g, 0, 4).unwrap() - 0.375).abs() < 1e-15);
        assert!((compatibility(&profiles, &g2, 0, 4).unwrap() - (1.0 / 3.0) / 2.0).abs() < 1e-15);
    }

    #[test]
    fn degenerate_and_cold_start() {
        let (profiles, g) = market();
        assert_eq!(compatibility(&profiles, &g, 1, 0).unwrap(), 1.0);
        assert_eq!(compatibility(&profiles, &g, 2, 0).unwrap(), 0.0);
    }

    #[test]
    fn lists_are_well_formed() {
        let (profiles, g) = market();
        let recs = recommend_recon(&profiles, &g, 3).unwrap();
        recs.validate(&g).unwrap();
        // a0 contacted every B user
        assert!(recs.list(0).unwrap().items.is_empty());
        // b2 never contacted anyone, so every score is 0
        assert!(recs.list(2).unwrap().items.iter().all(|s| s.score == 0.0));
    }

    #[test]
    fn ragged_attributes_rejected() {
        let (mut profiles, g) = market();
        profiles[2].attributes.pop();
        assert!(matches!(
            recommend_recon(&profiles, &g, 1),
            Err(Error::InvalidProfile { .. })
        ));
    }
}
