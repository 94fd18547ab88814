mod common;

use common::*;
use fairmatch::dataset::{Dataset, Side, SyntheticConfig, UserIdx};
use fairmatch::experiment::{recommend, ExperimentConfig};
use fairmatch::fairness::{
    log_nsw, nsw_brute_force, nsw_greedy_balance, BalanceParams, GroupAttr, GroupLabels,
    Unconstrained,
};
use fairmatch::recommenders::{deferred_acceptance, round_one_preferences, Algorithm};
use fairmatch::similarity::{
    attractiveness_similarity, harmonic_mean, interest_similarity, ScoreTable, Scorer,
};
use proptest::prelude::*;
use rand::Rng;

fn market(seed: u64, n: usize, m: usize) -> Dataset {
    Dataset::synthetic(&SyntheticConfig {
        n,
        m,
        mean_contacts: 4.0,
        seed,
        ..SyntheticConfig::default()
    })
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn lists_are_well_formed(seed in 0u64..10_000, n in 2usize..25, m in 2usize..25, k in 1usize..8) {
        let dataset = market(seed, n, m);
        let graph = dataset.graph();
        let labels = GroupLabels::from_dataset(&dataset, GroupAttr::Group).unwrap();
        let mut config = ExperimentConfig::new(seed);
        config.k = k;
        for algorithm in Algorithm::ALL {
            let recs = recommend(algorithm, &dataset, &graph, &labels, &config).unwrap();
            prop_assert_eq!(recs.k, k);
            prop_assert_eq!(recs.lists.len(), graph.num_users());
            if let Err(e) = recs.validate(&graph) {
                return Err(TestCaseError::fail(format!("{algorithm}: {e}")));
            }
            for list in &recs.lists {
                for s in &list.items {
                    prop_assert!(!graph.contacted(list.user, s.candidate), "{} lists a contacted user", algorithm);
                    if algorithm == Algorithm::GaleShapley {
                        prop_assert!(!graph.contacted(s.candidate, list.user));
                    }
                }
            }
        }
    }

    #[test]
    fn jaccard_is_symmetric(seed in 0u64..10_000, n in 1usize..12, m in 1usize..12) {
        let mut rng = rng(seed);
        let (_, graph) = random_graph(&mut rng, n, m, 0.3);
        for x in 0..n + m {
            for y in 0..n + m {
                if graph.side(x) != graph.side(y) {
                    continue;
                }
                let (i, a) = (interest_similarity(&graph, x, y).unwrap(), attractiveness_similarity(&graph, x, y).unwrap());
                prop_assert_eq!(i, interest_similarity(&graph, y, x).unwrap());
                prop_assert_eq!(a, attractiveness_similarity(&graph, y, x).unwrap());
                prop_assert!((0.0..=1.0).contains(&i) && (0.0..=1.0).contains(&a));
                if x == y && !graph.sent(x).is_empty() {
                    prop_assert_eq!(i, 1.0);
                }
            }
        }
    }

    #[test]
    fn harmonic_mean_sandwich(a in 1e-6f64..1.0, b in 1e-6f64..1.0, bump in 1e-6f64..0.5) {
        let h = harmonic_mean(a, b);
        let (lo, hi) = (a.min(b), a.max(b));
        prop_assert!(lo <= h + 1e-15);
        prop_assert!(h <= (2.0 * lo).min(hi) + 1e-15);
        prop_assert!(harmonic_mean(a + bump, b) > h);
        prop_assert!(harmonic_mean(a, b + bump) > h);
        prop_assert_eq!(harmonic_mean(a, 0.0), 0.0);
    }

    #[test]
    fn nsw_never_decreases_and_conserves_slots(seed in 0u64..10_000) {
        let mut rng = rng(seed);
        let (mut lists, universe) = random_balance_instance(&mut rng, 6, 4, 12);
        let slots: usize = lists.iter().map(|l| l.items.len()).sum();
        let out = nsw_greedy_balance(&mut lists, universe, BalanceParams { quality_floor: 0.0, max_iters: 1000 }, &Unconstrained);
        prop_assert!(out.trajectory.windows(2).all(|w| w[1] > w[0]));
        prop_assert_eq!(out.trajectory.len(), out.swaps + 1);
        let mut exposure = vec![0usize; universe];
        for l in &lists {
            prop_assert_eq!(l.items.iter().map(|s| s.candidate).collect::<std::collections::BTreeSet<_>>().len(), l.items.len());
            for s in &l.items {
                prop_assert!(l.pool.iter().any(|p| p.candidate == s.candidate));
                exposure[s.candidate] += 1;
            }
        }
        prop_assert_eq!(exposure.iter().sum::<usize>(), slots);
        prop_assert!((log_nsw(&exposure) - out.final_objective()).abs() < 1e-9);
    }
}

#[test]
fn nsw_half_approximation_on_small_instances() {
    let mut rng = rng(17);
    let mut checked = 0;
    while checked < 300 {
        let (lists, universe) = random_balance_instance(&mut rng, 4, 3, 6);
        let Ok(optimum) = nsw_brute_force(&lists, universe) else {
            continue;
        };
        let mut greedy = lists.clone();
        let out = nsw_greedy_balance(
            &mut greedy,
            universe,
            BalanceParams {
                quality_floor: 0.0,
                max_iters: 10_000,
            },
            &Unconstrained,
        );
        assert!(out.converged);
        assert!(out.final_objective() <= optimum + 1e-9);
        assert!(
            out.final_objective().exp() >= 0.5 * optimum.exp() - 1e-9,
            "{lists:?}"
        );
        checked += 1;
    }
}

/// Among score pairs with a fixed sum, the harmonic mean ranks pairs exactly
/// as their product does.
#[test]
fn harmonic_mean_follows_product_on_fixed_sum_grid() {
    let steps = 40;
    for total in 1..=2 * steps {
        let pairs: Vec<(f64, f64)> = (0..=total)
            .filter(|&i| i <= steps && total - i <= steps)
            .map(|i| (i as f64 / steps as f64, (total - i) as f64 / steps as f64))
            .collect();
        let by_hm = pairs
            .iter()
            .copied()
            .max_by(|x, y| harmonic_mean(x.0, x.1).total_cmp(&harmonic_mean(y.0, y.1)));
        let by_product = pairs
            .iter()
            .copied()
            .max_by(|x, y| (x.0 * x.1).total_cmp(&(y.0 * y.1)));
        let (h, p) = (by_hm.unwrap(), by_product.unwrap());
        assert!(
            (h.0 * h.1 - p.0 * p.1).abs() < 1e-12,
            "sum {total}: {h:?} vs {p:?}"
        );
        for x in &pairs {
            for y in &pairs {
                if x.0 * x.1 > y.0 * y.1 + 1e-12 {
                    assert!(harmonic_mean(x.0, x.1) > harmonic_mean(y.0, y.1));
                }
            }
        }
    }
}

/// Stability by a direct scan over all pairs, independent of the library's
/// checker. Preferences: higher directional score first, ties by lower index;
/// acceptable means positive score and no contact in either direction.
fn naive_blocking_pairs(
    graph: &fairmatch::dataset::InteractionGraph,
    table: &ScoreTable,
    pairs: &[(UserIdx, UserIdx)],
) -> Vec<(UserIdx, UserIdx)> {
    let partner = |u: UserIdx| {
        pairs.iter().find_map(|&(a, b)| {
            if a == u {
                Some(b)
            } else if b == u {
                Some(a)
            } else {
                None
            }
        })
    };
    let acceptable = |x: UserIdx, y: UserIdx| {
        table.directional(x, y) > 0.0 && !graph.contacted(x, y) && !graph.contacted(y, x)
    };
    let prefers = |x: UserIdx, y: UserIdx, current: Option<UserIdx>| match current {
        None => true,
        Some(c) => {
            let (sy, sc) = (table.directional(x, y), table.directional(x, c));
            sy > sc || (sy == sc && y < c)
        }
    };
    let mut blocking = Vec::new();
    for &a in graph.members(Side::A) {
        for &b in graph.members(Side::B) {
            if partner(a) == Some(b) || !acceptable(a, b) || !acceptable(b, a) {
                continue;
            }
            if prefers(a, b, partner(a)) && prefers(b, a, partner(b)) {
                blocking.push((a, b));
            }
        }
    }
    blocking
}

#[test]
fn round_one_matchings_have_no_blocking_pair() {
    let mut rng = rng(23);
    let mut matched = 0;
    for _ in 0..150 {
        let (n, m) = (rng.gen_range(1..=15), rng.gen_range(1..=15));
        let p = rng.gen_range(0.05..0.5);
        let (_, graph) = random_graph(&mut rng, n, m, p);
        let table = ScoreTable::compute(&graph, Scorer::Harmonic);
        let matching = deferred_acceptance(&round_one_preferences(&graph));
        let mut seen = std::collections::BTreeSet::new();
        for &(a, b) in &matching.pairs {
            assert_eq!((graph.side(a), graph.side(b)), (Side::A, Side::B));
            assert!(seen.insert(a) && seen.insert(b), "user matched twice");
            assert!(table.directional(a, b) > 0.0 && table.directional(b, a) > 0.0);
            assert!(!graph.contacted(a, b) && !graph.contacted(b, a));
        }
        assert_eq!(
            naive_blocking_pairs(&graph, &table, &matching.pairs),
            vec![]
        );
        matched += matching.pairs.len();
    }
    assert!(matched > 300, "only {matched} pairs matched in total");
}
