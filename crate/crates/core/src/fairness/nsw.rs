//! Exposure rebalancing by greedy local search on the log Nash social
//! welfare `Σ_v ln(1 + x_v)`, where `x_v` counts the lists containing `v`.

use crate::dataset::UserIdx;
use crate::error::{Error, Result};
use crate::recommenders::Scored;

/// Exhaustive search refuses instances with more slots than this.
pub const BRUTE_FORCE_SLOT_LIMIT: usize = 10;

/// One recommendation list under rebalancing, with the candidates that may
/// be swapped into it.
#[derive(Debug, Clone, PartialEq)]
pub struct BalanceList {
    pub owner: UserIdx,
    pub items: Vec<Scored>,
    pub pool: Vec<Scored>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BalanceParams {
    /// A swapped-in candidate must score at least this fraction of the
    /// slot's original occupant.
    pub quality_floor: f64,
    /// Upper bound on executed swaps.
    pub max_iters: usize,
}

/// Extra feasibility and ordering rules for candidate swaps.
pub trait SwapPolicy {
    /// Whether `candidate` may replace `list.items[pos]`.
    fn admissible(&self, _list: &BalanceList, _pos: usize, _candidate: &Scored) -> bool {
        true
    }

    /// Breaks ties between equally improving swaps for one slot; higher wins.
    fn preference(&self, _list: &BalanceList, _pos: usize, candidate: &Scored) -> f64 {
        candidate.score
    }
}

/// Only the quality floor and strict objective improvement apply.
#[derive(Debug, Clone, Copy, Default)]
pub struct Unconstrained;

impl SwapPolicy for Unconstrained {}

#[derive(Debug, Clone, PartialEq)]
pub struct BalanceOutcome {
    pub swaps: usize,
    /// Objective before the first swap and after every swap.
    pub trajectory: Vec<f64>,
    /// False when `max_iters` stopped the search early.
    pub converged: bool,
}

impl BalanceOutcome {
    pub fn final_objective(&self) -> f64 {
        *self
            .trajectory
            .last()
            .expect("trajectory starts with the initial value")
    }
}

/// `Σ ln(1 + x)` over an exposure vector.
pub fn log_nsw(exposure: &[usize]) -> f64 {
    exposure.iter().map(|&x| (x as f64).ln_1p()).sum()
}

fn exposure_of(lists: &[BalanceList], universe: usize) -> Vec<usize> {
    let mut x = vec![0usize; universe];
    for l in lists {
        for s in &l.items {
            x[s.candidate] += 1;
        }
    }
    x
}

/// Greedy swap search on the log-NSW objective.
///
/// Sweeps the lists in order, visiting each list's slots from the bottom up.
/// For a slot holding `v_out`, a pool member `v_in` not already in the list
/// is an improving swap iff `x_in + 1 < x_out`; among improving swaps that
/// pass the quality floor and the policy, the one with the largest gain
/// (lowest `x_in`) is taken, ties broken by policy preference, then lower
/// id. Stops after a
/// sweep without swaps or after `max_iters` swaps. Lists are re-sorted by
/// score on return.
pub fn nsw_greedy_balance(
    lists: &mut [BalanceList],
    universe: usize,
    params: BalanceParams,
    policy: &impl SwapPolicy,
) -> BalanceOutcome {
    let mut exposure = exposure_of(lists, universe);
    let mut objective = log_nsw(&exposure);
    let mut trajectory = vec![objective];
    let original: Vec<Vec<f64>> = lists
        .iter()
        .map(|l| l.items.iter().map(|s| s.score).collect())
        .collect();
    let mut swaps = 0usize;
    let mut converged = false;

    'sweeps: loop {
        let mut swapped = false;
        for li in 0..lists.len() {
            for pos in (0..lists[li].items.len()).rev() {
                if swaps >= params.max_iters {
                    break 'sweeps;
                }
                let list = &lists[li];
                let out = list.items[pos];
                let x_out = exposure[out.candidate];
                let floor = params.quality_floor * original[li][pos];
                // (exposure, lazily computed preference, candidate)
                let mut best: Option<(usize, Option<f64>, Scored)> = None;
                for cand in &list.pool {
                    let x_in = exposure[cand.candidate];
                    if x_in + 1 >= x_out
                        || best.as_ref().is_some_and(|b| x_in > b.0)
                        || cand.score < floor
                        || list.items.iter().any(|s| s.candidate == cand.candidate)
                        || !policy.admissible(list, pos, cand)
                    {
                        continue;
                    }
                    match &mut best {
                        Some((bx, bp, bc)) if x_in == *bx => {
                            let held = *bp.get_or_insert_with(|| policy.preference(list, pos, bc));
                            let pref = policy.preference(list, pos, cand);
                            if pref > held || (pref == held && cand.candidate < bc.candidate) {
                                best = Some((x_in, Some(pref), *cand));
                            }
                        }
                        _ => best = Some((x_in, None, *cand)),
                    }
                }
                if let Some((x_in, _, cand)) = best {
                    let gain = ((x_in + 2) as f64).ln()
                        - ((x_in + 1) as f64).ln()
                        - (((x_out + 1) as f64).ln() - (x_out as f64).ln());
                    debug_assert!(gain > 0.0, "swap must strictly improve the objective");
                    exposure[out.candidate] -= 1;
                    exposure[cand.candidate] += 1;
                    objective += gain;
                    trajectory.push(objective);
                    lists[li].items[pos] = cand;
                    swaps += 1;
                    swapped = true;
                }
            }
        }
        if !swapped {
            converged = true;
            break;
        }
    }

    for l in lists.iter_mut() {
        crate::recommenders::sort_ranked(&mut l.items);
    }
    BalanceOutcome {
        swaps,
        trajectory,
        converged,
    }
}

/// Exact maximum of `Σ ln(1 + x_v)` when every list may hold any
/// `items.len()` distinct members of its pool (current items included).
pub fn nsw_brute_force(lists: &[BalanceList], universe: usize) -> Result<f64> {
    let slots: usize = lists.iter().map(|l| l.items.len()).sum();
    if slots > BRUTE_FORCE_SLOT_LIMIT {
        return Err(Error::InstanceTooLarge {
            slots,
            limit: BRUTE_FORCE_SLOT_LIMIT,
        });
    }
    let options: Vec<(Vec<UserIdx>, usize)> = lists
        .iter()
        .map(|l| {
            let mut cands: Vec<UserIdx> =
                l.pool.iter().chain(&l.items).map(|s| s.candidate).collect();
            cands.sort_unstable();
            cands.dedup();
            (cands, l.items.len())
        })
        .collect();
    let mut exposure = vec![0usize; universe];
    let mut best = f64::NEG_INFINITY;
    enumerate(&options, 0, 0, 0, &mut exposure, &mut best);
    Ok(if best.is_finite() { best } else { 0.0 })
}

/// Depth-first over lists, choosing `need` candidates of list `li` in
/// increasing position order starting at `from`.
fn enumerate(
    options: &[(Vec<UserIdx>, usize)],
    li: usize,
    from: usize,
    chosen: usize,
    exposure: &mut [usize],
    best: &mut f64,
) {
    if li == options.len() {
        *best = best.max(log_nsw(exposure));
        return;
    }
    let (cands, need) = &options[li];
    if chosen == *need {
        enumerate(options, li + 1, 0, 0, exposure, best);
        return;
    }
    for i in from..cands.len() {
        if cands.len() - i < need - chosen {
            break;
        }
        exposure[cands[i]] += 1;
        enumerate(options, li, i + 1, chosen + 1, exposure, best);
        exposure[cands[i]] -= 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn list(owner: usize, items: &[(usize, f64)], pool: &[(usize, f64)]) -> BalanceList {
        let s = |v: &[(usize, f64)]| v.iter().map(|&(c, x)| Scored::new(c, x)).collect();
        BalanceList {
            owner,
            items: s(items),
            pool: s(pool),
        }
    }

    const LOOSE: BalanceParams = BalanceParams {
        quality_floor: 0.0,
        max_iters: 1000,
    };

    #[test]
    fn uniform_exposure_is_noop() {
        let mut lists = vec![
            list(0, &[(10, 0.5)], &[(10, 0.5), (11, 0.5)]),
            list(1, &[(11, 0.5)], &[(10, 0.5), (11, 0.5)]),
        ];
        let before = lists.clone();
        let out = nsw_greedy_balance(&mut lists, 12, LOOSE, &Unconstrained);
        assert_eq!(out.swaps, 0);
        assert!(out.converged);
        assert_eq!(lists, before);
    }

    #[test]
    fn spreads_doubled_exposure() {
        // exposures (2, 0) -> (1, 1): ln3 + ln1 = 1.0986 -> 2 ln2 = 1.3863
        let mut lists = vec![
            list(0, &[(10, 0.5)], &[(10, 0.5), (11, 0.5)]),
            list(1, &[(10, 0.5)], &[(10, 0.5), (11, 0.5)]),
        ];
        let out = nsw_greedy_balance(&mut lists, 12, LOOSE, &Unconstrained);
        assert_eq!(out.swaps, 1);
        assert!((out.trajectory[0] - 3f64.ln()).abs() < 1e-12);
        assert!((out.final_objective() - 2.0 * 2f64.ln()).abs() < 1e-12);
        let mut got: Vec<usize> = lists.iter().map(|l| l.items[0].candidate).collect();
        got.sort();
        assert_eq!(got, vec![10, 11]);
    }

    #[test]
    fn binding_quality_floor_blocks_swaps() {
        let mut lists = vec![
            list(0, &[(10, 0.5)], &[(10, 0.5), (11, 0.4)]),
            list(1, &[(10, 0.5)], &[(10, 0.5), (11, 0.4)]),
        ];
        let before = lists.clone();
        let params = BalanceParams {
            quality_floor: 1.0,
            max_iters: 100,
        };
        let out = nsw_greedy_balance(&mut lists, 12, params, &Unconstrained);
        assert_eq!(out.swaps, 0);
        assert_eq!(lists, before);
    }

    #[test]
    fn max_iters_stops_early() {
        let pool: Vec<(usize, f64)> = (10..20).map(|c| (c, 0.5)).collect();
        let mut lists: Vec<BalanceList> = (0..6).map(|u| list(u, &[(10, 0.5)], &pool)).collect();
        let params = BalanceParams {
            quality_floor: 0.0,
            max_iters: 2,
        };
        let out = nsw_greedy_balance(&mut lists, 20, params, &Unconstrained);
        assert_eq!(out.swaps, 2);
        assert!(!out.converged);
    }

    #[test]
    fn brute_force_examples() {
        let one = vec![list(0, &[(10, 0.5)], &[(10, 0.5), (11, 0.5)])];
        assert!((nsw_brute_force(&one, 12).unwrap() - 2f64.ln()).abs() < 1e-12);
        let two = vec![
            list(0, &[(10, 0.5)], &[(10, 0.5), (11, 0.5)]),
            list(1, &[(10, 0.5)], &[(10, 0.5), (11, 0.5)]),
        ];
        assert!((nsw_brute_force(&two, 12).unwrap() - 2.0 * 2f64.ln()).abs() < 1e-12);
        assert_eq!(nsw_brute_force(&[], 0).unwrap(), 0.0);
        let big: Vec<BalanceList> = (0..11).map(|u| list(u, &[(20, 0.1)], &[])).collect();
        assert!(matches!(
            nsw_brute_force(&big, 21),
            Err(Error::InstanceTooLarge { .. })
        ));
    }
}
