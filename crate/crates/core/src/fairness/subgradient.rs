//! Projected subgradient ascent with step `1/sqrt(t)` on a continuous
//! exposure relaxation of the log-NSW objective.

use crate::error::{Error, Result};

/// A concave objective over a closed convex domain.
pub trait ConcaveObjective {
    fn value(&self, x: &[f64]) -> f64;
    fn subgradient(&self, x: &[f64]) -> Vec<f64>;
    /// Euclidean projection onto the domain, in place.
    fn project(&self, x: &mut [f64]);
}

/// `Σ ln(1 + x_i)` on the box `[lower, upper]^d`, optionally intersected with
/// the hyperplane `Σ x_i = budget`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BudgetedLogUtility {
    pub lower: f64,
    pub upper: f64,
    pub budget: Option<f64>,
}

impl ConcaveObjective for BudgetedLogUtility {
    fn value(&self, x: &[f64]) -> f64 {
        x.iter().map(|v| v.ln_1p()).sum()
    }

    fn subgradient(&self, x: &[f64]) -> Vec<f64> {
        x.iter().map(|v| 1.0 / (1.0 + v)).collect()
    }

    fn project(&self, x: &mut [f64]) {
        let clamp = |v: f64| v.clamp(self.lower, self.upper);
        let Some(budget) = self.budget else {
            x.iter_mut().for_each(|v| *v = clamp(*v));
            return;
        };
        // Find the shift `s` with Σ clamp(x_i - s) = budget; the sum is
        // non-increasing in `s`, so bisect.
        let total = |s: f64| x.iter().map(|&v| clamp(v - s)).sum::<f64>();
        let span = self.upper - self.lower;
        let lo_init = x.iter().copied().fold(f64::INFINITY, f64::min) - self.upper - span - 1.0;
        let hi_init = x.iter().copied().fold(f64::NEG_INFINITY, f64::max) - self.lower + span + 1.0;
        let (mut lo, mut hi) = (lo_init, hi_init);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if total(mid) > budget {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let s = 0.5 * (lo + hi);
        x.iter_mut().for_each(|v| *v = clamp(*v - s));
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubgradientTrace {
    /// Best objective seen after 0, 1, ..., T steps.
    pub best: Vec<f64>,
    pub best_point: Vec<f64>,
    pub last_point: Vec<f64>,
}

impl SubgradientTrace {
    pub fn final_best(&self) -> f64 {
        *self.best.last().expect("trace holds the initial value")
    }
}

/// Runs `iterations` steps of `x <- P(x + g_t / sqrt(t))` from the
/// projection of `start`, tracking the running best objective.
pub fn nsw_subgradient(
    objective: &impl ConcaveObjective,
    start: &[f64],
    iterations: usize,
) -> Result<SubgradientTrace> {
    let mut x = start.to_vec();
    objective.project(&mut x);
    let mut best_value = objective.value(&x);
    let mut best_point = x.clone();
    let mut best = Vec::with_capacity(iterations + 1);
    best.push(best_value);
    for t in 1..=iterations {
        let g = objective.subgradient(&x);
        if g.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteGradient(t));
        }
        let step = 1.0 / (t as f64).sqrt();
        for (xi, gi) in x.iter_mut().zip(&g) {
            *xi += step * gi;
        }
        objective.project(&mut x);
        let value = objective.value(&x);
        if value > best_value {
            best_value = value;
            best_point.clone_from(&x);
        }
        best.push(best_value);
    }
    Ok(SubgradientTrace {
        best,
        best_point,
        last_point: x,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_dimensional_box() {
        let f = BudgetedLogUtility {
            lower: 0.0,
            upper: 10.0,
            budget: None,
        };
        let trace = nsw_subgradient(&f, &[0.0], 2000).unwrap();
        assert!((trace.final_best() - 11f64.ln()).abs() < 1e-9);
        assert_eq!(trace.best_point, vec![10.0]);
    }

    #[test]
    fn symmetric_budget_splits_evenly() {
        let f = BudgetedLogUtility {
            lower: 0.0,
            upper: 2.0,
            budget: Some(2.0),
        };
        let trace = nsw_subgradient(&f, &[2.0, 0.0], 10_000).unwrap();
        for v in &trace.best_point {
            assert!((v - 1.0).abs() < 1e-2, "{:?}", trace.best_point);
        }
        assert!(trace.best.windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn zero_iterations() {
        let f = BudgetedLogUtility {
            lower: 0.0,
            upper: 2.0,
            budget: Some(2.0),
        };
        let trace = nsw_subgradient(&f, &[2.0, 0.0], 0).unwrap();
        assert_eq!(trace.best, vec![3f64.ln()]);
    }

    #[test]
    fn projection_hits_budget() {
        let f = BudgetedLogUtility {
            lower: 0.0,
            upper: 5.0,
            budget: Some(3.0),
        };
        let mut x = vec![4.0, -1.0, 9.0];
        f.project(&mut x);
        assert!((x.iter().sum::<f64>() - 3.0).abs() < 1e-9);
        assert!(x.iter().all(|v| (0.0..=5.0).contains(v)));
    }

    struct Broken;
    impl ConcaveObjective for Broken {
        fn value(&self, _: &[f64]) -> f64 {
            0.0
        }
        fn subgradient(&self, x: &[f64]) -> Vec<f64> {
            vec![f64::NAN; x.len()]
        }
        fn project(&self, _: &mut [f64]) {}
    }

    #[test]
    fn non_finite_gradient_is_an_error() {
        assert!(matches!(
            nsw_subgradient(&Broken, &[1.0], 3),
            Err(Error::NonFiniteGradient(1))
        ));
    }
}
