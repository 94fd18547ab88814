//! Maximum-likelihood fit of the exposure model
//! `P(v recommended) ∝ exp(alpha * attractiveness_v + beta * activity_v)`,
//! where the choice set of each recommendation is the candidate's side.

use serde::{Deserialize, Serialize};

use crate::dataset::{Side, UserProfile};
use crate::error::{Error, Result};
use crate::recommenders::RecommendationList;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BiasFitParams {
    pub iterations: usize,
    pub step: f64,
}

impl Default for BiasFitParams {
    fn default() -> Self {
        BiasFitParams {
            iterations: 500,
            step: 0.1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BiasModel {
    pub alpha: f64,
    pub beta: f64,
    /// Total log-likelihood of the observed selections.
    pub log_likelihood: f64,
    /// Covariate had zero variance; its coefficient is pinned to 0.
    pub alpha_degenerate: bool,
    pub beta_degenerate: bool,
    pub selections: usize,
}

pub fn estimate_bias_model<'a>(
    lists: impl IntoIterator<Item = &'a RecommendationList>,
    profiles: &[UserProfile],
) -> Result<BiasModel> {
    estimate_bias_model_with(lists, profiles, BiasFitParams::default())
}

/// Gradient ascent on the mean log-likelihood from `(0, 0)`. Covariates are
/// standardised over all profiles for the ascent and the coefficients are
/// mapped back to raw units; the fitted model is unchanged by this.
pub fn estimate_bias_model_with<'a>(
    lists: impl IntoIterator<Item = &'a RecommendationList>,
    profiles: &[UserProfile],
    params: BiasFitParams,
) -> Result<BiasModel> {
    let mut chosen = vec![0usize; profiles.len()];
    for list in lists {
        for s in &list.items {
            chosen[s.candidate] += 1;
        }
    }
    let total: usize = chosen.iter().sum();
    if total == 0 {
        return Err(Error::EmptyRecommendations);
    }

    let raw: [Vec<f64>; 2] = [
        profiles.iter().map(|p| p.attractiveness).collect(),
        profiles.iter().map(|p| p.activity).collect(),
    ];
    let mut scale = [0.0; 2];
    let mut degenerate = [false; 2];
    let z: Vec<[f64; 2]> = {
        let mut cols = [Vec::new(), Vec::new()];
        for c in 0..2 {
            let mean = raw[c].iter().sum::<f64>() / raw[c].len() as f64;
            let var = raw[c].iter().map(|x| (x - mean).powi(2)).sum::<f64>() / raw[c].len() as f64;
            let sd = var.sqrt();
            degenerate[c] = sd.is_nan() || sd <= 1e-12;
            scale[c] = sd;
            cols[c] = raw[c]
                .iter()
                .map(|x| if degenerate[c] { 0.0 } else { (x - mean) / sd })
                .collect();
        }
        (0..profiles.len())
            .map(|i| [cols[0][i], cols[1][i]])
            .collect()
    };

    let sides = [Side::A, Side::B];
    let members: Vec<Vec<usize>> = sides
        .iter()
        .map(|&s| {
            (0..profiles.len())
                .filter(|&i| profiles[i].side == s)
                .collect()
        })
        .collect();
    let side_count: Vec<usize> = members
        .iter()
        .map(|m| m.iter().map(|&i| chosen[i]).sum())
        .collect();
    let mut observed = [0.0; 2];
    for (i, &c) in chosen.iter().enumerate() {
        for f in 0..2 {
            observed[f] += c as f64 * z[i][f];
        }
    }

    // Per side: log Z and expected standardised covariates under theta.
    let side_stats = |theta: [f64; 2], users: &[usize]| -> (f64, [f64; 2]) {
        let logits: Vec<f64> = users
            .iter()
            .map(|&i| theta[0] * z[i][0] + theta[1] * z[i][1])
            .collect();
        let peak = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut norm = 0.0;
        let mut expect = [0.0; 2];
        for (&i, &l) in users.iter().zip(&logits) {
            let w = (l - peak).exp();
            norm += w;
            expect[0] += w * z[i][0];
            expect[1] += w * z[i][1];
        }
        (peak + norm.ln(), [expect[0] / norm, expect[1] / norm])
    };

    let mut theta = [0.0; 2];
    for _ in 0..params.iterations {
        let mut grad = observed;
        for (users, &count) in members.iter().zip(&side_count) {
            if count == 0 {
                continue;
            }
            let (_, e) = side_stats(theta, users);
            grad[0] -= count as f64 * e[0];
            grad[1] -= count as f64 * e[1];
        }
        for f in 0..2 {
            if !degenerate[f] {
                theta[f] += params.step * grad[f] / total as f64;
            }
        }
    }

    let mut log_likelihood = theta[0] * observed[0] + theta[1] * observed[1];
    for (users, &count) in members.iter().zip(&side_count) {
        if count > 0 {
            log_likelihood -= count as f64 * side_stats(theta, users).0;
        }
    }
    let unscale = |f: usize| {
        if degenerate[f] {
            0.0
        } else {
            theta[f] / scale[f]
        }
    };
    Ok(BiasModel {
        alpha: unscale(0),
        beta: unscale(1),
        log_likelihood: log_likelihood.min(0.0),
        alpha_degenerate: degenerate[0],
        beta_degenerate: degenerate[1],
        selections: total,
    })
}
