//! Biased two-sided market generator.
//!
//! Contact targets are drawn from the exposure softmax
//! `exp(alpha * attractiveness + beta * activity) / Z` over the opposite side,
//! boosted by `1 + homophily` for same-group targets, so the generated market
//! carries popularity bias by construction.

use std::collections::HashSet;

use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Exp, Poisson};
use serde::{Deserialize, Serialize};

use super::{Dataset, InteractionRecord, Side, UserProfile};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticConfig {
    pub n: usize,
    pub m: usize,
    /// Group labels shared by both sides.
    pub groups: Vec<String>,
    pub group_probs_a: Vec<f64>,
    pub group_probs_b: Vec<f64>,
    pub alpha: f64,
    pub beta: f64,
    pub homophily: f64,
    pub mean_contacts: f64,
    pub reciprocation_base: f64,
    pub num_attributes: usize,
    pub attribute_cardinality: usize,
    /// Beta prior on attractiveness.
    pub attractiveness_prior: (f64, f64),
    /// Rate of the exponential prior on activity.
    pub activity_rate: f64,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            n: 1000,
            m: 1000,
            groups: vec!["g0".into(), "g1".into()],
            group_probs_a: vec![0.7, 0.3],
            group_probs_b: vec![0.7, 0.3],
            alpha: 2.0,
            beta: 0.5,
            homophily: 0.3,
            mean_contacts: 10.0,
            reciprocation_base: 0.3,
            num_attributes: 3,
            attribute_cardinality: 4,
            attractiveness_prior: (2.0, 5.0),
            activity_rate: 1.0,
            seed: 0,
        }
    }
}

fn check_probs(name: &str, probs: &[f64], groups: usize) -> Result<()> {
    if probs.len() != groups {
        return Err(Error::config(format!(
            "{name} has {} entries for {groups} groups",
            probs.len()
        )));
    }
    if probs.iter().any(|&p| !(p >= 0.0 && p.is_finite())) {
        return Err(Error::config(format!(
            "{name} has a negative or non-finite entry"
        )));
    }
    let sum: f64 = probs.iter().sum();
    if (sum - 1.0).abs() > 1e-9 {
        return Err(Error::config(format!("{name} sums to {sum}, expected 1")));
    }
    Ok(())
}

impl SyntheticConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n < 2 || self.m < 2 {
            return Err(Error::config("synthetic market needs n, m >= 2"));
        }
        if self.groups.is_empty() {
            return Err(Error::config("at least one group label required"));
        }
        check_probs("group_probs_a", &self.group_probs_a, self.groups.len())?;
        check_probs("group_probs_b", &self.group_probs_b, self.groups.len())?;
        if !(0.0..=1.0).contains(&self.homophily) {
            return Err(Error::config("homophily must lie in [0, 1]"));
        }
        if !(self.reciprocation_base > 0.0 && self.reciprocation_base < 1.0) {
            return Err(Error::config("reciprocation_base must lie in (0, 1)"));
        }
        if !(self.mean_contacts >= 0.0 && self.mean_contacts.is_finite()) {
            return Err(Error::config("mean_contacts must be finite and >= 0"));
        }
        if !(self.alpha.is_finite() && self.beta.is_finite()) {
            return Err(Error::config("alpha and beta must be finite"));
        }
        let (pa, pb) = self.attractiveness_prior;
        let positive = |x: f64| x > 0.0;
        if !(positive(pa) && positive(pb) && positive(self.activity_rate)) {
            return Err(Error::config("latent priors need positive parameters"));
        }
        if self.num_attributes > 0 && self.attribute_cardinality == 0 {
            return Err(Error::config("attribute_cardinality must be >= 1"));
        }
        Ok(())
    }
}

/// Categorical sampler over one side's users, one table per sender group.
#[derive(Debug, Clone)]
pub struct TargetSampler {
    tables: Vec<WeightedIndex<f64>>,
}

impl TargetSampler {
    /// `targets` are `(group, attractiveness, activity)` for every user of the
    /// receiving side; `num_groups` bounds the group indices.
    pub fn new(
        targets: &[(usize, f64, f64)],
        num_groups: usize,
        alpha: f64,
        beta: f64,
        homophily: f64,
    ) -> Self {
        let logits: Vec<f64> = targets
            .iter()
            .map(|&(_, att, act)| alpha * att + beta * act)
            .collect();
        let top = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let base: Vec<f64> = logits.iter().map(|l| (l - top).exp()).collect();
        let tables = (0..num_groups)
            .map(|sender_group| {
                let weights = targets.iter().zip(&base).map(|(&(g, _, _), &w)| {
                    if g == sender_group {
                        w * (1.0 + homophily)
                    } else {
                        w
                    }
                });
                WeightedIndex::new(weights).expect("softmax weights are positive")
            })
            .collect();
        TargetSampler { tables }
    }

    /// Position (within the receiving side) of one sampled target.
    pub fn sample<R: Rng + ?Sized>(&self, sender_group: usize, rng: &mut R) -> usize {
        self.tables[sender_group].sample(rng)
    }
}

struct Latent {
    group: usize,
    attractiveness: f64,
    activity: f64,
    attributes: Vec<String>,
}

/// Generates a biased synthetic market. Deterministic given `config.seed`.
pub fn generate_synthetic(
    config: &SyntheticConfig,
) -> Result<(Vec<UserProfile>, Vec<InteractionRecord>)> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let beta_prior = Beta::new(config.attractiveness_prior.0, config.attractiveness_prior.1)
        .map_err(|e| Error::config(format!("attractiveness prior: {e}")))?;
    let exp_prior = Exp::new(config.activity_rate)
        .map_err(|e| Error::config(format!("activity prior: {e}")))?;

    let draw_side = |count: usize, probs: &[f64], rng: &mut ChaCha8Rng| -> Vec<Latent> {
        let group_dist = WeightedIndex::new(probs).expect("validated probabilities");
        (0..count)
            .map(|_| Latent {
                group: group_dist.sample(rng),
                attractiveness: beta_prior.sample(rng),
                activity: exp_prior.sample(rng),
                attributes: (0..config.num_attributes)
                    .map(|_| format!("v{}", rng.gen_range(0..config.attribute_cardinality)))
                    .collect(),
            })
            .collect()
    };
    let side_a = draw_side(config.n, &config.group_probs_a, &mut rng);
    let side_b = draw_side(config.m, &config.group_probs_b, &mut rng);

    let width = config.n.max(config.m).to_string().len();
    let ids_a: Vec<String> = (0..config.n).map(|i| format!("a{i:0width$}")).collect();
    let ids_b: Vec<String> = (0..config.m).map(|i| format!("b{i:0width$}")).collect();

    let features = |side: &[Latent]| -> Vec<(usize, f64, f64)> {
        side.iter()
            .map(|l| (l.group, l.attractiveness, l.activity))
            .collect()
    };
    let k = config.groups.len();
    let to_b = TargetSampler::new(
        &features(&side_b),
        k,
        config.alpha,
        config.beta,
        config.homophily,
    );
    let to_a = TargetSampler::new(
        &features(&side_a),
        k,
        config.alpha,
        config.beta,
        config.homophily,
    );

    let poisson = if config.mean_contacts > 0.0 {
        Some(
            Poisson::new(config.mean_contacts)
                .map_err(|e| Error::config(format!("mean_contacts: {e}")))?,
        )
    } else {
        None
    };

    // Users are addressed as (side, position); records are emitted in a fixed order.
    let mut seen: HashSet<(Side, usize, usize)> = HashSet::new();
    let mut records = Vec::new();
    let mut clock = 0u64;
    for (side, senders, sampler, sender_ids, receiver_ids) in [
        (Side::A, &side_a, &to_b, &ids_a, &ids_b),
        (Side::B, &side_b, &to_a, &ids_b, &ids_a),
    ] {
        for (u, sender) in senders.iter().enumerate() {
            let contacts = poisson.as_ref().map_or(0, |p| {
                let draw: f64 = p.sample(&mut rng);
                draw as usize
            });
            for _ in 0..contacts {
                let v = sampler.sample(sender.group, &mut rng);
                let reply = rng.gen::<f64>();
                if !seen.insert((side, u, v)) {
                    continue;
                }
                records.push(InteractionRecord::new(
                    &sender_ids[u],
                    &receiver_ids[v],
                    clock,
                ));
                clock += 1;
                let p_reply = (config.reciprocation_base * (1.0 + sender.attractiveness) / 2.0)
                    .clamp(0.0, 1.0);
                if reply < p_reply && seen.insert((side.opposite(), v, u)) {
                    records.push(InteractionRecord::new(
                        &receiver_ids[v],
                        &sender_ids[u],
                        clock,
                    ));
                    clock += 1;
                }
            }
        }
    }

    let mut profiles = Vec::with_capacity(config.n + config.m);
    for (side, latent, ids) in [(Side::A, &side_a, &ids_a), (Side::B, &side_b, &ids_b)] {
        for (l, id) in latent.iter().zip(ids) {
            profiles.push(UserProfile {
                id: id.clone(),
                side,
                group: config.groups[l.group].clone(),
                attributes: l.attributes.clone(),
                attractiveness: l.attractiveness,
                activity: l.activity,
            });
        }
    }
    Ok((profiles, records))
}

impl Dataset {
    /// Generates and validates a synthetic dataset.
    pub fn synthetic(config: &SyntheticConfig) -> Result<Dataset> {
        let (profiles, records) = generate_synthetic(config)?;
        Dataset::new(profiles, records)
    }
}
