//! Random small instances for property tests and self-checks.

use std::collections::BTreeMap;

use rand::seq::index;
use rand::Rng;

use crate::evaluation::{admissibility, policy_matrices};
use crate::model::{FiniteSdp, FixedGammaMdp, Lottery, MdpGamma, StateId, StationaryPolicy};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InstanceShape {
    pub n_states: usize,
    pub max_actions: usize,
    pub max_support: usize,
    pub reward_scale: f64,
    /// Ordinary anticipation values are drawn from `[0, gamma_max)`.
    pub gamma_max: f64,
    /// Probability that a pair instead draws from `[1, boost_max)`.
    pub boost_prob: f64,
    pub boost_max: f64,
}

impl InstanceShape {
    pub fn new(n_states: usize) -> Self {
        InstanceShape {
            n_states,
            max_actions: 3,
            max_support: 3,
            reward_scale: 10.0,
            gamma_max: 0.95,
            boost_prob: 0.0,
            boost_max: 1.3,
        }
    }

    pub fn with_boost(mut self, prob: f64) -> Self {
        self.boost_prob = prob;
        self
    }
}

pub fn random_lottery<R: Rng + ?Sized>(rng: &mut R, n: usize, max_support: usize) -> Lottery<StateId> {
    let k = rng.random_range(1..=max_support.min(n).max(1));
    let mut support = index::sample(rng, n, k).into_vec();
    support.sort_unstable();
    let weights: Vec<f64> = (0..k).map(|_| rng.random_range(0.05..1.0)).collect();
    let total: f64 = weights.iter().sum();
    let mut probs: Vec<f64> = weights.iter().map(|w| w / total).collect();
    let head: f64 = probs[..k - 1].iter().sum();
    probs[k - 1] = 1.0 - head;
    Lottery::new(support.into_iter().zip(probs).collect())
}

pub fn random_sdp<R: Rng + ?Sized>(rng: &mut R, shape: &InstanceShape) -> FiniteSdp {
    let n = shape.n_states;
    let k = shape.max_actions.max(1);
    let available: Vec<Vec<usize>> = (0..n)
        .map(|_| {
            let count = rng.random_range(1..=k);
            let mut acts = index::sample(rng, k, count).into_vec();
            acts.sort_unstable();
            acts
        })
        .collect();
    let mut transitions = BTreeMap::new();
    for (s, acts) in available.iter().enumerate() {
        for &a in acts {
            transitions.insert((s, a), random_lottery(rng, n, shape.max_support));
        }
    }
    FiniteSdp {
        states: (0..n).map(|i| format!("s{i}")).collect(),
        actions: (0..k).map(|i| format!("a{i}")).collect(),
        available,
        transitions,
        initial: random_lottery(rng, n, n),
    }
}

pub fn random_model<R: Rng + ?Sized>(rng: &mut R, shape: &InstanceShape) -> MdpGamma {
    let sdp = random_sdp(rng, shape);
    let mut reward = BTreeMap::new();
    let mut gamma = BTreeMap::new();
    for pair in sdp.pairs() {
        reward.insert(pair, rng.random_range(-shape.reward_scale..shape.reward_scale));
        let g = if rng.random_bool(shape.boost_prob) {
            rng.random_range(1.0..shape.boost_max)
        } else {
            rng.random_range(0.0..shape.gamma_max)
        };
        gamma.insert(pair, g);
    }
    MdpGamma { sdp, reward, gamma }
}

/// Resamples until every deterministic policy is admissible.
pub fn random_admissible_model<R: Rng + ?Sized>(rng: &mut R, shape: &InstanceShape) -> MdpGamma {
    loop {
        let model = random_model(rng, shape);
        let all_admissible = model.sdp.deterministic_policies().iter().all(|p| {
            policy_matrices(&model, p)
                .and_then(|pm| admissibility(&pm))
                .is_ok_and(|r| r.admissible)
        });
        if all_admissible {
            return model;
        }
    }
}

pub fn random_fixed_gamma_mdp<R: Rng + ?Sized>(
    rng: &mut R,
    shape: &InstanceShape,
    gamma: f64,
) -> FixedGammaMdp {
    let sdp = random_sdp(rng, shape);
    let reward = sdp
        .pairs()
        .map(|pair| (pair, rng.random_range(-shape.reward_scale..shape.reward_scale)))
        .collect();
    FixedGammaMdp { sdp, reward, gamma }
}

pub fn random_deterministic_policy<R: Rng + ?Sized>(rng: &mut R, sdp: &FiniteSdp) -> StationaryPolicy {
    StationaryPolicy::deterministic(
        sdp.available
            .iter()
            .map(|acts| acts[rng.random_range(0..acts.len())])
            .collect(),
    )
}

/// A policy mixing two or more actions wherever a state offers a choice.
pub fn random_stochastic_policy<R: Rng + ?Sized>(rng: &mut R, sdp: &FiniteSdp) -> StationaryPolicy {
    StationaryPolicy::new(
        sdp.available
            .iter()
            .map(|acts| {
                let weights: Vec<f64> = acts.iter().map(|_| rng.random_range(0.1..1.0)).collect();
                let total: f64 = weights.iter().sum();
                let mut probs: Vec<f64> = weights.iter().map(|w| w / total).collect();
                let head: f64 = probs[..acts.len() - 1].iter().sum();
                probs[acts.len() - 1] = 1.0 - head;
                Lottery::new(acts.iter().copied().zip(probs).collect())
            })
            .collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::validate_model;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn random_models_are_valid() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for n in 1..7 {
            let m = random_admissible_model(&mut rng, &InstanceShape::new(n).with_boost(0.2));
            assert!(validate_model(&m).is_empty());
            let p = random_stochastic_policy(&mut rng, &m.sdp);
            assert!(p.check(&m.sdp).is_ok());
        }
    }
}
