//! Seeded Monte Carlo estimate of a policy's utility.
//!
//! A trajectory `s₀, a₀, s₁, a₁, …` is scored by unrolling the Bellman
//! relation: `Σ_t D_t·ℛ(s_t, a_t)` with `D₀ = 1` and `D_{t+1} = D_t·Γ(s_t, a_t)`.
//! Nothing here touches the linear solves in [`crate::evaluation`], which is
//! what makes it usable as an oracle for them.
//!
//! Each sample `i` draws from its own ChaCha20 stream (`seed`, stream `i`),
//! so estimates are reproducible and can be split across workers by sample
//! index without changing a single bit of the result.

use std::ops::Range;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::evaluation::{admissibility, policy_matrices};
use crate::model::{ActionId, Lottery, MdpGamma, StateId, StationaryPolicy};

pub const DEFAULT_HORIZON: usize = 512;
pub const DEFAULT_TAIL_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleReturn {
    pub value: f64,
    pub truncated: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RolloutEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub samples: u64,
    pub truncated_fraction: f64,
    pub seed: u64,
}

impl RolloutEstimate {
    /// Combines per-sample returns given in sample-index order.
    pub fn from_samples(samples: &[SampleReturn], seed: u64) -> Self {
        let n = samples.len() as f64;
        let mean = samples.iter().map(|s| s.value).sum::<f64>() / n;
        let std_error = if samples.len() > 1 {
            let ss: f64 = samples.iter().map(|s| (s.value - mean).powi(2)).sum();
            (ss / (n - 1.0)).sqrt() / n.sqrt()
        } else {
            0.0
        };
        RolloutEstimate {
            mean,
            std_error,
            samples: samples.len() as u64,
            truncated_fraction: samples.iter().filter(|s| s.truncated).count() as f64 / n,
            seed,
        }
    }
}

/// The random stream of sample `index` under `seed`.
pub fn sample_stream(seed: u64, index: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

struct Step {
    action_prob: f64,
    reward: f64,
    gamma: f64,
    next: Lottery<StateId>,
}

/// A model and policy compiled for fast trajectory sampling.
pub struct Simulator {
    steps: Vec<Vec<Step>>,
    tail_bound: f64,
    horizon: usize,
    tail_tol: f64,
}

impl Simulator {
    /// Fails for inadmissible policies, whose expected return need not exist.
    pub fn new(
        model: &MdpGamma,
        policy: &StationaryPolicy,
        horizon: usize,
        tail_tol: f64,
    ) -> Result<Self> {
        if horizon == 0 {
            return Err(Error::InvalidArgument("horizon must be at least 1".into()));
        }
        let pm = policy_matrices(model, policy)?;
        let report = admissibility(&pm)?;
        if !report.admissible {
            return Err(Error::InadmissiblePolicy {
                spectral_radius: report.spectral_radius,
                policy: Box::new(policy.clone()),
            });
        }
        let steps = policy
            .choice
            .iter()
            .enumerate()
            .map(|(s, choice)| {
                choice
                    .iter()
                    .map(|(a, p): (ActionId, f64)| {
                        Ok(Step {
                            action_prob: p,
                            reward: model.reward(s, a)?,
                            gamma: model.anticipation(s, a)?,
                            next: model.sdp.transition(s, a)?.clone(),
                        })
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Simulator {
            steps,
            tail_bound: model.max_abs_reward() / (1.0 - report.spectral_radius),
            horizon,
            tail_tol,
        })
    }

    /// Bound `B` on the magnitude of any continuation value.
    pub fn tail_bound(&self) -> f64 {
        self.tail_bound
    }

    pub fn sample_return<R: Rng + ?Sized>(&self, start: StateId, rng: &mut R) -> SampleReturn {
        let mut state = start;
        let mut discount = 1.0_f64;
        let mut total = 0.0;
        for _ in 0..self.horizon {
            if discount.abs() * self.tail_bound < self.tail_tol {
                return SampleReturn {
                    value: total,
                    truncated: false,
                };
            }
            let options = &self.steps[state];
            let step = if options.len() == 1 {
                &options[0]
            } else {
                let i = pick(options.iter().map(|o| o.action_prob), rng);
                &options[i]
            };
            total += discount * step.reward;
            discount *= step.gamma;
            state = match step.next.certain() {
                Some(s) => s,
                None => {
                    let entries = step.next.entries();
                    entries[pick(entries.iter().map(|e| e.1), rng)].0
                }
            };
        }
        SampleReturn {
            value: total,
            truncated: discount.abs() * self.tail_bound >= self.tail_tol,
        }
    }

    /// Returns of the samples with indices in `range`, in index order.
    pub fn sample_range(&self, start: StateId, seed: u64, range: Range<u64>) -> Vec<SampleReturn> {
        let one = |i| self.sample_return(start, &mut sample_stream(seed, i));
        #[cfg(feature = "parallel")]
        let out = range.into_par_iter().map(one).collect();
        #[cfg(not(feature = "parallel"))]
        let out = range.map(one).collect();
        out
    }
}

fn pick<R: Rng + ?Sized>(weights: impl Iterator<Item = f64> + Clone, rng: &mut R) -> usize {
    let draw: f64 = rng.random();
    let mut acc = 0.0;
    let mut last = 0;
    for (i, w) in weights.enumerate() {
        acc += w;
        last = i;
        if draw < acc {
            return i;
        }
    }
    last
}

/// One trajectory return from `start`.
pub fn sample_return<R: Rng + ?Sized>(
    model: &MdpGamma,
    policy: &StationaryPolicy,
    start: StateId,
    rng: &mut R,
    horizon: usize,
    tail_tol: f64,
) -> Result<SampleReturn> {
    check_start(model, start)?;
    Ok(Simulator::new(model, policy, horizon, tail_tol)?.sample_return(start, rng))
}

pub fn estimate_utility(
    model: &MdpGamma,
    policy: &StationaryPolicy,
    start: StateId,
    samples: u64,
    horizon: usize,
    seed: u64,
) -> Result<RolloutEstimate> {
    estimate_utility_with_tol(model, policy, start, samples, horizon, seed, DEFAULT_TAIL_TOL)
}

pub fn estimate_utility_with_tol(
    model: &MdpGamma,
    policy: &StationaryPolicy,
    start: StateId,
    samples: u64,
    horizon: usize,
    seed: u64,
    tail_tol: f64,
) -> Result<RolloutEstimate> {
    if samples == 0 {
        return Err(Error::InvalidArgument("at least one sample is required".into()));
    }
    check_start(model, start)?;
    let sim = Simulator::new(model, policy, horizon, tail_tol)?;
    let returns = sim.sample_range(start, seed, 0..samples);
    Ok(RolloutEstimate::from_samples(&returns, seed))
}

fn check_start(model: &MdpGamma, start: StateId) -> Result<()> {
    if start < model.n_states() {
        Ok(())
    } else {
        Err(Error::ModelMismatch(format!("start state index {start} out of range")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use approx::assert_abs_diff_eq;

    #[test]
    fn deterministic_cliff_trajectories() {
        let m = fixtures::cliff();
        let stay = fixtures::stay_policy(&m);
        let r = sample_return(&m, &stay, 0, &mut sample_stream(7, 0), 512, 1e-12).unwrap();
        assert!(!r.truncated);
        assert_abs_diff_eq!(r.value, 100.0, epsilon = 1e-11);
        let down = fixtures::down_policy(&m);
        let est = estimate_utility(&m, &down, 2, 1, 512, 3).unwrap();
        assert_abs_diff_eq!(est.mean, 70.0, epsilon = 1e-10);
        assert_eq!(est.std_error, 0.0);
        assert_eq!(est.truncated_fraction, 0.0);
    }

    #[test]
    fn zero_anticipation_returns_first_reward() {
        let mut m = fixtures::cliff_slippery();
        for g in m.gamma.values_mut() {
            *g = 0.0;
        }
        let hh = fixtures::hh_policy(&m);
        let r = sample_return(&m, &hh, 2, &mut sample_stream(1, 1), 512, 1e-12).unwrap();
        assert_eq!(r, SampleReturn { value: 25.0, truncated: false });
    }

    #[test]
    fn slip_after_k_steps() {
        // Slipping at step k from H: 25·Σ_{t<k} 1.2ᵗ + 1.2ᵏ·(−10 + 0.9·100).
        let m = fixtures::cliff_slippery();
        let sim = Simulator::new(&m, &fixtures::hh_policy(&m), 512, 1e-12).unwrap();
        let mut seen = 0;
        for i in 0..200 {
            let mut rng = sample_stream(11, i);
            let r = sim.sample_return(2, &mut rng);
            let mut matched = false;
            for k in 1..60 {
                let head: f64 = (0..k).map(|t| 25.0 * 1.2f64.powi(t)).sum();
                let expected = head + 1.2f64.powi(k) * 80.0;
                if (r.value - expected).abs() < 1e-6 * expected.abs().max(1.0) {
                    matched = true;
                }
            }
            assert!(matched, "return {} is not a slip-at-k value", r.value);
            seen += 1;
        }
        assert_eq!(seen, 200);
    }

    #[test]
    fn same_seed_same_estimate() {
        let m = fixtures::cliff_slippery();
        let p = fixtures::hh_policy(&m);
        let a = estimate_utility(&m, &p, 2, 2000, 512, 42).unwrap();
        let b = estimate_utility(&m, &p, 2, 2000, 512, 42).unwrap();
        assert_eq!(a, b);
        let c = estimate_utility(&m, &p, 2, 2000, 512, 43).unwrap();
        assert_ne!(a.mean, c.mean);
    }

    #[test]
    fn sharding_does_not_change_the_result() {
        let m = fixtures::cliff_slippery();
        let p = fixtures::hh_policy(&m);
        let sim = Simulator::new(&m, &p, 512, 1e-12).unwrap();
        let whole = sim.sample_range(2, 5, 0..900);
        let mut parts = sim.sample_range(2, 5, 0..250);
        parts.extend(sim.sample_range(2, 5, 250..600));
        parts.extend(sim.sample_range(2, 5, 600..900));
        assert_eq!(
            RolloutEstimate::from_samples(&whole, 5),
            RolloutEstimate::from_samples(&parts, 5)
        );
    }

    #[test]
    fn short_horizon_truncates() {
        let m = fixtures::cliff();
        let est = estimate_utility(&m, &fixtures::stay_policy(&m), 0, 4, 10, 0).unwrap();
        assert_eq!(est.truncated_fraction, 1.0);
        assert!(estimate_utility(&m, &fixtures::stay_policy(&m), 5, 4, 10, 0).is_err());
        assert!(estimate_utility(&m, &fixtures::stay_policy(&m), 0, 0, 10, 0).is_err());
    }
}
