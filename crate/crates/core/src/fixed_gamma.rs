//! Can a fixed-discount MDP reproduce the preferences of an MDP-Γ?
//!
//! The reward of a fixed-γ MDP that agrees with the optimal policy's Bellman
//! equations is pinned down uniquely (it is the optimizing MDP's reward).
//! This module evaluates a set of policies under both the MDP-Γ utilities
//! `u` and that MDP's values `v`, and compares prospects `(start, policy)`
//! pairwise. A reversal is a pair whose `u` order and `v` order are strict
//! and opposite.

use std::cmp::Ordering;
use std::collections::BTreeMap;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::evaluation::{evaluate_policy, Method};
use crate::model::{
    check_discount, lottery_expectation, ActionId, MdpGamma, StateId, StationaryPolicy,
    UtilityVector,
};
use crate::optimizing::{implied_rewards, mdp_value, optimizing_mdp_from_plan};
use crate::planning::{policy_iteration, PlanResult};

/// Differences at or below this count as ties.
pub const ORDER_TOL: f64 = 1e-9;
/// A policy is reproduced when `|v − u|` stays within this everywhere.
pub const REPRESENT_TOL: f64 = 1e-8;
/// Largest deterministic policy set enumerated without an explicit list.
pub const POLICY_ENUMERATION_CAP: usize = 4096;
/// Above this many state prospects only same-start pairs are compared.
pub const CROSS_STATE_CAP: usize = 512;

pub fn implied_fixed_gamma_rewards(
    model: &MdpGamma,
    gamma: f64,
) -> Result<BTreeMap<(StateId, ActionId), f64>> {
    check_discount(gamma)?;
    let plan = policy_iteration(model, None)?;
    implied_rewards(model, &plan.utilities, gamma)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Start {
    State(StateId),
    Initial,
}

/// Starting point plus index into [`ReversalReport::policies`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Prospect {
    pub start: Start,
    pub policy: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Comparison {
    pub left: Prospect,
    pub right: Prospect,
    pub u_order: Ordering,
    pub v_order: Ordering,
    pub reversed: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolicyValues {
    pub policy: StationaryPolicy,
    pub u: UtilityVector,
    pub v: UtilityVector,
    pub u_initial: f64,
    pub v_initial: f64,
}

impl PolicyValues {
    fn at(&self, start: Start) -> (f64, f64) {
        match start {
            Start::State(s) => (self.u[s], self.v[s]),
            Start::Initial => (self.u_initial, self.v_initial),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReversalReport {
    pub gamma: f64,
    pub implied_rewards: BTreeMap<(StateId, ActionId), f64>,
    pub policies: Vec<PolicyValues>,
    pub comparisons: Vec<Comparison>,
    pub representable: bool,
    /// Enumerated policies left out because they are inadmissible.
    pub skipped: Vec<(StationaryPolicy, f64)>,
}

impl ReversalReport {
    pub fn reversals(&self) -> impl Iterator<Item = &Comparison> + '_ {
        self.comparisons.iter().filter(|c| c.reversed)
    }

    pub fn reversal_count(&self) -> usize {
        self.reversals().count()
    }

    pub fn summary(&self) -> String {
        format!(
            "gamma {} reversals {} representable {}",
            self.gamma,
            self.reversal_count(),
            self.representable
        )
    }
}

fn strict_order(a: f64, b: f64) -> Ordering {
    if (a - b).abs() <= ORDER_TOL {
        Ordering::Equal
    } else if a < b {
        Ordering::Less
    } else {
        Ordering::Greater
    }
}

fn compare(policies: &[PolicyValues], left: Prospect, right: Prospect) -> Comparison {
    let (ul, vl) = policies[left.policy].at(left.start);
    let (ur, vr) = policies[right.policy].at(right.start);
    let u_order = strict_order(ul, ur);
    let v_order = strict_order(vl, vr);
    Comparison {
        left,
        right,
        u_order,
        v_order,
        reversed: u_order != Ordering::Equal && v_order == u_order.reverse(),
    }
}

/// The policies to analyse: the explicit list, or every deterministic policy.
pub enum PolicySet<'a> {
    All,
    Listed(&'a [StationaryPolicy]),
}

pub fn representability_check(
    model: &MdpGamma,
    gamma: f64,
    policies: PolicySet<'_>,
) -> Result<ReversalReport> {
    check_discount(gamma)?;
    let candidates = candidate_policies(model, policies)?;
    let plan = policy_iteration(model, None)?;
    check_with_plan(model, &plan, gamma, &candidates)
}

/// One report per grid point, in grid order.
pub fn gamma_sweep(
    model: &MdpGamma,
    grid: &[f64],
    policies: PolicySet<'_>,
) -> Result<Vec<ReversalReport>> {
    if grid.is_empty() {
        return Ok(Vec::new());
    }
    for &g in grid {
        check_discount(g)?;
    }
    let candidates = candidate_policies(model, policies)?;
    let plan = policy_iteration(model, None)?;
    #[cfg(feature = "parallel")]
    let reports = grid
        .par_iter()
        .map(|&g| check_with_plan(model, &plan, g, &candidates))
        .collect();
    #[cfg(not(feature = "parallel"))]
    let reports = grid
        .iter()
        .map(|&g| check_with_plan(model, &plan, g, &candidates))
        .collect();
    reports
}

struct Candidates {
    policies: Vec<StationaryPolicy>,
    enumerated: bool,
}

fn candidate_policies(model: &MdpGamma, set: PolicySet<'_>) -> Result<Candidates> {
    match set {
        PolicySet::Listed(list) => {
            for p in list {
                p.check(&model.sdp)?;
                if !p.is_deterministic() {
                    return Err(Error::PolicyInvalid(
                        "representability is analysed over deterministic policies".into(),
                    ));
                }
            }
            Ok(Candidates {
                policies: list.to_vec(),
                enumerated: false,
            })
        }
        PolicySet::All => {
            let count = model.sdp.deterministic_policy_count();
            if count > POLICY_ENUMERATION_CAP as u128 {
                return Err(Error::PolicyListTooLarge {
                    count,
                    cap: POLICY_ENUMERATION_CAP,
                });
            }
            Ok(Candidates {
                policies: model.sdp.deterministic_policies(),
                enumerated: true,
            })
        }
    }
}

fn check_with_plan(
    model: &MdpGamma,
    plan: &PlanResult,
    gamma: f64,
    candidates: &Candidates,
) -> Result<ReversalReport> {
    let mdp = optimizing_mdp_from_plan(model, plan, gamma)?;
    let initial = &model.sdp.initial;
    let mut values = Vec::with_capacity(candidates.policies.len());
    let mut skipped = Vec::new();
    for policy in &candidates.policies {
        let u = match evaluate_policy(model, policy, Method::Direct) {
            Ok(u) => u,
            Err(Error::InadmissiblePolicy {
                spectral_radius, ..
            }) if candidates.enumerated => {
                skipped.push((policy.clone(), spectral_radius));
                continue;
            }
            Err(e) => return Err(e),
        };
        let v = mdp_value(&mdp, policy)?;
        values.push(PolicyValues {
            policy: policy.clone(),
            u_initial: lottery_expectation(initial, &u)?,
            v_initial: lottery_expectation(initial, &v)?,
            u,
            v,
        });
    }

    let n = model.n_states();
    let cross = n * values.len() <= CROSS_STATE_CAP;
    let prospects: Vec<Prospect> = (0..values.len())
        .flat_map(|p| {
            (0..n).map(move |s| Prospect {
                start: Start::State(s),
                policy: p,
            })
        })
        .collect();
    let mut comparisons = Vec::new();
    for (i, &left) in prospects.iter().enumerate() {
        for &right in &prospects[i + 1..] {
            if cross || left.start == right.start {
                comparisons.push(compare(&values, left, right));
            }
        }
    }
    for p in 0..values.len() {
        for q in p + 1..values.len() {
            let at = |policy| Prospect {
                start: Start::Initial,
                policy,
            };
            comparisons.push(compare(&values, at(p), at(q)));
        }
    }

    let representable = values.iter().all(|pv| pv.u.max_abs_diff(&pv.v) <= REPRESENT_TOL);
    Ok(ReversalReport {
        gamma,
        implied_rewards: mdp.reward,
        policies: values,
        comparisons,
        representable,
        skipped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use approx::assert_abs_diff_eq;

    fn reward(model: &MdpGamma, rewards: &BTreeMap<(StateId, ActionId), f64>, s: usize, a: &str) -> f64 {
        rewards[&(s, model.sdp.action_index(a).unwrap())]
    }

    #[test]
    fn implied_rewards_on_cliff() {
        let m = fixtures::cliff();
        let r = implied_fixed_gamma_rewards(&m, 0.9).unwrap();
        assert_abs_diff_eq!(reward(&m, &r, 1, "MM"), -2.0, epsilon = 1e-10);
        assert_abs_diff_eq!(reward(&m, &r, 2, "HH"), -3.0, epsilon = 1e-10);
        let r0 = implied_fixed_gamma_rewards(&m, 0.0).unwrap();
        assert_abs_diff_eq!(reward(&m, &r0, 1, "MM"), 70.0, epsilon = 1e-10);
        assert_abs_diff_eq!(reward(&m, &r0, 2, "HH"), 60.0, epsilon = 1e-10);
    }

    #[test]
    fn fixed_discount_model_rewards_are_unchanged() {
        let m = fixtures::fixed_gamma();
        let r = implied_fixed_gamma_rewards(&m, 0.7).unwrap();
        for (k, v) in &r {
            assert_abs_diff_eq!(*v, m.reward[k], epsilon = 1e-10);
        }
    }

    #[test]
    fn cliff_reversal_between_stay_high_and_stay_middle() {
        let m = fixtures::cliff();
        let list = [
            fixtures::stay_policy(&m),
            fixtures::down_policy(&m),
            fixtures::stay_middle_policy(&m),
            fixtures::hh_policy(&m),
        ];
        let report = representability_check(&m, 0.9, PolicySet::Listed(&list)).unwrap();
        assert!(!report.representable);
        let stay = &report.policies[0];
        assert!(stay.v.max_abs_diff(&[100.0, -20.0, -30.0]) < 1e-9);
        let high_vs_middle = report
            .comparisons
            .iter()
            .find(|c| {
                c.left == Prospect { start: Start::State(1), policy: 0 }
                    && c.right == Prospect { start: Start::State(2), policy: 0 }
            })
            .unwrap();
        assert!(high_vs_middle.reversed);
        assert_eq!(high_vs_middle.u_order, Ordering::Less);
        assert_eq!(high_vs_middle.v_order, Ordering::Greater);
        let optimal = &report.policies[1];
        assert!(optimal.u.max_abs_diff(&optimal.v) < 1e-8);
    }

    #[test]
    fn self_representation_has_no_reversals() {
        let m = fixtures::fixed_gamma();
        let report = representability_check(&m, 0.7, PolicySet::All).unwrap();
        assert!(report.representable);
        assert_eq!(report.reversal_count(), 0);
        assert_eq!(report.policies.len(), 6);
    }

    #[test]
    fn reversal_persists_at_half() {
        let m = fixtures::cliff();
        let report = representability_check(&m, 0.5, PolicySet::All).unwrap();
        let diff = reward(&m, &report.implied_rewards, 1, "MM") - reward(&m, &report.implied_rewards, 2, "HH");
        assert_abs_diff_eq!(diff, 5.0, epsilon = 1e-10);
        assert!(report.reversal_count() > 0);
    }

    #[test]
    fn sweep_shapes() {
        let m = fixtures::cliff();
        assert!(gamma_sweep(&m, &[], PolicySet::All).unwrap().is_empty());
        let grid: Vec<f64> = (0..10).map(|i| i as f64 / 10.0).chain([0.99]).collect();
        let reports = gamma_sweep(&m, &grid, PolicySet::All).unwrap();
        assert_eq!(reports.len(), grid.len());
        for (r, g) in reports.iter().zip(&grid) {
            assert_eq!(r.gamma, *g);
            assert!(r.reversal_count() >= 1, "{}", r.summary());
        }
        let fixed = fixtures::fixed_gamma();
        let reports = gamma_sweep(&fixed, &[0.3, 0.7], PolicySet::All).unwrap();
        assert!(reports[1].representable);
        assert!(gamma_sweep(&m, &[1.0], PolicySet::All).is_err());
    }

    #[test]
    fn enumeration_cap() {
        let mut m = fixtures::single_state();
        m.sdp.actions = (0..5000).map(|i| format!("a{i}")).collect();
        m.sdp.available = vec![(0..5000).collect()];
        let err = representability_check(&m, 0.5, PolicySet::All);
        assert_eq!(err.unwrap_err().code(), "POLICY_LIST_TOO_LARGE");
    }
}
