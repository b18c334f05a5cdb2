//! The optimizing MDP of an MDP-Γ and the exact value-utility gap.
//!
//! Given an optimal policy `π*` with utilities `u*` and any discount
//! `γ ∈ [0, 1)`, the reward `R(s, a) = Q*(s, a) − γ·E[u*(s')]` is the only
//! one for which the fixed-γ MDP has `V* = u*` and `Q* = U*(s, a)`.
//!
//! For a deterministic policy `π` with `S = (I − Γ^π T^π)⁻¹` and
//! `ε^π = Γ^π − γI`, its true utility and its value in that MDP satisfy
//!
//! ```text
//! u^π = u* − S (I − γT^π)(v* − v^π)
//!     = v^π − S ε^π T^π (v* − v^π)
//! ```
//!
//! [`value_utility_gap`] evaluates both right-hand sides and their residuals
//! against a direct evaluation of `u^π`.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::evaluation::{self, backup, evaluate_policy, policy_matrices, Method};
use crate::linalg;
use crate::model::{
    check_discount, lottery_expectation, ActionId, FiniteSdp, FixedGammaMdp, MdpGamma, StateId,
    StationaryPolicy, UtilityVector,
};
use crate::planning::{policy_iteration, PlanResult};

/// `T^π` with `T[i][j] = Σ_a π(a|sᵢ)·T(sᵢ, a)(sⱼ)`.
pub fn transition_matrix(sdp: &FiniteSdp, policy: &StationaryPolicy) -> Result<DMatrix<f64>> {
    policy.check(sdp)?;
    let n = sdp.n_states();
    let mut t = DMatrix::zeros(n, n);
    for (s, choice) in policy.choice.iter().enumerate() {
        for (a, pa) in choice.iter() {
            for (next, pt) in sdp.transition(s, a)?.iter() {
                t[(s, next)] += pa * pt;
            }
        }
    }
    Ok(t)
}

pub fn construct_optimizing_mdp(model: &MdpGamma, gamma: f64) -> Result<FixedGammaMdp> {
    check_discount(gamma)?;
    let plan = policy_iteration(model, None)?;
    optimizing_mdp_from_plan(model, &plan, gamma)
}

/// Same construction from an already computed plan.
pub fn optimizing_mdp_from_plan(
    model: &MdpGamma,
    plan: &PlanResult,
    gamma: f64,
) -> Result<FixedGammaMdp> {
    check_discount(gamma)?;
    let reward = implied_rewards(model, &plan.utilities, gamma)?;
    FixedGammaMdp::new(model.sdp.clone(), reward, gamma)
}

pub(crate) fn implied_rewards(
    model: &MdpGamma,
    optimal_utilities: &[f64],
    gamma: f64,
) -> Result<BTreeMap<(StateId, ActionId), f64>> {
    let q_star = backup(model, optimal_utilities)?;
    q_star
        .iter()
        .map(|((s, a), q)| {
            let next = lottery_expectation(model.sdp.transition(s, a)?, optimal_utilities)?;
            Ok(((s, a), q - gamma * next))
        })
        .collect()
}

/// Classical discounted value: solves `v = r^π + γ T^π v`.
pub fn mdp_value(mdp: &FixedGammaMdp, policy: &StationaryPolicy) -> Result<UtilityVector> {
    check_discount(mdp.gamma)?;
    let t = transition_matrix(&mdp.sdp, policy)?;
    let n = mdp.sdp.n_states();
    let mut r = DVector::zeros(n);
    for (s, choice) in policy.choice.iter().enumerate() {
        for (a, pa) in choice.iter() {
            let reward = mdp.reward.get(&(s, a)).ok_or_else(|| {
                Error::ModelMismatch(format!("no reward for {}", mdp.sdp.pair_name(s, a)))
            })?;
            r[s] += pa * reward;
        }
    }
    let a = DMatrix::identity(n, n) - t * mdp.gamma;
    let v = linalg::solve_vec(&a, &r)?;
    Ok(UtilityVector(v.iter().copied().collect()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct GapReport {
    pub gamma: f64,
    pub u_pi: UtilityVector,
    pub v_pi: UtilityVector,
    pub v_star: UtilityVector,
    pub u_star: UtilityVector,
    /// `Γ(s, π(s)) − γ` per state.
    pub epsilon_diag: Vec<f64>,
    /// `u* − S (I − γT)(v* − v^π)`.
    pub identity1: UtilityVector,
    /// `v^π − S ε T (v* − v^π)`.
    pub identity2: UtilityVector,
    pub identity1_residual: f64,
    pub identity2_residual: f64,
    pub min_successor_entry: f64,
    pub min_transition_entry: f64,
    pub min_regret_entry: f64,
}

impl GapReport {
    pub fn max_residual(&self) -> f64 {
        self.identity1_residual.max(self.identity2_residual)
    }
}

pub fn value_utility_gap(
    model: &MdpGamma,
    gamma: f64,
    policy: &StationaryPolicy,
) -> Result<GapReport> {
    check_discount(gamma)?;
    let plan = policy_iteration(model, None)?;
    value_utility_gap_with_plan(model, &plan, gamma, policy)
}

pub fn value_utility_gap_with_plan(
    model: &MdpGamma,
    plan: &PlanResult,
    gamma: f64,
    policy: &StationaryPolicy,
) -> Result<GapReport> {
    check_discount(gamma)?;
    policy.check(&model.sdp)?;
    let actions = policy.actions().ok_or_else(|| {
        Error::PolicyInvalid("the value-utility gap is defined for deterministic policies".into())
    })?;
    let n = model.n_states();
    let mdp = optimizing_mdp_from_plan(model, plan, gamma)?;

    let u_pi = evaluate_policy(model, policy, Method::Direct)?;
    let pm = policy_matrices(model, policy)?;
    let successor = evaluation::successor_of(&pm.m)?;
    let t = transition_matrix(&model.sdp, policy)?;
    let v_pi = mdp_value(&mdp, policy)?;
    let v_star = mdp_value(&mdp, &plan.policy)?;
    let u_star = plan.utilities.clone();

    let col = |v: &[f64]| DVector::from_column_slice(v);
    let regret = col(&v_star) - col(&v_pi);
    let epsilon_diag = actions
        .iter()
        .enumerate()
        .map(|(s, &a)| Ok(model.anticipation(s, a)? - gamma))
        .collect::<Result<Vec<f64>>>()?;
    let epsilon = DMatrix::from_diagonal(&col(&epsilon_diag));

    let identity = DMatrix::<f64>::identity(n, n);
    let rhs1 = col(&u_star) - &successor * ((identity - &t * gamma) * &regret);
    let rhs2 = col(&v_pi) - &successor * (epsilon * (&t * &regret));
    let to_vec = |v: DVector<f64>| UtilityVector(v.iter().copied().collect());
    let (identity1, identity2) = (to_vec(rhs1), to_vec(rhs2));
    let min_entry = |it: &mut dyn Iterator<Item = &f64>| it.copied().fold(f64::INFINITY, f64::min);

    Ok(GapReport {
        gamma,
        identity1_residual: identity1.max_abs_diff(&u_pi),
        identity2_residual: identity2.max_abs_diff(&u_pi),
        min_successor_entry: min_entry(&mut successor.iter()),
        min_transition_entry: min_entry(&mut t.iter()),
        min_regret_entry: min_entry(&mut regret.iter()),
        u_pi,
        v_pi,
        v_star,
        u_star,
        epsilon_diag,
        identity1,
        identity2,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::planning::{greedy_policy, policy_iteration};
    use approx::assert_abs_diff_eq;

    fn cliff_reward(mdp: &FixedGammaMdp, name: &str) -> f64 {
        let a = mdp.sdp.action_index(name).unwrap();
        let s = mdp.sdp.available.iter().position(|acts| acts.contains(&a)).unwrap();
        mdp.reward[&(s, a)]
    }

    #[test]
    fn cliff_optimizing_rewards_at_point_nine() {
        let m = fixtures::cliff();
        let mdp = construct_optimizing_mdp(&m, 0.9).unwrap();
        for (name, expected) in [("LL", 10.0), ("ML", -10.0), ("MM", -2.0), ("HM", -2.0), ("HH", -3.0)] {
            assert_abs_diff_eq!(cliff_reward(&mdp, name), expected, epsilon = 1e-9);
        }
    }

    #[test]
    fn zero_discount_reward_is_q_star() {
        let m = fixtures::cliff();
        let mdp = construct_optimizing_mdp(&m, 0.0).unwrap();
        let plan = policy_iteration(&m, None).unwrap();
        let q = backup(&m, &plan.utilities).unwrap();
        for ((s, a), value) in q.iter() {
            assert_eq!(mdp.reward[&(s, a)], value);
        }
    }

    #[test]
    fn optimizing_mdp_reproduces_optimal_utilities() {
        let m = fixtures::cliff();
        let mdp = construct_optimizing_mdp(&m, 0.9).unwrap();
        let classical = policy_iteration(&mdp.lift(), None).unwrap();
        assert_eq!(classical.policy, fixtures::down_policy(&m));
        for (v, e) in classical.utilities.iter().zip([100.0, 80.0, 70.0]) {
            assert_abs_diff_eq!(*v, e, epsilon = 1e-8);
        }
        let v_star = mdp_value(&mdp, &fixtures::down_policy(&m)).unwrap();
        assert!(v_star.max_abs_diff(&[100.0, 80.0, 70.0]) < 1e-8);
        let greedy = greedy_policy(&mdp.lift(), &v_star).unwrap();
        assert_eq!(greedy, fixtures::down_policy(&m));
    }

    #[test]
    fn stay_policy_value_in_optimizing_mdp() {
        let m = fixtures::cliff();
        let mdp = construct_optimizing_mdp(&m, 0.9).unwrap();
        let v = mdp_value(&mdp, &fixtures::stay_policy(&m)).unwrap();
        assert!(v.max_abs_diff(&[100.0, -20.0, -30.0]) < 1e-9, "{v:?}");
    }

    #[test]
    fn zero_discount_value_is_reward() {
        let m = fixtures::cliff();
        let mdp = construct_optimizing_mdp(&m, 0.0).unwrap();
        let stay = fixtures::stay_policy(&m);
        let v = mdp_value(&mdp, &stay).unwrap();
        for (s, a) in stay.actions().unwrap().into_iter().enumerate() {
            assert_eq!(v[s], mdp.reward[&(s, a)]);
        }
    }

    #[test]
    fn cliff_gap_for_stay_policy() {
        let m = fixtures::cliff();
        let gap = value_utility_gap(&m, 0.9, &fixtures::stay_policy(&m)).unwrap();
        assert!(gap.u_pi.max_abs_diff(&[100.0, 0.0, 50.0]) < 1e-9);
        assert!(gap.v_pi.max_abs_diff(&[100.0, -20.0, -30.0]) < 1e-9);
        assert_abs_diff_eq!(gap.epsilon_diag[1], -0.025, epsilon = 1e-15);
        assert!(gap.identity1_residual <= 1e-9);
        assert!(gap.identity2_residual <= 1e-9);
    }

    #[test]
    fn gap_vanishes_at_the_optimum() {
        let m = fixtures::cliff();
        let gap = value_utility_gap(&m, 0.9, &fixtures::down_policy(&m)).unwrap();
        assert!(gap.u_pi.max_abs_diff(&gap.v_pi) < 1e-9);
        assert!(gap.u_star.max_abs_diff(&gap.v_pi) < 1e-9);
        assert!(gap.min_regret_entry.abs() < 1e-9);
    }

    #[test]
    fn gap_rejects_stochastic_policies_and_bad_discounts() {
        let m = fixtures::cliff();
        let mixed = fixtures::policy(fixtures::MIXED_POLICY_JSON, &m);
        let err = value_utility_gap(&m, 0.9, mixed.as_stationary().unwrap()).unwrap_err();
        assert_eq!(err.code(), "POLICY_INVALID");
        let down = fixtures::down_policy(&m);
        assert_eq!(value_utility_gap(&m, 1.0, &down).unwrap_err().code(), "INVALID_ARGUMENT");
    }
}
