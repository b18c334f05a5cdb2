//! Optimal stationary policies for an MDP-Γ.
//!
//! With `Γ > 1` on some pairs the Bellman optimality operator is not a
//! sup-norm contraction, so the default planner is policy iteration with an
//! exact solve per policy. Every policy it visits must be admissible; the
//! first one that is not aborts the run with that policy attached.

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::evaluation::{backup, evaluate_policy, evaluate_q, Method};
use crate::model::{ActionId, MdpGamma, StationaryPolicy, UtilityVector};

/// Utilities above this magnitude mean value iteration is diverging.
pub const DIVERGENCE_SENTINEL: f64 = 1e12;
/// Tolerance used when value iteration certifies its greedy policy.
pub const VERIFY_TOL: f64 = 1e-8;
/// An improvement step only switches away from the current action when the
/// gain exceeds this (relative) margin; exact ties never cause a switch.
const SWITCH_MARGIN: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct PlanResult {
    pub policy: StationaryPolicy,
    pub utilities: UtilityVector,
    /// Number of policies evaluated.
    pub iterations: usize,
    /// Utilities of each evaluated policy, in visiting order.
    pub history: Vec<UtilityVector>,
}

/// At each state, the action maximizing `ℛ(s,a) + Γ(s,a)·E u(s')`, ties to
/// the lowest declared action index.
pub fn greedy_policy(model: &MdpGamma, u: &[f64]) -> Result<StationaryPolicy> {
    let q = backup(model, u)?;
    let actions = (0..model.n_states())
        .map(|s| {
            q.best(s).map(|(a, _)| a).ok_or_else(|| {
                Error::ModelMismatch(format!("no available action at {}", model.sdp.state_name(s)))
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(StationaryPolicy::deterministic(actions))
}

fn lowest_index_policy(model: &MdpGamma) -> Result<StationaryPolicy> {
    let actions = (0..model.n_states())
        .map(|s| {
            model.sdp.available(s).first().copied().ok_or_else(|| {
                Error::ModelMismatch(format!("no available action at {}", model.sdp.state_name(s)))
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(StationaryPolicy::deterministic(actions))
}

pub fn policy_iteration(model: &MdpGamma, init: Option<&StationaryPolicy>) -> Result<PlanResult> {
    let mut current = match init {
        Some(p) => {
            p.check(&model.sdp)?;
            if !p.is_deterministic() {
                return Err(Error::PolicyInvalid(
                    "policy iteration starts from a deterministic policy".into(),
                ));
            }
            p.clone()
        }
        None => lowest_index_policy(model)?,
    };
    let mut seen: BTreeSet<Vec<ActionId>> = BTreeSet::new();
    let mut history = Vec::new();
    loop {
        let actions = current.actions().expect("iterates are deterministic");
        if !seen.insert(actions.clone()) {
            return Err(Error::CycleDetected);
        }
        let u = evaluate_policy(model, &current, Method::Direct)?;
        history.push(u.clone());
        let q = backup(model, &u)?;
        let greedy = greedy_policy(model, &u)?
            .actions()
            .expect("greedy policies are deterministic");
        let improved: Vec<ActionId> = actions
            .iter()
            .zip(&greedy)
            .enumerate()
            .map(|(s, (&cur, &best))| {
                let (qc, qb) = (q.get(s, cur).unwrap_or(f64::NEG_INFINITY), q.get(s, best).unwrap_or(f64::NEG_INFINITY));
                if qb > qc + SWITCH_MARGIN * (1.0 + qc.abs()) {
                    best
                } else {
                    cur
                }
            })
            .collect();
        if improved == actions {
            return Ok(PlanResult {
                policy: current,
                utilities: u,
                iterations: history.len(),
                history,
            });
        }
        current = StationaryPolicy::deterministic(improved);
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValueIteration {
    pub utilities: UtilityVector,
    pub iterations: usize,
    pub policy: StationaryPolicy,
}

/// `u ← maxₐ [ℛ + Γ·E u]` from zero until the max-norm change drops below
/// `tol`. The greedy policy of the result must pass [`verify_optimal`].
pub fn value_iteration(model: &MdpGamma, tol: f64, max_iter: usize) -> Result<ValueIteration> {
    let n = model.n_states();
    let mut u = vec![0.0; n];
    let mut change = f64::INFINITY;
    let mut iterations = 0;
    while iterations < max_iter {
        iterations += 1;
        let q = backup(model, &u)?;
        let next: Vec<f64> = (0..n)
            .map(|s| q.best(s).map_or(f64::NAN, |(_, v)| v))
            .collect();
        change = next
            .iter()
            .zip(&u)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()));
        u = next;
        if u.iter().any(|v| !(v.abs() <= DIVERGENCE_SENTINEL)) {
            return Err(Error::NoConvergence {
                iterations,
                best_estimate: change,
            });
        }
        if change < tol {
            break;
        }
    }
    let stalled = Error::NoConvergence {
        iterations,
        best_estimate: change,
    };
    if !(change < tol) {
        return Err(stalled);
    }
    let policy = greedy_policy(model, &u)?;
    match verify_optimal(model, &policy, VERIFY_TOL) {
        Ok(report) if report.optimal => Ok(ValueIteration {
            utilities: UtilityVector(u),
            iterations,
            policy,
        }),
        Ok(_) | Err(Error::InadmissiblePolicy { .. }) => Err(stalled),
        Err(e) => Err(e),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimalityReport {
    pub optimal: bool,
    /// `max(0, maxₐ Q^π(s, a) − u^π(s))` per state.
    pub max_violation: Vec<f64>,
}

/// Bellman optimality test: no single-step deviation from `policy` improves
/// on its own utility by more than `tol`.
pub fn verify_optimal(
    model: &MdpGamma,
    policy: &StationaryPolicy,
    tol: f64,
) -> Result<OptimalityReport> {
    let u = evaluate_policy(model, policy, Method::Direct)?;
    let q = evaluate_q(model, policy)?;
    let mut optimal = true;
    let max_violation = (0..model.n_states())
        .map(|s| {
            let best = q.best(s).map_or(f64::NEG_INFINITY, |(_, v)| v);
            if best - u[s] > tol || u[s] - best > tol {
                optimal = false;
            }
            (best - u[s]).max(0.0)
        })
        .collect();
    Ok(OptimalityReport {
        optimal,
        max_violation,
    })
}
