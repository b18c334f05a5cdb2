//! Policy evaluation through the generalized Bellman relation
//! `U(s, aΠ) = ℛ(s, a) + Γ(s, a)·E[U(s', Π)]`.
//!
//! For a stationary policy this is the linear system `u = r + M u` with
//! `M[i][j] = Σ_a π(a|sᵢ)·Γ(sᵢ, a)·T(sᵢ, a)(sⱼ)` and `r[i] = Σ_a π(a|sᵢ)·ℛ(sᵢ, a)`.
//! The system has a unique nonnegative-resolvent solution exactly when the
//! spectral radius of `M` is below one; such policies are called admissible.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{self, AdmissibilityReport, SPECTRAL_MAX_ITER, SPECTRAL_TOL};
use crate::model::{
    lottery_expectation, ActionId, Lottery, MdpGamma, PrefixPolicy, StateId, StationaryPolicy,
    UtilityVector,
};

pub use crate::linalg::spectral_radius;

/// Residual threshold and sweep cap of the iterative method.
pub const ITERATIVE_TOL: f64 = 1e-10;
pub const ITERATIVE_MAX_SWEEPS: usize = 100_000;

/// `(M, r)` for one stationary policy.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyMatrices {
    pub m: DMatrix<f64>,
    pub r: DVector<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Method {
    #[default]
    Direct,
    Iterative,
}

pub fn policy_matrices(model: &MdpGamma, policy: &StationaryPolicy) -> Result<PolicyMatrices> {
    policy.check(&model.sdp)?;
    let n = model.n_states();
    let mut m = DMatrix::zeros(n, n);
    let mut r = DVector::zeros(n);
    for (s, choice) in policy.choice.iter().enumerate() {
        for (a, pa) in choice.iter() {
            r[s] += pa * model.reward(s, a)?;
            let g = model.anticipation(s, a)?;
            for (next, pt) in model.sdp.transition(s, a)?.iter() {
                m[(s, next)] += pa * g * pt;
            }
        }
    }
    Ok(PolicyMatrices { m, r })
}

/// Spectral test of `M` with the default tolerance.
pub fn admissibility(pm: &PolicyMatrices) -> Result<AdmissibilityReport> {
    linalg::spectral_radius(&pm.m, SPECTRAL_TOL, SPECTRAL_MAX_ITER)
}

fn require_admissible(pm: &PolicyMatrices, policy: &StationaryPolicy) -> Result<AdmissibilityReport> {
    let report = admissibility(pm)?;
    if report.admissible {
        Ok(report)
    } else {
        Err(Error::InadmissiblePolicy {
            spectral_radius: report.spectral_radius,
            policy: Box::new(policy.clone()),
        })
    }
}

fn resolvent_operand(m: &DMatrix<f64>) -> DMatrix<f64> {
    DMatrix::identity(m.nrows(), m.ncols()) - m
}

/// The generalized successor matrix `S = (I − M)⁻¹ = Σₖ Mᵏ`, so that `u = S r`.
pub fn successor_matrix(model: &MdpGamma, policy: &StationaryPolicy) -> Result<DMatrix<f64>> {
    let pm = policy_matrices(model, policy)?;
    require_admissible(&pm, policy)?;
    successor_of(&pm.m)
}

pub(crate) fn successor_of(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = m.nrows();
    linalg::solve(&resolvent_operand(m), &DMatrix::identity(n, n))
}

pub fn evaluate_policy(
    model: &MdpGamma,
    policy: &StationaryPolicy,
    method: Method,
) -> Result<UtilityVector> {
    let pm = policy_matrices(model, policy)?;
    require_admissible(&pm, policy)?;
    let u = match method {
        Method::Direct => linalg::solve_vec(&resolvent_operand(&pm.m), &pm.r)?,
        Method::Iterative => iterate_affine(&pm)?,
    };
    Ok(UtilityVector(u.iter().copied().collect()))
}

/// `u ← r + M u` from zero; the k-th iterate is the k-term Neumann sum applied to `r`.
fn iterate_affine(pm: &PolicyMatrices) -> Result<DVector<f64>> {
    let mut u = DVector::zeros(pm.r.len());
    let mut residual = f64::INFINITY;
    for _ in 0..ITERATIVE_MAX_SWEEPS {
        let next = &pm.r + &pm.m * &u;
        residual = (&next - &u).amax();
        u = next;
        if residual < ITERATIVE_TOL {
            return Ok(u);
        }
    }
    Err(Error::NoConvergence {
        iterations: ITERATIVE_MAX_SWEEPS,
        best_estimate: residual,
    })
}

/// Per-pair values `Q(s, a)` over the available pairs of a model.
#[derive(Debug, Clone, PartialEq)]
pub struct QTable {
    values: BTreeMap<(StateId, ActionId), f64>,
}

impl QTable {
    pub fn get(&self, s: StateId, a: ActionId) -> Option<f64> {
        self.values.get(&(s, a)).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = ((StateId, ActionId), f64)> + '_ {
        self.values.iter().map(|(&k, &v)| (k, v))
    }

    pub fn as_map(&self) -> &BTreeMap<(StateId, ActionId), f64> {
        &self.values
    }

    /// Largest value at `s` and the first action (declared order) attaining it.
    pub fn best(&self, s: StateId) -> Option<(ActionId, f64)> {
        self.values
            .range((s, 0)..(s + 1, 0))
            .fold(None, |best, (&(_, a), &q)| match best {
                Some((_, bq)) if bq >= q => best,
                _ => Some((a, q)),
            })
    }
}

/// One Bellman backup of a next-state utility vector: `ℛ(s,a) + Γ(s,a)·E u(s')`.
pub fn backup(model: &MdpGamma, next_values: &[f64]) -> Result<QTable> {
    let mut values = BTreeMap::new();
    for (s, a) in model.sdp.pairs() {
        let expected = lottery_expectation(model.sdp.transition(s, a)?, next_values)?;
        values.insert(
            (s, a),
            model.reward(s, a)? + model.anticipation(s, a)? * expected,
        );
    }
    Ok(QTable { values })
}

/// `Q^π(s, a) = U(s, aπ)`: take `a` once, then follow `π`.
pub fn evaluate_q(model: &MdpGamma, policy: &StationaryPolicy) -> Result<QTable> {
    let u = evaluate_policy(model, policy, Method::Direct)?;
    backup(model, &u)
}

/// Backward recursion through the prefix starting from the tail's utilities.
pub fn evaluate_prefix_policy(model: &MdpGamma, pp: &PrefixPolicy) -> Result<UtilityVector> {
    let mut u = evaluate_policy(model, &pp.tail, Method::Direct)?;
    for step in pp.prefix.iter().rev() {
        let pm = policy_matrices(model, step)?;
        let next = &pm.r + &pm.m * DVector::from_column_slice(&u);
        u = UtilityVector(next.iter().copied().collect());
    }
    Ok(u)
}

/// Expected utility of starting from a state lottery and following `policy`.
pub fn lottery_utility(
    model: &MdpGamma,
    state_lottery: &Lottery<StateId>,
    policy: &StationaryPolicy,
) -> Result<f64> {
    let u = evaluate_policy(model, policy, Method::Direct)?;
    lottery_expectation(state_lottery, &u)
}
