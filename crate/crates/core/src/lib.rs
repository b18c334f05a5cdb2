//! Tabular solver for finite decision processes whose "discount" may depend
//! on the state and action taken and may exceed one on individual pairs.
//!
//! The model is an MDP-Γ: a finite decision process with a reward `ℛ(s, a)`
//! and an anticipation factor `Γ(s, a) ≥ 0`, where utilities satisfy
//! `U(s, aΠ) = ℛ(s, a) + Γ(s, a)·E[U(s', Π)]`.
//!
//! - [`model`]: environment, policy and utility types plus validation.
//! - [`evaluation`]: policy matrices, admissibility, successor matrices and
//!   state/Q/prefix/lottery utilities.
//! - [`planning`]: policy iteration, value iteration, optimality checks.
//! - [`optimizing`]: the unique fixed-γ MDP whose optimal values equal the
//!   optimal utilities, and the exact value-utility gap identities.
//! - [`fixed_gamma`]: preference reversals between a model and its implied
//!   fixed-γ MDP.
//! - [`rollout`]: a seeded Monte Carlo oracle.
//! - [`io`], [`fixtures`]: JSON documents and the bundled Cliff environments.

// `!(a < b)` is used on purpose so NaN fails the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod evaluation;
pub mod fixed_gamma;
pub mod fixtures;
pub mod io;
pub mod linalg;
pub mod model;
pub mod optimizing;
pub mod planning;
pub mod random;
pub mod rollout;

pub use error::{Error, Result};
pub use evaluation::{
    evaluate_policy, evaluate_prefix_policy, evaluate_q, lottery_utility, policy_matrices,
    successor_matrix, Method, PolicyMatrices, QTable,
};
pub use fixed_gamma::{
    gamma_sweep, implied_fixed_gamma_rewards, representability_check, PolicySet, ReversalReport,
};
pub use linalg::{spectral_radius, AdmissibilityReport};
pub use model::{
    lottery_expectation, validate_model, ActionId, FiniteSdp, FixedGammaMdp, Lottery, MdpGamma,
    PrefixPolicy, StateId, StationaryPolicy, UtilityVector, Violation, ViolationCode,
};
pub use optimizing::{construct_optimizing_mdp, mdp_value, value_utility_gap, GapReport};
pub use planning::{greedy_policy, policy_iteration, value_iteration, verify_optimal, PlanResult};
pub use rollout::{estimate_utility, sample_return, RolloutEstimate};
