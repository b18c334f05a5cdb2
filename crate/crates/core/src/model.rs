//! Environment, policy and utility data model.
//!
//! States and actions are referred to by index into the declared name lists
//! of a [`FiniteSdp`]. Every other module relies on that order: row `i` of a
//! policy matrix or entry `i` of a [`UtilityVector`] is the `i`th declared
//! state, and action ties are broken by declared action order.
//!
//! Constructors here do not validate. Call [`validate_model`] (or
//! [`MdpGamma::validated`]) before handing a model to the solvers.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::ops::Deref;

use crate::error::{Error, Result};

pub type StateId = usize;
pub type ActionId = usize;

/// Absolute tolerance on lottery probability sums.
pub const PROB_SUM_TOL: f64 = 1e-12;

/// A probability distribution with finite support.
#[derive(Debug, Clone, PartialEq)]
pub struct Lottery<X> {
    entries: Vec<(X, f64)>,
}

impl<X: Copy + Ord> Lottery<X> {
    pub fn new(entries: Vec<(X, f64)>) -> Self {
        Lottery { entries }
    }

    pub fn degenerate(outcome: X) -> Self {
        Lottery {
            entries: vec![(outcome, 1.0)],
        }
    }

    pub fn entries(&self) -> &[(X, f64)] {
        &self.entries
    }

    pub fn iter(&self) -> impl Iterator<Item = (X, f64)> + '_ {
        self.entries.iter().copied()
    }

    pub fn support(&self) -> impl Iterator<Item = X> + '_ {
        self.entries.iter().map(|&(x, _)| x)
    }

    pub fn probability(&self, outcome: X) -> f64 {
        self.entries
            .iter()
            .filter(|&&(x, _)| x == outcome)
            .map(|&(_, p)| p)
            .sum()
    }

    /// The single outcome of a degenerate lottery.
    pub fn certain(&self) -> Option<X> {
        match self.entries.as_slice() {
            [(x, _)] => Some(*x),
            _ => None,
        }
    }

    pub fn is_degenerate(&self) -> bool {
        self.certain().is_some()
    }

    /// Structural faults of this lottery, ignoring what its outcomes mean.
    pub fn faults(&self) -> Vec<(ViolationCode, String)> {
        let mut out = Vec::new();
        if self.entries.is_empty() {
            out.push((ViolationCode::EmptySupport, "support is empty".to_string()));
            return out;
        }
        for &(_, p) in &self.entries {
            if !(p.is_finite() && p > 0.0 && p <= 1.0) {
                out.push((
                    ViolationCode::ProbRange,
                    format!("probability {p} outside (0, 1]"),
                ));
            }
        }
        let sum: f64 = self.entries.iter().map(|&(_, p)| p).sum();
        if !((sum - 1.0).abs() <= PROB_SUM_TOL) {
            out.push((
                ViolationCode::ProbSum,
                format!("probabilities sum to {sum}, expected 1"),
            ));
        }
        let distinct: BTreeSet<X> = self.support().collect();
        if distinct.len() != self.entries.len() {
            out.push((
                ViolationCode::DuplicateOutcome,
                "outcomes are not pairwise distinct".to_string(),
            ));
        }
        out
    }
}

/// Probability-weighted sum of `values` over the lottery's support.
pub fn lottery_expectation(lottery: &Lottery<StateId>, values: &[f64]) -> Result<f64> {
    lottery.iter().try_fold(0.0, |acc, (s, p)| match values.get(s) {
        Some(v) => Ok(acc + p * v),
        None => Err(Error::ModelMismatch(format!(
            "state index {s} outside a utility vector of length {}",
            values.len()
        ))),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ViolationCode {
    ProbSum,
    ProbRange,
    DuplicateOutcome,
    EmptySupport,
    NoStates,
    DuplicateName,
    NoActions,
    UnknownState,
    UnknownAction,
    MissingTransition,
    ExtraTransition,
    MissingReward,
    ExtraReward,
    MissingGamma,
    ExtraGamma,
    NegGamma,
    NonFinite,
}

impl ViolationCode {
    pub fn as_str(self) -> &'static str {
        match self {
            ViolationCode::ProbSum => "PROB_SUM",
            ViolationCode::ProbRange => "PROB_RANGE",
            ViolationCode::DuplicateOutcome => "DUPLICATE_OUTCOME",
            ViolationCode::EmptySupport => "EMPTY_SUPPORT",
            ViolationCode::NoStates => "NO_STATES",
            ViolationCode::DuplicateName => "DUPLICATE_NAME",
            ViolationCode::NoActions => "NO_ACTIONS",
            ViolationCode::UnknownState => "UNKNOWN_STATE",
            ViolationCode::UnknownAction => "UNKNOWN_ACTION",
            ViolationCode::MissingTransition => "MISSING_TRANSITION",
            ViolationCode::ExtraTransition => "EXTRA_TRANSITION",
            ViolationCode::MissingReward => "MISSING_REWARD",
            ViolationCode::ExtraReward => "EXTRA_REWARD",
            ViolationCode::MissingGamma => "MISSING_GAMMA",
            ViolationCode::ExtraGamma => "EXTRA_GAMMA",
            ViolationCode::NegGamma => "NEG_GAMMA",
            ViolationCode::NonFinite => "NON_FINITE",
        }
    }
}

impl fmt::Display for ViolationCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub code: ViolationCode,
    pub location: String,
    pub message: String,
}

/// States, per-state available actions, transitions and the initial lottery.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteSdp {
    pub states: Vec<String>,
    pub actions: Vec<String>,
    /// Available action indices per state, in declared action order.
    pub available: Vec<Vec<ActionId>>,
    pub transitions: BTreeMap<(StateId, ActionId), Lottery<StateId>>,
    pub initial: Lottery<StateId>,
}

impl FiniteSdp {
    pub fn n_states(&self) -> usize {
        self.states.len()
    }

    pub fn available(&self, s: StateId) -> &[ActionId] {
        self.available.get(s).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn is_available(&self, s: StateId, a: ActionId) -> bool {
        self.available(s).contains(&a)
    }

    /// Every available `(state, action)` pair in state-major, declared order.
    pub fn pairs(&self) -> impl Iterator<Item = (StateId, ActionId)> + '_ {
        self.available
            .iter()
            .enumerate()
            .flat_map(|(s, acts)| acts.iter().map(move |&a| (s, a)))
    }

    pub fn transition(&self, s: StateId, a: ActionId) -> Result<&Lottery<StateId>> {
        self.transitions.get(&(s, a)).ok_or_else(|| {
            Error::ModelMismatch(format!("no transition for {}", self.pair_name(s, a)))
        })
    }

    pub fn state_index(&self, name: &str) -> Option<StateId> {
        self.states.iter().position(|s| s == name)
    }

    pub fn action_index(&self, name: &str) -> Option<ActionId> {
        self.actions.iter().position(|a| a == name)
    }

    pub fn state_name(&self, s: StateId) -> &str {
        self.states.get(s).map(String::as_str).unwrap_or("?")
    }

    pub fn action_name(&self, a: ActionId) -> &str {
        self.actions.get(a).map(String::as_str).unwrap_or("?")
    }

    pub fn pair_name(&self, s: StateId, a: ActionId) -> String {
        format!("({}, {})", self.state_name(s), self.action_name(a))
    }

    /// Number of deterministic stationary policies (saturating).
    pub fn deterministic_policy_count(&self) -> u128 {
        self.available
            .iter()
            .fold(1u128, |acc, acts| acc.saturating_mul(acts.len() as u128))
    }

    /// Every deterministic stationary policy, odometer order over the
    /// declared action order with the last state varying fastest.
    pub fn deterministic_policies(&self) -> Vec<StationaryPolicy> {
        let n = self.n_states();
        if n == 0 || self.available.iter().any(Vec::is_empty) {
            return Vec::new();
        }
        let mut digits = vec![0usize; n];
        let mut out = Vec::new();
        loop {
            out.push(StationaryPolicy::deterministic(
                (0..n).map(|s| self.available[s][digits[s]]).collect(),
            ));
            let mut i = n;
            loop {
                if i == 0 {
                    return out;
                }
                i -= 1;
                digits[i] += 1;
                if digits[i] < self.available[i].len() {
                    break;
                }
                digits[i] = 0;
            }
        }
    }
}

/// An SDP with reward `ℛ(s, a)` and anticipation `Γ(s, a)` on available pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct MdpGamma {
    pub sdp: FiniteSdp,
    pub reward: BTreeMap<(StateId, ActionId), f64>,
    pub gamma: BTreeMap<(StateId, ActionId), f64>,
}

impl MdpGamma {
    pub fn n_states(&self) -> usize {
        self.sdp.n_states()
    }

    /// Returns the model if it has no violations.
    pub fn validated(self) -> Result<Self> {
        let violations = validate_model(&self);
        if violations.is_empty() {
            Ok(self)
        } else {
            Err(Error::InvalidModel(violations))
        }
    }

    pub fn reward(&self, s: StateId, a: ActionId) -> Result<f64> {
        self.reward.get(&(s, a)).copied().ok_or_else(|| {
            Error::ModelMismatch(format!("no reward for {}", self.sdp.pair_name(s, a)))
        })
    }

    pub fn anticipation(&self, s: StateId, a: ActionId) -> Result<f64> {
        self.gamma.get(&(s, a)).copied().ok_or_else(|| {
            Error::ModelMismatch(format!("no anticipation for {}", self.sdp.pair_name(s, a)))
        })
    }

    pub fn max_abs_reward(&self) -> f64 {
        self.reward.values().fold(0.0, |m, r| m.max(r.abs()))
    }
}

/// A classical MDP: an SDP with reward `R(s, a)` and a fixed discount in `[0, 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FixedGammaMdp {
    pub sdp: FiniteSdp,
    pub reward: BTreeMap<(StateId, ActionId), f64>,
    pub gamma: f64,
}

impl FixedGammaMdp {
    pub fn new(
        sdp: FiniteSdp,
        reward: BTreeMap<(StateId, ActionId), f64>,
        gamma: f64,
    ) -> Result<Self> {
        check_discount(gamma)?;
        Ok(FixedGammaMdp { sdp, reward, gamma })
    }

    /// The same preferences written as an MDP-Γ with `Γ ≡ γ`.
    pub fn lift(&self) -> MdpGamma {
        let gamma = self.sdp.pairs().map(|sa| (sa, self.gamma)).collect();
        MdpGamma {
            sdp: self.sdp.clone(),
            reward: self.reward.clone(),
            gamma,
        }
    }
}

pub(crate) fn check_discount(gamma: f64) -> Result<()> {
    if (0.0..1.0).contains(&gamma) {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "discount {gamma} outside [0, 1)"
        )))
    }
}

/// Every invariant violation of `model`; empty when the model is valid.
pub fn validate_model(model: &MdpGamma) -> Vec<Violation> {
    let sdp = &model.sdp;
    let n = sdp.n_states();
    let mut out = Vec::new();
    let mut push = |code, location: String, message: String| {
        out.push(Violation {
            code,
            location,
            message,
        })
    };

    if n == 0 {
        push(ViolationCode::NoStates, "states".into(), "no states declared".into());
    }
    for (kind, names) in [("state", &sdp.states), ("action", &sdp.actions)] {
        let mut seen = BTreeSet::new();
        for name in names.iter() {
            if !seen.insert(name) {
                push(
                    ViolationCode::DuplicateName,
                    format!("{kind}s"),
                    format!("{kind} {name:?} declared twice"),
                );
            }
        }
    }
    if sdp.available.len() != n {
        push(
            ViolationCode::NoActions,
            "available".into(),
            format!("{} availability lists for {n} states", sdp.available.len()),
        );
    }
    for (s, acts) in sdp.available.iter().enumerate() {
        let loc = format!("available.{}", sdp.state_name(s));
        if acts.is_empty() {
            push(ViolationCode::NoActions, loc.clone(), "no available actions".into());
        }
        let mut seen = BTreeSet::new();
        for &a in acts {
            if a >= sdp.actions.len() {
                push(
                    ViolationCode::UnknownAction,
                    loc.clone(),
                    format!("action index {a} not declared"),
                );
            } else if !seen.insert(a) {
                push(
                    ViolationCode::DuplicateName,
                    loc.clone(),
                    format!("action {} listed twice", sdp.action_name(a)),
                );
            }
        }
    }

    let check_lottery = |push: &mut dyn FnMut(ViolationCode, String, String),
                             loc: String,
                             lottery: &Lottery<StateId>| {
        for (code, msg) in lottery.faults() {
            push(code, loc.clone(), msg);
        }
        for s in lottery.support() {
            if s >= n {
                push(
                    ViolationCode::UnknownState,
                    loc.clone(),
                    format!("outcome index {s} is not a declared state"),
                );
            }
        }
    };

    for (s, a) in sdp.pairs().collect::<Vec<_>>() {
        let name = sdp.pair_name(s, a);
        match sdp.transitions.get(&(s, a)) {
            Some(lottery) => check_lottery(&mut push, format!("transitions{name}"), lottery),
            None => push(
                ViolationCode::MissingTransition,
                format!("transitions{name}"),
                "available pair has no transition".into(),
            ),
        }
        match model.reward.get(&(s, a)) {
            Some(r) if !r.is_finite() => push(
                ViolationCode::NonFinite,
                format!("reward{name}"),
                format!("reward {r} is not finite"),
            ),
            Some(_) => {}
            None => push(
                ViolationCode::MissingReward,
                format!("reward{name}"),
                "available pair has no reward".into(),
            ),
        }
        match model.gamma.get(&(s, a)) {
            Some(g) if !g.is_finite() => push(
                ViolationCode::NonFinite,
                format!("gamma{name}"),
                format!("anticipation {g} is not finite"),
            ),
            Some(g) if *g < 0.0 => push(
                ViolationCode::NegGamma,
                format!("gamma{name}"),
                format!("anticipation {g} is negative"),
            ),
            Some(_) => {}
            None => push(
                ViolationCode::MissingGamma,
                format!("gamma{name}"),
                "available pair has no anticipation".into(),
            ),
        }
    }
    for &(s, a) in sdp.transitions.keys() {
        if !sdp.is_available(s, a) {
            push(
                ViolationCode::ExtraTransition,
                format!("transitions{}", sdp.pair_name(s, a)),
                "transition given for an unavailable pair".into(),
            );
        }
    }
    for (table, code, keys) in [
        ("reward", ViolationCode::ExtraReward, model.reward.keys()),
        ("gamma", ViolationCode::ExtraGamma, model.gamma.keys()),
    ] {
        for &(s, a) in keys {
            if !sdp.is_available(s, a) {
                push(
                    code,
                    format!("{table}{}", sdp.pair_name(s, a)),
                    "value given for an unavailable pair".into(),
                );
            }
        }
    }
    check_lottery(&mut push, "initial".into(), &sdp.initial);
    out
}

/// Per-state action lotteries.
#[derive(Debug, Clone, PartialEq)]
pub struct StationaryPolicy {
    pub choice: Vec<Lottery<ActionId>>,
}

impl StationaryPolicy {
    pub fn new(choice: Vec<Lottery<ActionId>>) -> Self {
        StationaryPolicy { choice }
    }

    pub fn deterministic(actions: Vec<ActionId>) -> Self {
        StationaryPolicy {
            choice: actions.into_iter().map(Lottery::degenerate).collect(),
        }
    }

    pub fn is_deterministic(&self) -> bool {
        self.choice.iter().all(Lottery::is_degenerate)
    }

    /// The chosen action per state, if every lottery is degenerate.
    pub fn actions(&self) -> Option<Vec<ActionId>> {
        self.choice.iter().map(Lottery::certain).collect()
    }

    /// Checks the policy against `sdp`: one well-formed lottery per state,
    /// supported on available actions.
    pub fn check(&self, sdp: &FiniteSdp) -> Result<()> {
        if self.choice.len() != sdp.n_states() {
            return Err(Error::PolicyInvalid(format!(
                "policy covers {} states, model has {}",
                self.choice.len(),
                sdp.n_states()
            )));
        }
        for (s, lottery) in self.choice.iter().enumerate() {
            if let Some((_, msg)) = lottery.faults().into_iter().next() {
                return Err(Error::PolicyInvalid(format!(
                    "choice at {}: {msg}",
                    sdp.state_name(s)
                )));
            }
            if let Some(a) = lottery.support().find(|&a| !sdp.is_available(s, a)) {
                return Err(Error::PolicyInvalid(format!(
                    "action {} is not available at {}",
                    sdp.action_name(a),
                    sdp.state_name(s)
                )));
            }
        }
        Ok(())
    }

    /// Compact rendering such as `{L:LL, M:ML, H:HM}`.
    pub fn describe(&self, sdp: &FiniteSdp) -> String {
        let parts: Vec<String> = self
            .choice
            .iter()
            .enumerate()
            .map(|(s, lottery)| {
                let choice = match lottery.certain() {
                    Some(a) => sdp.action_name(a).to_string(),
                    None => lottery
                        .iter()
                        .map(|(a, p)| format!("{}@{p}", sdp.action_name(a)))
                        .collect::<Vec<_>>()
                        .join("|"),
                };
                format!("{}:{choice}", sdp.state_name(s))
            })
            .collect();
        format!("{{{}}}", parts.join(", "))
    }
}

/// Follow each prefix policy for one step, in order, then the tail forever.
#[derive(Debug, Clone, PartialEq)]
pub struct PrefixPolicy {
    pub prefix: Vec<StationaryPolicy>,
    pub tail: StationaryPolicy,
}

impl PrefixPolicy {
    pub fn stationary(policy: StationaryPolicy) -> Self {
        PrefixPolicy {
            prefix: Vec::new(),
            tail: policy,
        }
    }
}

/// Per-state utilities indexed by declared state order.
#[derive(Debug, Clone, PartialEq)]
pub struct UtilityVector(pub Vec<f64>);

impl UtilityVector {
    pub fn zeros(n: usize) -> Self {
        UtilityVector(vec![0.0; n])
    }

    pub fn max_abs_diff(&self, other: &[f64]) -> f64 {
        self.0
            .iter()
            .zip(other)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for UtilityVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl From<Vec<f64>> for UtilityVector {
    fn from(v: Vec<f64>) -> Self {
        UtilityVector(v)
    }
}
