//! Bundled environments and policies.
//!
//! The Cliff: three parallel paths (low `L`, middle `M`, high `H`) walked
//! forever, with the option to drop one level at a time but never climb.
//! State order is `(L, M, H)`, action order `(LL, ML, MM, HM, HH)`, and the
//! walk starts on the high path.

use crate::io::{read_model, read_policy};
use crate::model::{MdpGamma, StationaryPolicy};

pub const CLIFF_JSON: &str = include_str!("../fixtures/cliff.json");
/// The Cliff with `HH` slipping to `M` half the time and `Γ(HH) = 1.2`.
pub const CLIFF_SLIPPERY_JSON: &str = include_str!("../fixtures/cliff_slippery.json");
pub const SINGLE_STATE_JSON: &str = include_str!("../fixtures/single_state.json");
/// Three states with `Γ ≡ 0.7`, i.e. an ordinary discounted MDP.
pub const FIXED_GAMMA_JSON: &str = include_str!("../fixtures/fixed_gamma.json");

pub const DOWN_POLICY_JSON: &str = include_str!("../fixtures/down-policy.json");
pub const STAY_POLICY_JSON: &str = include_str!("../fixtures/stay-policy.json");
pub const HH_POLICY_JSON: &str = include_str!("../fixtures/hh-policy.json");
pub const MIXED_POLICY_JSON: &str = include_str!("../fixtures/mixed-policy.json");
/// Three `MM` steps from the middle path, then down.
pub const PATH_K_JSON: &str = include_str!("../fixtures/path-k.json");

fn load(text: &str) -> MdpGamma {
    read_model(text).expect("bundled fixture is valid")
}

pub fn cliff() -> MdpGamma {
    load(CLIFF_JSON)
}

pub fn cliff_slippery() -> MdpGamma {
    load(CLIFF_SLIPPERY_JSON)
}

pub fn single_state() -> MdpGamma {
    load(SINGLE_STATE_JSON)
}

pub fn fixed_gamma() -> MdpGamma {
    load(FIXED_GAMMA_JSON)
}

/// Builds a deterministic Cliff policy from `(middle, high)` action names.
pub fn cliff_policy(model: &MdpGamma, middle: &str, high: &str) -> StationaryPolicy {
    let a = |name: &str| model.sdp.action_index(name).expect("cliff action");
    StationaryPolicy::deterministic(vec![a("LL"), a(middle), a(high)])
}

/// `{L:LL, M:ML, H:HM}`: drop to the low path as soon as possible.
pub fn down_policy(model: &MdpGamma) -> StationaryPolicy {
    cliff_policy(model, "ML", "HM")
}

/// `{L:LL, M:MM, H:HH}`: stay on whichever path you are on.
pub fn stay_policy(model: &MdpGamma) -> StationaryPolicy {
    cliff_policy(model, "MM", "HH")
}

/// `{L:LL, M:ML, H:HH}`: try to stay high, drop to low from the middle.
pub fn hh_policy(model: &MdpGamma) -> StationaryPolicy {
    cliff_policy(model, "ML", "HH")
}

/// `{L:LL, M:MM, H:HM}`: settle on the middle path.
pub fn stay_middle_policy(model: &MdpGamma) -> StationaryPolicy {
    cliff_policy(model, "MM", "HM")
}

/// Parses one of the bundled policy documents against `model`.
pub fn policy(text: &str, model: &MdpGamma) -> crate::io::LoadedPolicy {
    read_policy(text, &model.sdp).expect("bundled policy is valid")
}
