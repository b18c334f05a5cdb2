//! JSON environment and policy documents.
//!
//! Environment documents name states and actions; the in-memory model uses
//! indices into the `states` and `actions` arrays. Unknown members are
//! rejected at parse time. Unknown names inside the maps are reported as
//! violations alongside the ordinary model violations so that a checker can
//! list every problem at once.

use std::collections::BTreeMap;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    validate_model, ActionId, FiniteSdp, Lottery, MdpGamma, PrefixPolicy, StateId,
    StationaryPolicy, Violation, ViolationCode,
};

type PairTable<T> = IndexMap<String, IndexMap<String, T>>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvFile {
    pub states: Vec<String>,
    pub actions: Vec<String>,
    pub available: IndexMap<String, Vec<String>>,
    pub transitions: PairTable<IndexMap<String, f64>>,
    pub reward: PairTable<f64>,
    pub gamma: PairTable<f64>,
    pub initial: IndexMap<String, f64>,
}

impl EnvFile {
    pub fn parse(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("environment documents always serialize")
    }

    /// Builds the indexed model and returns it with every violation found,
    /// both name-level (unknown states/actions in the maps) and model-level.
    pub fn to_model(&self) -> (MdpGamma, Vec<Violation>) {
        let mut issues = Vec::new();
        let state_ix: BTreeMap<&str, StateId> = self
            .states
            .iter()
            .enumerate()
            .map(|(i, s)| (s.as_str(), i))
            .collect();
        let action_ix: BTreeMap<&str, ActionId> = self
            .actions
            .iter()
            .enumerate()
            .map(|(i, a)| (a.as_str(), i))
            .collect();

        let mut unknown = |code: ViolationCode, location: String, name: &str| {
            let kind = if code == ViolationCode::UnknownState {
                "state"
            } else {
                "action"
            };
            issues.push(Violation {
                code,
                location,
                message: format!("unknown {kind} {name:?}"),
            });
        };

        let mut available = vec![Vec::new(); self.states.len()];
        for (state, acts) in &self.available {
            let Some(&s) = state_ix.get(state.as_str()) else {
                unknown(ViolationCode::UnknownState, "available".into(), state);
                continue;
            };
            for act in acts {
                match action_ix.get(act.as_str()) {
                    Some(&a) => available[s].push(a),
                    None => unknown(ViolationCode::UnknownAction, format!("available.{state}"), act),
                }
            }
            available[s].sort_unstable();
        }

        let mut lottery = |location: String, table: &IndexMap<String, f64>| {
            let mut entries = Vec::with_capacity(table.len());
            for (name, &p) in table {
                match state_ix.get(name.as_str()) {
                    Some(&s) => entries.push((s, p)),
                    None => unknown(ViolationCode::UnknownState, location.clone(), name),
                }
            }
            Lottery::new(entries)
        };

        let mut transitions = BTreeMap::new();
        let mut pair_locations = Vec::new();
        for (state, by_action) in &self.transitions {
            for (act, next) in by_action {
                let loc = format!("transitions.{state}.{act}");
                pair_locations.push((loc.clone(), state.clone(), act.clone()));
                if let (Some(&s), Some(&a)) =
                    (state_ix.get(state.as_str()), action_ix.get(act.as_str()))
                {
                    transitions.insert((s, a), lottery(loc, next));
                }
            }
        }
        let initial = lottery("initial".into(), &self.initial);

        let mut scalar_table = |label: &str, table: &PairTable<f64>| {
            let mut out = BTreeMap::new();
            for (state, by_action) in table {
                for (act, &value) in by_action {
                    pair_locations.push((format!("{label}.{state}.{act}"), state.clone(), act.clone()));
                    if let (Some(&s), Some(&a)) =
                        (state_ix.get(state.as_str()), action_ix.get(act.as_str()))
                    {
                        out.insert((s, a), value);
                    }
                }
            }
            out
        };
        let reward = scalar_table("reward", &self.reward);
        let gamma = scalar_table("gamma", &self.gamma);

        for (loc, state, act) in pair_locations {
            if !state_ix.contains_key(state.as_str()) {
                unknown(ViolationCode::UnknownState, loc, &state);
            } else if !action_ix.contains_key(act.as_str()) {
                unknown(ViolationCode::UnknownAction, loc, &act);
            }
        }

        let model = MdpGamma {
            sdp: FiniteSdp {
                states: self.states.clone(),
                actions: self.actions.clone(),
                available,
                transitions,
                initial,
            },
            reward,
            gamma,
        };
        issues.extend(validate_model(&model));
        (model, issues)
    }

    pub fn from_model(model: &MdpGamma) -> Self {
        let sdp = &model.sdp;
        let name_lottery = |lottery: &Lottery<StateId>| -> IndexMap<String, f64> {
            lottery
                .iter()
                .map(|(s, p)| (sdp.state_name(s).to_string(), p))
                .collect()
        };
        let mut available = IndexMap::new();
        let mut transitions = IndexMap::new();
        let mut reward = IndexMap::new();
        let mut gamma = IndexMap::new();
        for (s, state) in sdp.states.iter().enumerate() {
            available.insert(
                state.clone(),
                sdp.available(s)
                    .iter()
                    .map(|&a| sdp.action_name(a).to_string())
                    .collect(),
            );
        }
        for (&(s, a), next) in &sdp.transitions {
            transitions
                .entry(sdp.state_name(s).to_string())
                .or_insert_with(IndexMap::new)
                .insert(sdp.action_name(a).to_string(), name_lottery(next));
        }
        for (target, source) in [(&mut reward, &model.reward), (&mut gamma, &model.gamma)] {
            for (&(s, a), &v) in source {
                target
                    .entry(sdp.state_name(s).to_string())
                    .or_insert_with(IndexMap::new)
                    .insert(sdp.action_name(a).to_string(), v);
            }
        }
        EnvFile {
            states: sdp.states.clone(),
            actions: sdp.actions.clone(),
            available,
            transitions,
            reward,
            gamma,
            initial: name_lottery(&sdp.initial),
        }
    }
}

/// Parses an environment document into a validated model.
pub fn read_model(text: &str) -> Result<MdpGamma> {
    let (model, issues) = EnvFile::parse(text)?.to_model();
    if issues.is_empty() {
        Ok(model)
    } else {
        Err(Error::InvalidModel(issues))
    }
}

pub fn write_model(model: &MdpGamma) -> String {
    EnvFile::from_model(model).to_json()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PolicyKind {
    Stationary,
    Prefix,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ChoiceValue {
    Action(String),
    Mixed(IndexMap<String, f64>),
}

pub type ChoiceMap = IndexMap<String, ChoiceValue>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolicyFile {
    #[serde(rename = "type")]
    pub kind: PolicyKind,
    pub choice: ChoiceMap,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prefix: Option<Vec<ChoiceMap>>,
}

/// A policy read from a document.
#[derive(Debug, Clone, PartialEq)]
pub enum LoadedPolicy {
    Stationary(StationaryPolicy),
    Prefix(PrefixPolicy),
}

impl LoadedPolicy {
    /// The stationary policy, or `None` for a prefix policy with a nonempty prefix.
    pub fn as_stationary(&self) -> Option<&StationaryPolicy> {
        match self {
            LoadedPolicy::Stationary(p) => Some(p),
            LoadedPolicy::Prefix(pp) if pp.prefix.is_empty() => Some(&pp.tail),
            LoadedPolicy::Prefix(_) => None,
        }
    }

    pub fn into_prefix(self) -> PrefixPolicy {
        match self {
            LoadedPolicy::Stationary(p) => PrefixPolicy::stationary(p),
            LoadedPolicy::Prefix(pp) => pp,
        }
    }
}

impl PolicyFile {
    pub fn parse(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_policy(&self, sdp: &FiniteSdp) -> Result<LoadedPolicy> {
        let tail = choice_to_policy(&self.choice, sdp)?;
        match (self.kind, &self.prefix) {
            (PolicyKind::Stationary, None) => Ok(LoadedPolicy::Stationary(tail)),
            (PolicyKind::Stationary, Some(_)) => Err(Error::PolicyInvalid(
                "a stationary policy cannot carry a prefix".into(),
            )),
            (PolicyKind::Prefix, prefix) => {
                let prefix = prefix
                    .iter()
                    .flatten()
                    .map(|c| choice_to_policy(c, sdp))
                    .collect::<Result<Vec<_>>>()?;
                Ok(LoadedPolicy::Prefix(PrefixPolicy { prefix, tail }))
            }
        }
    }

    pub fn from_stationary(policy: &StationaryPolicy, sdp: &FiniteSdp) -> Self {
        PolicyFile {
            kind: PolicyKind::Stationary,
            choice: policy_to_choice(policy, sdp),
            prefix: None,
        }
    }
}

pub fn read_policy(text: &str, sdp: &FiniteSdp) -> Result<LoadedPolicy> {
    PolicyFile::parse(text)?.to_policy(sdp)
}

fn choice_to_policy(choice: &ChoiceMap, sdp: &FiniteSdp) -> Result<StationaryPolicy> {
    let action = |name: &str| {
        sdp.action_index(name)
            .ok_or_else(|| Error::PolicyInvalid(format!("unknown action {name:?}")))
    };
    for state in choice.keys() {
        if sdp.state_index(state).is_none() {
            return Err(Error::PolicyInvalid(format!("unknown state {state:?}")));
        }
    }
    let lotteries = sdp
        .states
        .iter()
        .map(|state| match choice.get(state) {
            None => Err(Error::PolicyInvalid(format!("no choice for state {state:?}"))),
            Some(ChoiceValue::Action(a)) => Ok(Lottery::degenerate(action(a)?)),
            Some(ChoiceValue::Mixed(m)) => Ok(Lottery::new(
                m.iter()
                    .map(|(a, &p)| Ok((action(a)?, p)))
                    .collect::<Result<Vec<_>>>()?,
            )),
        })
        .collect::<Result<Vec<_>>>()?;
    let policy = StationaryPolicy::new(lotteries);
    policy.check(sdp)?;
    Ok(policy)
}

fn policy_to_choice(policy: &StationaryPolicy, sdp: &FiniteSdp) -> ChoiceMap {
    policy
        .choice
        .iter()
        .enumerate()
        .map(|(s, lottery)| {
            let value = match lottery.certain() {
                Some(a) => ChoiceValue::Action(sdp.action_name(a).to_string()),
                None => ChoiceValue::Mixed(
                    lottery
                        .iter()
                        .map(|(a, p)| (sdp.action_name(a).to_string(), p))
                        .collect(),
                ),
            };
            (sdp.state_name(s).to_string(), value)
        })
        .collect()
}
