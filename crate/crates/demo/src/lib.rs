//! Browser demo on the Cliff. Each exported function takes the editable
//! `ℛ`/`Γ` table as JSON and returns a JSON report, or an error string.
//!
//! The `*_report` functions are plain Rust so they can be tested natively;
//! the `#[wasm_bindgen]` wrappers only convert errors to `JsError`.

use std::collections::BTreeMap;

use mdp_gamma::evaluation::admissibility;
use mdp_gamma::fixed_gamma::Start;
use mdp_gamma::rollout::{RolloutEstimate, Simulator, DEFAULT_TAIL_TOL};
use mdp_gamma::{
    evaluate_policy, fixtures, gamma_sweep, policy_iteration, policy_matrices, validate_model,
    MdpGamma, Method, PolicySet,
};
use serde::Deserialize;
use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

const MAX_SAMPLES: u64 = 200_000;
const MAX_SWEEP_POINTS: usize = 400;

/// The editable part of the Cliff: per-action reward and anticipation.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CliffTable {
    pub reward: BTreeMap<String, f64>,
    pub gamma: BTreeMap<String, f64>,
    #[serde(default)]
    pub slippery: bool,
}

fn build(table: &str) -> Result<MdpGamma, String> {
    let t: CliffTable = serde_json::from_str(table).map_err(|e| format!("bad table: {e}"))?;
    let mut model = if t.slippery {
        fixtures::cliff_slippery()
    } else {
        fixtures::cliff()
    };
    let pairs: Vec<_> = model.sdp.pairs().collect();
    for (name, values) in [("reward", &t.reward), ("gamma", &t.gamma)] {
        for (action, &value) in values {
            let a = model
                .sdp
                .action_index(action)
                .ok_or_else(|| format!("unknown action {action:?} in {name}"))?;
            let pair = *pairs.iter().find(|p| p.1 == a).expect("every cliff action has one state");
            let target = if name == "reward" { &mut model.reward } else { &mut model.gamma };
            target.insert(pair, value);
        }
    }
    let violations = validate_model(&model);
    if let Some(v) = violations.first() {
        return Err(format!("{} at {}: {}", v.code, v.location, v.message));
    }
    Ok(model)
}

fn names(model: &MdpGamma) -> Value {
    json!(model.sdp.states)
}

/// Every deterministic policy with its spectral radius and utilities, plus the optimum.
pub fn cliff_report(table: &str) -> Result<String, String> {
    let model = build(table)?;
    let mut policies = Vec::new();
    for p in model.sdp.deterministic_policies() {
        let report = policy_matrices(&model, &p)
            .and_then(|pm| admissibility(&pm))
            .map_err(|e| e.to_string())?;
        let utilities = if report.admissible {
            Some(evaluate_policy(&model, &p, Method::Direct).map_err(|e| e.to_string())?.0)
        } else {
            None
        };
        policies.push(json!({
            "policy": p.describe(&model.sdp),
            "spectral_radius": report.spectral_radius,
            "admissible": report.admissible,
            "utilities": utilities,
        }));
    }
    let optimal = match policy_iteration(&model, None) {
        Ok(plan) => json!({
            "policy": plan.policy.describe(&model.sdp),
            "utilities": plan.utilities.0,
        }),
        Err(e) => json!({ "error": e.to_string() }),
    };
    Ok(json!({ "states": names(&model), "policies": policies, "optimal": optimal }).to_string())
}

/// Implied fixed-γ rewards, stay-policy values and reversal counts over `points` discounts in `[0, 0.99]`.
pub fn sweep_report(table: &str, points: usize) -> Result<String, String> {
    if !(2..=MAX_SWEEP_POINTS).contains(&points) {
        return Err(format!("points must lie in 2..={MAX_SWEEP_POINTS}"));
    }
    let model = build(table)?;
    let grid: Vec<f64> = (0..points).map(|i| 0.99 * i as f64 / (points - 1) as f64).collect();
    let stay = fixtures::stay_policy(&model);
    let middle = fixtures::stay_middle_policy(&model);
    let listed = [stay, middle, fixtures::down_policy(&model), fixtures::hh_policy(&model)];
    let admissible: Vec<_> = listed
        .iter()
        .filter(|p| evaluate_policy(&model, p, Method::Direct).is_ok())
        .cloned()
        .collect();
    let reports =
        gamma_sweep(&model, &grid, PolicySet::Listed(&admissible)).map_err(|e| e.to_string())?;
    let a = |n| model.sdp.action_index(n).expect("cliff action");
    let (mm, hh) = ((1, a("MM")), (2, a("HH")));
    let stay_index = admissible.iter().position(|p| *p == listed[0]);
    let mut out = BTreeMap::<&str, Vec<Value>>::new();
    for r in &reports {
        out.entry("gamma").or_default().push(json!(r.gamma));
        out.entry("r_mm").or_default().push(json!(r.implied_rewards[&mm]));
        out.entry("r_hh").or_default().push(json!(r.implied_rewards[&hh]));
        let (vh, vm) = match stay_index {
            Some(i) => (json!(r.policies[i].v[2]), json!(r.policies[i].v[1])),
            None => (Value::Null, Value::Null),
        };
        out.entry("v_stay_high").or_default().push(vh);
        out.entry("v_stay_middle").or_default().push(vm);
        out.entry("reversals").or_default().push(json!(r.reversal_count()));
        let state_only = r
            .reversals()
            .filter(|c| matches!((c.left.start, c.right.start), (Start::State(_), Start::State(_))))
            .count();
        out.entry("state_reversals").or_default().push(json!(state_only));
        out.entry("representable").or_default().push(json!(r.representable));
    }
    Ok(json!(out).to_string())
}

/// Running Monte Carlo estimates from `H` under the optimal policy, against the exact utility.
pub fn rollout_report(table: &str, samples: u64, seed: u64) -> Result<String, String> {
    if !(1..=MAX_SAMPLES).contains(&samples) {
        return Err(format!("samples must lie in 1..={MAX_SAMPLES}"));
    }
    let model = build(table)?;
    let plan = policy_iteration(&model, None).map_err(|e| e.to_string())?;
    let start = model.sdp.state_index("H").expect("cliff has H");
    let sim = Simulator::new(&model, &plan.policy, 512, DEFAULT_TAIL_TOL).map_err(|e| e.to_string())?;
    let returns = sim.sample_range(start, seed, 0..samples);
    let mut checkpoints = Vec::new();
    let mut n = 1u64;
    while n < samples {
        checkpoints.push(n);
        n = (n * 3).div_ceil(2).max(n + 1);
    }
    checkpoints.push(samples);
    let points: Vec<Value> = checkpoints
        .iter()
        .map(|&k| {
            let est = RolloutEstimate::from_samples(&returns[..k as usize], seed);
            json!({ "samples": k, "mean": est.mean, "std_error": est.std_error })
        })
        .collect();
    let last = RolloutEstimate::from_samples(&returns, seed);
    Ok(json!({
        "policy": plan.policy.describe(&model.sdp),
        "exact": plan.utilities[start],
        "points": points,
        "truncated_fraction": last.truncated_fraction,
    })
    .to_string())
}

#[wasm_bindgen(js_name = cliffReport)]
pub fn cliff_report_js(table: &str) -> Result<String, JsError> {
    cliff_report(table).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = sweepReport)]
pub fn sweep_report_js(table: &str, points: usize) -> Result<String, JsError> {
    sweep_report(table, points).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = rolloutReport)]
pub fn rollout_report_js(table: &str, samples: u32, seed: u32) -> Result<String, JsError> {
    rollout_report(table, samples as u64, seed as u64).map_err(|e| JsError::new(&e))
}

#[cfg(test)]
mod tests {
    use super::*;

    const SUPPLEMENT: &str = r#"{
        "reward": {"LL": 10, "ML": -10, "MM": 0, "HM": -2, "HH": 25},
        "gamma": {"LL": 0.9, "ML": 0.9, "MM": 0.875, "HM": 0.9, "HH": 0.5}
    }"#;

    fn parse(s: String) -> Value {
        serde_json::from_str(&s).unwrap()
    }

    fn close(v: &Value, want: f64) -> bool {
        (v.as_f64().unwrap() - want).abs() < 1e-9
    }

    #[test]
    fn cliff_table_reproduces_the_fixture() {
        let v = parse(cliff_report(SUPPLEMENT).unwrap());
        assert_eq!(v["optimal"]["policy"], "{L:LL, M:ML, H:HM}");
        for (i, want) in [100.0, 80.0, 70.0].into_iter().enumerate() {
            assert!(close(&v["optimal"]["utilities"][i], want));
        }
        assert_eq!(v["policies"].as_array().unwrap().len(), 4);
    }

    #[test]
    fn slippery_table_prefers_hh() {
        let table = SUPPLEMENT.replace("\"HH\": 0.5}", "\"HH\": 1.2}, \"slippery\": true");
        let v = parse(cliff_report(&table).unwrap());
        assert_eq!(v["optimal"]["policy"], "{L:LL, M:ML, H:HH}");
        let u_h = v["optimal"]["utilities"][2].as_f64().unwrap();
        assert!((u_h - 182.5).abs() < 1e-9);
    }

    #[test]
    fn inadmissible_policies_are_flagged() {
        let table = SUPPLEMENT.replace("\"LL\": 0.9", "\"LL\": 1.1");
        let v = parse(cliff_report(&table).unwrap());
        assert!(v["policies"].as_array().unwrap().iter().all(|p| p["admissible"] == false));
        assert!(v["optimal"]["error"].is_string());
    }

    #[test]
    fn sweep_shows_the_reversal() {
        let v = parse(sweep_report(SUPPLEMENT, 12).unwrap());
        let gamma = v["gamma"].as_array().unwrap();
        assert_eq!(gamma.len(), 12);
        for i in 0..12 {
            let g = gamma[i].as_f64().unwrap();
            let diff = v["r_mm"][i].as_f64().unwrap() - v["r_hh"][i].as_f64().unwrap();
            assert!((diff - 10.0 * (1.0 - g)).abs() < 1e-10);
            assert!(v["v_stay_high"][i].as_f64().unwrap() < v["v_stay_middle"][i].as_f64().unwrap());
            assert!(v["state_reversals"][i].as_u64().unwrap() > 0);
        }
    }

    #[test]
    fn rollout_converges_to_the_exact_value() {
        let v = parse(rollout_report(SUPPLEMENT, 50, 1).unwrap());
        assert!(close(&v["exact"], 70.0));
        let points = v["points"].as_array().unwrap();
        assert_eq!(points.last().unwrap()["samples"], 50);
        assert!(points.iter().all(|p| close(&p["mean"], 70.0)));
    }

    #[test]
    fn bad_input_is_an_error() {
        assert!(cliff_report("{}").is_err());
        assert!(cliff_report(&SUPPLEMENT.replace("\"MM\": 0.875", "\"MM\": -1")).unwrap_err().contains("NEG_GAMMA"));
        assert!(cliff_report(&SUPPLEMENT.replace("\"LL\": 10", "\"XX\": 10")).is_err());
        assert!(rollout_report(SUPPLEMENT, 0, 1).is_err());
        assert!(sweep_report(SUPPLEMENT, 1).is_err());
    }
}
