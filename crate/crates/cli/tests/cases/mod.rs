//! Pinned CLI invocations shared by the golden and acceptance suites.
#![allow(dead_code)]

use std::path::PathBuf;
use std::process::Command;

pub struct Case {
    pub name: &'static str,
    pub args: &'static [&'static str],
    pub exit: i32,
}

const fn case(name: &'static str, args: &'static [&'static str], exit: i32) -> Case {
    Case { name, args, exit }
}

/// Every case whose stdout is pinned by a file under `tests/golden`.
pub const GOLDEN: &[Case] = &[
    case("check-cliff", &["check", "cliff.json"], 0),
    case("check-slippery", &["check", "cliff_slippery.json"], 0),
    case("check-cliff-admissibility", &["check", "cliff.json", "--admissibility"], 0),
    case("check-slippery-admissibility", &["check", "cliff_slippery.json", "--admissibility"], 0),
    case("check-bad-prob", &["check", "@data/cliff-bad-prob.json"], 2),
    case("evaluate-cliff-down", &["evaluate", "cliff.json", "down-policy.json"], 0),
    case("evaluate-cliff-stay", &["evaluate", "cliff.json", "stay-policy.json"], 0),
    case(
        "evaluate-cliff-stay-iterative",
        &["evaluate", "cliff.json", "stay-policy.json", "--method", "iterative"],
        0,
    ),
    case("evaluate-cliff-mixed", &["evaluate", "cliff.json", "mixed-policy.json"], 0),
    case("evaluate-cliff-path-k", &["evaluate", "cliff.json", "path-k.json"], 0),
    case("evaluate-slippery-hh", &["evaluate", "cliff_slippery.json", "hh-policy.json"], 0),
    case("evaluate-slippery-stay", &["evaluate", "cliff_slippery.json", "stay-policy.json"], 0),
    case("plan-cliff", &["plan", "cliff.json"], 0),
    case("plan-slippery", &["plan", "cliff_slippery.json"], 0),
    case("plan-single-state", &["plan", "single_state.json"], 0),
    case("optimize-cliff", &["optimize", "cliff.json", "--gamma", "0.9"], 0),
    case("optimize-cliff-zero", &["optimize", "cliff.json", "--gamma", "0"], 0),
    case("optimize-slippery", &["optimize", "cliff_slippery.json", "--gamma", "0.9"], 0),
    case("gap-cliff-stay", &["gap", "cliff.json", "stay-policy.json", "--gamma", "0.9"], 0),
    case("gap-cliff-down", &["gap", "cliff.json", "down-policy.json", "--gamma", "0.9"], 0),
    case(
        "gap-slippery-stay",
        &["gap", "cliff_slippery.json", "stay-policy.json", "--gamma", "0.9"],
        0,
    ),
    case("gap-selftest", &["gap", "--selftest", "--seed", "1"], 0),
    case("fit-gamma-cliff", &["fit-gamma", "cliff.json", "--grid", "0,0.3,0.5,0.9,0.99"], 6),
    case(
        "fit-gamma-slippery",
        &["fit-gamma", "cliff_slippery.json", "--grid", "0,0.3,0.5,0.9,0.99"],
        6,
    ),
    case("fit-gamma-fixed", &["fit-gamma", "fixed_gamma.json", "--grid", "0.7"], 0),
    case(
        "rollout-cliff-down",
        &["rollout", "cliff.json", "down-policy.json", "--state", "H", "--samples", "1"],
        0,
    ),
    case(
        "rollout-slippery-hh",
        &[
            "rollout",
            "cliff_slippery.json",
            "hh-policy.json",
            "--state",
            "H",
            "--samples",
            "20000",
            "--seed",
            "42",
        ],
        0,
    ),
];

/// Failure cases pinned by exit code only; stdout must be empty.
pub const EXIT_ONLY: &[Case] = &[
    case("missing-file", &["check", "no-such-file.json"], 3),
    case("unknown-member", &["check", "@data/cliff-unknown-member.json"], 3),
    case("unavailable-action", &["evaluate", "cliff.json", "@data/bad-action-policy.json"], 2),
    case("runaway-evaluate", &["evaluate", "@data/cliff-runaway.json", "stay-policy.json"], 4),
    case("runaway-plan", &["plan", "@data/cliff-runaway.json"], 4),
    case("gamma-one", &["optimize", "cliff.json", "--gamma", "1.0"], 5),
    case("gamma-negative", &["optimize", "cliff.json", "--gamma", "-0.1"], 5),
    case("gap-stochastic", &["gap", "cliff.json", "mixed-policy.json"], 5),
    case("grid-empty", &["fit-gamma", "cliff.json", "--grid", ""], 5),
    case("grid-malformed", &["fit-gamma", "cliff.json", "--grid", "0.1,x"], 5),
    case("grid-out-of-range", &["fit-gamma", "cliff.json", "--grid", "0.5,1"], 5),
    case(
        "rollout-unknown-state",
        &["rollout", "cliff.json", "down-policy.json", "--state", "X"],
        5,
    ),
    case("unknown-command", &["frobnicate"], 5),
    case("missing-argument", &["evaluate", "cliff.json"], 5),
];

pub fn fixtures_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures")
}

pub fn golden_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/golden")
        .join(format!("{name}.tsv"))
}

/// Runs `mdpg` from the fixtures directory. `@data/x` names a file under
/// this crate's `tests/data`.
pub fn run(args: &[&str]) -> (i32, Vec<u8>) {
    let data = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data");
    let args: Vec<String> = args
        .iter()
        .map(|a| match a.strip_prefix("@data/") {
            Some(rest) => data.join(rest).display().to_string(),
            None => a.to_string(),
        })
        .collect();
    let out = Command::new(env!("CARGO_BIN_EXE_mdpg"))
        .args(&args)
        .current_dir(fixtures_dir())
        .output()
        .expect("mdpg runs");
    (out.status.code().unwrap_or(-1), out.stdout)
}

/// Checks one case twice against its golden file; returns a description of
/// the first mismatch.
pub fn check_golden(case: &Case) -> Result<(), String> {
    let (code1, out1) = run(case.args);
    let (code2, out2) = run(case.args);
    if code1 != case.exit || code2 != case.exit {
        return Err(format!("{}: exit {code1}/{code2}, expected {}", case.name, case.exit));
    }
    if out1 != out2 {
        return Err(format!("{}: output differs between runs", case.name));
    }
    let path = golden_path(case.name);
    let golden = std::fs::read(&path).map_err(|e| format!("{}: {e}", path.display()))?;
    if golden != out1 {
        return Err(format!(
            "{}: output differs from golden\n--- golden\n{}--- actual\n{}",
            case.name,
            String::from_utf8_lossy(&golden),
            String::from_utf8_lossy(&out1)
        ));
    }
    Ok(())
}

pub fn check_exit(case: &Case) -> Result<(), String> {
    let (code, out) = run(case.args);
    if code != case.exit {
        return Err(format!("{}: exit {code}, expected {}", case.name, case.exit));
    }
    if !out.is_empty() {
        return Err(format!("{}: unexpected stdout", case.name));
    }
    Ok(())
}
