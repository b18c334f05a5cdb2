//! `mdpg`: command-line front end for the MDP-Γ solver.
//!
//! Every command prints a tab-separated table with one header row on
//! standard output and diagnostics on standard error. Exit codes:
//! 0 success, 2 validation, 3 I/O or unparseable input, 4 inadmissible
//! policy or planning failure, 5 usage, 6 no representable discount found.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod render;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use mdp_gamma::evaluation::{admissibility, policy_matrices};
use mdp_gamma::io::{read_policy, EnvFile, LoadedPolicy};
use mdp_gamma::optimizing::{optimizing_mdp_from_plan, value_utility_gap_with_plan};
use mdp_gamma::random::{random_admissible_model, random_deterministic_policy, InstanceShape};
use mdp_gamma::rollout::estimate_utility_with_tol;
use mdp_gamma::{
    evaluate_policy, evaluate_prefix_policy, gamma_sweep, greedy_policy, policy_iteration, Error,
    MdpGamma, Method, PolicySet, StationaryPolicy,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use render::{num, Table};

/// Residual allowed between the optimizing MDP's optimal values and the utilities.
const VERIFY_TOL: f64 = 1e-8;

#[derive(Parser)]
#[command(name = "mdpg", version, about = "Tabular solver for MDPs with state-action anticipation factors")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate an environment file
    Check {
        env: PathBuf,
        /// List every deterministic policy with its spectral radius instead
        #[arg(long)]
        admissibility: bool,
    },
    /// Utilities of a policy, one row per state
    Evaluate {
        env: PathBuf,
        policy: PathBuf,
        #[arg(long, value_enum, default_value_t = MethodArg::Direct)]
        method: MethodArg,
    },
    /// Optimal policy and utilities
    Plan { env: PathBuf },
    /// Rewards of the fixed-discount MDP whose optimal values equal the optimal utilities
    Optimize {
        env: PathBuf,
        #[arg(long, default_value_t = 0.9, allow_negative_numbers = true)]
        gamma: f64,
    },
    /// Utility, value and the two exact gap identities for a deterministic policy
    Gap {
        #[arg(required_unless_present = "selftest")]
        env: Option<PathBuf>,
        #[arg(required_unless_present = "selftest")]
        policy: Option<PathBuf>,
        #[arg(long, default_value_t = 0.9, allow_negative_numbers = true)]
        gamma: f64,
        /// Use a random admissible 5-state instance and policy instead of files
        #[arg(long, conflicts_with_all = ["env", "policy"])]
        selftest: bool,
        #[arg(long, default_value_t = 0, requires = "selftest")]
        seed: u64,
    },
    /// Preference reversals against the implied fixed-discount MDP over a grid
    FitGamma {
        env: PathBuf,
        /// Comma-separated discounts in [0, 1)
        #[arg(long, allow_hyphen_values = true)]
        grid: String,
        /// Deterministic policies to compare (default: all of them)
        #[arg(long = "policy")]
        policies: Vec<PathBuf>,
    },
    /// Monte Carlo estimate of a policy's utility from one state
    Rollout {
        env: PathBuf,
        policy: PathBuf,
        #[arg(long)]
        state: String,
        #[arg(long, default_value_t = 10_000)]
        samples: u64,
        #[arg(long, default_value_t = 512)]
        horizon: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long = "tail-tol", default_value_t = 1e-12)]
        tail_tol: f64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Direct,
    Iterative,
}

/// A failure with its exit code; the message goes to standard error.
struct Fail {
    code: u8,
    message: String,
}

type Outcome = Result<String, Fail>;

fn fail(code: u8, message: impl Into<String>) -> Fail {
    Fail {
        code,
        message: message.into(),
    }
}

fn usage(message: impl Into<String>) -> Fail {
    fail(5, message)
}

fn from_error(err: Error, model: Option<&MdpGamma>) -> Fail {
    let code = match &err {
        Error::Parse(_) => 3,
        Error::InvalidModel(_) | Error::PolicyInvalid(_) | Error::ModelMismatch(_) => 2,
        Error::InadmissiblePolicy { .. }
        | Error::NoConvergence { .. }
        | Error::Singular
        | Error::CycleDetected => 4,
        Error::PolicyListTooLarge { .. } | Error::InvalidArgument(_) => 5,
    };
    let mut message = format!("{}: {err}", err.code());
    match (&err, model) {
        (Error::InvalidModel(violations), _) => {
            for v in violations {
                message.push_str(&format!("\n  {} at {}: {}", v.code, v.location, v.message));
            }
        }
        (Error::InadmissiblePolicy { policy, .. }, Some(m)) => {
            message.push_str(&format!("\n  policy {}", policy.describe(&m.sdp)));
        }
        _ => {}
    }
    fail(code, message)
}

fn read(path: &Path) -> Result<String, Fail> {
    fs::read_to_string(path).map_err(|e| fail(3, format!("cannot read {}: {e}", path.display())))
}

fn load_env(path: &Path) -> Result<MdpGamma, Fail> {
    let text = read(path)?;
    mdp_gamma::io::read_model(&text).map_err(|e| from_error(e, None))
}

fn load_policy(path: &Path, model: &MdpGamma) -> Result<LoadedPolicy, Fail> {
    let text = read(path)?;
    read_policy(&text, &model.sdp).map_err(|e| from_error(e, Some(model)))
}

fn load_stationary(path: &Path, model: &MdpGamma) -> Result<StationaryPolicy, Fail> {
    match load_policy(path, model)? {
        LoadedPolicy::Stationary(p) => Ok(p),
        LoadedPolicy::Prefix(pp) if pp.prefix.is_empty() => Ok(pp.tail),
        LoadedPolicy::Prefix(_) => Err(usage("this command needs a stationary policy")),
    }
}

fn load_deterministic(path: &Path, model: &MdpGamma) -> Result<StationaryPolicy, Fail> {
    let p = load_stationary(path, model)?;
    if p.is_deterministic() {
        Ok(p)
    } else {
        Err(usage("stochastic policies are not supported here; give one action per state"))
    }
}

fn check(env: &Path, list_admissibility: bool) -> Outcome {
    let text = read(env)?;
    let file = EnvFile::parse(&text).map_err(|e| from_error(e, None))?;
    let (model, violations) = file.to_model();
    if !violations.is_empty() {
        let mut report = String::from("code\tlocation\tmessage\n");
        for v in &violations {
            report.push_str(&format!("{}\t{}\t{}\n", v.code, v.location, v.message));
        }
        // The report is the command's output even though the exit code is nonzero.
        print!("{report}");
        return Err(fail(2, format!("{} violation(s)", violations.len())));
    }
    if list_admissibility {
        let count = model.sdp.deterministic_policy_count();
        if count > mdp_gamma::fixed_gamma::POLICY_ENUMERATION_CAP as u128 {
            return Err(from_error(
                Error::PolicyListTooLarge {
                    count,
                    cap: mdp_gamma::fixed_gamma::POLICY_ENUMERATION_CAP,
                },
                None,
            ));
        }
        let mut table = Table::new(&["policy", "spectral_radius", "admissible"]);
        for p in model.sdp.deterministic_policies() {
            let report = policy_matrices(&model, &p)
                .and_then(|pm| admissibility(&pm))
                .map_err(|e| from_error(e, Some(&model)))?;
            table.row(&[
                p.describe(&model.sdp),
                num(report.spectral_radius),
                report.admissible.to_string(),
            ]);
        }
        return Ok(table.into_string());
    }
    let mut table = Table::new(&["code", "location", "message"]);
    table.row(&[
        "VALID".to_string(),
        "-".to_string(),
        format!(
            "{} states, {} actions, {} available pairs",
            model.n_states(),
            model.sdp.actions.len(),
            model.sdp.pairs().count()
        ),
    ]);
    Ok(table.into_string())
}

fn evaluate(env: &Path, policy: &Path, method: MethodArg) -> Outcome {
    let model = load_env(env)?;
    let method = match method {
        MethodArg::Direct => Method::Direct,
        MethodArg::Iterative => Method::Iterative,
    };
    let u = match load_policy(policy, &model)? {
        LoadedPolicy::Stationary(p) => evaluate_policy(&model, &p, method),
        LoadedPolicy::Prefix(pp) => evaluate_prefix_policy(&model, &pp),
    }
    .map_err(|e| from_error(e, Some(&model)))?;
    let mut table = Table::new(&["state", "utility"]);
    for (s, name) in model.sdp.states.iter().enumerate() {
        table.row(&[name.clone(), num(u[s])]);
    }
    Ok(table.into_string())
}

fn plan(env: &Path) -> Outcome {
    let model = load_env(env)?;
    let plan = policy_iteration(&model, None).map_err(|e| from_error(e, Some(&model)))?;
    let actions = plan.policy.actions().expect("planning returns deterministic policies");
    let mut table = Table::new(&["state", "action", "utility"]);
    for (s, name) in model.sdp.states.iter().enumerate() {
        table.row(&[
            name.clone(),
            model.sdp.action_name(actions[s]).to_string(),
            num(plan.utilities[s]),
        ]);
    }
    Ok(table.into_string())
}

fn check_gamma(gamma: f64) -> Result<(), Fail> {
    if (0.0..1.0).contains(&gamma) {
        Ok(())
    } else {
        Err(usage(format!("--gamma must lie in [0, 1), got {gamma}")))
    }
}

fn optimize(env: &Path, gamma: f64) -> Outcome {
    check_gamma(gamma)?;
    let model = load_env(env)?;
    let err = |e| from_error(e, Some(&model));
    let plan = policy_iteration(&model, None).map_err(err)?;
    let mdp = optimizing_mdp_from_plan(&model, &plan, gamma).map_err(err)?;
    // Classical optimum of the constructed MDP, found by planning on its Γ ≡ γ lift.
    let lifted = mdp.lift();
    let classical = policy_iteration(&lifted, None).map_err(err)?;
    let residual = classical.utilities.max_abs_diff(&plan.utilities);
    let greedy = greedy_policy(&lifted, &plan.utilities).map_err(err)?;
    let greedy_u = evaluate_policy(&lifted, &greedy, Method::Direct).map_err(err)?;
    let greedy_gap = greedy_u.max_abs_diff(&plan.utilities);

    let mut table = Table::new(&["state", "action", "reward"]);
    for (&(s, a), r) in &mdp.reward {
        table.row(&[
            model.sdp.state_name(s).to_string(),
            model.sdp.action_name(a).to_string(),
            num(*r),
        ]);
    }
    table.trailer(&format!("V*==U* residual {}", num(residual)));
    if residual.max(greedy_gap) > VERIFY_TOL {
        print!("{}", table.into_string());
        return Err(fail(
            4,
            format!("optimizing MDP does not reproduce the utilities (residual {residual:e}, greedy {greedy_gap:e})"),
        ));
    }
    Ok(table.into_string())
}

fn gap(
    env: Option<&Path>,
    policy: Option<&Path>,
    gamma: f64,
    selftest: bool,
    seed: u64,
) -> Outcome {
    check_gamma(gamma)?;
    let (model, policy) = if selftest {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let model = random_admissible_model(&mut rng, &InstanceShape::new(5).with_boost(0.2));
        let policy = random_deterministic_policy(&mut rng, &model.sdp);
        (model, policy)
    } else {
        let (env, policy) = env.zip(policy).ok_or_else(|| usage("gap needs ENV and POLICY"))?;
        let model = load_env(env)?;
        let policy = load_deterministic(policy, &model)?;
        (model, policy)
    };
    let err = |e| from_error(e, Some(&model));
    let plan = policy_iteration(&model, None).map_err(err)?;
    let report = value_utility_gap_with_plan(&model, &plan, gamma, &policy).map_err(err)?;

    let mut table = Table::new(&[
        "state",
        "u",
        "v",
        "u_star",
        "v_star",
        "epsilon",
        "identity1_residual",
        "identity2_residual",
    ]);
    for (s, name) in model.sdp.states.iter().enumerate() {
        let u = report.u_pi[s];
        table.row(&[
            name.clone(),
            num(u),
            num(report.v_pi[s]),
            num(report.u_star[s]),
            num(report.v_star[s]),
            num(report.epsilon_diag[s]),
            num((report.identity1[s] - u).abs()),
            num((report.identity2[s] - u).abs()),
        ]);
    }
    if report.max_residual() > VERIFY_TOL {
        print!("{}", table.into_string());
        return Err(fail(
            4,
            format!("identity residual {:e} exceeds {VERIFY_TOL:e}", report.max_residual()),
        ));
    }
    Ok(table.into_string())
}

fn parse_grid(grid: &str) -> Result<Vec<f64>, Fail> {
    let values = grid
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<f64>()
                .map_err(|_| usage(format!("malformed grid value {s:?}")))
                .and_then(|g| check_gamma(g).map(|_| g))
        })
        .collect::<Result<Vec<_>, _>>()?;
    if values.is_empty() {
        return Err(usage("--grid needs at least one value"));
    }
    Ok(values)
}

fn fit_gamma(env: &Path, grid: &str, policy_paths: &[PathBuf]) -> Outcome {
    let grid = parse_grid(grid)?;
    let model = load_env(env)?;
    let listed = policy_paths
        .iter()
        .map(|p| load_deterministic(p, &model))
        .collect::<Result<Vec<_>, _>>()?;
    let set = if listed.is_empty() {
        PolicySet::All
    } else {
        PolicySet::Listed(&listed)
    };
    let reports = gamma_sweep(&model, &grid, set).map_err(|e| from_error(e, Some(&model)))?;
    let mut table = Table::new(&["gamma", "reversals", "representable"]);
    for r in &reports {
        table.row(&[num(r.gamma), r.reversal_count().to_string(), r.representable.to_string()]);
    }
    if reports.iter().any(|r| r.representable) {
        Ok(table.into_string())
    } else {
        print!("{}", table.into_string());
        Err(fail(6, "no grid point is representable"))
    }
}

#[allow(clippy::too_many_arguments)]
fn rollout(
    env: &Path,
    policy: &Path,
    state: &str,
    samples: u64,
    horizon: usize,
    seed: u64,
    tail_tol: f64,
) -> Outcome {
    if samples == 0 || horizon == 0 {
        return Err(usage("--samples and --horizon must be at least 1"));
    }
    if !(tail_tol >= 0.0) {
        return Err(usage("--tail-tol must be nonnegative"));
    }
    let model = load_env(env)?;
    let start = model
        .sdp
        .state_index(state)
        .ok_or_else(|| usage(format!("unknown state {state:?}")))?;
    let policy = load_stationary(policy, &model)?;
    let est = estimate_utility_with_tol(&model, &policy, start, samples, horizon, seed, tail_tol)
        .map_err(|e| from_error(e, Some(&model)))?;
    let mut table = Table::new(&["mean", "std_error", "samples", "truncated_fraction", "seed"]);
    table.row(&[
        num(est.mean),
        num(est.std_error),
        est.samples.to_string(),
        num(est.truncated_fraction),
        est.seed.to_string(),
    ]);
    Ok(table.into_string())
}

fn run(cli: Cli) -> Outcome {
    match cli.command {
        Command::Check { env, admissibility } => check(&env, admissibility),
        Command::Evaluate { env, policy, method } => evaluate(&env, &policy, method),
        Command::Plan { env } => plan(&env),
        Command::Optimize { env, gamma } => optimize(&env, gamma),
        Command::Gap {
            env,
            policy,
            gamma,
            selftest,
            seed,
        } => gap(env.as_deref(), policy.as_deref(), gamma, selftest, seed),
        Command::FitGamma {
            env,
            grid,
            policies,
        } => fit_gamma(&env, &grid, &policies),
        Command::Rollout {
            env,
            policy,
            state,
            samples,
            horizon,
            seed,
            tail_tol,
        } => rollout(&env, &policy, &state, samples, horizon, seed, tail_tol),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 5 } else { 0 });
        }
    };
    match run(cli) {
        Ok(out) => {
            print!("{out}");
            ExitCode::SUCCESS
        }
        Err(f) => {
            eprintln!("mdpg: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
