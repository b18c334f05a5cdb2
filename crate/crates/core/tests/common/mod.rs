//! Independent oracles for integration tests. Nothing here calls the
//! library's solvers; everything is plain `Vec<Vec<f64>>` arithmetic.
#![allow(dead_code)]

use mdp_gamma::random::{random_admissible_model, InstanceShape};
use mdp_gamma::{FixedGammaMdp, MdpGamma, StationaryPolicy};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Mat = Vec<Vec<f64>>;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn admissible(seed: u64, n: usize, boost: f64) -> MdpGamma {
    random_admissible_model(&mut rng(seed), &InstanceShape::new(n).with_boost(boost))
}

/// Gaussian elimination with partial pivoting.
#[allow(clippy::needless_range_loop)]
pub fn gauss_solve(mut a: Mat, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        a.swap(col, pivot);
        b.swap(col, pivot);
        assert!(a[col][col].abs() > 1e-300, "oracle hit a singular system");
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let tail: f64 = (row + 1..n).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - tail) / a[row][row];
    }
    x
}

pub fn mat_mul(a: &Mat, b: &Mat) -> Mat {
    let n = a.len();
    let m = b[0].len();
    let mut out = vec![vec![0.0; m]; n];
    for i in 0..n {
        for k in 0..b.len() {
            if a[i][k] != 0.0 {
                for j in 0..m {
                    out[i][j] += a[i][k] * b[k][j];
                }
            }
        }
    }
    out
}

pub fn identity(n: usize) -> Mat {
    (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect()
}

pub fn max_entry(m: &Mat) -> f64 {
    m.iter().flatten().fold(f64::NEG_INFINITY, |acc, &x| acc.max(x))
}

/// `Σ_{k<terms} mᵏ`.
pub fn neumann_sum(m: &Mat, terms: usize) -> Mat {
    let n = m.len();
    let mut sum = identity(n);
    let mut power = identity(n);
    for _ in 1..terms {
        power = mat_mul(&power, m);
        for i in 0..n {
            for j in 0..n {
                sum[i][j] += power[i][j];
            }
        }
    }
    sum
}

pub fn mat_pow(m: &Mat, mut k: u32) -> Mat {
    let mut base = m.clone();
    let mut acc = identity(m.len());
    while k > 0 {
        if k & 1 == 1 {
            acc = mat_mul(&acc, &base);
        }
        base = mat_mul(&base, &base);
        k >>= 1;
    }
    acc
}

/// `(Γ^π T^π, r^π)` built straight from the model tables.
pub fn policy_system(model: &MdpGamma, policy: &StationaryPolicy) -> (Mat, Vec<f64>) {
    let n = model.sdp.n_states();
    let mut m = vec![vec![0.0; n]; n];
    let mut r = vec![0.0; n];
    for (s, choice) in policy.choice.iter().enumerate() {
        for (a, pa) in choice.iter() {
            let g = model.gamma[&(s, a)];
            r[s] += pa * model.reward[&(s, a)];
            for (t, pt) in model.sdp.transitions[&(s, a)].iter() {
                m[s][t] += pa * g * pt;
            }
        }
    }
    (m, r)
}

/// Solves `u = r + M u`.
pub fn utility(model: &MdpGamma, policy: &StationaryPolicy) -> Vec<f64> {
    let (m, r) = policy_system(model, policy);
    let n = r.len();
    let a = (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 } - m[i][j]).collect())
        .collect();
    gauss_solve(a, r)
}

/// Classical discounted value `v = r + γ T v` of a deterministic policy.
pub fn classical_value(mdp: &FixedGammaMdp, actions: &[usize]) -> Vec<f64> {
    let n = actions.len();
    let mut a = identity(n);
    let mut b = vec![0.0; n];
    for (s, &act) in actions.iter().enumerate() {
        b[s] = mdp.reward[&(s, act)];
        for (t, p) in mdp.sdp.transitions[&(s, act)].iter() {
            a[s][t] -= mdp.gamma * p;
        }
    }
    gauss_solve(a, b)
}

/// Entrywise best utility over every deterministic policy.
pub fn brute_force_optimum(model: &MdpGamma) -> Vec<f64> {
    let n = model.sdp.n_states();
    model
        .sdp
        .deterministic_policies()
        .iter()
        .map(|p| utility(model, p))
        .fold(vec![f64::NEG_INFINITY; n], |best, u| {
            best.iter().zip(&u).map(|(a, b)| a.max(*b)).collect()
        })
}

/// Entrywise best classical value over every deterministic policy.
pub fn classical_optimum(mdp: &FixedGammaMdp) -> Vec<f64> {
    let n = mdp.sdp.n_states();
    mdp.sdp
        .deterministic_policies()
        .iter()
        .map(|p| classical_value(mdp, &p.actions().unwrap()))
        .fold(vec![f64::NEG_INFINITY; n], |best, v| {
            best.iter().zip(&v).map(|(a, b)| a.max(*b)).collect()
        })
}

pub fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}
