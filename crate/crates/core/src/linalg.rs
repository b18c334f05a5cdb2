//! Dense helpers: spectral radius of nonnegative matrices and linear solves.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// A policy is admissible when its spectral radius is below `1 - ADMISSIBILITY_MARGIN`.
pub const ADMISSIBILITY_MARGIN: f64 = 1e-9;
pub const SPECTRAL_TOL: f64 = 1e-10;
pub const SPECTRAL_MAX_ITER: usize = 1000;

/// Consecutive power iterations with a flat estimate before giving up on
/// the Collatz–Wielandt bracket closing.
const STAGNATION_RUN: usize = 8;
const MAX_SQUARINGS: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdmissibilityReport {
    pub spectral_radius: f64,
    pub admissible: bool,
    pub iterations_used: usize,
}

impl AdmissibilityReport {
    fn new(spectral_radius: f64, iterations_used: usize) -> Self {
        AdmissibilityReport {
            spectral_radius,
            admissible: spectral_radius < 1.0 - ADMISSIBILITY_MARGIN,
            iterations_used,
        }
    }
}

/// Spectral radius of a nonnegative square matrix.
///
/// Power iteration runs on `m + I` from the all-ones vector. The shift keeps
/// the iterate strictly positive and makes the Perron root the only
/// eigenvalue of maximal modulus, so periodic matrices converge too. Each
/// step yields a Collatz–Wielandt bracket `min (Ax)_i/x_i ≤ ρ ≤ max (Ax)_i/x_i`;
/// the iteration stops once it is narrower than `tol`.
///
/// Reducible matrices (diagonal ones, for instance) can leave the bracket
/// open forever. When the bracket stops shrinking, an iterate component
/// underflows, or `max_iter` runs out, the Gelfand bound `‖mᵏ‖∞^{1/k}` is
/// evaluated by repeated squaring until successive values agree within `tol`,
/// and the result is clamped to the best bracket seen.
pub fn spectral_radius(m: &DMatrix<f64>, tol: f64, max_iter: usize) -> Result<AdmissibilityReport> {
    let n = m.nrows();
    if n != m.ncols() {
        return Err(Error::InvalidArgument(format!(
            "matrix is {}x{}, expected square",
            n,
            m.ncols()
        )));
    }
    if m.iter().any(|&x| !(x.is_finite() && x >= 0.0)) {
        return Err(Error::InvalidArgument(
            "matrix entries must be finite and nonnegative".into(),
        ));
    }
    if n == 0 {
        return Ok(AdmissibilityReport::new(0.0, 0));
    }

    let shifted = m + DMatrix::identity(n, n);
    let mut x = DVector::from_element(n, 1.0);
    // Collatz–Wielandt: for positive x, min and max of (Ax)ᵢ/xᵢ bracket ρ.
    let mut best_lower = 0.0_f64;
    let mut best_upper = f64::INFINITY;
    let mut last_width = f64::INFINITY;
    let mut flat = 0;
    let mut iterations = 0;
    while iterations < max_iter {
        iterations += 1;
        let y = &shifted * &x;
        if x.iter().any(|&xi| xi == 0.0) {
            break;
        }
        let (lo, hi) = y.iter().zip(x.iter()).fold(
            (f64::INFINITY, f64::NEG_INFINITY),
            |(lo, hi), (yi, xi)| (lo.min(yi / xi), hi.max(yi / xi)),
        );
        best_lower = best_lower.max(lo - 1.0);
        best_upper = best_upper.min(hi - 1.0);
        let width = hi - lo;
        if width <= tol {
            let rho = (0.5 * (lo + hi) - 1.0).max(0.0);
            return Ok(AdmissibilityReport::new(rho, iterations));
        }
        // A bracket that stops shrinking belongs to a reducible matrix.
        if width >= last_width * (1.0 - 1e-9) {
            flat += 1;
            if flat >= STAGNATION_RUN {
                break;
            }
        } else {
            flat = 0;
        }
        last_width = width;
        x = y / x.max();
    }

    match gelfand_radius(m, tol) {
        Ok((rho, squarings)) => Ok(AdmissibilityReport::new(
            rho.clamp(best_lower, best_upper.max(best_lower)),
            iterations + squarings,
        )),
        Err(estimate) => Err(Error::NoConvergence {
            iterations: iterations + MAX_SQUARINGS,
            best_estimate: estimate.min(best_upper),
        }),
    }
}

/// `‖mᵏ‖∞^{1/k}` for `k = 2, 4, 8, …`, kept as a normalized matrix plus a
/// log scale so large powers neither overflow nor underflow.
fn gelfand_radius(m: &DMatrix<f64>, tol: f64) -> std::result::Result<(f64, usize), f64> {
    let mut power = m.clone();
    let mut log_scale = 0.0;
    let mut exponent = 1.0_f64;
    let norm = row_sum_norm(&power);
    if norm == 0.0 {
        return Ok((0.0, 0));
    }
    power /= norm;
    log_scale += norm.ln();
    // log‖mᵏ‖/k behaves like log ρ + c/k, so 2·L(2k) − L(k) cancels the c/k term.
    let mut log_est = norm.ln();
    let mut estimate = norm;
    for squaring in 1..=MAX_SQUARINGS {
        power = &power * &power;
        log_scale *= 2.0;
        exponent *= 2.0;
        let norm = row_sum_norm(&power);
        if norm == 0.0 {
            return Ok((0.0, squaring));
        }
        power /= norm;
        log_scale += norm.ln();
        let next_log = log_scale / exponent;
        let next = (2.0 * next_log - log_est).exp().min(next_log.exp());
        if (next - estimate).abs() <= tol {
            return Ok((next, squaring));
        }
        estimate = next;
        log_est = next_log;
    }
    Err(estimate)
}

pub fn row_sum_norm(m: &DMatrix<f64>) -> f64 {
    m.row_iter()
        .map(|row| row.iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Solves `a x = b` by LU with partial pivoting, refusing systems whose
/// pivots fall below working precision relative to the largest pivot.
pub fn solve(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    let lu = a.clone().lu();
    let u = lu.u();
    let diag: Vec<f64> = (0..n).map(|i| u[(i, i)].abs()).collect();
    let largest = diag.iter().copied().fold(0.0, f64::max);
    let smallest = diag.iter().copied().fold(f64::INFINITY, f64::min);
    if n > 0 && !(smallest > largest * f64::EPSILON * n as f64) {
        return Err(Error::Singular);
    }
    lu.solve(b).ok_or(Error::Singular)
}

pub fn solve_vec(a: &DMatrix<f64>, b: &DVector<f64>) -> Result<DVector<f64>> {
    let x = solve(a, &DMatrix::from_column_slice(b.len(), 1, b.as_slice()))?;
    Ok(x.column(0).into_owned())
}
