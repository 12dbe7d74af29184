//! The LQ cost `J(P) = (1/n) sum_t ||P^t - 1 pi^T||_F^2`, its weighted variant
//! `J_w(P)`, the Green matrix, and the noisy-consensus Monte Carlo check.

use std::fmt;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{frobenius_sq, matrix_power, max_abs, ones_pi, RowSparse};
use crate::stochastic::{multiplicative_reversiblization, time_reversal, ConsensusMatrix};

/// Largest `n` for which the Stein equation is solved as one dense
/// `n^2 x n^2` linear system. Larger problems use the doubling iteration.
pub const STEIN_DIRECT_MAX_N: usize = 16;

/// Residual tolerance of the Stein fixed point, relative to `max(1, |X|)`.
pub const STEIN_RESIDUAL_TOL: f64 = 1e-11;

const DOUBLING_MAX_STEPS: usize = 64;

/// Annihilation tolerance for `G 1 = 0` and `pi^T G = 0`.
pub const GREEN_TOL: f64 = 1e-9;

/// `G(P) = sum_t (P^t - 1 pi^T)`.
#[derive(Debug, Clone)]
pub struct GreenMatrix {
    values: DMatrix<f64>,
}

impl GreenMatrix {
    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn trace(&self) -> f64 {
        self.values.trace()
    }
}

/// Computes `G(P) = (I - P + 1 pi^T)^{-1} - 1 pi^T` with a single LU inverse.
pub fn green_matrix(p: &ConsensusMatrix) -> Result<GreenMatrix> {
    let n = p.n();
    let limit = ones_pi(p.pi());
    let system = DMatrix::identity(n, n) - p.entries() + &limit;
    let inverse = system
        .try_inverse()
        .ok_or_else(|| Error::SolveFailure("I - P + 1 pi^T is singular".to_string()))?;
    let values = inverse - limit;

    let scale = max_abs(&values).max(1.0);
    let right = values.column_sum().amax();
    let left = values.tr_mul(p.pi()).amax();
    if right > GREEN_TOL * scale || left > GREEN_TOL * scale {
        return Err(Error::SolveFailure(format!(
            "Green matrix annihilation residuals {right:e}, {left:e}"
        )));
    }
    Ok(GreenMatrix { values })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LqMethod {
    Exact,
    Truncated,
}

impl fmt::Display for LqMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LqMethod::Exact => "exact",
            LqMethod::Truncated => "truncated",
        })
    }
}

/// Stopping rule of the truncated series: stop after `t_max`, or once the
/// absolute change of the partial sum of `J` stayed below `delta` for
/// `window` consecutive terms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncationRule {
    pub t_max: usize,
    pub delta: f64,
    pub window: usize,
}

impl Default for TruncationRule {
    fn default() -> Self {
        Self {
            t_max: 10_000,
            delta: 1e-5,
            window: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LqReport {
    pub n: usize,
    pub j: f64,
    pub j_weighted: f64,
    /// Contribution of the `t = 0` term to `j`.
    pub t0_term: f64,
    pub method: LqMethod,
    /// Number of series terms summed (truncated only).
    pub steps_used: Option<usize>,
    pub rule: Option<TruncationRule>,
    /// Relative residual of the Stein fixed points (exact only).
    pub stein_residual: Option<f64>,
}

impl LqReport {
    pub const CSV_HEADER: [&'static str; 8] = [
        "n",
        "j",
        "j_weighted",
        "t0_term",
        "method",
        "steps_used",
        "change_rule",
        "stein_residual",
    ];

    pub fn csv_record(&self) -> Vec<String> {
        vec![
            self.n.to_string(),
            format!("{:.17e}", self.j),
            format!("{:.17e}", self.j_weighted),
            format!("{:.17e}", self.t0_term),
            self.method.to_string(),
            self.steps_used.map(|s| s.to_string()).unwrap_or_default(),
            self.rule
                .map(|_| "absolute".to_string())
                .unwrap_or_default(),
            self.stein_residual
                .map(|r| format!("{r:e}"))
                .unwrap_or_default(),
        ]
    }

    /// Flat `key = value` block.
    pub fn to_key_value(&self) -> String {
        let mut out = String::new();
        for (k, v) in Self::CSV_HEADER.iter().zip(self.csv_record()) {
            if !v.is_empty() {
                out.push_str(&format!("{k} = {v}\n"));
            }
        }
        if let Some(rule) = self.rule {
            out.push_str(&format!(
                "t_max = {}\ndelta = {:e}\nwindow = {}\n",
                rule.t_max, rule.delta, rule.window
            ));
        }
        out
    }
}

/// `t = 0` terms `(||I - 1 pi^T||_F^2 / n, tr((I - pi 1^T) diag(pi) (I - 1 pi^T)))`.
fn t0_terms(p: &ConsensusMatrix) -> (f64, f64) {
    let n = p.n() as f64;
    let sum_sq = p.invariant_measure().sum_of_squares();
    ((n - 2.0 + n * sum_sq) / n, 1.0 - sum_sq)
}

/// Exact `J(P)` and `J_w(P)`.
///
/// The `t >= 1` part equals `tr S` with `S = X - Q`, where `X` solves the
/// Stein equation `X = A^T X A + Q`, `A = P - 1 pi^T`, and `Q` is `I` for `J`
/// or `diag(pi)` for `J_w`. The `t = 0` term is added separately because
/// `A^0 = I` differs from `P^0 - 1 pi^T`.
pub fn lq_cost_exact(p: &ConsensusMatrix) -> Result<LqReport> {
    let n = p.n();
    let a = p.entries() - ones_pi(p.pi());
    let q_unit = DMatrix::identity(n, n);
    let q_weighted = p.invariant_measure().diag();
    let (x, x_w) = if n <= STEIN_DIRECT_MAX_N {
        stein_direct(&a, &q_unit, &q_weighted)?
    } else {
        stein_doubling(&a, &q_unit, &q_weighted)?
    };
    let residual = stein_residual(&a, &q_unit, &x).max(stein_residual(&a, &q_weighted, &x_w));
    if !(residual <= STEIN_RESIDUAL_TOL) {
        return Err(Error::SteinDivergence { residual });
    }
    let (t0, t0_w) = t0_terms(p);
    let j = t0 + (x.trace() - q_unit.trace()) / n as f64;
    let j_weighted = t0_w + (x_w.trace() - q_weighted.trace());
    Ok(LqReport {
        n,
        j,
        j_weighted,
        t0_term: t0,
        method: LqMethod::Exact,
        steps_used: None,
        rule: None,
        stein_residual: Some(residual),
    })
}

fn stein_residual(a: &DMatrix<f64>, q: &DMatrix<f64>, x: &DMatrix<f64>) -> f64 {
    let r = a.transpose() * x * a + q - x;
    max_abs(&r) / max_abs(x).max(1.0)
}

/// Solves `(I - A^T (x) A^T) vec X = vec Q` for two right-hand sides.
fn stein_direct(
    a: &DMatrix<f64>,
    q1: &DMatrix<f64>,
    q2: &DMatrix<f64>,
) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let n = a.nrows();
    let at = a.transpose();
    let m = n * n;
    // vec(A^T X A) = (A^T (x) A^T) vec(X) with column-major vec.
    let mut system = DMatrix::identity(m, m);
    for bc in 0..n {
        for br in 0..n {
            let coef = at[(br, bc)];
            if coef == 0.0 {
                continue;
            }
            for c in 0..n {
                for r in 0..n {
                    system[(br * n + r, bc * n + c)] -= coef * at[(r, c)];
                }
            }
        }
    }
    let mut rhs = DMatrix::zeros(m, 2);
    for (k, (v1, v2)) in q1.iter().zip(q2.iter()).enumerate() {
        rhs[(k, 0)] = *v1;
        rhs[(k, 1)] = *v2;
    }
    let sol = system.lu().solve(&rhs).ok_or(Error::SteinDivergence {
        residual: f64::INFINITY,
    })?;
    let x1 = DMatrix::from_column_slice(n, n, sol.column(0).as_slice());
    let x2 = DMatrix::from_column_slice(n, n, sol.column(1).as_slice());
    Ok((x1, x2))
}

/// Doubling iteration `X_{k+1} = X_k + (A^{2^k})^T X_k A^{2^k}` for two
/// right-hand sides sharing the powers of `A`.
fn stein_doubling(
    a: &DMatrix<f64>,
    q1: &DMatrix<f64>,
    q2: &DMatrix<f64>,
) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let mut xs = [q1.clone(), q2.clone()];
    let mut power = a.clone();
    for _ in 0..DOUBLING_MAX_STEPS {
        let power_t = power.transpose();
        let mut converged = true;
        for x in xs.iter_mut() {
            let increment = &power_t * &*x * &power;
            if max_abs(&increment) > f64::EPSILON * 1e-2 * max_abs(x) {
                converged = false;
            }
            *x += increment;
        }
        if converged {
            let [x1, x2] = xs;
            return Ok((x1, x2));
        }
        power = &power * &power;
    }
    Err(Error::SteinDivergence {
        residual: stein_residual(a, q1, &xs[0]).max(stein_residual(a, q2, &xs[1])),
    })
}

/// Partial sums of the defining series under the given stopping rule.
pub fn lq_cost_truncated(p: &ConsensusMatrix, rule: TruncationRule) -> Result<LqReport> {
    if rule.t_max < 1 || !(rule.delta > 0.0) || rule.window < 1 {
        return Err(Error::OutOfRange(format!(
            "invalid truncation rule {rule:?}"
        )));
    }
    let n = p.n();
    let pi = p.pi();
    let mut error = DMatrix::identity(n, n) - ones_pi(pi);
    let mut next = DMatrix::zeros(n, n);
    let sparse = RowSparse::from_dense(p.entries());
    let use_sparse = sparse.nnz() * 4 < n * n;

    let weighted_term = |e: &DMatrix<f64>| -> f64 {
        let mut total = 0.0;
        for c in 0..n {
            for r in 0..n {
                total += pi[r] * e[(r, c)] * e[(r, c)];
            }
        }
        total
    };

    let mut j = 0.0;
    let mut j_w = 0.0;
    let mut t0 = 0.0;
    let mut quiet = 0usize;
    let mut steps = 0usize;
    for t in 0..=rule.t_max {
        let term = frobenius_sq(&error) / n as f64;
        if t == 0 {
            t0 = term;
        }
        j += term;
        j_w += weighted_term(&error);
        steps = t + 1;
        if term < rule.delta {
            quiet += 1;
            if quiet >= rule.window {
                break;
            }
        } else {
            quiet = 0;
        }
        if t == rule.t_max {
            break;
        }
        if use_sparse {
            sparse.mul_dense_into(&error, &mut next);
        } else {
            p.entries().mul_to(&error, &mut next);
        }
        std::mem::swap(&mut error, &mut next);
    }
    Ok(LqReport {
        n,
        j,
        j_weighted: j_w,
        t0_term: t0,
        method: LqMethod::Truncated,
        steps_used: Some(steps),
        rule: Some(rule),
        stein_residual: None,
    })
}

/// Monte Carlo estimate of `(1/n) E ||(I - 1 pi^T) x(T)||^2` for the noisy
/// iteration `x(t+1) = P x(t) + n(t)` with standard normal `x(0)` and noise.
///
/// Trial `k` draws from its own ChaCha stream `(seed, k)`, so the estimate
/// does not depend on scheduling.
pub fn noisy_consensus_estimate(
    p: &ConsensusMatrix,
    horizon: usize,
    trials: usize,
    seed: u64,
) -> Result<f64> {
    if horizon < 1 || trials < 1 {
        return Err(Error::OutOfRange(
            "horizon and trials must be at least 1".to_string(),
        ));
    }
    let n = p.n();
    let pi: Vec<f64> = p.pi().iter().copied().collect();
    // row-major copy for the inner mat-vec
    let rows: Vec<f64> = (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .map(|(i, j)| p.get(i, j))
        .collect();

    let samples: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(trial as u64);
            let mut x: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
            let mut y = vec![0.0; n];
            for _ in 0..horizon {
                for (i, yi) in y.iter_mut().enumerate() {
                    let row = &rows[i * n..(i + 1) * n];
                    let mut acc: f64 = StandardNormal.sample(&mut rng);
                    for (a, b) in row.iter().zip(&x) {
                        acc += a * b;
                    }
                    *yi = acc;
                }
                std::mem::swap(&mut x, &mut y);
            }
            let mean: f64 = pi.iter().zip(&x).map(|(a, b)| a * b).sum();
            x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64
        })
        .collect();
    Ok(samples.iter().sum::<f64>() / trials as f64)
}

/// `(tr((P*)^t P^t), tr((P* P)^t))`. The first never exceeds the second.
pub fn trace_pair(p: &ConsensusMatrix, t: usize) -> (f64, f64) {
    let star = time_reversal(p);
    let left = (matrix_power(star.entries(), t) * matrix_power(p.entries(), t)).trace();
    let rev = multiplicative_reversiblization(p);
    let right = matrix_power(rev.entries(), t).trace();
    (left, right)
}
