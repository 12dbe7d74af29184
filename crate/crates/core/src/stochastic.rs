//! Consensus matrices: validation, invariant measure, time reversal,
//! multiplicative reversiblization and class membership.
//!
//! A consensus matrix is row stochastic, irreducible, and has a strictly
//! positive diagonal. Every [`ConsensusMatrix`] carries its invariant measure,
//! computed once at construction.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use petgraph::algo::kosaraju_scc;
use petgraph::graph::DiGraph;

use crate::error::{Error, Result};
use crate::linalg::{asymmetry, max_abs_diff};

/// Default tolerance for row sums and diagonal positivity.
pub const DEFAULT_TOL: f64 = 1e-9;

/// Default tolerance on the defining residuals used by [`classify`].
pub const DEFAULT_CLASSIFY_TOL: f64 = 1e-9;

/// Entries at or below this threshold are structural zeros for matrices read
/// from text files.
pub const FILE_SUPPORT_EPS: f64 = 1e-14;

/// Largest accepted residual of `pi^T P = pi^T`.
pub const MEASURE_RESIDUAL_TOL: f64 = 1e-10;

const POWER_ITERATION_CAP: usize = 200_000;

#[derive(Debug, Clone)]
pub struct InvariantMeasure {
    pi: DVector<f64>,
    residual: f64,
}

impl InvariantMeasure {
    pub fn pi(&self) -> &DVector<f64> {
        &self.pi
    }

    pub fn as_slice(&self) -> &[f64] {
        self.pi.as_slice()
    }

    pub fn len(&self) -> usize {
        self.pi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pi.is_empty()
    }

    /// Max-norm of `pi^T P - pi^T` for the matrix this measure was solved for.
    pub fn residual(&self) -> f64 {
        self.residual
    }

    pub fn min(&self) -> f64 {
        self.pi.min()
    }

    pub fn max(&self) -> f64 {
        self.pi.max()
    }

    pub fn sum_of_squares(&self) -> f64 {
        self.pi.iter().map(|p| p * p).sum()
    }

    /// `diag(pi)`.
    pub fn diag(&self) -> DMatrix<f64> {
        DMatrix::from_diagonal(&self.pi)
    }
}

/// Solves `pi^T P = pi^T`, `sum(pi) = 1` for a row-stochastic matrix.
///
/// The stacked system `[P^T - I; 1^T] pi = [0; 1]` is solved in the least
/// squares sense through a QR factorization. Power iteration is used only when
/// the direct solve yields a non-positive or inaccurate vector.
pub fn solve_invariant_measure(entries: &DMatrix<f64>) -> Result<InvariantMeasure> {
    let n = entries.nrows();
    if n == 0 {
        return Err(Error::Empty);
    }
    if let Some(pi) = least_squares_measure(entries) {
        let residual = measure_residual(entries, &pi);
        if residual <= MEASURE_RESIDUAL_TOL && pi.iter().all(|&p| p > 0.0) {
            return Ok(InvariantMeasure { pi, residual });
        }
    }
    let pi = power_iteration_measure(entries)?;
    let residual = measure_residual(entries, &pi);
    if residual <= MEASURE_RESIDUAL_TOL && pi.iter().all(|&p| p > 0.0) {
        Ok(InvariantMeasure { pi, residual })
    } else {
        Err(Error::SolveFailure(format!(
            "invariant measure residual {residual:e} after power iteration"
        )))
    }
}

fn least_squares_measure(entries: &DMatrix<f64>) -> Option<DVector<f64>> {
    let n = entries.nrows();
    let mut a = DMatrix::zeros(n + 1, n);
    for i in 0..n {
        for j in 0..n {
            a[(i, j)] = entries[(j, i)];
        }
        a[(i, i)] -= 1.0;
    }
    for j in 0..n {
        a[(n, j)] = 1.0;
    }
    let qr = a.qr();
    let q = qr.q();
    let r = qr.r();
    // Q^T e_{n+1} is the last row of Q.
    let rhs = q.row(n).transpose();
    let mut pi = r.solve_upper_triangular(&rhs)?;
    if pi.iter().any(|x| !x.is_finite()) {
        return None;
    }
    let total = pi.sum();
    if total == 0.0 {
        return None;
    }
    pi /= total;
    Some(pi)
}

fn power_iteration_measure(entries: &DMatrix<f64>) -> Result<DVector<f64>> {
    let n = entries.nrows();
    let pt = entries.transpose();
    let mut pi = DVector::from_element(n, 1.0 / n as f64);
    for _ in 0..POWER_ITERATION_CAP {
        let mut next = &pt * &pi;
        let total = next.sum();
        next /= total;
        let change = (&next - &pi).amax();
        pi = next;
        if change < 1e-15 {
            return Ok(pi);
        }
    }
    Err(Error::SolveFailure(
        "power iteration did not converge".to_string(),
    ))
}

fn measure_residual(entries: &DMatrix<f64>, pi: &DVector<f64>) -> f64 {
    let left = entries.tr_mul(pi);
    (left - pi).amax()
}

/// A validated consensus matrix with its invariant measure.
#[derive(Debug, Clone)]
pub struct ConsensusMatrix {
    entries: DMatrix<f64>,
    measure: InvariantMeasure,
    tol: f64,
    support_eps: f64,
}

/// Validates `entries` as a consensus matrix with structural threshold `0.0`.
pub fn validate_consensus(entries: DMatrix<f64>, tol: f64) -> Result<ConsensusMatrix> {
    ConsensusMatrix::with_support_eps(entries, tol, 0.0)
}

impl ConsensusMatrix {
    pub fn new(entries: DMatrix<f64>) -> Result<Self> {
        validate_consensus(entries, DEFAULT_TOL)
    }

    /// Validates with an explicit structural threshold: an entry belongs to
    /// the support iff it exceeds `support_eps`.
    pub fn with_support_eps(entries: DMatrix<f64>, tol: f64, support_eps: f64) -> Result<Self> {
        let (rows, cols) = entries.shape();
        if rows == 0 {
            return Err(Error::Empty);
        }
        if rows != cols {
            return Err(Error::NotSquare { rows, cols });
        }
        let n = rows;
        for i in 0..n {
            for j in 0..n {
                let v = entries[(i, j)];
                if !v.is_finite() {
                    return Err(Error::NonFinite { row: i, col: j });
                }
                if v < 0.0 {
                    return Err(Error::NegativeEntry {
                        row: i,
                        col: j,
                        value: v,
                    });
                }
            }
        }
        for i in 0..n {
            let sum: f64 = entries.row(i).sum();
            if (sum - 1.0).abs() > tol {
                return Err(Error::NotStochastic { row: i, sum });
            }
        }
        for i in 0..n {
            if entries[(i, i)] <= tol.max(support_eps) {
                return Err(Error::ZeroDiagonal { node: i });
            }
        }
        check_strongly_connected(&entries, support_eps)?;
        let measure = solve_invariant_measure(&entries)?;
        Ok(Self {
            entries,
            measure,
            tol,
            support_eps,
        })
    }

    /// Assembles a matrix whose consensus properties and invariant measure
    /// are known by construction.
    pub(crate) fn from_parts(
        entries: DMatrix<f64>,
        measure: InvariantMeasure,
        tol: f64,
        support_eps: f64,
    ) -> Self {
        Self {
            entries,
            measure,
            tol,
            support_eps,
        }
    }

    pub fn n(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn into_entries(self) -> DMatrix<f64> {
        self.entries
    }

    pub fn get(&self, u: usize, v: usize) -> f64 {
        self.entries[(u, v)]
    }

    pub fn invariant_measure(&self) -> &InvariantMeasure {
        &self.measure
    }

    pub fn pi(&self) -> &DVector<f64> {
        self.measure.pi()
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    pub fn support_eps(&self) -> f64 {
        self.support_eps
    }

    /// Whether `(u, v)` is an edge of the directed support graph.
    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.entries[(u, v)] > self.support_eps
    }

    /// Pattern of the directed support, self loops included.
    pub fn support(&self) -> Vec<Vec<bool>> {
        let n = self.n();
        (0..n)
            .map(|u| (0..n).map(|v| self.has_edge(u, v)).collect())
            .collect()
    }
}

fn check_strongly_connected(entries: &DMatrix<f64>, support_eps: f64) -> Result<()> {
    let n = entries.nrows();
    let mut graph = DiGraph::<(), ()>::with_capacity(n, 0);
    let nodes: Vec<_> = (0..n).map(|_| graph.add_node(())).collect();
    for u in 0..n {
        for v in 0..n {
            if u != v && entries[(u, v)] > support_eps {
                graph.add_edge(nodes[u], nodes[v], ());
            }
        }
    }
    let components = kosaraju_scc(&graph);
    if components.len() <= 1 {
        return Ok(());
    }
    let with_zero = components
        .iter()
        .find(|c| c.iter().any(|ix| ix.index() == 0))
        .expect("node 0 belongs to some component");
    let node = (0..n)
        .find(|&i| !with_zero.iter().any(|ix| ix.index() == i))
        .unwrap_or(0);
    Err(Error::NotIrreducible { node })
}

/// `P* = diag(pi)^{-1} P^T diag(pi)`.
pub fn time_reversal(p: &ConsensusMatrix) -> ConsensusMatrix {
    let n = p.n();
    let pi = p.pi();
    let entries = DMatrix::from_fn(n, n, |u, v| pi[v] * p.get(v, u) / pi[u]);
    ConsensusMatrix::from_parts(entries, p.measure.clone(), p.tol, p.support_eps)
}

/// The reversible matrix `P* P`, sharing the invariant measure of `P`.
pub fn multiplicative_reversiblization(p: &ConsensusMatrix) -> ConsensusMatrix {
    let star = time_reversal(p);
    let entries = star.entries() * p.entries();
    ConsensusMatrix::from_parts(entries, p.measure.clone(), p.tol, p.support_eps)
}

/// `diag(pi) P`; symmetric iff `P` is reversible.
pub fn flow_matrix(p: &ConsensusMatrix) -> DMatrix<f64> {
    let pi = p.pi();
    DMatrix::from_fn(p.n(), p.n(), |u, v| pi[u] * p.get(u, v))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassResiduals {
    /// max |diag(pi) P - (diag(pi) P)^T|
    pub reversible: f64,
    /// max |P^T P - P P^T|
    pub normal: f64,
    /// max |P* P - P P*|
    pub commuting: f64,
    /// max |column sum - 1|
    pub column_sum: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatrixClass {
    pub reversible: bool,
    pub normal: bool,
    pub commuting: bool,
    pub doubly_stochastic: bool,
    pub residuals: ClassResiduals,
    pub tol: f64,
}

/// Classifies `P` by direct residual tests at tolerance `tol`.
///
/// The inclusions normal ⇒ doubly stochastic, normal ⇒ commuting and
/// reversible ⇒ commuting are applied to the raw flags, so a matrix that
/// passes a stronger test is never reported outside a weaker class because
/// of rounding in a differently scaled residual.
pub fn classify(p: &ConsensusMatrix, tol: f64) -> MatrixClass {
    let a = p.entries();
    let n = p.n();
    let reversible_res = asymmetry(&flow_matrix(p));
    let normal_res = max_abs_diff(&(a.transpose() * a), &(a * a.transpose()));
    let star = time_reversal(p);
    let commuting_res = max_abs_diff(&(star.entries() * a), &(a * star.entries()));
    let column_res = (0..n)
        .map(|j| (a.column(j).sum() - 1.0).abs())
        .fold(0.0_f64, f64::max);

    let reversible = reversible_res <= tol;
    let normal = normal_res <= tol;
    let commuting = commuting_res <= tol || normal || reversible;
    let doubly_stochastic = column_res <= tol || normal;
    MatrixClass {
        reversible,
        normal,
        commuting,
        doubly_stochastic,
        residuals: ClassResiduals {
            reversible: reversible_res,
            normal: normal_res,
            commuting: commuting_res,
            column_sum: column_res,
        },
        tol,
    }
}

impl fmt::Display for MatrixClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "classification_tol = {:e}", self.tol)?;
        writeln!(
            f,
            "reversible = {} (residual {:e})",
            self.reversible, self.residuals.reversible
        )?;
        writeln!(
            f,
            "normal = {} (residual {:e})",
            self.normal, self.residuals.normal
        )?;
        writeln!(
            f,
            "commuting = {} (residual {:e})",
            self.commuting, self.residuals.commuting
        )?;
        write!(
            f,
            "doubly_stochastic = {} (residual {:e})",
            self.doubly_stochastic, self.residuals.column_sum
        )
    }
}

/// Support graphs of a consensus matrix. Neighbor lists exclude self loops;
/// every node carries a self loop because the diagonal is positive.
#[derive(Debug, Clone)]
pub struct SupportGraphs {
    /// Out-neighbors in `G_dir(P)`: `v` in `directed[u]` iff `P_uv > 0`.
    pub directed: Vec<Vec<usize>>,
    /// Neighbors in `G(P)`, the symmetrization of `G_dir(P)`.
    pub undirected: Vec<Vec<usize>>,
    pub delta_in: usize,
    pub delta_out: usize,
    pub delta_undirected: usize,
    /// Smallest nonzero entry of `P`.
    pub p_min: f64,
    /// Largest nonzero entry of `P`.
    pub p_max: f64,
}

impl SupportGraphs {
    pub fn n(&self) -> usize {
        self.directed.len()
    }

    /// Undirected edges `(u, v)` with `u < v`, in lexicographic order.
    pub fn undirected_edges(&self) -> Vec<(usize, usize)> {
        self.undirected
            .iter()
            .enumerate()
            .flat_map(|(u, nbrs)| nbrs.iter().filter(move |&&v| v > u).map(move |&v| (u, v)))
            .collect()
    }

    pub fn in_degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.n()];
        for nbrs in &self.directed {
            for &v in nbrs {
                deg[v] += 1;
            }
        }
        deg
    }
}

#[allow(clippy::needless_range_loop)] // writes both (u, v) and (v, u)
pub fn support_graphs(p: &ConsensusMatrix) -> SupportGraphs {
    let n = p.n();
    let mut directed = vec![Vec::new(); n];
    let mut undirected_mask = vec![vec![false; n]; n];
    let mut p_min = f64::INFINITY;
    let mut p_max = 0.0_f64;
    for (u, out) in directed.iter_mut().enumerate() {
        for v in 0..n {
            if !p.has_edge(u, v) {
                continue;
            }
            let value = p.get(u, v);
            p_min = p_min.min(value);
            p_max = p_max.max(value);
            if u != v {
                out.push(v);
                undirected_mask[u][v] = true;
                undirected_mask[v][u] = true;
            }
        }
    }
    let undirected: Vec<Vec<usize>> = undirected_mask
        .iter()
        .map(|row| (0..n).filter(|&v| row[v]).collect())
        .collect();
    let delta_out = directed.iter().map(Vec::len).max().unwrap_or(0);
    let mut graphs = SupportGraphs {
        directed,
        undirected,
        delta_in: 0,
        delta_out,
        delta_undirected: 0,
        p_min,
        p_max,
    };
    graphs.delta_in = graphs.in_degrees().into_iter().max().unwrap_or(0);
    graphs.delta_undirected = graphs.undirected.iter().map(Vec::len).max().unwrap_or(0);
    graphs
}
