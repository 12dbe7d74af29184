//! Resistor networks: Laplacians, effective resistance, average resistances,
//! and the correspondence between reversible consensus matrices and
//! conductance matrices.

use std::collections::VecDeque;

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::linalg::{asymmetry, symmetrize};
use crate::stochastic::{
    flow_matrix, validate_consensus, ConsensusMatrix, DEFAULT_CLASSIFY_TOL, DEFAULT_TOL,
};

/// Symmetry tolerance for conductance matrices, relative to the largest entry.
pub const SYMMETRY_TOL: f64 = 1e-12;

/// Relative threshold on the algebraic connectivity: a network is connected
/// iff `lambda_2 > CONNECTIVITY_TOL * max_i L_ii`.
pub const CONNECTIVITY_TOL: f64 = 1e-10;

/// Symmetric, nonnegative, irreducible matrix of edge conductances. The
/// diagonal is allowed and ignored by [`laplacian`].
#[derive(Debug, Clone)]
pub struct ConductanceMatrix {
    entries: DMatrix<f64>,
}

impl ConductanceMatrix {
    pub fn new(entries: DMatrix<f64>) -> Result<Self> {
        let (rows, cols) = entries.shape();
        if rows == 0 {
            return Err(Error::Empty);
        }
        if rows != cols {
            return Err(Error::NotSquare { rows, cols });
        }
        let n = rows;
        let scale = entries.iter().fold(1.0_f64, |acc, x| acc.max(x.abs()));
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
                if j > i && (v - entries[(j, i)]).abs() > SYMMETRY_TOL * scale {
                    return Err(Error::NotSymmetric { row: i, col: j });
                }
            }
        }
        if !support_connected(&entries) {
            return Err(Error::Disconnected);
        }
        Ok(Self { entries })
    }

    /// Unit conductance on every listed edge of an undirected graph.
    pub fn unit_graph(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut entries = DMatrix::zeros(n, n);
        for &(u, v) in edges {
            if u >= n || v >= n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: u.max(v) + 1,
                });
            }
            if u != v {
                entries[(u, v)] = 1.0;
                entries[(v, u)] = 1.0;
            }
        }
        Self::new(entries)
    }

    pub fn n(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn total(&self) -> f64 {
        self.entries.sum()
    }
}

fn support_connected(entries: &DMatrix<f64>) -> bool {
    let n = entries.nrows();
    let mut seen = vec![false; n];
    let mut queue = VecDeque::from([0usize]);
    seen[0] = true;
    let mut count = 1;
    while let Some(u) = queue.pop_front() {
        for v in 0..n {
            if !seen[v] && u != v && entries[(u, v)] > 0.0 {
                seen[v] = true;
                count += 1;
                queue.push_back(v);
            }
        }
    }
    count == n
}

/// `L = diag(C 1) - C`. The diagonal of `C` cancels out.
pub fn laplacian(c: &ConductanceMatrix) -> DMatrix<f64> {
    let n = c.n();
    let a = c.entries();
    let mut l = -a.clone();
    for i in 0..n {
        let off_diag: f64 = (0..n).filter(|&j| j != i).map(|j| a[(i, j)]).sum();
        l[(i, i)] = off_diag;
    }
    l
}

/// Moore-Penrose pseudoinverse of the Laplacian through a full symmetric
/// eigendecomposition, dropping the single null direction.
pub fn laplacian_pseudoinverse(c: &ConductanceMatrix) -> Result<DMatrix<f64>> {
    let l = laplacian(c);
    let n = l.nrows();
    if n == 1 {
        return Ok(DMatrix::zeros(1, 1));
    }
    let max_diag = (0..n).map(|i| l[(i, i)]).fold(0.0_f64, f64::max);
    let eig = SymmetricEigen::new(l);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let fiedler = eig.eigenvalues[order[1]];
    if !(fiedler > CONNECTIVITY_TOL * max_diag) {
        return Err(Error::Disconnected);
    }
    let mut scaled = eig.eigenvectors.clone();
    for (k, mut col) in scaled.column_iter_mut().enumerate() {
        if k == order[0] {
            col.fill(0.0);
        } else {
            col /= eig.eigenvalues[k];
        }
    }
    let mut pinv = scaled * eig.eigenvectors.transpose();
    symmetrize(&mut pinv);
    Ok(pinv)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ResistanceMethod {
    Pseudoinverse,
    GroundedSolve,
}

/// Pairwise effective resistances.
#[derive(Debug, Clone)]
pub struct ResistanceMatrix {
    values: DMatrix<f64>,
    method: ResistanceMethod,
}

impl ResistanceMatrix {
    pub fn n(&self) -> usize {
        self.values.nrows()
    }

    pub fn get(&self, u: usize, v: usize) -> f64 {
        self.values[(u, v)]
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn method(&self) -> ResistanceMethod {
        self.method
    }

    pub fn average(&self) -> f64 {
        average_resistance(self)
    }
}

fn resistance_from_gram(gram: &DMatrix<f64>, method: ResistanceMethod) -> ResistanceMatrix {
    let n = gram.nrows();
    let mut values = DMatrix::zeros(n, n);
    for u in 0..n {
        for v in (u + 1)..n {
            let r = (gram[(u, u)] + gram[(v, v)] - 2.0 * gram[(u, v)]).max(0.0);
            values[(u, v)] = r;
            values[(v, u)] = r;
        }
    }
    ResistanceMatrix { values, method }
}

/// All-pairs effective resistance, `R_uv = L+_uu + L+_vv - 2 L+_uv`.
pub fn effective_resistance(c: &ConductanceMatrix) -> Result<ResistanceMatrix> {
    let pinv = laplacian_pseudoinverse(c)?;
    Ok(resistance_from_gram(&pinv, ResistanceMethod::Pseudoinverse))
}

/// All-pairs effective resistance by grounding node 0 and solving the reduced
/// Laplacian system for each source. Independent of the eigen route.
pub fn effective_resistance_grounded(c: &ConductanceMatrix) -> Result<ResistanceMatrix> {
    let l = laplacian(c);
    let n = l.nrows();
    if n == 1 {
        return Ok(ResistanceMatrix {
            values: DMatrix::zeros(1, 1),
            method: ResistanceMethod::GroundedSolve,
        });
    }
    let reduced = l.view((1, 1), (n - 1, n - 1)).into_owned();
    let chol = reduced.cholesky().ok_or(Error::Disconnected)?;
    let mut gram = DMatrix::zeros(n, n);
    for source in 0..(n - 1) {
        let mut rhs = nalgebra::DVector::zeros(n - 1);
        rhs[source] = 1.0;
        let potential = chol.solve(&rhs);
        for k in 0..(n - 1) {
            gram[(k + 1, source + 1)] = potential[k];
        }
    }
    Ok(resistance_from_gram(&gram, ResistanceMethod::GroundedSolve))
}

/// Effective resistance of an unweighted undirected graph.
pub fn graph_resistance(n: usize, edges: &[(usize, usize)]) -> Result<ResistanceMatrix> {
    effective_resistance(&ConductanceMatrix::unit_graph(n, edges)?)
}

/// `(1 / 2n^2) sum_{u,v} R_uv`.
pub fn average_resistance(r: &ResistanceMatrix) -> f64 {
    let n = r.n() as f64;
    r.values.sum() / (2.0 * n * n)
}

/// `(1/2) sum_{u,v} R_uv pi_u pi_v`.
pub fn weighted_average_resistance(r: &ResistanceMatrix, pi: &[f64]) -> Result<f64> {
    if pi.len() != r.n() {
        return Err(Error::DimensionMismatch {
            expected: r.n(),
            got: pi.len(),
        });
    }
    let mut total = 0.0;
    for u in 0..r.n() {
        for v in 0..r.n() {
            total += r.get(u, v) * pi[u] * pi[v];
        }
    }
    Ok(0.5 * total)
}

/// `Phi_alpha(P) = alpha diag(pi) P` for reversible `P`.
pub fn phi_map(p: &ConsensusMatrix, alpha: f64) -> Result<ConductanceMatrix> {
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(Error::OutOfRange(format!(
            "alpha must be positive, got {alpha}"
        )));
    }
    let mut flow = flow_matrix(p);
    let asym = asymmetry(&flow);
    if asym > DEFAULT_CLASSIFY_TOL {
        return Err(Error::NotReversible { asymmetry: asym });
    }
    symmetrize(&mut flow);
    flow *= alpha;
    ConductanceMatrix::new(flow)
}

/// `Phi(P) = n diag(pi) P`.
pub fn phi(p: &ConsensusMatrix) -> Result<ConductanceMatrix> {
    phi_map(p, p.n() as f64)
}

/// `Psi(C) = diag(C 1)^{-1} C`, the inverse of [`phi_map`].
pub fn psi_map(c: &ConductanceMatrix) -> Result<ConsensusMatrix> {
    let n = c.n();
    let a = c.entries();
    if let Some(node) = (0..n).find(|&i| !(a[(i, i)] > 0.0)) {
        return Err(Error::ZeroDiagonal { node });
    }
    let mut p = a.clone();
    for i in 0..n {
        let row_sum: f64 = a.row(i).sum();
        p.row_mut(i).scale_mut(1.0 / row_sum);
    }
    validate_consensus(p, DEFAULT_TOL)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph_gen::{circle_matrix, p_epsilon};
    use crate::linalg::max_abs_diff;

    fn complete(n: usize) -> ConductanceMatrix {
        let mut m = DMatrix::from_element(n, n, 1.0);
        m.fill_diagonal(0.0);
        ConductanceMatrix::new(m).unwrap()
    }

    #[test]
    fn laplacian_examples() {
        let c =
            ConductanceMatrix::new(DMatrix::from_row_slice(2, 2, &[0.0, 2.5, 2.5, 0.0])).unwrap();
        assert_eq!(
            laplacian(&c),
            DMatrix::from_row_slice(2, 2, &[2.5, -2.5, -2.5, 2.5])
        );
        let mut looped = c.entries().clone();
        looped.fill_diagonal(7.0);
        let looped = ConductanceMatrix::new(looped).unwrap();
        assert_eq!(laplacian(&looped), laplacian(&c));

        let l = laplacian(&complete(3));
        for i in 0..3 {
            for j in 0..3 {
                let expected = if i == j { 2.0 } else { -1.0 };
                assert_eq!(l[(i, j)], expected);
            }
        }
    }

    #[test]
    fn single_resistor() {
        let c =
            ConductanceMatrix::new(DMatrix::from_row_slice(2, 2, &[0.0, 4.0, 4.0, 0.0])).unwrap();
        let r = effective_resistance(&c).unwrap();
        assert!((r.get(0, 1) - 0.25).abs() < 1e-14);
        assert_eq!(r.get(0, 0), 0.0);
    }

    #[test]
    fn complete_graph_resistance_and_average() {
        let r = effective_resistance(&complete(3)).unwrap();
        assert!((r.get(0, 2) - 2.0 / 3.0).abs() < 1e-14);
        assert!((average_resistance(&r) - 2.0 / 9.0).abs() < 1e-14);
        let uniform = [1.0 / 3.0; 3];
        let w = weighted_average_resistance(&r, &uniform).unwrap();
        assert!((w - average_resistance(&r)).abs() < 1e-14);

        let mut m = DMatrix::from_element(3, 3, 1.0 / 3.0);
        m.fill_diagonal(0.0);
        let r = effective_resistance(&ConductanceMatrix::new(m).unwrap()).unwrap();
        let w = weighted_average_resistance(&r, &uniform).unwrap();
        assert!((w - 2.0 / 3.0).abs() < 1e-13);

        assert!(matches!(
            weighted_average_resistance(&r, &[0.5, 0.5]),
            Err(Error::DimensionMismatch {
                expected: 3,
                got: 2
            })
        ));
    }

    #[test]
    fn disconnected_networks_are_rejected() {
        let m = DMatrix::from_row_slice(
            4,
            4,
            &[
                0., 1., 0., 0., 1., 0., 0., 0., 0., 0., 0., 1., 0., 0., 1., 0.,
            ],
        );
        assert!(matches!(
            ConductanceMatrix::new(m),
            Err(Error::Disconnected)
        ));
    }

    #[test]
    fn asymmetric_conductance_is_rejected() {
        let m = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.1, 0.0]);
        assert!(matches!(
            ConductanceMatrix::new(m),
            Err(Error::NotSymmetric { row: 0, col: 1 })
        ));
    }

    #[test]
    fn grounded_route_matches_pseudoinverse() {
        let c = ConductanceMatrix::new(DMatrix::from_row_slice(
            4,
            4,
            &[
                1., 2., 0., 0.5, 2., 0., 1., 0., 0., 1., 0., 3., 0.5, 0., 3., 0.,
            ],
        ))
        .unwrap();
        let a = effective_resistance(&c).unwrap();
        let b = effective_resistance_grounded(&c).unwrap();
        assert_eq!(b.method(), ResistanceMethod::GroundedSolve);
        assert!(max_abs_diff(a.values(), b.values()) < 1e-12);
    }

    #[test]
    fn phi_psi_round_trip() {
        let u = ConsensusMatrix::new(DMatrix::from_element(4, 4, 0.25)).unwrap();
        let c = phi(&u).unwrap();
        assert!(max_abs_diff(c.entries(), &DMatrix::from_element(4, 4, 0.25)) < 1e-15);
        let back = psi_map(&c).unwrap();
        assert!(max_abs_diff(back.entries(), u.entries()) < 1e-15);

        let p = circle_matrix(6, 0.2, 0.2).unwrap();
        let back = psi_map(&phi_map(&p, 3.5).unwrap()).unwrap();
        assert!(max_abs_diff(back.entries(), p.entries()) < 1e-12);
        assert!((phi_map(&p, 3.5).unwrap().total() - 3.5).abs() < 1e-12);
    }

    #[test]
    fn phi_rejects_nonreversible() {
        let p = p_epsilon(0.2).unwrap();
        assert!(matches!(phi(&p), Err(Error::NotReversible { .. })));
    }

    #[test]
    fn psi_requires_positive_diagonal() {
        assert!(matches!(
            psi_map(&complete(3)),
            Err(Error::ZeroDiagonal { node: 0 })
        ));
    }

    #[test]
    fn psi_measure_is_proportional_to_row_sums() {
        let m = DMatrix::from_row_slice(3, 3, &[1.0, 2.0, 0.5, 2.0, 0.3, 1.0, 0.5, 1.0, 4.0]);
        let c = ConductanceMatrix::new(m.clone()).unwrap();
        let p = psi_map(&c).unwrap();
        let total = m.sum();
        for i in 0..3 {
            assert!((p.pi()[i] - m.row(i).sum() / total).abs() < 1e-13);
        }
        let alpha = 2.0;
        let again = phi_map(&p, alpha).unwrap();
        assert!(max_abs_diff(again.entries(), &(m * (alpha / total))) < 1e-13);
    }
}
