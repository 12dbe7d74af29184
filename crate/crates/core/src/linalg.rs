//! Small dense helpers shared by the numeric modules.

use nalgebra::{DMatrix, DVector};

pub(crate) fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()))
}

pub(crate) fn max_abs_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    a.iter()
        .zip(b.iter())
        .fold(0.0_f64, |acc, (x, y)| acc.max((x - y).abs()))
}

/// Max-norm of `m - m^T`.
pub(crate) fn asymmetry(m: &DMatrix<f64>) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0_f64;
    for i in 0..n {
        for j in (i + 1)..n {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst
}

pub(crate) fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let avg = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = avg;
            m[(j, i)] = avg;
        }
    }
}

/// The rank-one limit `1 pi^T`.
pub(crate) fn ones_pi(pi: &DVector<f64>) -> DMatrix<f64> {
    let n = pi.len();
    DMatrix::from_fn(n, n, |_, j| pi[j])
}

pub(crate) fn frobenius_sq(m: &DMatrix<f64>) -> f64 {
    m.iter().map(|x| x * x).sum()
}

/// `m^k` by repeated squaring.
pub(crate) fn matrix_power(m: &DMatrix<f64>, mut k: usize) -> DMatrix<f64> {
    let n = m.nrows();
    let mut result = DMatrix::identity(n, n);
    let mut base = m.clone();
    while k > 0 {
        if k & 1 == 1 {
            result = &result * &base;
        }
        k >>= 1;
        if k > 0 {
            base = &base * &base;
        }
    }
    result
}

/// Row-compressed view of the nonzero pattern of a dense matrix, used where
/// the same sparse matrix multiplies many dense right-hand sides.
#[derive(Debug, Clone)]
pub(crate) struct RowSparse {
    rows: Vec<Vec<(usize, f64)>>,
}

impl RowSparse {
    pub(crate) fn from_dense(m: &DMatrix<f64>) -> Self {
        let rows = (0..m.nrows())
            .map(|i| {
                (0..m.ncols())
                    .filter(|&j| m[(i, j)] != 0.0)
                    .map(|j| (j, m[(i, j)]))
                    .collect()
            })
            .collect();
        Self { rows }
    }

    pub(crate) fn nnz(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    /// `out = self * x`, both dense and column-major.
    pub(crate) fn mul_dense_into(&self, x: &DMatrix<f64>, out: &mut DMatrix<f64>) {
        let cols = x.ncols();
        out.fill(0.0);
        for c in 0..cols {
            let xc = x.column(c);
            let mut oc = out.column_mut(c);
            for (i, row) in self.rows.iter().enumerate() {
                let mut acc = 0.0;
                for &(j, v) in row {
                    acc += v * xc[j];
                }
                oc[i] = acc;
            }
        }
    }
}
