use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::Result;
use crate::resistance::{psi_map, ConductanceMatrix};
use crate::stochastic::ConsensusMatrix;

const WEIGHT_FLOOR: f64 = 0.05;

/// Directed Hamiltonian cycle through a random permutation plus each other
/// off-diagonal pair with probability `extra`, all with random weights.
fn random_support<R: Rng + ?Sized>(n: usize, extra: f64, rng: &mut R) -> DMatrix<f64> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        m[(order[i], order[(i + 1) % n])] = 1.0;
    }
    for u in 0..n {
        for v in 0..n {
            if u != v && m[(u, v)] == 0.0 && rng.random::<f64>() < extra {
                m[(u, v)] = 1.0;
            }
        }
    }
    m
}

fn row_normalize(m: &mut DMatrix<f64>) {
    for mut row in m.row_iter_mut() {
        let total: f64 = row.sum();
        row /= total;
    }
}

/// Random consensus matrix on `n >= 2` nodes, generally nonreversible and
/// not normal. Nonzero weights are uniform on `[0.05, 1]` before row
/// normalization; `extra` is the density of edges beyond the spanning cycle.
pub fn random_consensus<R: Rng + ?Sized>(
    n: usize,
    extra: f64,
    rng: &mut R,
) -> Result<ConsensusMatrix> {
    let mut m = random_support(n, extra, rng);
    for u in 0..n {
        m[(u, u)] = 1.0;
    }
    for x in m.iter_mut() {
        if *x > 0.0 {
            *x = rng.random_range(WEIGHT_FLOOR..=1.0);
        }
    }
    row_normalize(&mut m);
    ConsensusMatrix::new(m)
}

/// Random connected conductance matrix with a positive diagonal and the
/// reversible consensus matrix `Psi(C)` it induces.
pub fn random_reversible_with_conductance<R: Rng + ?Sized>(
    n: usize,
    extra: f64,
    rng: &mut R,
) -> Result<(ConductanceMatrix, ConsensusMatrix)> {
    let support = random_support(n, extra, rng);
    let mut c = DMatrix::zeros(n, n);
    for u in 0..n {
        c[(u, u)] = rng.random_range(WEIGHT_FLOOR..=1.0);
        for v in (u + 1)..n {
            if support[(u, v)] > 0.0 || support[(v, u)] > 0.0 {
                let w = rng.random_range(WEIGHT_FLOOR..=1.0);
                c[(u, v)] = w;
                c[(v, u)] = w;
            }
        }
    }
    let c = ConductanceMatrix::new(c)?;
    let p = psi_map(&c)?;
    Ok((c, p))
}

pub fn random_reversible<R: Rng + ?Sized>(
    n: usize,
    extra: f64,
    rng: &mut R,
) -> Result<ConsensusMatrix> {
    Ok(random_reversible_with_conductance(n, extra, rng)?.1)
}

/// Random symmetric (hence doubly stochastic and normal) consensus matrix.
/// Off-diagonal weights are scaled so the largest off-diagonal row sum is at
/// most 0.9; the diagonal takes the remainder.
pub fn random_symmetric<R: Rng + ?Sized>(
    n: usize,
    extra: f64,
    rng: &mut R,
) -> Result<ConsensusMatrix> {
    let support = random_support(n, extra, rng);
    let mut m = DMatrix::zeros(n, n);
    for u in 0..n {
        for v in (u + 1)..n {
            if support[(u, v)] > 0.0 || support[(v, u)] > 0.0 {
                let w = rng.random_range(WEIGHT_FLOOR..=1.0);
                m[(u, v)] = w;
                m[(v, u)] = w;
            }
        }
    }
    let widest = m.row_iter().map(|r| r.sum()).fold(0.0, f64::max);
    let scale = rng.random_range(0.5..=0.9) / widest;
    m *= scale;
    for u in 0..n {
        m[(u, u)] = 1.0 - m.row(u).sum();
    }
    ConsensusMatrix::new(m)
}

/// Random circulant `P_uv = g((u - v) mod n)` with `g(0) > 0`, `g(1) > 0`
/// (for irreducibility) and each other offset present with probability
/// `extra`.
pub fn random_circulant<R: Rng + ?Sized>(
    n: usize,
    extra: f64,
    rng: &mut R,
) -> Result<ConsensusMatrix> {
    let mut g = vec![0.0; n];
    for (k, gk) in g.iter_mut().enumerate() {
        if k <= 1 || rng.random::<f64>() < extra {
            *gk = rng.random_range(WEIGHT_FLOOR..=1.0);
        }
    }
    let total: f64 = g.iter().sum();
    let m = DMatrix::from_fn(n, n, |u, v| g[(u + n - v) % n] / total);
    ConsensusMatrix::new(m)
}
