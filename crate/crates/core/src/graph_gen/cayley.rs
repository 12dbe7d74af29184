use std::collections::BTreeMap;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::stochastic::ConsensusMatrix;

/// Default attempt cap for the rejection sampler of [`cayley_case1`].
pub const DEFAULT_CASE1_ATTEMPTS: usize = 10_000;

const WEIGHT_SUM_TOL: f64 = 1e-12;

/// Generator `g` of a Cayley matrix on `Z_n^d`: positive weights on offsets
/// in `{-1, 0, 1}^d`, summing to one, with a positive weight on `0`.
#[derive(Debug, Clone, PartialEq)]
pub struct CayleyGenerator {
    d: usize,
    weights: BTreeMap<Vec<i8>, f64>,
}

impl CayleyGenerator {
    pub fn new(d: usize, weights: BTreeMap<Vec<i8>, f64>) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidGenerator("dimension must be positive".into()));
        }
        let mut total = 0.0;
        for (offset, &w) in &weights {
            if offset.len() != d || offset.iter().any(|h| !(-1..=1).contains(h)) {
                return Err(Error::InvalidGenerator(format!(
                    "offset {offset:?} is not in {{-1,0,1}}^{d}"
                )));
            }
            if !(w.is_finite() && w > 0.0) {
                return Err(Error::InvalidGenerator(format!(
                    "weight {w} of offset {offset:?} is not positive"
                )));
            }
            total += w;
        }
        if (total - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(Error::InvalidGenerator(format!("weights sum to {total}")));
        }
        if !weights.contains_key(&vec![0; d]) {
            return Err(Error::InvalidGenerator(
                "zero offset needs a positive weight".into(),
            ));
        }
        Ok(Self { d, weights })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn weights(&self) -> &BTreeMap<Vec<i8>, f64> {
        &self.weights
    }

    pub fn weight(&self, offset: &[i8]) -> f64 {
        self.weights.get(offset).copied().unwrap_or(0.0)
    }

    pub fn min_weight(&self) -> f64 {
        self.weights.values().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_weight(&self) -> f64 {
        self.weights.values().copied().fold(0.0, f64::max)
    }
}

/// Cayley matrix on `Z_n^d` with `P_uv = g(u - v)`. Node `x` has index
/// `x_0 + x_1 n + ... + x_{d-1} n^{d-1}`.
pub fn cayley_matrix(n: usize, gen: &CayleyGenerator) -> Result<ConsensusMatrix> {
    if n < 3 {
        return Err(Error::InvalidGenerator(format!(
            "torus side must be at least 3, got {n}"
        )));
    }
    let d = gen.d();
    let size = n
        .checked_pow(d as u32)
        .ok_or_else(|| Error::InvalidGenerator("torus too large".into()))?;
    let mut entries = DMatrix::zeros(size, size);
    let mut coords = vec![0usize; d];
    for u in 0..size {
        let mut rest = u;
        for c in coords.iter_mut() {
            *c = rest % n;
            rest /= n;
        }
        for (offset, &w) in gen.weights() {
            // v = u - h (mod n)
            let mut v = 0;
            let mut stride = 1;
            for (c, &h) in coords.iter().zip(offset) {
                let coord = (*c as i64 - h as i64).rem_euclid(n as i64) as usize;
                v += coord * stride;
                stride *= n;
            }
            entries[(u, v)] += w;
        }
    }
    ConsensusMatrix::new(entries)
}

/// Circle of `n` agents: weight `p` on the left neighbor, `q` on the right
/// neighbor and `1 - p - q` on itself, i.e. `g(1) = p`, `g(-1) = q`.
pub fn circle_matrix(n: usize, p: f64, q: f64) -> Result<ConsensusMatrix> {
    if !(p.is_finite() && q.is_finite() && p >= 0.0 && q >= 0.0) {
        return Err(Error::InvalidWeights(format!(
            "p = {p}, q = {q} must be nonnegative"
        )));
    }
    if !(p + q > 0.0 && p + q < 1.0) {
        return Err(Error::InvalidWeights(format!(
            "p + q = {} must lie in (0, 1)",
            p + q
        )));
    }
    let mut weights = BTreeMap::new();
    weights.insert(vec![0], 1.0 - p - q);
    if p > 0.0 {
        weights.insert(vec![1], p);
    }
    if q > 0.0 {
        weights.insert(vec![-1], q);
    }
    cayley_matrix(n, &CayleyGenerator::new(1, weights)?)
}

/// `(p_min, p_max)` acceptance window used for random generators in
/// dimensions 2 and 3.
pub fn default_case1_range(d: usize) -> Option<(f64, f64)> {
    match d {
        2 => Some((0.05, 0.2)),
        3 => Some((0.01, 0.1)),
        _ => None,
    }
}

fn all_offsets(d: usize) -> Vec<Vec<i8>> {
    let mut out = vec![Vec::new()];
    for _ in 0..d {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                [-1i8, 0, 1].into_iter().map(move |h| {
                    let mut next = prefix.clone();
                    next.push(h);
                    next
                })
            })
            .collect();
    }
    out
}

/// Random generator on all of `{-1, 0, 1}^d`: weights drawn uniformly on
/// `(0, 1]`, normalized, and accepted iff all lie in `[p_min, p_max]`.
pub fn cayley_case1(
    n: usize,
    d: usize,
    p_min: f64,
    p_max: f64,
    seed: u64,
) -> Result<(CayleyGenerator, ConsensusMatrix)> {
    cayley_case1_with_cap(n, d, p_min, p_max, seed, DEFAULT_CASE1_ATTEMPTS)
}

pub fn cayley_case1_with_cap(
    n: usize,
    d: usize,
    p_min: f64,
    p_max: f64,
    seed: u64,
    max_attempts: usize,
) -> Result<(CayleyGenerator, ConsensusMatrix)> {
    if !(2..=3).contains(&d) {
        return Err(Error::OutOfRange(format!(
            "random generators need d in {{2, 3}}, got {d}"
        )));
    }
    if !(p_min > 0.0 && p_min < p_max && p_max <= 1.0) {
        return Err(Error::OutOfRange(format!(
            "invalid window [{p_min}, {p_max}]"
        )));
    }
    let offsets = all_offsets(d);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..max_attempts {
        // 1 - U with U in [0, 1) gives (0, 1]
        let raw: Vec<f64> = offsets.iter().map(|_| 1.0 - rng.random::<f64>()).collect();
        let total: f64 = raw.iter().sum();
        if raw.iter().all(|w| (p_min..=p_max).contains(&(w / total))) {
            let weights = offsets
                .iter()
                .cloned()
                .zip(raw.iter().map(|w| w / total))
                .collect();
            let gen = CayleyGenerator::new(d, weights)?;
            let matrix = cayley_matrix(n, &gen)?;
            return Ok((gen, matrix));
        }
    }
    Err(Error::RejectionExhausted {
        attempts: max_attempts,
    })
}

/// Generator with weight `1/(d+1)` on `0, e_1, ..., e_d`.
pub fn cayley_case2(n: usize, d: usize) -> Result<ConsensusMatrix> {
    if d == 0 {
        return Err(Error::OutOfRange("dimension must be positive".into()));
    }
    let w = 1.0 / (d as f64 + 1.0);
    let mut weights = BTreeMap::new();
    weights.insert(vec![0i8; d], w);
    for i in 0..d {
        let mut e = vec![0i8; d];
        e[i] = 1;
        weights.insert(e, w);
    }
    cayley_matrix(n, &CayleyGenerator::new(d, weights)?)
}
