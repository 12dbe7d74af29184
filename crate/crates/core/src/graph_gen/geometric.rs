use nalgebra::DMatrix;
use petgraph::algo::{connected_components, floyd_warshall, kosaraju_scc};
use petgraph::graph::{DiGraph, UnGraph};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::stochastic::ConsensusMatrix;

/// Parameters of the random geometric construction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeometricParams {
    /// Minimum node distance.
    pub s: f64,
    /// Maximum edge length.
    pub r: f64,
    /// Maximum uncovered radius.
    pub gamma: f64,
    /// Minimum ratio of Euclidean to graph distance.
    pub rho: f64,
    /// Edge probability for pairs within range.
    pub p_e: f64,
    /// Probability of deleting each single direction of an edge.
    pub p_d: f64,
    /// Box side is `c n^{1/d}`.
    pub c: f64,
    /// Weight floor before row normalization.
    pub b: f64,
    pub pi_bar_min: f64,
    pub pi_bar_max: f64,
    /// Grid divisions per axis for the coverage check.
    pub gamma_divisions: usize,
    /// Whole-construction restarts before giving up.
    pub max_attempts: usize,
    /// Placement draws per node before giving up.
    pub max_node_attempts: usize,
    /// Compare `n pi_max` against `pi_bar_min` instead of `pi_bar_max`.
    pub literal_pi_check: bool,
}

impl Default for GeometricParams {
    fn default() -> Self {
        Self {
            s: 0.1,
            r: 1.0,
            gamma: 1.0,
            rho: 0.052,
            p_e: 0.8,
            p_d: 0.1,
            c: 0.5,
            b: 0.8,
            pi_bar_min: 0.1,
            pi_bar_max: 3.0,
            gamma_divisions: 30,
            max_attempts: 1000,
            max_node_attempts: 10_000,
            literal_pi_check: false,
        }
    }
}

impl GeometricParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::OutOfRange(format!("geometric parameter {what}")));
        let finite = [
            self.s,
            self.r,
            self.gamma,
            self.rho,
            self.p_e,
            self.p_d,
            self.c,
            self.b,
            self.pi_bar_min,
            self.pi_bar_max,
        ]
        .iter()
        .all(|x| x.is_finite());
        if !finite {
            return bad("values must be finite");
        }
        if !(self.s > 0.0 && self.s < self.r) {
            return bad("requires 0 < s < r");
        }
        if !(self.gamma > 0.0) || self.rho < 0.0 || !(self.c > 0.0) {
            return bad("requires gamma > 0, rho >= 0, c > 0");
        }
        if !(self.p_e > 0.0 && self.p_e <= 1.0) {
            return bad("p_e must lie in (0, 1]");
        }
        if !(self.p_d >= 0.0 && self.p_d < 0.5) {
            return bad("p_d must lie in [0, 1/2)");
        }
        if !(self.b > 0.0 && self.b <= 1.0) {
            return bad("b must lie in (0, 1]");
        }
        if !(self.pi_bar_min < self.pi_bar_max) {
            return bad("requires pi_bar_min < pi_bar_max");
        }
        if self.gamma_divisions == 0 || self.max_attempts == 0 || self.max_node_attempts == 0 {
            return bad("divisions and attempt caps must be positive");
        }
        Ok(())
    }

    /// Box side `c n^{1/d}`.
    pub fn side(&self, n: usize, d: usize) -> f64 {
        self.c * (n as f64).powf(1.0 / d as f64)
    }
}

/// Geometric quantities of an accepted instance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeometricMeasured {
    /// Minimum pairwise node distance.
    pub s_n: f64,
    /// Maximum edge length.
    pub r_n: f64,
    pub gamma_ok: bool,
    pub rho_n: f64,
}

/// Rejection counts accumulated while sampling one instance.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct GeometricAudit {
    /// Whole constructions started, including the accepted one.
    pub attempts: usize,
    pub rejected_nodes: usize,
    pub disconnected: usize,
    pub gamma_failed: usize,
    pub rho_failed: usize,
    pub not_irreducible: usize,
    pub pi_range_failed: usize,
    pub literal_pi_check: bool,
}

impl GeometricAudit {
    pub fn to_key_value(&self) -> String {
        format!(
            "attempts = {}\nrejected_nodes = {}\ndisconnected = {}\ngamma_failed = {}\n\
             rho_failed = {}\nnot_irreducible = {}\npi_range_failed = {}\npi_check = {}\n",
            self.attempts,
            self.rejected_nodes,
            self.disconnected,
            self.gamma_failed,
            self.rho_failed,
            self.not_irreducible,
            self.pi_range_failed,
            if self.literal_pi_check {
                "literal: n*pi_max > pi_bar_min"
            } else {
                "symmetric: n*pi_max > pi_bar_max"
            }
        )
    }

    fn absorb(&mut self, other: &GeometricAudit) {
        self.rejected_nodes += other.rejected_nodes;
        self.disconnected += other.disconnected;
        self.gamma_failed += other.gamma_failed;
        self.rho_failed += other.rho_failed;
        self.not_irreducible += other.not_irreducible;
        self.pi_range_failed += other.pi_range_failed;
    }
}

#[derive(Debug, Clone)]
pub struct GeometricInstance {
    pub n: usize,
    pub d: usize,
    /// Box side.
    pub side: f64,
    pub coordinates: Vec<Vec<f64>>,
    /// Undirected geometric graph, `(u, v)` with `u < v`.
    pub edges: Vec<(usize, usize)>,
    pub matrix: ConsensusMatrix,
    pub measured: GeometricMeasured,
    pub audit: GeometricAudit,
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Grid coverage test: every point of the `(divisions + 1)^d` grid on
/// `[0, l]^d` must lie within `gamma - (l / divisions) sqrt(d) / 2` of a node.
/// A pass guarantees that no ball of radius `gamma` inside the box misses
/// every node.
pub fn gamma_check(coordinates: &[Vec<f64>], l: f64, gamma: f64, divisions: usize) -> bool {
    let Some(d) = coordinates.first().map(Vec::len) else {
        return false;
    };
    let step = l / divisions as f64;
    let radius = gamma - step * (d as f64).sqrt() / 2.0;
    if radius < 0.0 {
        return false;
    }
    let per_axis = divisions + 1;
    let total = per_axis.pow(d as u32);
    let mut point = vec![0.0; d];
    for idx in 0..total {
        let mut rest = idx;
        for x in point.iter_mut() {
            *x = (rest % per_axis) as f64 * step;
            rest /= per_axis;
        }
        if !coordinates.iter().any(|c| distance(c, &point) <= radius) {
            return false;
        }
    }
    true
}

/// `rho_n = min d_E(u, v) / d_G(u, v)` with unit edge lengths, by
/// Floyd-Warshall. Returns `(rho_n >= rho, rho_n)`.
pub fn rho_check(
    edges: &[(usize, usize)],
    coordinates: &[Vec<f64>],
    rho: f64,
) -> Result<(bool, f64)> {
    let n = coordinates.len();
    let mut graph = UnGraph::<(), ()>::with_capacity(n, edges.len());
    let nodes: Vec<_> = (0..n).map(|_| graph.add_node(())).collect();
    for &(u, v) in edges {
        graph.add_edge(nodes[u], nodes[v], ());
    }
    let dist = floyd_warshall(&graph, |_| 1usize)
        .map_err(|_| Error::SolveFailure("negative cycle with unit lengths".into()))?;
    let mut rho_n = f64::INFINITY;
    for u in 0..n {
        for v in (u + 1)..n {
            let hops = dist[&(nodes[u], nodes[v])];
            if hops == usize::MAX {
                return Err(Error::Disconnected);
            }
            rho_n = rho_n.min(distance(&coordinates[u], &coordinates[v]) / hops as f64);
        }
    }
    Ok((rho_n >= rho, rho_n))
}

enum Outcome {
    Accepted(Box<GeometricInstance>),
    Rejected,
}

/// Samples one instance of the random geometric construction. The result
/// depends only on `(params, n, d, seed)`.
pub fn sample_geometric(
    params: &GeometricParams,
    n: usize,
    d: usize,
    seed: u64,
) -> Result<GeometricInstance> {
    params.validate()?;
    if n < 2 {
        return Err(Error::OutOfRange(format!("need at least 2 nodes, got {n}")));
    }
    if !(1..=3).contains(&d) {
        return Err(Error::OutOfRange(format!(
            "dimension must be 1, 2 or 3, got {d}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut audit = GeometricAudit {
        literal_pi_check: params.literal_pi_check,
        ..GeometricAudit::default()
    };
    for attempt in 1..=params.max_attempts {
        audit.attempts = attempt;
        let mut local = GeometricAudit::default();
        let outcome = attempt_once(params, n, d, &mut rng, &mut local)?;
        audit.absorb(&local);
        if let Outcome::Accepted(mut instance) = outcome {
            instance.audit = audit;
            return Ok(*instance);
        }
    }
    Err(Error::RejectionExhausted {
        attempts: params.max_attempts,
    })
}

fn attempt_once(
    params: &GeometricParams,
    n: usize,
    d: usize,
    rng: &mut ChaCha8Rng,
    audit: &mut GeometricAudit,
) -> Result<Outcome> {
    let side = params.side(n, d);

    let mut coordinates: Vec<Vec<f64>> = Vec::with_capacity(n);
    while coordinates.len() < n {
        let mut placed = false;
        for _ in 0..params.max_node_attempts {
            let candidate: Vec<f64> = (0..d).map(|_| rng.random::<f64>() * side).collect();
            if coordinates
                .iter()
                .all(|c| distance(c, &candidate) >= params.s)
            {
                coordinates.push(candidate);
                placed = true;
                break;
            }
            audit.rejected_nodes += 1;
        }
        if !placed {
            return Err(Error::InfeasibleDensity {
                placed: coordinates.len(),
                n,
            });
        }
    }

    let mut edges = Vec::new();
    for u in 0..n {
        for v in (u + 1)..n {
            if distance(&coordinates[u], &coordinates[v]) <= params.r
                && rng.random::<f64>() < params.p_e
            {
                edges.push((u, v));
            }
        }
    }

    let mut graph = UnGraph::<(), ()>::with_capacity(n, edges.len());
    let nodes: Vec<_> = (0..n).map(|_| graph.add_node(())).collect();
    for &(u, v) in &edges {
        graph.add_edge(nodes[u], nodes[v], ());
    }
    if connected_components(&graph) != 1 {
        audit.disconnected += 1;
        return Ok(Outcome::Rejected);
    }

    let gamma_ok = gamma_check(&coordinates, side, params.gamma, params.gamma_divisions);
    if !gamma_ok {
        audit.gamma_failed += 1;
        return Ok(Outcome::Rejected);
    }
    let (rho_ok, rho_n) = rho_check(&edges, &coordinates, params.rho)?;
    if !rho_ok {
        audit.rho_failed += 1;
        return Ok(Outcome::Rejected);
    }

    let mut mask = DMatrix::<f64>::identity(n, n);
    for &(u, v) in &edges {
        mask[(u, v)] = 1.0;
        mask[(v, u)] = 1.0;
    }
    for &(u, v) in &edges {
        let x = rng.random::<f64>();
        if x < params.p_d {
            mask[(u, v)] = 0.0;
        } else if x < 2.0 * params.p_d {
            mask[(v, u)] = 0.0;
        }
    }

    let mut digraph = DiGraph::<(), ()>::with_capacity(n, 2 * edges.len());
    let dnodes: Vec<_> = (0..n).map(|_| digraph.add_node(())).collect();
    for u in 0..n {
        for v in 0..n {
            if u != v && mask[(u, v)] > 0.0 {
                digraph.add_edge(dnodes[u], dnodes[v], ());
            }
        }
    }
    if kosaraju_scc(&digraph).len() != 1 {
        audit.not_irreducible += 1;
        return Ok(Outcome::Rejected);
    }

    let mut entries = DMatrix::zeros(n, n);
    for u in 0..n {
        for v in 0..n {
            if mask[(u, v)] > 0.0 {
                entries[(u, v)] = rng.random_range(params.b..=1.0);
            }
        }
    }
    for u in 0..n {
        let total: f64 = entries.row(u).sum();
        for v in 0..n {
            entries[(u, v)] /= total;
        }
    }
    let matrix = ConsensusMatrix::new(entries)?;

    let nf = n as f64;
    let m = matrix.invariant_measure();
    let upper = if params.literal_pi_check {
        params.pi_bar_min
    } else {
        params.pi_bar_max
    };
    if nf * m.min() < params.pi_bar_min || nf * m.max() > upper {
        audit.pi_range_failed += 1;
        return Ok(Outcome::Rejected);
    }

    let mut s_n = f64::INFINITY;
    for u in 0..n {
        for v in (u + 1)..n {
            s_n = s_n.min(distance(&coordinates[u], &coordinates[v]));
        }
    }
    let r_n = edges
        .iter()
        .map(|&(u, v)| distance(&coordinates[u], &coordinates[v]))
        .fold(0.0, f64::max);

    Ok(Outcome::Accepted(Box::new(GeometricInstance {
        n,
        d,
        side,
        coordinates,
        edges,
        matrix,
        measured: GeometricMeasured {
            s_n,
            r_n,
            gamma_ok,
            rho_n,
        },
        audit: GeometricAudit::default(),
    })))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gamma_check_examples() {
        let center = vec![vec![0.5, 0.5]];
        assert!(gamma_check(&center, 1.0, 0.75, 30));
        assert!(!gamma_check(&center, 1.0, 0.6, 30));
        let corner = vec![vec![0.0, 0.0], vec![0.1, 0.0], vec![0.0, 0.1]];
        assert!(!gamma_check(&corner, 4.0, 1.0, 30));
        assert!(!gamma_check(&[], 1.0, 1.0, 30));
    }

    #[test]
    fn rho_check_examples() {
        let (ok, rho) = rho_check(&[(0, 1)], &[vec![0.0, 0.0], vec![0.7, 0.0]], 0.5).unwrap();
        assert!(ok);
        assert!((rho - 0.7).abs() < 1e-15);

        let path = [vec![0.0], vec![1.0], vec![2.0]];
        let (_, rho) = rho_check(&[(0, 1), (1, 2)], &path, 0.0).unwrap();
        assert!((rho - 1.0).abs() < 1e-15);

        assert!(matches!(
            rho_check(&[(0, 1)], &path, 0.0),
            Err(Error::Disconnected)
        ));
    }

    #[test]
    fn params_validation() {
        assert!(GeometricParams::default().validate().is_ok());
        let bad = GeometricParams {
            p_d: 0.5,
            ..GeometricParams::default()
        };
        assert!(bad.validate().is_err());
        let bad = GeometricParams {
            s: 2.0,
            ..GeometricParams::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn small_instance_is_deterministic() {
        let params = GeometricParams::default();
        let a = sample_geometric(&params, 25, 2, 11).unwrap();
        let b = sample_geometric(&params, 25, 2, 11).unwrap();
        assert_eq!(a.coordinates, b.coordinates);
        assert_eq!(a.matrix.entries(), b.matrix.entries());
        assert_eq!(a.audit, b.audit);
        assert!(a.measured.s_n >= params.s);
        assert!(a.measured.r_n <= params.r);
    }

    #[test]
    fn infeasible_density() {
        let params = GeometricParams {
            s: 0.9,
            r: 1.0,
            c: 0.1,
            max_node_attempts: 50,
            ..GeometricParams::default()
        };
        assert!(matches!(
            sample_geometric(&params, 30, 2, 0),
            Err(Error::InfeasibleDensity { .. })
        ));
    }
}
