//! Effective-resistance bounds on `J(P)` and `J_w(P)`, the back-and-forth
//! support of `P* P`, and the resistance sandwiches behind the bounds.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::error::{Error, Result};
use crate::linalg::symmetrize;
use crate::resistance::{effective_resistance, graph_resistance, ConductanceMatrix};
use crate::stochastic::{classify, support_graphs, ConsensusMatrix, DEFAULT_CLASSIFY_TOL};

/// `f(delta) = 4 delta^2 + 2 delta - 2`.
pub fn f_delta(delta: usize) -> f64 {
    let d = delta as f64;
    4.0 * d * d + 2.0 * d - 2.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundTheorem {
    /// Bounds through `R(C_{P*P})`, `C_{P*P} = n P^T diag(pi) P`.
    Resistance,
    /// Bounds through the unit-conductance resistance of `G(P)`.
    Topology,
    /// Topology bounds specialised to normal `P`.
    Normal,
}

impl fmt::Display for BoundTheorem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BoundTheorem::Resistance => "resistance",
            BoundTheorem::Topology => "topology",
            BoundTheorem::Normal => "normal",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundConstants {
    pub n: usize,
    pub pi_min: f64,
    pub pi_max: f64,
    pub p_min: f64,
    pub p_max: f64,
    pub delta_in: usize,
    pub delta_out: usize,
    pub f_delta_in: f64,
    /// The average resistance the bound is built on.
    pub r_bar: f64,
}

impl BoundConstants {
    fn of(p: &ConsensusMatrix, r_bar: f64) -> Self {
        let support = support_graphs(p);
        let m = p.invariant_measure();
        Self {
            n: p.n(),
            pi_min: m.min(),
            pi_max: m.max(),
            p_min: support.p_min,
            p_max: support.p_max,
            delta_in: support.delta_in,
            delta_out: support.delta_out,
            f_delta_in: f_delta(support.delta_in),
            r_bar,
        }
    }
}

/// Bounds on `J` and `J_w`. The lower values are always computed; they are
/// certified only when `lower_applicable`, i.e. when `P* P = P P*`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundsReport {
    pub theorem: BoundTheorem,
    pub j_upper: f64,
    pub j_lower_hypothetical: f64,
    pub jw_upper: Option<f64>,
    pub jw_lower_hypothetical: Option<f64>,
    pub lower_applicable: bool,
    pub constants: BoundConstants,
}

impl BoundsReport {
    pub const CSV_HEADER: [&'static str; 14] = [
        "theorem",
        "j_upper",
        "j_lower",
        "jw_upper",
        "jw_lower",
        "lower_applicable",
        "pi_min",
        "pi_max",
        "p_min",
        "p_max",
        "delta_in",
        "delta_out",
        "f_delta_in",
        "r_bar",
    ];

    /// Certified lower bound on `J`, if any.
    pub fn j_lower(&self) -> Option<f64> {
        self.lower_applicable.then_some(self.j_lower_hypothetical)
    }

    /// Certified lower bound on `J_w`, if any.
    pub fn jw_lower(&self) -> Option<f64> {
        if self.lower_applicable {
            self.jw_lower_hypothetical
        } else {
            None
        }
    }

    /// One CSV record in `CSV_HEADER` order. The lower columns hold the
    /// hypothetical values; `lower_applicable` tells whether they certify.
    pub fn csv_record(&self) -> Vec<String> {
        let opt = |v: Option<f64>| v.map(|x| format!("{x:.17e}")).unwrap_or_default();
        let c = &self.constants;
        vec![
            self.theorem.to_string(),
            format!("{:.17e}", self.j_upper),
            format!("{:.17e}", self.j_lower_hypothetical),
            opt(self.jw_upper),
            opt(self.jw_lower_hypothetical),
            self.lower_applicable.to_string(),
            format!("{:.17e}", c.pi_min),
            format!("{:.17e}", c.pi_max),
            format!("{:.17e}", c.p_min),
            format!("{:.17e}", c.p_max),
            c.delta_in.to_string(),
            c.delta_out.to_string(),
            format!("{}", c.f_delta_in),
            format!("{:.17e}", c.r_bar),
        ]
    }
}

impl fmt::Display for BoundsReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, v) in Self::CSV_HEADER.iter().zip(self.csv_record()) {
            if !v.is_empty() {
                writeln!(f, "{}.{k} = {v}", self.theorem)?;
            }
        }
        Ok(())
    }
}

fn lower_applicable(p: &ConsensusMatrix) -> bool {
    classify(p, DEFAULT_CLASSIFY_TOL).commuting
}

/// `C_{P*P} = n P^T diag(pi) P`.
pub fn reversiblization_conductance(p: &ConsensusMatrix) -> Result<ConductanceMatrix> {
    let n = p.n() as f64;
    let a = p.entries();
    let mut c = a.transpose() * p.invariant_measure().diag() * a * n;
    symmetrize(&mut c);
    ConductanceMatrix::new(c)
}

pub fn theorem_resistance_bounds(p: &ConsensusMatrix) -> Result<BoundsReport> {
    let c = reversiblization_conductance(p)?;
    let r_bar = effective_resistance(&c)?.average();
    let k = BoundConstants::of(p, r_bar);
    let n = k.n as f64;
    Ok(BoundsReport {
        theorem: BoundTheorem::Resistance,
        j_upper: k.pi_max.powi(3) * n * n / k.pi_min * r_bar,
        j_lower_hypothetical: k.pi_min.powi(3) * n * n / k.pi_max * r_bar,
        jw_upper: Some(k.pi_max.powi(3) * n.powi(3) * r_bar),
        jw_lower_hypothetical: Some(k.pi_min.powi(3) * n.powi(3) * r_bar),
        lower_applicable: lower_applicable(p),
        constants: k,
    })
}

fn support_resistance_average(p: &ConsensusMatrix) -> Result<f64> {
    let edges = support_graphs(p).undirected_edges();
    Ok(graph_resistance(p.n(), &edges)?.average())
}

pub fn theorem_topology_bounds(p: &ConsensusMatrix) -> Result<BoundsReport> {
    let r_bar = support_resistance_average(p)?;
    let k = BoundConstants::of(p, r_bar);
    let n = k.n as f64;
    let up = k.pi_max.powi(3) / (k.p_min * k.p_min);
    let low = k.pi_min.powi(3) / (k.p_max * k.p_max * k.f_delta_in);
    Ok(BoundsReport {
        theorem: BoundTheorem::Topology,
        j_upper: up * n / (k.pi_min * k.pi_min) * r_bar,
        j_lower_hypothetical: low * n / (k.pi_max * k.pi_max) * r_bar,
        jw_upper: Some(up * n * n / k.pi_min * r_bar),
        jw_lower_hypothetical: Some(low * n * n / k.pi_max * r_bar),
        lower_applicable: lower_applicable(p),
        constants: k,
    })
}

/// `R(G(P)) / (p_max^2 f(delta_in)) <= J(P) <= R(G(P)) / p_min^2` for normal `P`.
pub fn corollary_normal_bounds(p: &ConsensusMatrix) -> Result<BoundsReport> {
    let class = classify(p, DEFAULT_CLASSIFY_TOL);
    if !class.normal {
        return Err(Error::NotNormal {
            residual: class.residuals.normal,
        });
    }
    let r_bar = support_resistance_average(p)?;
    let k = BoundConstants::of(p, r_bar);
    Ok(BoundsReport {
        theorem: BoundTheorem::Normal,
        j_upper: r_bar / (k.p_min * k.p_min),
        j_lower_hypothetical: r_bar / (k.p_max * k.p_max * k.f_delta_in),
        jw_upper: None,
        jw_lower_hypothetical: None,
        lower_applicable: true,
        constants: k,
    })
}

/// Support of `G(P* P)` built from back-and-forth paths `u <- w -> v`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FuzzSupport {
    pub n: usize,
    /// Edges `(u, v)` with `u < v`.
    pub edges: BTreeSet<(usize, usize)>,
    /// Smallest-index pivot `w` with `P_wu > 0` and `P_wv > 0`, per edge.
    pub pivots: BTreeMap<(usize, usize), usize>,
    /// Edges of `G(P* P)` that are not edges of `G(P)`.
    pub new_edges: BTreeSet<(usize, usize)>,
}

impl FuzzSupport {
    pub fn edge_list(&self) -> Vec<(usize, usize)> {
        self.edges.iter().copied().collect()
    }
}

/// Builds `G(P* P)` combinatorially: `{u, v}` is an edge iff some `w` has
/// `P_wu > 0` and `P_wv > 0`. `w` may equal `u` or `v`.
pub fn reversiblization_support(p: &ConsensusMatrix) -> FuzzSupport {
    let n = p.n();
    let mut pivots = BTreeMap::new();
    for w in 0..n {
        let reach: Vec<usize> = (0..n).filter(|&v| p.has_edge(w, v)).collect();
        for (i, &u) in reach.iter().enumerate() {
            for &v in &reach[i + 1..] {
                pivots.entry((u, v)).or_insert(w);
            }
        }
    }
    let edges: BTreeSet<(usize, usize)> = pivots.keys().copied().collect();
    let new_edges = edges
        .iter()
        .copied()
        .filter(|&(u, v)| !p.has_edge(u, v) && !p.has_edge(v, u))
        .collect();
    FuzzSupport {
        n,
        edges,
        pivots,
        new_edges,
    }
}

/// Minimum slacks of the per-pair sandwich
/// `R_uv(G(P)) / (4 delta - 2) <= R_uv(G(P* P)) <= R_uv(G(P))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SandwichMargins {
    pub delta_out: usize,
    pub delta_in: usize,
    /// `min (R_uv(G(P)) - R_uv(G(P* P)))`.
    pub upper_slack: f64,
    /// `min (R_uv(G(P* P)) - R_uv(G(P)) / (4 delta_out - 2))`.
    pub lower_slack_out: f64,
    /// Same with `delta_in`; only when `P` commutes with `P*`.
    pub lower_slack_in: Option<f64>,
}

impl SandwichMargins {
    pub fn min_slack(&self) -> f64 {
        let base = self.upper_slack.min(self.lower_slack_out);
        self.lower_slack_in.map_or(base, |s| base.min(s))
    }
}

pub fn resistance_sandwich_check(p: &ConsensusMatrix) -> Result<SandwichMargins> {
    let n = p.n();
    let support = support_graphs(p);
    let r_p = graph_resistance(n, &support.undirected_edges())?;
    let r_pp = graph_resistance(n, &reversiblization_support(p).edge_list())?;
    let eta_out = 4.0 * support.delta_out as f64 - 2.0;
    let eta_in = 4.0 * support.delta_in as f64 - 2.0;
    let commuting = lower_applicable(p);

    let mut upper = f64::INFINITY;
    let mut lower_out = f64::INFINITY;
    let mut lower_in = f64::INFINITY;
    for u in 0..n {
        for v in (u + 1)..n {
            let a = r_p.get(u, v);
            let b = r_pp.get(u, v);
            upper = upper.min(a - b);
            lower_out = lower_out.min(b - a / eta_out);
            lower_in = lower_in.min(b - a / eta_in);
        }
    }
    Ok(SandwichMargins {
        delta_out: support.delta_out,
        delta_in: support.delta_in,
        upper_slack: upper,
        lower_slack_out: lower_out,
        lower_slack_in: commuting.then_some(lower_in),
    })
}

/// `R(G(P*P)) / (n pi_max (delta_in + 1) p_max^2) <= R(C_{P*P}) <= R(G(P*P)) / (n pi_min p_min^2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConductanceSandwich {
    pub lower: f64,
    pub value: f64,
    pub upper: f64,
}

pub fn conductance_sandwich(p: &ConsensusMatrix) -> Result<ConductanceSandwich> {
    let n = p.n();
    let support = support_graphs(p);
    let m = p.invariant_measure();
    let graph = graph_resistance(n, &reversiblization_support(p).edge_list())?.average();
    let value = effective_resistance(&reversiblization_conductance(p)?)?.average();
    let nf = n as f64;
    Ok(ConductanceSandwich {
        lower: graph
            / (nf * m.max() * (support.delta_in as f64 + 1.0) * support.p_max * support.p_max),
        value,
        upper: graph / (nf * m.min() * support.p_min * support.p_min),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph_gen::{cayley_case2, circle_matrix, commuting_example, p_epsilon};
    use crate::lqcost::lq_cost_exact;
    use crate::stochastic::multiplicative_reversiblization;
    use nalgebra::DMatrix;

    fn uniform(n: usize) -> ConsensusMatrix {
        ConsensusMatrix::new(DMatrix::from_element(n, n, 1.0 / n as f64)).unwrap()
    }

    #[test]
    fn f_values() {
        assert_eq!(f_delta(1), 4.0);
        assert_eq!(f_delta(2), 18.0);
        assert_eq!(f_delta(26), 2754.0);
    }

    #[test]
    fn resistance_theorem_is_tight_on_uniform() {
        let r = theorem_resistance_bounds(&uniform(3)).unwrap();
        assert!(r.lower_applicable);
        assert!((r.constants.r_bar - 2.0 / 3.0).abs() < 1e-12);
        assert!((r.j_upper - 2.0 / 3.0).abs() < 1e-12);
        assert!((r.j_lower().unwrap() - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn topology_and_normal_on_uniform() {
        let p = uniform(3);
        let t = theorem_topology_bounds(&p).unwrap();
        assert!((t.constants.r_bar - 2.0 / 9.0).abs() < 1e-12);
        assert!((t.j_upper - 2.0).abs() < 1e-12);
        assert!((t.j_lower().unwrap() - 1.0 / 9.0).abs() < 1e-12);
        let c = corollary_normal_bounds(&p).unwrap();
        assert!((c.j_upper - 2.0).abs() < 1e-12);
        assert!((c.j_lower_hypothetical - 1.0 / 9.0).abs() < 1e-12);
        assert!(c.jw_upper.is_none());
    }

    #[test]
    fn p_epsilon_lower_not_certified() {
        let p = p_epsilon(0.1).unwrap();
        let r = theorem_resistance_bounds(&p).unwrap();
        let j = lq_cost_exact(&p).unwrap().j;
        assert!(!r.lower_applicable);
        assert!(r.j_lower().is_none());
        assert!(r.j_upper >= j);
        // the uncertified value only overtakes J below eps ~ 0.0345
        assert!(r.j_lower_hypothetical < j);
        let small = p_epsilon(0.01).unwrap();
        let r_small = theorem_resistance_bounds(&small).unwrap();
        assert!(r_small.j_lower_hypothetical > lq_cost_exact(&small).unwrap().j);
        assert!(matches!(
            corollary_normal_bounds(&p),
            Err(Error::NotNormal { .. })
        ));
    }

    #[test]
    fn commuting_example_two_sided() {
        let p = commuting_example();
        let j = lq_cost_exact(&p).unwrap();
        for r in [
            theorem_resistance_bounds(&p).unwrap(),
            theorem_topology_bounds(&p).unwrap(),
        ] {
            assert!(r.lower_applicable);
            assert!(r.j_lower().unwrap() <= j.j && j.j <= r.j_upper, "{r}");
            assert!(r.jw_lower().unwrap() <= j.j_weighted && j.j_weighted <= r.jw_upper.unwrap());
        }
    }

    #[test]
    fn normal_corollary_on_circle_and_ratio() {
        let p = circle_matrix(8, 0.3, 0.3).unwrap();
        let j = lq_cost_exact(&p).unwrap().j;
        let c = corollary_normal_bounds(&p).unwrap();
        assert!(c.j_lower_hypothetical <= j && j <= c.j_upper);

        let q = cayley_case2(5, 2).unwrap();
        let c = corollary_normal_bounds(&q).unwrap();
        assert!((c.j_upper / c.j_lower_hypothetical - 18.0).abs() < 1e-9);
    }

    #[test]
    fn fuzz_support_matches_numeric() {
        for eps in [0.05, 0.3, 0.5] {
            let p = p_epsilon(eps).unwrap();
            let fuzz = reversiblization_support(&p);
            let rev = multiplicative_reversiblization(&p);
            for u in 0..3 {
                for v in (u + 1)..3 {
                    assert_eq!(fuzz.edges.contains(&(u, v)), rev.get(u, v) > 0.0);
                }
            }
            for (&(u, v), &w) in &fuzz.pivots {
                assert!(p.get(w, u) > 0.0 && p.get(w, v) > 0.0);
            }
        }
        // directed 3-cycle with loops: every pair is already adjacent
        assert!(reversiblization_support(&p_epsilon(0.3).unwrap())
            .new_edges
            .is_empty());
        let c = circle_matrix(6, 0.25, 0.25).unwrap();
        let fuzz = reversiblization_support(&c);
        assert_eq!(fuzz.edges.len(), 12);
        assert_eq!(fuzz.new_edges.len(), 6);
        assert_eq!(fuzz.pivots[&(0, 2)], 1);
    }

    #[test]
    fn sandwiches_on_examples() {
        let m = resistance_sandwich_check(&uniform(3)).unwrap();
        assert!(m.upper_slack.abs() < 1e-12);
        assert!(m.min_slack() >= -1e-9);
        let m = resistance_sandwich_check(&p_epsilon(0.25).unwrap()).unwrap();
        assert!(m.lower_slack_in.is_none());
        assert!(m.min_slack() >= -1e-9);

        for p in [
            p_epsilon(0.2).unwrap(),
            commuting_example(),
            circle_matrix(7, 0.1, 0.4).unwrap(),
        ] {
            let s = conductance_sandwich(&p).unwrap();
            assert!(
                s.lower <= s.value + 1e-12 && s.value <= s.upper + 1e-12,
                "{s:?}"
            );
        }
    }

    #[test]
    fn csv_record_shape() {
        let r = theorem_topology_bounds(&uniform(4)).unwrap();
        assert_eq!(r.csv_record().len(), BoundsReport::CSV_HEADER.len());
        assert!(r.to_string().contains("topology.lower_applicable = true"));
    }
}
