//! Closed-form values and independent spectral oracles.

use std::f64::consts::PI;

use consensus_lq::bounds::{
    corollary_normal_bounds, f_delta, theorem_resistance_bounds, theorem_topology_bounds,
};
use consensus_lq::graph_gen::{
    cayley_case1, cayley_case2, circle_matrix, commuting_example, default_case1_range, p_epsilon,
    CayleyGenerator,
};
use consensus_lq::lqcost::{lq_cost_exact, lq_cost_truncated, TruncationRule};
use consensus_lq::resistance::{
    effective_resistance_grounded, graph_resistance, ConductanceMatrix,
};
use consensus_lq::stochastic::{classify, DEFAULT_CLASSIFY_TOL};
use consensus_lq::ConsensusMatrix;
use nalgebra::DMatrix;

fn uniform(n: usize) -> ConsensusMatrix {
    ConsensusMatrix::new(DMatrix::from_element(n, n, 1.0 / n as f64)).unwrap()
}

/// `(1/N) sum_{k != 0} 1 / (1 - |lambda_k|^2)` with
/// `lambda_k = sum_h g(h) exp(-2 pi i k.h / n)` over `Z_n^d`.
fn cayley_spectral_cost(n: usize, gen: &CayleyGenerator) -> f64 {
    let d = gen.d();
    let total = n.pow(d as u32);
    let mut sum = 0.0;
    for idx in 1..total {
        let k: Vec<usize> = (0..d).map(|i| (idx / n.pow(i as u32)) % n).collect();
        let (mut re, mut im) = (0.0, 0.0);
        for (h, w) in gen.weights() {
            let dot: f64 = h
                .iter()
                .zip(&k)
                .map(|(&hi, &ki)| hi as f64 * ki as f64)
                .sum();
            let angle = -2.0 * PI * dot / n as f64;
            re += w * angle.cos();
            im += w * angle.sin();
        }
        sum += 1.0 / (1.0 - re * re - im * im);
    }
    sum / total as f64
}

#[test]
fn uniform_matrix_cost() {
    for n in 3..=10 {
        let r = lq_cost_exact(&uniform(n)).unwrap();
        let expected = (n as f64 - 1.0) / n as f64;
        assert!((r.j - expected).abs() < 1e-10, "n = {n}: {}", r.j);
        assert!((r.j_weighted - expected).abs() < 1e-10);
    }
}

#[test]
fn circle_three_cost() {
    let p = circle_matrix(3, 0.5, 0.0).unwrap();
    let exact = lq_cost_exact(&p).unwrap().j;
    let truncated = lq_cost_truncated(&p, TruncationRule::default()).unwrap().j;
    assert!((exact - 8.0 / 9.0).abs() < 1e-8);
    assert!((truncated - 8.0 / 9.0).abs() < 1e-8);
}

#[test]
fn p_epsilon_half_is_circle() {
    let a = lq_cost_exact(&p_epsilon(0.5).unwrap()).unwrap().j;
    assert!((a - 8.0 / 9.0).abs() < 1e-10);
}

#[test]
fn cycle_resistance() {
    for n in 3..=12 {
        let edges: Vec<(usize, usize)> = (0..n).map(|u| (u, (u + 1) % n)).collect();
        let r = graph_resistance(n, &edges).unwrap();
        for k in 1..n {
            let expected = (k * (n - k)) as f64 / n as f64;
            assert!((r.get(0, k) - expected).abs() < 1e-10, "n {n} k {k}");
        }
    }
}

#[test]
fn complete_graph_resistance() {
    for n in 2..=10 {
        let mut entries = DMatrix::from_element(n, n, 1.0);
        entries.fill_diagonal(0.0);
        let r = effective_resistance_grounded(&ConductanceMatrix::new(entries).unwrap()).unwrap();
        for v in 1..n {
            assert!((r.get(0, v) - 2.0 / n as f64).abs() < 1e-12);
        }
    }
}

#[test]
fn cayley_case2_matches_spectrum() {
    for (n, d) in [(5, 1), (6, 2), (4, 3), (7, 2)] {
        let p = cayley_case2(n, d).unwrap();
        let mut weights = std::collections::BTreeMap::new();
        let share = 1.0 / (d + 1) as f64;
        weights.insert(vec![0i8; d], share);
        for i in 0..d {
            let mut e = vec![0i8; d];
            e[i] = 1;
            weights.insert(e, share);
        }
        let gen = CayleyGenerator::new(d, weights).unwrap();
        let j = lq_cost_exact(&p).unwrap().j;
        let oracle = cayley_spectral_cost(n, &gen);
        assert!(
            (j - oracle).abs() < 1e-9 * oracle,
            "n {n} d {d}: {j} vs {oracle}"
        );
    }
}

#[test]
fn cayley_case1_matches_spectrum() {
    for (n, d, seed) in [(5, 2, 1), (6, 2, 2), (3, 3, 3), (4, 3, 4)] {
        let (lo, hi) = default_case1_range(d).unwrap();
        let (gen, p) = cayley_case1(n, d, lo, hi, seed).unwrap();
        let j = lq_cost_exact(&p).unwrap().j;
        let oracle = cayley_spectral_cost(n, &gen);
        assert!(
            (j - oracle).abs() < 1e-9 * oracle,
            "n {n} d {d}: {j} vs {oracle}"
        );
    }
}

#[test]
fn uniform_tightness() {
    let p = uniform(3);
    let b = theorem_resistance_bounds(&p).unwrap();
    assert!((b.j_upper - 2.0 / 3.0).abs() < 1e-10);
    assert!((b.j_lower().unwrap() - 2.0 / 3.0).abs() < 1e-10);
}

#[test]
fn commuting_example_has_two_sided_bounds() {
    let p = commuting_example();
    let class = classify(&p, DEFAULT_CLASSIFY_TOL);
    assert!(class.commuting);
    assert!(!class.reversible);
    let j = lq_cost_exact(&p).unwrap();
    for b in [
        theorem_resistance_bounds(&p).unwrap(),
        theorem_topology_bounds(&p).unwrap(),
    ] {
        assert!(b.lower_applicable);
        assert!(b.j_lower().unwrap() <= j.j * (1.0 + 1e-9));
        assert!(j.j <= b.j_upper * (1.0 + 1e-9));
    }
}

#[test]
fn normal_corollary_on_torus() {
    let p = cayley_case2(6, 2).unwrap();
    let j = lq_cost_exact(&p).unwrap().j;
    let b = corollary_normal_bounds(&p).unwrap();
    assert!(b.j_lower().unwrap() <= j && j <= b.j_upper);
}

#[test]
fn f_delta_values() {
    assert_eq!(f_delta(1), 4.0);
    assert_eq!(f_delta(2), 18.0);
    assert_eq!(f_delta(3), 40.0);
}
