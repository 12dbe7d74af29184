use std::f64::consts::PI;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::ValidateSettings;
use super::derive_seed;
use crate::bounds::{
    conductance_sandwich, resistance_sandwich_check, reversiblization_support,
    theorem_resistance_bounds, theorem_topology_bounds,
};
use crate::error::Result;
use crate::graph_gen::{
    cayley_case2, commuting_example, random_circulant, random_consensus,
    random_reversible_with_conductance, random_symmetric,
};
use crate::lqcost::{green_matrix, lq_cost_exact, lq_cost_truncated, trace_pair, TruncationRule};
use crate::resistance::{
    effective_resistance, effective_resistance_grounded, phi, weighted_average_resistance,
};
use crate::stochastic::{multiplicative_reversiblization, ConsensusMatrix};

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: &'static str,
    pub cases: usize,
    pub failures: usize,
    /// Smallest `tolerance - violation` seen; negative means failure.
    pub worst_slack: f64,
}

impl CheckResult {
    pub fn passed(&self) -> bool {
        self.failures == 0 && self.cases > 0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationSummary {
    pub seed: u64,
    pub inject: bool,
    pub checks: Vec<CheckResult>,
}

impl ValidationSummary {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(CheckResult::passed)
    }
}

impl fmt::Display for ValidationSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "seed = {}", self.seed)?;
        if self.inject {
            writeln!(
                f,
                "mode = perturbed (every left-hand side pushed past its limit)"
            )?;
        }
        for c in &self.checks {
            writeln!(
                f,
                "{} {:<28} cases {:>5} failures {:>5} worst_slack {:+.3e}",
                if c.passed() { "PASS" } else { "FAIL" },
                c.name,
                c.cases,
                c.failures,
                c.worst_slack
            )?;
        }
        write!(
            f,
            "overall = {}",
            if self.all_passed() { "PASS" } else { "FAIL" }
        )
    }
}

/// Accumulates comparisons for one check.
struct Check {
    result: CheckResult,
    inject: bool,
}

impl Check {
    fn new(name: &'static str, inject: bool) -> Self {
        Self {
            result: CheckResult {
                name,
                cases: 0,
                failures: 0,
                worst_slack: f64::INFINITY,
            },
            inject,
        }
    }

    fn perturbed(&self, lhs: f64, rhs: f64) -> f64 {
        if self.inject {
            rhs + 1.0 + rhs.abs()
        } else {
            lhs
        }
    }

    fn record(&mut self, slack: f64) {
        self.result.cases += 1;
        if !(slack >= 0.0) {
            self.result.failures += 1;
        }
        self.result.worst_slack = self.result.worst_slack.min(slack);
    }

    /// `lhs <= rhs + tol * max(1, |rhs|)`.
    fn le(&mut self, lhs: f64, rhs: f64, tol: f64) {
        let lhs = self.perturbed(lhs, rhs);
        self.record(rhs + tol * rhs.abs().max(1.0) - lhs);
    }

    /// `|lhs - rhs| <= tol * max(1, |rhs|)`.
    fn close(&mut self, lhs: f64, rhs: f64, tol: f64) {
        let lhs = self.perturbed(lhs, rhs);
        self.record(tol * rhs.abs().max(1.0) - (lhs - rhs).abs());
    }

    fn finish(self) -> CheckResult {
        self.result
    }
}

fn rng_for(seed: u64, check: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, &[3, check]))
}

fn size<R: Rng>(rng: &mut R) -> usize {
    rng.random_range(3..=12)
}

/// `J` of a circulant `P_uv = g(u - v)` from its spectrum:
/// `(1/n) sum_{k != 0} 1 / (1 - |lambda_k|^2)`.
fn circulant_spectral_cost(p: &ConsensusMatrix) -> f64 {
    let n = p.n();
    let g: Vec<f64> = (0..n).map(|h| p.get(h, 0)).collect();
    let mut total = 0.0;
    for k in 1..n {
        let (mut re, mut im) = (0.0, 0.0);
        for (h, gh) in g.iter().enumerate() {
            let angle = -2.0 * PI * (k * h) as f64 / n as f64;
            re += gh * angle.cos();
            im += gh * angle.sin();
        }
        total += 1.0 / (1.0 - (re * re + im * im));
    }
    total / n as f64
}

/// Cross-module property checks on random instances. Failures are counted,
/// never raised; generator errors propagate.
pub fn run_validation_suite(settings: &ValidateSettings) -> Result<ValidationSummary> {
    let k = settings.instances;
    let inject = settings.inject;
    let seed = settings.seed;
    let mut checks = Vec::new();

    let mut c = Check::new("trace_inequality", inject);
    let mut rng = rng_for(seed, 1);
    for _ in 0..k {
        let p = random_consensus(size(&mut rng), 0.25, &mut rng)?;
        for t in 0..=8 {
            let (a, b) = trace_pair(&p, t);
            c.le(a, b, 1e-9);
        }
    }
    checks.push(c.finish());

    let mut c = Check::new("trace_equality_reversible", inject);
    let mut rng = rng_for(seed, 2);
    for _ in 0..k {
        let (_, p) = random_reversible_with_conductance(size(&mut rng), 0.3, &mut rng)?;
        for t in 0..=8 {
            let (a, b) = trace_pair(&p, t);
            c.close(a, b, 1e-9);
        }
    }
    checks.push(c.finish());

    let mut c = Check::new("green_resistance_identity", inject);
    let mut rng = rng_for(seed, 3);
    for _ in 0..k {
        let (_, p) = random_reversible_with_conductance(size(&mut rng), 0.3, &mut rng)?;
        let r = effective_resistance(&phi(&p)?)?;
        let lhs = weighted_average_resistance(&r, p.invariant_measure().as_slice())?;
        c.close(lhs, green_matrix(&p)?.trace() / p.n() as f64, 1e-8);
    }
    checks.push(c.finish());

    let mut c = Check::new("upper_bounds", inject);
    let mut rng = rng_for(seed, 4);
    for _ in 0..k {
        let p = random_consensus(size(&mut rng), 0.25, &mut rng)?;
        let j = lq_cost_exact(&p)?;
        for b in [theorem_resistance_bounds(&p)?, theorem_topology_bounds(&p)?] {
            c.le(j.j, b.j_upper, 1e-9);
            c.le(j.j_weighted, b.jw_upper.unwrap_or(f64::INFINITY), 1e-9);
        }
    }
    checks.push(c.finish());

    let mut c = Check::new("lower_bounds_commuting", inject);
    let mut rng = rng_for(seed, 5);
    let mut commuting: Vec<ConsensusMatrix> = vec![commuting_example(), cayley_case2(4, 2)?];
    for i in 0..k {
        let n = size(&mut rng);
        commuting.push(if i % 2 == 0 {
            random_circulant(n, 0.3, &mut rng)?
        } else {
            random_symmetric(n, 0.3, &mut rng)?
        });
    }
    for p in &commuting {
        let j = lq_cost_exact(p)?;
        for b in [theorem_resistance_bounds(p)?, theorem_topology_bounds(p)?] {
            if let (Some(lo), Some(lo_w)) = (b.j_lower(), b.jw_lower()) {
                c.le(lo, j.j, 1e-9);
                c.le(lo_w, j.j_weighted, 1e-9);
            }
        }
    }
    checks.push(c.finish());

    let mut c = Check::new("resistance_sandwich", inject);
    let mut rng = rng_for(seed, 6);
    for _ in 0..k {
        let p = random_consensus(size(&mut rng), 0.25, &mut rng)?;
        c.le(-resistance_sandwich_check(&p)?.min_slack(), 0.0, 1e-9);
    }
    checks.push(c.finish());

    let mut c = Check::new("conductance_sandwich", inject);
    let mut rng = rng_for(seed, 7);
    for _ in 0..k {
        let p = random_consensus(size(&mut rng), 0.25, &mut rng)?;
        let s = conductance_sandwich(&p)?;
        c.le(s.lower, s.value, 1e-9);
        c.le(s.value, s.upper, 1e-9);
    }
    checks.push(c.finish());

    let mut c = Check::new("fuzz_support", inject);
    let mut rng = rng_for(seed, 8);
    for _ in 0..k {
        let p = random_consensus(size(&mut rng), 0.2, &mut rng)?;
        let fuzz = reversiblization_support(&p);
        let numeric = multiplicative_reversiblization(&p);
        let n = p.n();
        let mismatches = (0..n)
            .flat_map(|u| ((u + 1)..n).map(move |v| (u, v)))
            .filter(|&(u, v)| fuzz.edges.contains(&(u, v)) != (numeric.get(u, v) > 0.0))
            .count();
        c.le(mismatches as f64, 0.0, 0.0);
    }
    checks.push(c.finish());

    let mut c = Check::new("exact_vs_truncated", inject);
    let mut rng = rng_for(seed, 9);
    let tight = TruncationRule {
        t_max: 100_000,
        delta: 1e-12,
        window: 10,
    };
    for _ in 0..k {
        let p = random_consensus(size(&mut rng), 0.25, &mut rng)?;
        c.close(lq_cost_truncated(&p, tight)?.j, lq_cost_exact(&p)?.j, 1e-5);
    }
    checks.push(c.finish());

    let mut c = Check::new("resistance_routes", inject);
    let mut rng = rng_for(seed, 10);
    for _ in 0..k {
        let (cond, _) = random_reversible_with_conductance(size(&mut rng), 0.3, &mut rng)?;
        let a = effective_resistance(&cond)?;
        let b = effective_resistance_grounded(&cond)?;
        let n = cond.n();
        for u in 0..n {
            for v in (u + 1)..n {
                c.close(a.get(u, v), b.get(u, v), 1e-10);
            }
        }
    }
    checks.push(c.finish());

    let mut c = Check::new("circulant_spectrum", inject);
    let mut rng = rng_for(seed, 11);
    for _ in 0..k {
        let p = random_circulant(size(&mut rng), 0.3, &mut rng)?;
        c.close(lq_cost_exact(&p)?.j, circulant_spectral_cost(&p), 1e-9);
    }
    checks.push(c.finish());

    Ok(ValidationSummary {
        seed,
        inject,
        checks,
    })
}
