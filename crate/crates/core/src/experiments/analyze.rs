use std::fmt;
use std::path::Path;

use super::config::AnalyzeSettings;
use crate::bounds::{
    corollary_normal_bounds, resistance_sandwich_check, theorem_resistance_bounds,
    theorem_topology_bounds, BoundsReport, SandwichMargins,
};
use crate::error::Result;
use crate::io::load_consensus;
use crate::lqcost::{green_matrix, lq_cost_exact, lq_cost_truncated, LqReport};
use crate::stochastic::{classify, ConsensusMatrix, MatrixClass, DEFAULT_CLASSIFY_TOL};

#[derive(Debug, Clone)]
pub struct AnalysisReport {
    pub n: usize,
    pub pi: Vec<f64>,
    pub class: MatrixClass,
    pub exact: LqReport,
    pub truncated: LqReport,
    pub green_trace: f64,
    pub resistance: BoundsReport,
    pub topology: BoundsReport,
    pub normal: Option<BoundsReport>,
    pub sandwich: SandwichMargins,
}

impl AnalysisReport {
    pub fn of(p: &ConsensusMatrix, settings: &AnalyzeSettings) -> Result<Self> {
        let class = classify(p, DEFAULT_CLASSIFY_TOL);
        Ok(Self {
            n: p.n(),
            pi: p.pi().iter().copied().collect(),
            class,
            exact: lq_cost_exact(p)?,
            truncated: lq_cost_truncated(p, settings.rule)?,
            green_trace: green_matrix(p)?.trace(),
            resistance: theorem_resistance_bounds(p)?,
            topology: theorem_topology_bounds(p)?,
            normal: if class.normal {
                Some(corollary_normal_bounds(p)?)
            } else {
                None
            },
            sandwich: resistance_sandwich_check(p)?,
        })
    }
}

/// Loads a matrix CSV and analyzes it.
pub fn analyze_matrix(path: &Path, settings: &AnalyzeSettings) -> Result<AnalysisReport> {
    AnalysisReport::of(&load_consensus(path)?, settings)
}

impl fmt::Display for AnalysisReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "n = {}", self.n)?;
        let pi: Vec<String> = self.pi.iter().map(|x| format!("{x:.12}")).collect();
        writeln!(f, "pi = {}", pi.join(", "))?;
        writeln!(f, "{}", self.class)?;
        writeln!(f, "J = {:.12}", self.exact.j)?;
        writeln!(f, "J_w = {:.12}", self.exact.j_weighted)?;
        writeln!(
            f,
            "J (truncated, {} terms) = {:.12}",
            self.truncated.steps_used.unwrap_or(0),
            self.truncated.j
        )?;
        writeln!(f, "green_trace = {:.12}", self.green_trace)?;
        for report in [
            Some(&self.resistance),
            Some(&self.topology),
            self.normal.as_ref(),
        ]
        .into_iter()
        .flatten()
        {
            write!(f, "{report}")?;
            if !report.lower_applicable {
                writeln!(
                    f,
                    "{}.lower_note = not certified: P does not commute with its time reversal",
                    report.theorem
                )?;
            }
        }
        let s = &self.sandwich;
        writeln!(f, "sandwich.delta_out = {}", s.delta_out)?;
        writeln!(f, "sandwich.delta_in = {}", s.delta_in)?;
        writeln!(f, "sandwich.upper_slack = {:e}", s.upper_slack)?;
        writeln!(f, "sandwich.lower_slack_out = {:e}", s.lower_slack_out)?;
        if let Some(v) = s.lower_slack_in {
            writeln!(f, "sandwich.lower_slack_in = {v:e}")?;
        }
        Ok(())
    }
}
