//! Experiment drivers producing CSV results, plot data and audit trails.

mod analyze;
mod cayley;
pub mod config;
mod epsilon;
mod geometric;
pub mod plot;
mod validate;

use std::fs;
use std::path::Path;

use serde::Serialize;

pub use analyze::{analyze_matrix, AnalysisReport};
pub use cayley::run_cayley_sweep;
pub use config::{
    AnalyzeSettings, CayleySettings, EpsilonSweepSettings, ExperimentConfig, ExperimentKind,
    GeometricSettings, ValidateSettings,
};
pub use epsilon::run_epsilon_sweep;
pub use geometric::run_geometric_sweep;
pub use validate::{run_validation_suite, CheckResult, ValidationSummary};

use crate::bounds::BoundsReport;
use crate::error::Result;
use plot::Figure;

/// Mixes a master seed with tags into an independent stream seed.
pub fn derive_seed(master: u64, tags: &[u64]) -> u64 {
    fn mix(mut z: u64) -> u64 {
        z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }
    tags.iter().fold(mix(master), |acc, &t| mix(acc ^ mix(t)))
}

/// One CSV row. Bound columns left empty were not computed for the row.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResultRow {
    pub experiment: String,
    /// `eps` for the epsilon sweep, torus side for Cayley runs.
    pub param: Option<f64>,
    /// Node count.
    pub n: usize,
    pub d: Option<usize>,
    pub instance: usize,
    pub seed: u64,
    pub master_seed: u64,
    pub j: f64,
    pub j_w: f64,
    pub j_method: String,
    pub j_exact: Option<f64>,
    /// `|j - j_exact| / j_exact`.
    pub exact_discrepancy: Option<f64>,
    /// `j / ln(n)`, reported for two-dimensional runs.
    pub j_over_log: Option<f64>,
    pub lower_applicable: bool,
    pub resistance_j_upper: Option<f64>,
    pub resistance_j_lower: Option<f64>,
    pub resistance_jw_upper: Option<f64>,
    pub resistance_jw_lower: Option<f64>,
    pub topology_j_upper: Option<f64>,
    pub topology_j_lower: Option<f64>,
    pub topology_jw_upper: Option<f64>,
    pub topology_jw_lower: Option<f64>,
    pub normal_j_upper: Option<f64>,
    pub normal_j_lower: Option<f64>,
    pub r_bar_c: Option<f64>,
    pub r_bar_g: Option<f64>,
    #[serde(skip)]
    pub wall_time_s: f64,
}

impl ResultRow {
    pub(crate) fn new(experiment: &str, n: usize, master_seed: u64) -> Self {
        Self {
            experiment: experiment.to_string(),
            param: None,
            n,
            d: None,
            instance: 0,
            seed: master_seed,
            master_seed,
            j: f64::NAN,
            j_w: f64::NAN,
            j_method: String::new(),
            j_exact: None,
            exact_discrepancy: None,
            j_over_log: None,
            lower_applicable: false,
            resistance_j_upper: None,
            resistance_j_lower: None,
            resistance_jw_upper: None,
            resistance_jw_lower: None,
            topology_j_upper: None,
            topology_j_lower: None,
            topology_jw_upper: None,
            topology_jw_lower: None,
            normal_j_upper: None,
            normal_j_lower: None,
            r_bar_c: None,
            r_bar_g: None,
            wall_time_s: 0.0,
        }
    }

    /// Lower columns hold the uncertified value; `lower_applicable` says
    /// whether they certify.
    pub(crate) fn set_bounds(&mut self, report: &BoundsReport) {
        use crate::bounds::BoundTheorem::*;
        match report.theorem {
            Resistance => {
                self.resistance_j_upper = Some(report.j_upper);
                self.resistance_j_lower = Some(report.j_lower_hypothetical);
                self.resistance_jw_upper = report.jw_upper;
                self.resistance_jw_lower = report.jw_lower_hypothetical;
                self.r_bar_c = Some(report.constants.r_bar);
            }
            Topology => {
                self.topology_j_upper = Some(report.j_upper);
                self.topology_j_lower = Some(report.j_lower_hypothetical);
                self.topology_jw_upper = report.jw_upper;
                self.topology_jw_lower = report.jw_lower_hypothetical;
                self.r_bar_g = Some(report.constants.r_bar);
            }
            Normal => {
                self.normal_j_upper = Some(report.j_upper);
                self.normal_j_lower = Some(report.j_lower_hypothetical);
                self.r_bar_g = Some(report.constants.r_bar);
            }
        }
        self.lower_applicable = report.lower_applicable;
    }

    /// All emitted upper bounds on `j`.
    pub fn j_upper_bounds(&self) -> impl Iterator<Item = f64> {
        [
            self.resistance_j_upper,
            self.topology_j_upper,
            self.normal_j_upper,
        ]
        .into_iter()
        .flatten()
    }

    /// Emitted lower bounds on `j` that are certified.
    pub fn certified_j_lower_bounds(&self) -> impl Iterator<Item = f64> {
        let on = self.lower_applicable;
        [
            self.resistance_j_lower,
            self.topology_j_lower,
            self.normal_j_lower,
        ]
        .into_iter()
        .flatten()
        .filter(move |_| on)
    }

    pub(crate) fn sort_key(&self) -> (Option<usize>, usize, u64, usize) {
        (
            self.d,
            self.n,
            self.param.map_or(0, f64::to_bits),
            self.instance,
        )
    }
}

/// Everything a sweep writes.
#[derive(Debug, Clone, Default)]
pub struct RunOutput {
    pub rows: Vec<ResultRow>,
    pub audit: String,
    pub figures: Vec<Figure>,
}

impl RunOutput {
    /// Writes `results.csv`, `timings.csv`, `audit.txt` and `plot/*.dat`,
    /// plus `figN.svg` when `svg` is set.
    pub fn write(&self, dir: &Path, svg: bool) -> Result<()> {
        fs::create_dir_all(dir)?;
        let mut w = csv::Writer::from_path(dir.join("results.csv"))?;
        for row in &self.rows {
            w.serialize(row)?;
        }
        w.flush()?;
        let mut t = csv::Writer::from_path(dir.join("timings.csv"))?;
        t.write_record(["experiment", "param", "n", "d", "instance", "wall_time_s"])?;
        for row in &self.rows {
            t.write_record([
                row.experiment.clone(),
                row.param.map(|p| p.to_string()).unwrap_or_default(),
                row.n.to_string(),
                row.d.map(|d| d.to_string()).unwrap_or_default(),
                row.instance.to_string(),
                format!("{:.6}", row.wall_time_s),
            ])?;
        }
        t.flush()?;
        fs::write(dir.join("audit.txt"), &self.audit)?;
        for fig in &self.figures {
            fig.write_data(dir)?;
            if svg {
                fig.write_svg(dir)?;
            }
        }
        Ok(())
    }
}

pub(crate) fn relative_gap(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}
