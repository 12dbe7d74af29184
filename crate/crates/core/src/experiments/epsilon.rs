use std::fmt::Write as _;
use std::time::Instant;

use rayon::prelude::*;

use super::config::EpsilonSweepSettings;
use super::plot::{Figure, Panel, Series, Style};
use super::{relative_gap, ResultRow, RunOutput};
use crate::bounds::{theorem_resistance_bounds, theorem_topology_bounds};
use crate::error::Result;
use crate::graph_gen::p_epsilon;
use crate::lqcost::{lq_cost_exact, lq_cost_truncated};

fn row_for(eps: f64, settings: &EpsilonSweepSettings) -> Result<ResultRow> {
    let start = Instant::now();
    let p = p_epsilon(eps)?;
    let truncated = lq_cost_truncated(&p, settings.rule)?;
    let exact = lq_cost_exact(&p)?;
    let mut row = ResultRow::new("epsilon-sweep", 3, 0);
    row.param = Some(eps);
    row.seed = 0;
    row.j = truncated.j;
    row.j_w = truncated.j_weighted;
    row.j_method = truncated.method.to_string();
    row.j_exact = Some(exact.j);
    row.exact_discrepancy = Some(relative_gap(truncated.j, exact.j));
    row.set_bounds(&theorem_resistance_bounds(&p)?);
    row.set_bounds(&theorem_topology_bounds(&p)?);
    row.wall_time_s = start.elapsed().as_secs_f64();
    Ok(row)
}

/// `J(P_eps)` with both theorems' bounds over a log-spaced grid. The lower
/// columns are reported even where they are not certified.
pub fn run_epsilon_sweep(settings: &EpsilonSweepSettings) -> Result<RunOutput> {
    let mut rows = settings
        .grid()
        .par_iter()
        .map(|&eps| row_for(eps, settings))
        .collect::<Result<Vec<_>>>()?;
    rows.sort_by_key(ResultRow::sort_key);

    let series = |name: &str, f: &dyn Fn(&ResultRow) -> Option<f64>| {
        Series::new(
            name,
            Style::Line,
            rows.iter()
                .filter_map(|r| Some((r.param?, f(r)?)))
                .collect(),
        )
    };
    let j_exact = |r: &ResultRow| r.j_exact;
    let figure = Figure {
        name: "fig2".into(),
        panels: vec![
            Panel {
                title: "resistance theorem".into(),
                x_label: "eps".into(),
                y_label: "J".into(),
                log_x: true,
                log_y: true,
                series: vec![
                    series("J", &j_exact),
                    series("upper", &|r| r.resistance_j_upper),
                    series("lower", &|r| r.resistance_j_lower),
                ],
            },
            Panel {
                title: "topology theorem".into(),
                x_label: "eps".into(),
                y_label: "J".into(),
                log_x: true,
                log_y: true,
                series: vec![
                    series("J", &j_exact),
                    series("upper", &|r| r.topology_j_upper),
                    series("lower", &|r| r.topology_j_lower),
                ],
            },
        ],
    };

    let mut audit = String::new();
    let _ = writeln!(audit, "experiment = epsilon-sweep");
    let _ = writeln!(
        audit,
        "grid = {} log-spaced points in [{}, {}]",
        settings.points, settings.eps_min, settings.eps_max
    );
    let _ = writeln!(
        audit,
        "truncation = t_max {}, delta {:e} (absolute change), window {}",
        settings.rule.t_max, settings.rule.delta, settings.rule.window
    );
    let violated: Vec<f64> = rows
        .iter()
        .filter(|r| {
            r.resistance_j_lower
                .zip(r.j_exact)
                .is_some_and(|(l, j)| l > j)
        })
        .filter_map(|r| r.param)
        .collect();
    let _ = writeln!(
        audit,
        "uncertified resistance lower value exceeds J at {} of {} points{}",
        violated.len(),
        rows.len(),
        match (violated.first(), violated.last()) {
            (Some(a), Some(b)) => format!(" (eps in [{a}, {b}])"),
            _ => String::new(),
        }
    );
    let worst = rows
        .iter()
        .filter_map(|r| r.exact_discrepancy)
        .fold(0.0, f64::max);
    let _ = writeln!(audit, "max truncated/exact discrepancy = {worst:e}");

    Ok(RunOutput {
        rows,
        audit,
        figures: vec![figure],
    })
}
