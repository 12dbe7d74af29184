use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::time::Instant;

use rayon::prelude::*;

use super::config::CayleySettings;
use super::plot::{Figure, Panel, Series, Style};
use super::{derive_seed, relative_gap, ResultRow, RunOutput};
use crate::bounds::corollary_normal_bounds;
use crate::error::Result;
use crate::graph_gen::{cayley_case1_with_cap, cayley_case2};
use crate::lqcost::{lq_cost_exact, lq_cost_truncated};

fn row_for(settings: &CayleySettings, side: usize, instance: usize) -> Result<ResultRow> {
    let start = Instant::now();
    let seed = derive_seed(
        settings.seed,
        &[
            1,
            settings.case as u64,
            settings.d as u64,
            side as u64,
            instance as u64,
        ],
    );
    let p = if settings.case == 1 {
        cayley_case1_with_cap(
            side,
            settings.d,
            settings.p_min,
            settings.p_max,
            seed,
            settings.attempts,
        )?
        .1
    } else {
        cayley_case2(side, settings.d)?
    };
    let nodes = p.n();
    let truncated = lq_cost_truncated(&p, settings.rule)?;
    let mut row = ResultRow::new("cayley", nodes, settings.seed);
    row.param = Some(side as f64);
    row.d = Some(settings.d);
    row.instance = instance;
    row.seed = if settings.case == 1 { seed } else { 0 };
    row.j = truncated.j;
    row.j_w = truncated.j_weighted;
    row.j_method = truncated.method.to_string();
    if nodes <= settings.exact_max_nodes {
        let exact = lq_cost_exact(&p)?;
        row.j_exact = Some(exact.j);
        row.exact_discrepancy = Some(relative_gap(truncated.j, exact.j));
    }
    if settings.d == 2 {
        row.j_over_log = Some(truncated.j / (nodes as f64).ln());
    }
    row.set_bounds(&corollary_normal_bounds(&p)?);
    row.wall_time_s = start.elapsed().as_secs_f64();
    Ok(row)
}

/// Cayley matrices on `Z_n^d` for each side `n`: `J`, the average
/// resistance of the torus and the normal-matrix bounds.
pub fn run_cayley_sweep(settings: &CayleySettings) -> Result<RunOutput> {
    let tasks: Vec<(usize, usize)> = settings
        .sizes
        .iter()
        .flat_map(|&side| (0..settings.instances).map(move |k| (side, k)))
        .collect();
    let mut rows = tasks
        .par_iter()
        .map(|&(side, k)| row_for(settings, side, k))
        .collect::<Result<Vec<_>>>()?;
    rows.sort_by_key(ResultRow::sort_key);

    let mut by_side: BTreeMap<usize, Vec<&ResultRow>> = BTreeMap::new();
    for r in &rows {
        by_side
            .entry(r.param.unwrap_or(0.0) as usize)
            .or_default()
            .push(r);
    }
    let mean = |f: &dyn Fn(&ResultRow) -> f64| -> Vec<(f64, f64)> {
        by_side
            .iter()
            .map(|(&side, rs)| {
                (
                    side as f64,
                    rs.iter().map(|r| f(r)).sum::<f64>() / rs.len() as f64,
                )
            })
            .collect()
    };
    let scatter = |f: &dyn Fn(&ResultRow) -> Option<f64>| -> Vec<(f64, f64)> {
        rows.iter()
            .filter_map(|r| Some((r.param?, f(r)?)))
            .collect()
    };
    let j_mean = mean(&|r| r.j);
    let lower_mean = mean(&|r| r.normal_j_lower.unwrap_or(f64::NAN));
    let upper_mean = mean(&|r| r.normal_j_upper.unwrap_or(f64::NAN));

    let name = match (settings.case, settings.d) {
        (1, 2) => "fig5",
        (1, _) => "fig6",
        _ => "fig7",
    };
    let figure = Figure {
        name: name.into(),
        panels: vec![
            Panel {
                title: format!(
                    "case {}, d = {}: J and lower bound",
                    settings.case, settings.d
                ),
                x_label: "n".into(),
                y_label: "J".into(),
                log_x: false,
                log_y: false,
                series: vec![
                    Series::new("J", Style::Points, scatter(&|r| Some(r.j))),
                    Series::new("mean J", Style::Line, j_mean.clone()),
                    Series::new("mean lower", Style::Line, lower_mean.clone()),
                ],
            },
            Panel {
                title: format!(
                    "case {}, d = {}: with upper bound",
                    settings.case, settings.d
                ),
                x_label: "n".into(),
                y_label: "J".into(),
                log_x: false,
                log_y: true,
                series: vec![
                    Series::new("mean J", Style::Line, j_mean.clone()),
                    Series::new("mean lower", Style::Line, lower_mean),
                    Series::new("mean upper", Style::Line, upper_mean),
                ],
            },
        ],
    };

    let mut audit = String::new();
    let _ = writeln!(audit, "experiment = cayley");
    let _ = writeln!(audit, "master_seed = {}", settings.seed);
    let _ = writeln!(audit, "case = {}\nd = {}", settings.case, settings.d);
    if settings.case == 1 {
        let _ = writeln!(
            audit,
            "weight window = [{}, {}]",
            settings.p_min, settings.p_max
        );
    }
    for (side, mean_j) in &j_mean {
        let nodes = (*side as usize).pow(settings.d as u32);
        let _ = write!(audit, "side {side}: nodes {nodes}, mean J {mean_j}");
        if settings.d == 2 {
            let _ = write!(audit, ", mean J / ln(n^2) {}", mean_j / (nodes as f64).ln());
        }
        audit.push('\n');
    }
    if settings.d == 2 && j_mean.len() > 1 {
        let ratios: Vec<f64> = j_mean
            .iter()
            .map(|&(side, j)| j / (side * side).ln())
            .collect();
        let (lo, hi) = ratios
            .iter()
            .fold((f64::INFINITY, 0.0_f64), |(a, b), &x| (a.min(x), b.max(x)));
        let _ = writeln!(audit, "J / ln(n^2) band: [{lo}, {hi}], max/min {}", hi / lo);
    }

    Ok(RunOutput {
        rows,
        audit,
        figures: vec![figure],
    })
}
