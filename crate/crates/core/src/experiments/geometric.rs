use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;

use super::config::GeometricSettings;
use super::plot::{Figure, Panel, Series, Style};
use super::{derive_seed, relative_gap, ResultRow, RunOutput};
use crate::bounds::{theorem_resistance_bounds, theorem_topology_bounds};
use crate::error::Result;
use crate::graph_gen::{sample_geometric, GeometricInstance};
use crate::io::{write_coordinates, write_edge_list, write_matrix_csv};
use crate::lqcost::{lq_cost_exact, lq_cost_truncated};

struct Done {
    row: ResultRow,
    instance: GeometricInstance,
}

fn run_instance(settings: &GeometricSettings, n: usize, k: usize) -> Result<Done> {
    let start = Instant::now();
    let seed = derive_seed(settings.seed, &[2, settings.d as u64, n as u64, k as u64]);
    let instance = sample_geometric(&settings.params, n, settings.d, seed)?;
    let p = &instance.matrix;
    let truncated = lq_cost_truncated(p, settings.rule)?;
    let mut row = ResultRow::new("geometric", n, settings.seed);
    row.d = Some(settings.d);
    row.instance = k;
    row.seed = seed;
    row.j = truncated.j;
    row.j_w = truncated.j_weighted;
    row.j_method = truncated.method.to_string();
    if n <= settings.exact_max_nodes {
        let exact = lq_cost_exact(p)?;
        row.j_exact = Some(exact.j);
        row.exact_discrepancy = Some(relative_gap(truncated.j, exact.j));
    }
    if settings.d == 2 {
        row.j_over_log = Some(truncated.j / (n as f64).ln());
    }
    row.set_bounds(&theorem_resistance_bounds(p)?);
    row.set_bounds(&theorem_topology_bounds(p)?);
    row.wall_time_s = start.elapsed().as_secs_f64();
    Ok(Done { row, instance })
}

fn export(dir: &Path, done: &Done) -> Result<()> {
    let inst = &done.instance;
    let stem = format!("d{}_n{}_i{}", inst.d, inst.n, done.row.instance);
    write_coordinates(
        &dir.join(format!("{stem}_coordinates.csv")),
        &inst.coordinates,
    )?;
    write_edge_list(&dir.join(format!("{stem}_edges.csv")), &inst.edges)?;
    write_matrix_csv(
        &dir.join(format!("{stem}_matrix.csv")),
        inst.matrix.entries(),
    )?;
    fs::write(
        dir.join(format!("{stem}_audit.txt")),
        inst.audit.to_key_value(),
    )?;
    Ok(())
}

/// Random geometric instances per node count: truncated `J` (with an exact
/// cross-check on small instances) and both theorems' bounds. Generator
/// failures are recorded in the audit and skipped. With `export_dir`, each
/// accepted instance is also written out.
pub fn run_geometric_sweep(
    settings: &GeometricSettings,
    export_dir: Option<&Path>,
) -> Result<RunOutput> {
    let tasks: Vec<(usize, usize)> = settings
        .sizes
        .iter()
        .flat_map(|&n| (0..settings.instances).map(move |k| (n, k)))
        .collect();
    let results: Vec<((usize, usize), Result<Done>)> = tasks
        .par_iter()
        .map(|&(n, k)| ((n, k), run_instance(settings, n, k)))
        .collect();

    let mut audit = String::new();
    let _ = writeln!(audit, "experiment = geometric");
    let _ = writeln!(audit, "master_seed = {}", settings.seed);
    let _ = writeln!(audit, "d = {}", settings.d);
    let _ = writeln!(
        audit,
        "scale = {}",
        if settings.full_scale { "full" } else { "desk" }
    );
    let p = &settings.params;
    let _ = writeln!(
        audit,
        "params: s {} r {} gamma {} rho {} p_e {} p_d {} c {} b {} pi_bar [{}, {}]",
        p.s, p.r, p.gamma, p.rho, p.p_e, p.p_d, p.c, p.b, p.pi_bar_min, p.pi_bar_max
    );
    let _ = writeln!(
        audit,
        "pi range check = {}",
        if p.literal_pi_check {
            "literal (n pi_max > pi_bar_min)"
        } else {
            "symmetric (n pi_max > pi_bar_max)"
        }
    );

    let mut rows = Vec::new();
    let mut failures = 0usize;
    for ((n, k), result) in results {
        match result {
            Ok(done) => {
                let a = &done.instance.audit;
                let m = &done.instance.measured;
                let _ = writeln!(
                    audit,
                    "n {n} instance {k}: attempts {} rejected_nodes {} disconnected {} gamma_failed {} \
                     rho_failed {} not_irreducible {} pi_range_failed {} | s_n {:.4} r_n {:.4} rho_n {:.4}",
                    a.attempts,
                    a.rejected_nodes,
                    a.disconnected,
                    a.gamma_failed,
                    a.rho_failed,
                    a.not_irreducible,
                    a.pi_range_failed,
                    m.s_n,
                    m.r_n,
                    m.rho_n
                );
                if let Some(dir) = export_dir {
                    fs::create_dir_all(dir)?;
                    export(dir, &done)?;
                }
                rows.push(done.row);
            }
            Err(e) => {
                failures += 1;
                let _ = writeln!(audit, "n {n} instance {k}: skipped: {e}");
            }
        }
    }
    let _ = writeln!(audit, "accepted = {}\nskipped = {failures}", rows.len());
    rows.sort_by_key(ResultRow::sort_key);

    let value = |r: &ResultRow| {
        if settings.d == 2 {
            r.j_over_log.unwrap_or(r.j)
        } else {
            r.j
        }
    };
    let mut by_n: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    for r in &rows {
        by_n.entry(r.n).or_default().push(value(r));
    }
    let means: Vec<(f64, f64)> = by_n
        .iter()
        .map(|(&n, v)| (n as f64, v.iter().sum::<f64>() / v.len() as f64))
        .collect();
    let y_label = if settings.d == 2 { "J / ln n" } else { "J" };
    let figure = Figure {
        name: "fig8".into(),
        panels: vec![Panel {
            title: format!("geometric graphs, d = {}", settings.d),
            x_label: "n".into(),
            y_label: y_label.into(),
            log_x: false,
            log_y: false,
            series: vec![
                Series::new(
                    y_label,
                    Style::Points,
                    rows.iter().map(|r| (r.n as f64, value(r))).collect(),
                ),
                Series::new("mean", Style::Line, means),
            ],
        }],
    };

    Ok(RunOutput {
        rows,
        audit,
        figures: vec![figure],
    })
}
