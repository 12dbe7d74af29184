use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use consensus_lq::experiments::config::{
    parse_override, AnalyzeSettings, CayleySettings, EpsilonSweepSettings, ExperimentConfig,
    ExperimentKind, GeometricSettings, ValidateSettings,
};
use consensus_lq::experiments::{
    analyze_matrix, run_cayley_sweep, run_epsilon_sweep, run_geometric_sweep, run_validation_suite,
    RunOutput,
};
use consensus_lq::Error;

const EXIT_ERROR: u8 = 1;
const EXIT_VALIDATION: u8 = 2;

#[derive(Parser, Debug)]
#[command(
    name = "consensus-lq",
    version,
    about = "LQ cost of linear consensus and its effective-resistance bounds"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct Common {
    /// Master seed for randomized experiments.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// `key = value` config file.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Full-size node grids for the geometric experiment (config key `full_scale`).
    #[arg(long = "paper-scale", global = true)]
    full_scale: bool,
    /// Also render each figure as SVG.
    #[arg(long, global = true)]
    svg: bool,
    /// Override one config key; repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// J(P_eps) and both theorems' bounds over an epsilon grid.
    EpsilonSweep,
    /// Cayley matrices on the d-dimensional torus.
    Cayley,
    /// Random geometric consensus matrices.
    Geometric,
    /// Classify a matrix CSV and report J, J_w and all bounds.
    Analyze {
        /// Row-stochastic matrix, one row per line.
        path: PathBuf,
    },
    /// Cross-module property checks on random instances.
    Validate {
        /// Perturb every check so that it must fail.
        #[arg(long)]
        inject: bool,
    },
}

impl Command {
    fn kind(&self) -> ExperimentKind {
        match self {
            Command::EpsilonSweep => ExperimentKind::EpsilonSweep,
            Command::Cayley => ExperimentKind::Cayley,
            Command::Geometric => ExperimentKind::Geometric,
            Command::Analyze { .. } => ExperimentKind::Analyze,
            Command::Validate { .. } => ExperimentKind::Validate,
        }
    }
}

fn build_config(cli: &Cli) -> Result<ExperimentConfig, Error> {
    let kind = cli.command.kind();
    let text = match &cli.common.config {
        Some(path) => fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?,
        None => String::new(),
    };
    let overrides = cli
        .common
        .overrides
        .iter()
        .map(|s| parse_override(s))
        .collect::<Result<Vec<_>, _>>()?;
    let mut cfg = ExperimentConfig::from_text(kind, &text, &overrides)?;
    let c = &cli.common;
    if let Some(seed) = c.seed {
        match kind {
            ExperimentKind::EpsilonSweep | ExperimentKind::Analyze => {
                eprintln!("note: {kind} is deterministic; --seed ignored")
            }
            _ => cfg.set("seed", seed),
        }
    }
    if c.svg {
        match kind {
            ExperimentKind::Analyze | ExperimentKind::Validate => {
                eprintln!("note: {kind} draws no figures; --svg ignored")
            }
            _ => cfg.set("svg", true),
        }
    }
    if c.full_scale {
        match kind {
            ExperimentKind::Geometric => cfg.set("full_scale", true),
            _ => eprintln!("note: --paper-scale only changes the geometric grid"),
        }
    }
    if let Command::Validate { inject: true } = cli.command {
        cfg.set("inject", true);
    }
    Ok(cfg)
}

fn out_dir(cli: &Cli) -> PathBuf {
    cli.common
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from("out"))
}

fn finish_sweep(output: &RunOutput, dir: &Path, svg: bool) -> Result<(), Error> {
    output.write(dir, svg)?;
    println!(
        "{} rows written to {}",
        output.rows.len(),
        dir.join("results.csv").display()
    );
    print!("{}", output.audit);
    Ok(())
}

/// Returns the process exit code, or an error mapped by `main`.
fn run(cli: &Cli) -> Result<u8, Error> {
    let cfg = build_config(cli)?;
    match &cli.command {
        Command::EpsilonSweep => {
            let s = EpsilonSweepSettings::from_config(&cfg)?;
            finish_sweep(&run_epsilon_sweep(&s)?, &out_dir(cli), s.svg)?;
        }
        Command::Cayley => {
            let s = CayleySettings::from_config(&cfg)?;
            finish_sweep(&run_cayley_sweep(&s)?, &out_dir(cli), s.svg)?;
        }
        Command::Geometric => {
            let s = GeometricSettings::from_config(&cfg)?;
            let dir = out_dir(cli);
            let export = s.export_instances.then(|| dir.join("instances"));
            finish_sweep(&run_geometric_sweep(&s, export.as_deref())?, &dir, s.svg)?;
        }
        Command::Analyze { path } => {
            let s = AnalyzeSettings::from_config(&cfg)?;
            let report = analyze_matrix(path, &s)?;
            print!("{report}");
            if let Some(dir) = &cli.common.out {
                fs::create_dir_all(dir)?;
                fs::write(dir.join("analysis.txt"), report.to_string())?;
            }
        }
        Command::Validate { .. } => {
            let s = ValidateSettings::from_config(&cfg)?;
            let summary = run_validation_suite(&s)?;
            println!("{summary}");
            if let Some(dir) = &cli.common.out {
                fs::create_dir_all(dir)?;
                fs::write(dir.join("validation.txt"), format!("{summary}\n"))?;
            }
            if !summary.all_passed() {
                return Ok(EXIT_VALIDATION);
            }
        }
    }
    Ok(0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_validation() {
                EXIT_VALIDATION
            } else {
                EXIT_ERROR
            })
        }
    }
}
