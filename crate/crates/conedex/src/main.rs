use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser};
use conedex::config::{ExperimentConfig, Format, ModelRef, WeightMode};
use conedex::dto::ThetaDto;
use conedex::{run, Command, RunError, RunReport, EXIT_CONFIG};

#[derive(Parser)]
#[command(name = "conedex", version, about = "Weighted index computations for radial Callias-type operators")]
struct Cli {
    #[arg(value_enum)]
    command: Command,
    #[command(flatten)]
    opts: Opts,
}

#[derive(Args)]
struct Opts {
    /// Model name (same as --model)
    #[arg(value_name = "MODEL")]
    model_pos: Option<String>,
    /// Built-in model name, RANDOM, or path to a JSON model
    #[arg(long)]
    model: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    alpha: Option<f64>,
    /// Comma-separated weights
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    alphas: Option<Vec<f64>>,
    /// Comma-separated deformation parameters in (0, 1)
    #[arg(long = "tau-list", value_delimiter = ',')]
    tau_list: Option<Vec<f64>>,
    #[arg(long)]
    grid_nodes: Option<usize>,
    #[arg(long)]
    grid_decades: Option<f64>,
    /// Required singular-value gap ratio
    #[arg(long)]
    tol_gap: Option<f64>,
    /// Skip the two audit grids
    #[arg(long)]
    no_refine: bool,
    #[arg(long, value_enum)]
    weights: Option<WeightMode>,
    /// Interpolating profile of the transition model
    #[arg(long, value_enum)]
    theta: Option<ThetaArg>,
    /// Largest |kappa| of the channel family
    #[arg(long)]
    kmax: Option<u32>,
    /// Strength c of the channel potential i c tanh(r)
    #[arg(long)]
    channel_c: Option<f64>,
    /// Report path; tables go next to it with a .csv extension
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Format written to stdout
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// JSON experiment config; command-line flags take precedence
    #[arg(long)]
    config: Option<PathBuf>,
    /// Record wall time in the report
    #[arg(long)]
    timing: bool,
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum ThetaArg {
    Rational,
    Tanh,
}

impl Opts {
    fn overrides(&self) -> Result<ExperimentConfig, RunError> {
        let model = match (&self.model_pos, &self.model) {
            (Some(a), Some(b)) if a != b => return Err(RunError::Config(format!("two models given: {a} and {b}"))),
            (a, b) => a.clone().or_else(|| b.clone()).map(ModelRef::Name),
        };
        Ok(ExperimentConfig {
            model,
            alpha: self.alpha,
            alphas: self.alphas.clone(),
            taus: self.tau_list.clone(),
            grid_nodes: self.grid_nodes,
            grid_decades: self.grid_decades,
            tol_gap: self.tol_gap,
            no_refine: self.no_refine,
            weights: self.weights,
            theta: self.theta.map(|t| match t {
                ThetaArg::Rational => ThetaDto::Rational,
                ThetaArg::Tanh => ThetaDto::Tanh,
            }),
            kmax: self.kmax,
            channel_c: self.channel_c,
            seed: self.seed,
            out: self.out.clone(),
            format: self.format,
        })
    }
}

fn csv_path(out: &Path) -> PathBuf {
    out.with_extension("csv")
}

fn emit(report: &RunReport, cfg: &ExperimentConfig) -> Result<(), RunError> {
    if let Some(out) = &cfg.out {
        std::fs::write(out, report.to_json())?;
        if let Some(t) = &report.table {
            let path = if out.extension().is_some_and(|e| e == "csv") { out.with_extension("table.csv") } else { csv_path(out) };
            std::fs::write(path, t.to_csv_string())?;
        }
    }
    match (cfg.format.unwrap_or_default(), &report.table) {
        (Format::Csv, Some(t)) => print!("{}", t.to_csv_string()),
        _ => print!("{}", report.to_json()),
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { 0 };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    let start = Instant::now();
    let outcome = (|| {
        let over = cli.opts.overrides()?;
        let cfg = match &cli.opts.config {
            Some(path) => ExperimentConfig::load(path)?.merge(over),
            None => over,
        };
        let mut report = run(cli.command, &cfg)?;
        if cli.opts.timing {
            report.wall_time_s = Some(start.elapsed().as_secs_f64());
        }
        emit(&report, &cfg)?;
        for c in report.checks.iter().filter(|c| !c.passed) {
            eprintln!("FAILED {}: {}", c.name, c.detail);
        }
        Ok::<i32, RunError>(report.exit_code())
    })();
    let code = match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("conedex: {e}");
            e.exit_code()
        }
    };
    eprintln!("{} finished in {:.2} s", cli.command.name(), start.elapsed().as_secs_f64());
    ExitCode::from(code as u8)
}
