use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use coordbound::dist::parse_rational;
use coordbound::{Threshold, TypicalitySpec};
use coordbound_cli::{run_point, run_sweep, table_delta, SweepConfig};
use num_traits::ToPrimitive;

#[derive(Parser)]
#[command(name = "coordbound", version, about = "Finite-blocklength rates for empirical coordination")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sweep n and write `n,Rapprox,R,I,d` rows as CSV.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        n_start: u64,
        #[arg(long)]
        n_end: u64,
        #[arg(long, default_value_t = 1)]
        n_step: u64,
        /// CSV destination; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Skip the exact optimal rate (the R column is left empty).
        #[arg(long)]
        no_exact: bool,
        /// Evaluate the non-asymptotic bound; results go to the diagnostics file.
        #[arg(long)]
        exact_bound: bool,
    },
    /// Print every quantity at a single blocklength.
    Point {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        n: u64,
    },
    /// Print δₙ = c·√(ln n / n) for a list of blocklengths.
    TableDelta {
        /// Convention constant, decimal or fraction.
        #[arg(long, default_value = "1/12")]
        c: String,
        #[arg(long, value_delimiter = ',', default_value = "10,20,40,100,200,400")]
        n_list: Vec<u64>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum DeltaMode {
    Fixed,
    Convention,
}

#[derive(Args)]
struct Common {
    /// Joint distribution (JSON).
    #[arg(long)]
    dist: PathBuf,
    /// Target error probability in (0,1).
    #[arg(long)]
    eps: f64,
    #[arg(long, value_enum, default_value = "convention")]
    delta_mode: DeltaMode,
    /// Threshold in fixed mode, decimal or fraction.
    #[arg(long)]
    delta: Option<String>,
    /// Constant in convention mode, decimal or fraction.
    #[arg(long, default_value = "1/12")]
    c: String,
    /// Cross-check the exact error at m* by simulation.
    #[arg(long)]
    mc_check: bool,
    #[arg(long, default_value_t = 10_000)]
    trials: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Λ cache file, read if present and rewritten afterwards.
    #[arg(long)]
    cache: Option<PathBuf>,
}

fn parse_positive(text: &str, what: &str) -> anyhow::Result<f64> {
    let value = parse_rational(text).with_context(|| format!("--{what}"))?;
    value.to_f64().with_context(|| format!("--{what} out of range"))
}

impl Common {
    fn config(&self, n_start: u64, n_end: u64, n_step: u64) -> anyhow::Result<SweepConfig> {
        let typicality = match self.delta_mode {
            DeltaMode::Fixed => {
                let Some(d) = &self.delta else { bail!("--delta is required with --delta-mode fixed") };
                TypicalitySpec::Fixed(Threshold::parse(d).context("--delta")?)
            }
            DeltaMode::Convention => TypicalitySpec::Convention { c: parse_positive(&self.c, "c")? },
        };
        Ok(SweepConfig {
            n_start,
            n_end,
            n_step,
            mc_check: self.mc_check,
            trials: self.trials,
            seed: self.seed,
            cache: self.cache.clone(),
            ..SweepConfig::new(&self.dist, self.eps, typicality, n_start)
        })
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Sweep { common, n_start, n_end, n_step, out, no_exact, exact_bound } => {
            let config = SweepConfig {
                out: out.clone(),
                exact_rate: !no_exact,
                exact_bound,
                ..common.config(n_start, n_end, n_step)?
            };
            let output = run_sweep(&config)?;
            if out.is_none() {
                print!("{}", output.csv);
                if let Some(d) = output.diagnostics {
                    eprint!("{d}");
                }
            }
        }
        Command::Point { common, n } => {
            let report = run_point(n, &common.config(n, n, 1)?)?;
            print!("{report}");
        }
        Command::TableDelta { c, n_list } => {
            print!("{}", table_delta(parse_positive(&c, "c")?, &n_list)?);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
