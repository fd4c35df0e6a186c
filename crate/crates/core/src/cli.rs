//! Command-line front end. [`run_cli`] is the whole program; `main` only
//! forwards `std::env::args` and the process streams.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use crate::algorithms::Variant;
use crate::error::Result;
use crate::experiment::{emit_results, run_experiment, stepsize_demo, ExperimentConfig, Horizon};
use crate::metrics::{steady_state_mse_limit, steady_state_mse_nlms, to_db, white_trace_term, TheoryInputs};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_RUNTIME: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "sparse-vss", version, about = "Sparse VSS-NLMS channel estimation experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Experiment config (key = value text or JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Master seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Monte-Carlo runs per scenario and algorithm.
    #[arg(long, global = true)]
    runs: Option<usize>,

    /// Output directory.
    #[arg(long, global = true, default_value = "results")]
    out: PathBuf,

    /// Comma-separated algorithm list, e.g. iss-za-nlms,vss-za-nlms.
    #[arg(long, global = true, value_delimiter = ',')]
    algorithms: Option<Vec<String>>,

    /// Projection smoothing factor.
    #[arg(long, global = true)]
    beta: Option<f64>,

    /// Run every trial to max_iterations (fixed) or stop on the delta tolerance.
    #[arg(long, global = true, value_enum)]
    horizon: Option<HorizonArg>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum HorizonArg {
    Fixed,
    Tolerance,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Average MSE learning curves for every (K, SNR) scenario.
    MseCurves,
    /// BER versus Es/N0 from the steady-state estimators of the BER scenario.
    BerSweep,
    /// Realized variable step size against estimation error (mu_max = 1).
    StepsizeDemo,
    /// Steady-state excess-MSE bound and its small-step limit.
    TheoryBounds {
        #[arg(long)]
        lambda_max: f64,
        #[arg(long)]
        noise_power: f64,
        #[arg(long)]
        mu: f64,
        /// Also evaluate the trace form for white input R = lambda_max I.
        #[arg(long)]
        n_taps: Option<usize>,
    },
    /// Parse and validate the config, then exit.
    ValidateConfig,
}

fn resolve_config(cli: &Cli) -> Result<ExperimentConfig> {
    let mut config = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = cli.seed {
        config.master_seed = seed;
    }
    if let Some(runs) = cli.runs {
        config.runs = runs;
    }
    if let Some(names) = &cli.algorithms {
        config.algorithms = names
            .iter()
            .map(|n| n.parse::<Variant>())
            .collect::<Result<Vec<_>>>()?;
    }
    if let Some(beta) = cli.beta {
        config.beta = beta;
    }
    if let Some(h) = cli.horizon {
        config.horizon = match h {
            HorizonArg::Fixed => Horizon::Fixed,
            HorizonArg::Tolerance => Horizon::Tolerance,
        };
    }
    config.validate()?;
    Ok(config)
}

fn theory_bounds(out: &mut dyn Write, lambda_max: f64, noise_power: f64, mu: f64, n_taps: Option<usize>) -> Result<()> {
    let inputs = TheoryInputs::new(lambda_max, noise_power, mu)?;
    let bound = steady_state_mse_nlms(&inputs)?.lower_bound;
    let limit = steady_state_mse_limit(lambda_max, noise_power);
    let _ = writeln!(out, "lambda_max = {lambda_max}");
    let _ = writeln!(out, "noise_power = {noise_power}");
    let _ = writeln!(out, "mu = {mu}");
    let _ = writeln!(out, "nlms_lower_bound = {bound}");
    let _ = writeln!(out, "small_step_limit = {limit}");
    if let Some(n) = n_taps {
        let trace = white_trace_term(n, lambda_max, mu);
        let _ = writeln!(out, "white_trace = {trace}");
        if trace < 2.0 {
            let _ = writeln!(out, "white_trace_form = {}", trace * noise_power / (2.0 - trace));
        } else {
            let _ = writeln!(out, "white_trace_form = out-of-regime");
        }
    }
    Ok(())
}

fn emit(out: &mut dyn Write, result: &crate::experiment::AggregateResult, config: &ExperimentConfig, dir: &Path) -> Result<()> {
    let files = emit_results(result, config, dir)?;
    let _ = writeln!(out, "wrote {} files to {}", files.len(), dir.display());
    Ok(())
}

fn execute(cli: &Cli, out: &mut dyn Write) -> Result<()> {
    match &cli.command {
        Command::TheoryBounds {
            lambda_max,
            noise_power,
            mu,
            n_taps,
        } => theory_bounds(out, *lambda_max, *noise_power, *mu, *n_taps),
        Command::ValidateConfig => {
            let c = resolve_config(cli)?;
            let _ = writeln!(
                out,
                "config ok: {} sparsity x {} SNR scenarios, {} algorithms, {} runs, {} iterations",
                c.sparsity_list.len(),
                c.snr_db_list.len(),
                c.algorithms.len(),
                c.runs,
                c.stop.max_iterations
            );
            Ok(())
        }
        Command::MseCurves => {
            let config = resolve_config(cli)?;
            let result = run_experiment(&config)?;
            for s in &result.scenarios {
                let _ = writeln!(out, "{}", s.scenario.label());
                for c in &s.curves {
                    let _ = writeln!(out, "  {:<14} steady-state {:8.3} dB", c.algorithm.name(), to_db(c.steady_state_mse));
                }
            }
            emit(out, &result, &config, &cli.out)
        }
        Command::BerSweep => {
            let mut config = resolve_config(cli)?;
            config.sparsity_list = vec![config.ber_sparsity];
            config.snr_db_list = vec![config.ber_snr_db];
            config.validate()?;
            let result = run_experiment(&config)?;
            let _ = writeln!(out, "{} BER rows over Es/N0 {:?} dB", result.ber.len(), config.es_n0_range_db);
            emit(out, &result, &config, &cli.out)
        }
        Command::StepsizeDemo => {
            let config = resolve_config(cli)?;
            let result = stepsize_demo(&config)?;
            emit(out, &result, &config, &cli.out)
        }
    }
}

/// Parses `args` (program name first) and runs the command.
/// Returns 0 on success, 1 for usage or config errors, 2 for runtime errors.
pub fn run_cli<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{}", e.render());
                    EXIT_OK
                }
                _ => {
                    let _ = write!(err, "{}", e.render());
                    EXIT_CONFIG
                }
            };
        }
    };
    match execute(&cli, out) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            if e.is_config_error() {
                EXIT_CONFIG
            } else {
                EXIT_RUNTIME
            }
        }
    }
}

