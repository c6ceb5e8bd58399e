mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ssdse::analysis::{Axis, FunctionId, ScanSpec, DEFAULT_POINTS};
use ssdse::parallel::Execution;

use commands::{cmd_oracle, cmd_run, cmd_scan, emit, CliError, Outcome};
use config::{
    check_angle, oracle_config, parse_float, parse_list, ConfigError, KeyValues, OutputConfig,
    RunConfig,
};
use output::Format;

/// Sequential unsharp discrimination of two-qubit states.
#[derive(Parser)]
#[command(name = "ssdse", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Output file (overrides `output.path`); stdout if neither is set.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Output format (overrides `output.format` and the file extension).
    #[arg(long, global = true)]
    format: Option<Format>,

    /// Suppress the summary printed to stderr.
    #[arg(long, global = true)]
    quiet: bool,

    /// Evaluate scans and oracle samples on one thread.
    #[arg(long, global = true)]
    sequential: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Run the protocol and write one row per round.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
    /// Evaluate a scan function on a 3-D grid.
    Scan(ScanArgs),
    /// Cross-check closed forms against the brute-force simulator.
    Oracle {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Overrides `oracle.samples`.
        #[arg(long)]
        samples: Option<usize>,
        /// Overrides `seed`.
        #[arg(long)]
        seed: Option<u64>,
    },
}

#[derive(Args)]
struct ScanArgs {
    /// One of f, g, t, s, h, a, c, q.
    #[arg(long)]
    function: FunctionId,
    /// Only `output.path` and `output.format` are read from it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Theta range `lo:hi` in radians (`pi/N` accepted).
    #[arg(long)]
    theta: Option<String>,
    /// Range `lo:hi` for the previous round's sharpness.
    #[arg(long)]
    lambda_prev: Option<String>,
    /// Range `lo:hi` for this round's sharpness.
    #[arg(long)]
    lambda: Option<String>,
    /// Points per axis.
    #[arg(long, default_value_t = DEFAULT_POINTS)]
    points: usize,
    /// Round index, at least 2.
    #[arg(long, default_value_t = 2)]
    k: usize,
    /// Comma-separated sharpness values for rounds 1..k-2.
    #[arg(long)]
    prefix: Option<String>,
    /// Schmidt parameter used by `q`.
    #[arg(long)]
    mu: Option<f64>,
    /// Keep cells with non-increasing sharpness for h, a and c.
    #[arg(long)]
    all_cells: bool,
}

fn parse_range(key: &str, text: &str, points: usize, angle: bool) -> Result<Axis, ConfigError> {
    let (lo, hi) = text.split_once(':').ok_or_else(|| ConfigError::Invalid {
        key: key.into(),
        reason: format!("expected `lo:hi`, found `{text}`"),
    })?;
    let (mut lo, mut hi) = (parse_float(key, lo)?, parse_float(key, hi)?);
    if angle {
        lo = check_angle(key, lo)?;
        hi = check_angle(key, hi)?;
    }
    Ok(Axis::new(lo, hi, points))
}

fn scan_spec(args: &ScanArgs) -> Result<ScanSpec, ConfigError> {
    let mut spec = ScanSpec::default_for(args.function);
    let resize = |a: Axis| Axis::new(a.lo, a.hi, args.points);
    spec.theta = match &args.theta {
        Some(t) => parse_range("theta", t, args.points, true)?,
        None => resize(spec.theta),
    };
    spec.lambda_prev = match &args.lambda_prev {
        Some(t) => parse_range("lambda_prev", t, args.points, false)?,
        None => resize(spec.lambda_prev),
    };
    spec.lambda = match &args.lambda {
        Some(t) => parse_range("lambda", t, args.points, false)?,
        None => resize(spec.lambda),
    };
    spec.k = args.k;
    if let Some(p) = &args.prefix {
        spec.prefix = parse_list("prefix", p)?;
    }
    if let Some(mu) = args.mu {
        spec.mu = mu;
    }
    if args.all_cells {
        spec.increasing_only = false;
    }
    spec.validate()?;
    Ok(spec)
}

fn load(path: Option<&PathBuf>) -> Result<KeyValues, ConfigError> {
    path.map_or_else(|| Ok(KeyValues::default()), |p| KeyValues::load(p))
}

fn execute(cli: &Cli) -> Result<(Outcome, OutputConfig), CliError> {
    let execution = if cli.sequential {
        Execution::Sequential
    } else {
        Execution::Parallel
    };
    let (outcome, mut output) = match &cli.command {
        Command::Run { config } => {
            let run_config = RunConfig::from_keys(&KeyValues::load(config)?)?;
            (cmd_run(&run_config)?, run_config.output)
        }
        Command::Scan(args) => {
            let kv = load(args.config.as_ref())?;
            let output = OutputConfig::from_keys(&kv)?;
            (cmd_scan(&scan_spec(args)?, execution)?, output)
        }
        Command::Oracle {
            config,
            samples,
            seed,
        } => {
            let kv = load(config.as_ref())?;
            let output = OutputConfig::from_keys(&kv)?;
            let mut oc = oracle_config(&kv)?;
            if let Some(n) = samples {
                oc.samples = *n;
            }
            if let Some(s) = seed {
                oc.seed = *s;
            }
            oc.validate()?;
            (cmd_oracle(&oc, execution)?, output)
        }
    };
    if cli.out.is_some() {
        output.path = cli.out.clone();
    }
    if cli.format.is_some() {
        output.format = cli.format;
    }
    Ok((outcome, output))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = execute(&cli).and_then(|(outcome, output)| {
        emit(&outcome.document, &output)?;
        Ok(outcome)
    });
    match result {
        Ok(outcome) => {
            if let Some(status) = &outcome.status {
                eprintln!("{status}");
            }
            if !cli.quiet {
                eprint!("{}", outcome.document.summary_text());
            }
            ExitCode::from(outcome.exit)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
