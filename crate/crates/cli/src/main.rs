use std::process::ExitCode;

use clap::{Parser, Subcommand};
use entdist_cli::commands::{self, CliError, Outcome};
use entdist_cli::sweep::{parse_grid, parse_quantities, ChannelTemplate, OutputFormat, Quantity, SweepSpec};

const CONSISTENCY_FAILURE: u8 = 3;

/// Bounds on EPR/GHZ distribution capacities of noisy quantum channels.
///
/// Channel specs look like `erasure:p=0.1,d=2`, `dephasing:p=0.2`,
/// `gadc:gamma=0.3,T=0.1`, `pauli:px=0.1,py=0,pz=0.1` or `identity:d=2`.
/// Set ENTDIST_THREADS to cap the number of worker threads.
#[derive(Parser, Debug)]
#[command(name = "entdist", version)]
struct Cli {
    /// Output encoding (default: json, csv for sweeps).
    #[arg(long, global = true, value_parser = ["csv", "json"])]
    format: Option<String>,
    /// Write the output here instead of stdout.
    #[arg(long, global = true)]
    out: Option<String>,
    /// Seed for the Monte Carlo simulations.
    #[arg(long, global = true, default_value_t = 1)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// EPR bounds for two channels, GHZ bounds for three or more.
    Bounds {
        #[arg(required = true, num_args = 2..)]
        channels: Vec<String>,
    },
    /// Sweep one parameter, marked `*`, over a grid, e.g. `gadc:gamma=*,T=0`.
    /// A single template is used for both channels.
    Sweep {
        /// Grid as start:stop:step.
        #[arg(long)]
        grid: String,
        /// Comma-separated columns: ic1, ic2, ir1, ir2, rains1, rains2,
        /// lower, upper, multirail, assisted, composition.
        #[arg(long)]
        quantities: Option<String>,
        #[arg(required = true, num_args = 1..=2)]
        templates: Vec<String>,
    },
    /// Monte Carlo runs of the distribution protocols.
    Simulate {
        #[command(subcommand)]
        protocol: Protocol,
    },
    /// Same as `simulate teleport-check`.
    TeleportCheck {
        channel: String,
        /// Number of random pure inputs.
        #[arg(long, default_value_t = 100)]
        n: usize,
    },
}

#[derive(Subcommand, Debug)]
enum Protocol {
    /// Flag-and-discard over two erasure channels.
    Erasure {
        #[arg(long)]
        p1: f64,
        #[arg(long)]
        p2: f64,
        #[arg(long, default_value_t = 2)]
        d: usize,
        #[arg(long, default_value_t = 100_000)]
        n: usize,
    },
    /// Multi-rail encoding over two generalized amplitude damping channels.
    Multirail {
        /// Damping on both sides, unless overridden per side.
        #[arg(long)]
        gamma: Option<f64>,
        #[arg(long)]
        gamma1: Option<f64>,
        #[arg(long)]
        gamma2: Option<f64>,
        /// Thermal parameter on both sides, unless overridden per side.
        #[arg(long, default_value_t = 0.0)]
        t: f64,
        #[arg(long)]
        t1: Option<f64>,
        #[arg(long)]
        t2: Option<f64>,
        #[arg(long, default_value_t = 3)]
        k: usize,
        /// Number of blocks.
        #[arg(long, default_value_t = 10_000)]
        n: usize,
    },
    /// Choi-state teleportation simulation against direct channel action.
    TeleportCheck {
        channel: String,
        #[arg(long, default_value_t = 100)]
        n: usize,
    },
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("ENTDIST_THREADS") else { return Ok(()) };
    let threads: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Parse(format!("ENTDIST_THREADS=`{raw}` is not a positive integer")))?;
    rayon::ThreadPoolBuilder::new().num_threads(threads).build_global().map_err(|e| CliError::Compute(e.to_string()))
}

fn output_format(flag: &Option<String>, default: OutputFormat) -> Result<OutputFormat, CliError> {
    match flag {
        Some(f) => f.parse().map_err(|e: entdist::Error| CliError::Parse(e.to_string())),
        None => Ok(default),
    }
}

fn damping(shared: Option<f64>, side: Option<f64>, name: &str) -> Result<f64, CliError> {
    side.or(shared).ok_or_else(|| CliError::Parse(format!("missing --{name} (or --gamma)")))
}

fn run(cli: &Cli) -> Result<Outcome, CliError> {
    let json = output_format(&cli.format, OutputFormat::Json);
    match &cli.command {
        Command::Bounds { channels } => commands::bounds(channels, json?),
        Command::Sweep { grid, quantities, templates } => {
            let parsed: Vec<ChannelTemplate> = templates
                .iter()
                .map(|t| t.parse().map_err(|e: entdist::Error| CliError::Parse(format!("{e} (in `{t}`)"))))
                .collect::<Result<_, _>>()?;
            let pair = [parsed[0].clone(), parsed.last().expect("at least one template").clone()];
            let outputs = match quantities {
                Some(q) => parse_quantities(q)?,
                None => Quantity::ALL.to_vec(),
            };
            let spec = SweepSpec {
                channel_templates: pair,
                grid: parse_grid(grid)?,
                outputs,
                output_path: cli.out.clone(),
                format: output_format(&cli.format, OutputFormat::Csv)?,
            };
            commands::sweep(&spec)
        }
        Command::Simulate { protocol } => match protocol {
            Protocol::Erasure { p1, p2, d, n } => commands::simulate_erasure(*p1, *p2, *d, *n, cli.seed, json?),
            Protocol::Multirail { gamma, gamma1, gamma2, t, t1, t2, k, n } => commands::simulate_rails(
                damping(*gamma, *gamma1, "gamma1")?,
                damping(*gamma, *gamma2, "gamma2")?,
                t1.unwrap_or(*t),
                t2.unwrap_or(*t),
                *k,
                *n,
                cli.seed,
                json?,
            ),
            Protocol::TeleportCheck { channel, n } => commands::teleport_check(channel, *n, cli.seed, json?),
        },
        Command::TeleportCheck { channel, n } => commands::teleport_check(channel, *n, cli.seed, json?),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let result = configure_threads().and_then(|()| {
        let outcome = run(&cli)?;
        commands::emit(cli.out.as_deref(), &outcome.output)?;
        Ok(outcome)
    });
    match result {
        Ok(outcome) => {
            eprintln!("{}", outcome.summary);
            if outcome.consistent {
                ExitCode::SUCCESS
            } else {
                eprintln!("consistency check failed");
                ExitCode::from(CONSISTENCY_FAILURE)
            }
        }
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
