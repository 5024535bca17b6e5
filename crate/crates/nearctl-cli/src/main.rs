//! `nearctl` - near-controllability analysis and control synthesis for
//! discrete-time bilinear systems `x(k+1) = (I + u(k) B) x(k)`.
//!
//! Exit codes: 0 verified success, 2 documented infeasibility, 3 invalid
//! input. Set `NEARCTL_LOG=debug` for solver diagnostics.

mod commands;
mod output;
mod problem;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::CmdError;

#[derive(Parser)]
#[command(name = "nearctl", version, about)]
struct Cli {
    /// Seed recorded in output records (reserved for seeded workflows; the
    /// pipeline itself is deterministic).
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Near-controllability verdict, index, and subspace enumeration.
    Analyze {
        #[arg(short = 'i', long = "input")]
        input: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Synthesize and verify a control sequence steering xi to eta.
    Steer {
        #[arg(short = 'i', long = "input")]
        input: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write the verified trajectory as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Enumerate nearly-controllable subspaces.
    Subspaces {
        #[arg(short = 'i', long = "input")]
        input: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Emit the root-locus table of the closed-loop polynomial as CSV.
    Locus {
        #[arg(short = 'i', long = "input")]
        input: PathBuf,
        #[arg(long = "K-min")]
        k_min: Option<f64>,
        #[arg(long = "K-max")]
        k_max: Option<f64>,
        #[arg(long, default_value_t = 50)]
        samples: usize,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Run the system under a control sequence and emit the trajectory CSV.
    Simulate {
        #[arg(short = 'i', long = "input")]
        input: PathBuf,
        /// JSON file: bare array of controls, a plan, or steer output.
        #[arg(long)]
        controls: PathBuf,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Compute an identity-return control loop for B's Jordan form.
    IdentityLoop {
        #[arg(short = 'i', long = "input")]
        input: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().filter_or("NEARCTL_LOG", "warn"))
        .init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(cli: Cli) -> Result<(), CmdError> {
    let load = |path: &PathBuf| {
        problem::load_problem(path).map_err(|e| CmdError::Invalid(format!("{e:#}")))
    };
    let seed = cli.seed;
    match &cli.command {
        Command::Analyze { input, out } => {
            let p = load(input)?;
            let seed = seed.or(p.file.options.seed);
            commands::cmd_analyze(&p, seed, out.as_deref())
        }
        Command::Steer { input, out, csv } => {
            let p = load(input)?;
            let seed = seed.or(p.file.options.seed);
            commands::cmd_steer(&p, seed, out.as_deref(), csv.as_deref())
        }
        Command::Subspaces { input, out } => {
            let p = load(input)?;
            let seed = seed.or(p.file.options.seed);
            commands::cmd_subspaces(&p, seed, out.as_deref())
        }
        Command::Locus { input, k_min, k_max, samples, csv } => {
            let p = load(input)?;
            commands::cmd_locus(&p, *k_min, *k_max, *samples, csv.as_deref())
        }
        Command::Simulate { input, controls, csv } => {
            let p = load(input)?;
            commands::cmd_simulate(&p, controls, csv.as_deref())
        }
        Command::IdentityLoop { input, out } => {
            let p = load(input)?;
            let seed = seed.or(p.file.options.seed);
            commands::cmd_identity_loop(&p, seed, out.as_deref())
        }
    }
}
