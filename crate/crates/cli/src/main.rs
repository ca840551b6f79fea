//! `coarse-nw`: link levels, non-wandering diagrams and wandering
//! certificates from JSON system files.
//!
//! Exit codes: 0 success, 1 nothing found (`detect`) or violations
//! (`verify`), 2 invalid input, 3 resource limit.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

mod commands;

#[derive(Parser, Debug)]
#[command(name = "coarse-nw", version, about = "Coarse non-wandering analysis of sampled maps and semiflows")]
struct Cli {
    /// Worker threads for every parallel section (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Largest accepted grid.
    #[arg(long, global = true, default_value_t = coarse_nw::system::DEFAULT_MAX_SAMPLES)]
    max_samples: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Per-sample lambda and beta as CSV.
    Analyze {
        spec: PathBuf,
        /// CSV destination (standard output when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write every link level with its witness as CSV.
        #[arg(long)]
        matrix_out: Option<PathBuf>,
        /// Skip recomputing with the halved horizon.
        #[arg(long)]
        no_horizon_check: bool,
    },
    /// Filtration slices as JSON and optionally SVG.
    Diagram {
        spec: PathBuf,
        #[arg(long, default_value_t = 0.0)]
        eps_min: f64,
        #[arg(long, default_value_t = 1.0)]
        eps_max: f64,
        #[arg(long, default_value_t = 0.25)]
        eps_step: f64,
        /// JSON destination (standard output when omitted).
        #[arg(long)]
        json: Option<PathBuf>,
        #[arg(long)]
        svg: Option<PathBuf>,
        #[arg(long, default_value_t = 640)]
        width: u32,
        #[arg(long, default_value_t = 400)]
        height: u32,
        /// Include `eps = beta(x)` in negative slices.
        #[arg(long)]
        closed_boundary: bool,
        #[arg(long)]
        no_horizon_check: bool,
    },
    /// Wandering certificates (x, z, eps, gap).
    Detect {
        spec: PathBuf,
        /// Smallest reported gap (default 4h on grids).
        #[arg(long)]
        min_gap: Option<f64>,
        /// JSON destination.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Certificates printed and written; 0 for all.
        #[arg(long, default_value_t = 100)]
        limit: usize,
        #[arg(long)]
        no_horizon_check: bool,
    },
    /// Lemma suite over random finite instances.
    Verify {
        #[arg(long)]
        seeds: u64,
        #[arg(long, default_value_t = 0)]
        first_seed: u64,
        #[arg(long, default_value_t = 2)]
        min_size: usize,
        #[arg(long, default_value_t = 8)]
        max_size: usize,
        /// Directory for failing instances as system files.
        #[arg(long)]
        dump_failures: Option<PathBuf>,
        /// Plant a defect in the reduction side (harness self-test).
        #[arg(long, value_enum)]
        fault: Option<FaultArg>,
    },
    /// Print the default system file of a builtin.
    Template { builtin: String },
    /// List builtin systems.
    Builtins,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FaultArg {
    LambdaStrict,
    BetaClosed,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(k) = cli.threads {
        if k == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(k).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    match commands::run(cli.command, cli.max_samples) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(commands::exit_code(&e))
        }
    }
}
