//! `mmwave`: plan mmWave base-station deployments from scenario files.
//!
//! Exit status: 0 on success, 1 on bad input (unreadable or invalid files,
//! bad flags), 2 when the scenario admits no deployment meeting its
//! guarantees. An infeasible run still writes its plan file.

mod commands;
mod manifest;
mod plan;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use mmwave_core::benchmarks::Scheme;
use mmwave_core::gen::SizeClass;
use mmwave_core::Overrides;

#[derive(Debug, Parser)]
#[command(
    name = "mmwave",
    version,
    about = "mmWave base-station deployment planner"
)]
struct Cli {
    #[command(flatten)]
    global: GlobalOpts,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct GlobalOpts {
    /// Cap on worker threads (default: one per core).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Override the outage tolerance of every region.
    #[arg(long, global = true)]
    zeta: Option<f64>,
    /// Override the access-blockage tolerance.
    #[arg(long, global = true)]
    gamma: Option<f64>,
    /// Override the number of RF chains per site.
    #[arg(long, global = true)]
    nrf: Option<u32>,
    /// Override the maximum link range in meters.
    #[arg(long, global = true)]
    rmax: Option<f64>,
    /// Record wall-clock durations in the artifacts (makes them differ
    /// between runs).
    #[arg(long, global = true)]
    timing: bool,
}

impl GlobalOpts {
    fn overrides(&self) -> Overrides {
        Overrides {
            zeta: self.zeta,
            gamma: self.gamma,
            n_rf: self.nrf,
            r_max: self.rmax,
        }
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic scenario.
    Gen {
        /// Size class: tiny, small or demo.
        #[arg(long, default_value = "small")]
        class: SizeClass,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Per-site coverage radius and load as CSV.
    Coverage {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Minimum-cost deployment meeting every outage guarantee.
    Optimize {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Plan with one of the comparison schemes (same output as optimize).
    Benchmark {
        #[arg(long)]
        scheme: Scheme,
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Average-RSS floor of ASSGP in dB.
        #[arg(long, default_value_t = -90.0, allow_negative_numbers = true)]
        rss_threshold: f64,
        /// Links required per grid by MDP and ASSGP.
        #[arg(long, default_value_t = 2)]
        min_diversity: usize,
    },
    /// Monte Carlo evaluation of a plan.
    Evaluate {
        #[arg(long)]
        plan: PathBuf,
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long, default_value_t = 50)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Place every UE at its grid center instead of uniformly.
        #[arg(long)]
        center: bool,
        /// Report path; CDF tables are written next to it.
        #[arg(long)]
        out: PathBuf,
    },
}

/// How a command that ran to completion ended.
pub enum Finish {
    Done,
    Infeasible,
}

fn init_logging() {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("MMWAVE_LOG", "warn"))
        .format_timestamp(None)
        .init();
}

fn main() -> ExitCode {
    // clap exits with 2 on usage errors, which is reserved for infeasible
    // scenarios here.
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    init_logging();
    if let Some(n) = cli.global.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
        {
            eprintln!("error: cannot start {n} worker threads: {e}");
            return ExitCode::from(1);
        }
    }
    match commands::run(cli.command, &cli.global) {
        Ok(Finish::Done) => ExitCode::SUCCESS,
        Ok(Finish::Infeasible) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
