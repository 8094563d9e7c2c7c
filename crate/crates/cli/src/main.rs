//! `codesign`: command-line front end for the co-design models.
//!
//! Exit status: 0 on success, 1 for usage errors (bad flags, unknown names,
//! unreadable input), 2 for domain errors (e.g. a body that cannot hover).

mod commands;
mod report;
mod scenario;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::report::Format;

/// Default catalog path when `--catalog` is not given.
pub const CATALOG_ENV: &str = "CODESIGN_CATALOG";

#[derive(Debug, Parser)]
#[command(
    name = "codesign",
    version,
    about = "Compute/airframe co-design analyses for micro aerial vehicles"
)]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Global {
    /// Catalog JSON; the built-in catalog is used when unset.
    #[arg(long, global = true, env = CATALOG_ENV)]
    pub catalog: Option<PathBuf>,
    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Table)]
    pub format: Format,
    /// Write outputs as files in this directory instead of stdout.
    #[arg(long, global = true)]
    pub out_dir: Option<PathBuf>,
    /// Simulation time step in seconds.
    #[arg(long, global = true)]
    pub dt: Option<f64>,
    /// Diagnostics on stderr; repeat for more.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SchedulingArg {
    /// One frame in flight: blind time equals latency.
    Seq,
    /// Stages overlap: blind time is the measured inverse throughput.
    Pipe,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ResponseArg {
    /// Ideal compute: the velocity bound depends on mass only.
    Zero,
    /// Each platform's measured response time.
    Platform,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MetricArg {
    Time,
    Energy,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CaseStudy {
    Knob,
    Offload,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// List catalog platforms and check their declared response times.
    Platforms,
    /// Safe velocity bound for a body and platform.
    Vmax {
        #[arg(long, default_value = "DJI-M100")]
        body: String,
        /// Platform name; all platforms when omitted.
        #[arg(long)]
        platform: Option<String>,
        #[arg(long, value_enum, default_value_t = SchedulingArg::Pipe)]
        scheduling: SchedulingArg,
    },
    /// Closed-form mission time and energy for every platform.
    Mission {
        /// Path length in meters.
        #[arg(long)]
        length: f64,
        /// Slow-down ratio v_max / v_avg.
        #[arg(long)]
        sdr: f64,
        #[arg(long, default_value = "DJI-M100")]
        body: String,
        /// Response time fed into the velocity bound.
        #[arg(long, value_enum, default_value_t = ResponseArg::Zero)]
        response: ResponseArg,
        /// `affine`, `parametric` or a catalog power model.
        #[arg(long, default_value = "affine")]
        power_model: String,
    },
    /// Time-stepped mission simulation.
    Simulate {
        /// Scenario file, or a bare mission file.
        #[arg(long)]
        mission: PathBuf,
        #[arg(long)]
        platform: Option<String>,
        /// `none`, `static:R` or `dynamic:outdoor=R,indoor=R`.
        #[arg(long)]
        knob: Option<String>,
        /// Offload planning: `speedup,rtt_s`.
        #[arg(long)]
        offload: Option<String>,
        /// Exclude the platform TDP when offloading.
        #[arg(long, requires = "offload")]
        remote_tdp_excluded: bool,
        /// Stage latencies `perception,planning,control` in seconds.
        #[arg(long)]
        timing: Option<String>,
        #[arg(long, value_enum)]
        scheduling: Option<SchedulingArg>,
        /// Emit the per-tick trace instead of the summary.
        #[arg(long)]
        trace: bool,
    },
    /// Design-space sweep over compute mass, power and response time.
    Dse {
        /// `mass=MIN:MAX:N,power=MIN:MAX:N,response=MIN:MAX:N`, or a JSON file.
        #[arg(long)]
        grid: String,
        /// Constraints JSON file.
        #[arg(long)]
        constraints: PathBuf,
        /// Fix one axis (`mass=0.4`) and emit the gradient over the other two.
        #[arg(long)]
        slice: Option<String>,
        #[arg(long, value_enum, default_value_t = MetricArg::Time)]
        metric: MetricArg,
        #[arg(long, default_value_t = 1000.0)]
        length: f64,
        #[arg(long, default_value_t = 4.0)]
        sdr: f64,
        #[arg(long, default_value = "DJI-M100")]
        body: String,
        #[arg(long, default_value = "affine")]
        power_model: String,
    },
    /// Cyber-physical interaction graph and its impact paths.
    Cig {
        /// One line per compute-to-metric impact path.
        #[arg(long)]
        paths: bool,
        /// Graph JSON; the default MAV graph when omitted.
        #[arg(long)]
        graph: Option<PathBuf>,
    },
    /// Bundled end-to-end scenarios.
    Casestudy {
        #[arg(value_enum)]
        which: CaseStudy,
        /// Replace the bundled scenario file.
        #[arg(long)]
        scenario: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if is_broken_pipe(&e) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(commands::exit_code(&e))
        }
    }
}

fn is_broken_pipe(e: &anyhow::Error) -> bool {
    e.chain().any(|c| {
        c.downcast_ref::<std::io::Error>()
            .is_some_and(|io| io.kind() == std::io::ErrorKind::BrokenPipe)
    })
}
