mod analyze;
mod config;
mod failure;
mod output;
mod simulate;
mod synth;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use config::RunConfig;
use failure::Outcome;

/// Mean curvature flow singular sets: simulate flows, analyse their
/// singular sets and check synthetic examples against known verdicts.
///
/// Exit codes: 0 success, 2 invalid input, 3 unresolved numerical run,
/// 4 verdict failure.
#[derive(Parser)]
#[command(name = "mcfsing", version)]
struct Cli {
    /// TOML configuration; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a flow and write its archive, events and traces.
    Simulate(SimulateArgs),
    /// Run one analysis on a flow archive.
    Analyze(AnalyzeArgs),
    /// Generate a synthetic point cloud.
    Synthetic(SynthArgs),
    /// Check a synthetic set against its known verdicts.
    Verify(SynthArgs),
    /// Run every analysis on a flow archive and write a summary.
    Report(ReportArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum FlowKind {
    /// Exact shrinking sphere.
    Sphere,
    /// Exact shrinking cylinder.
    Cylinder,
    /// Two bulbs joined by a neck (simulated).
    Dumbbell,
    /// Round sphere through the solver.
    Cap,
    /// Thin torus (simulated).
    Torus,
    /// Periodic cylinder through the graph solver.
    PeriodicCylinder,
}

impl FlowKind {
    pub fn parse(s: &str) -> Outcome<Self> {
        <Self as ValueEnum>::from_str(s, true)
            .map_err(|_| failure::Failure::Invalid(format!("unknown flow kind `{s}`")))
    }
}

#[derive(Args)]
pub struct SimulateArgs {
    #[arg(long, value_enum)]
    kind: Option<FlowKind>,
    /// Archive directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Initial radius (sphere, cylinder, cap).
    #[arg(long, allow_negative_numbers = true)]
    r0: Option<f64>,
    /// Euclidean factor of an exact cylinder.
    #[arg(long)]
    j: Option<usize>,
    #[arg(long)]
    half_length: Option<f64>,
    #[arg(long)]
    neck: Option<f64>,
    #[arg(long)]
    bulb: Option<f64>,
    /// Shift of the neck making the bulbs unequal.
    #[arg(long, allow_negative_numbers = true)]
    offset: Option<f64>,
    /// Period of the periodic cylinder.
    #[arg(long)]
    length: Option<f64>,
    #[arg(long)]
    center_radius: Option<f64>,
    #[arg(long)]
    tube: Option<f64>,
    /// Profile vertices.
    #[arg(long)]
    samples: Option<usize>,
    /// Stored slices of an exact flow.
    #[arg(long)]
    slices: Option<usize>,
    #[arg(long)]
    t_end: Option<f64>,
    #[arg(long)]
    h_max: Option<f64>,
    #[arg(long)]
    cfl: Option<f64>,
    #[arg(long)]
    pinch_ratio: Option<f64>,
    #[arg(long)]
    extinction_ratio: Option<f64>,
    /// Relative distance to a cylinder density accepted for classification.
    #[arg(long)]
    class_tolerance: Option<f64>,
    /// Largest extrapolation residual before a density is flagged.
    #[arg(long)]
    residual_threshold: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Which {
    Density,
    Monotonicity,
    Cylfit,
    Strata,
    Reifenberg,
    Cone,
    Clearing,
}

#[derive(Args)]
pub struct AnalyzeArgs {
    /// Flow archive directory.
    archive: PathBuf,
    #[arg(long, value_enum)]
    which: Which,
    /// Report directory (defaults to `<archive>/analysis`).
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    tol: Tolerances,
}

#[derive(Args, Clone, Default)]
pub struct Tolerances {
    /// Allowed decrease of F along the backward scales.
    #[arg(long)]
    tol: Option<f64>,
    /// Time spread accepted within a time-slice.
    #[arg(long)]
    time_tol: Option<f64>,
    /// Relative half-width of the density bands for strata.
    #[arg(long)]
    strata_tol: Option<f64>,
    /// Cylindricality level of the clearing constants.
    #[arg(long)]
    eta: Option<f64>,
    /// Gaussian-area level below which a point is certified empty.
    #[arg(long)]
    threshold: Option<f64>,
    #[arg(long)]
    tau_max: Option<f64>,
    #[arg(long)]
    tau_min: Option<f64>,
    #[arg(long)]
    tau_count: Option<usize>,
    /// Spatial centre for the monotonicity trace, comma separated.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    point: Option<Vec<f64>>,
    /// Time for the monotonicity trace.
    #[arg(long)]
    time: Option<f64>,
}

#[derive(Args)]
pub struct SynthArgs {
    /// figure1, four_points, three_sequences, koch, tilted_line,
    /// parabolic_cone_boundary or slice_disk.
    #[arg(long)]
    kind: Option<String>,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    count: Option<usize>,
    #[arg(long)]
    levels: Option<usize>,
    #[arg(long)]
    level: Option<usize>,
    #[arg(long, allow_negative_numbers = true)]
    slope: Option<f64>,
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long)]
    ambient: Option<usize>,
    /// Output file (cloud JSON for `synthetic`, verdict JSON for `verify`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write an SVG scatter plot.
    #[arg(long)]
    plot: Option<PathBuf>,
}

#[derive(Args)]
pub struct ReportArgs {
    archive: PathBuf,
    /// Report directory (defaults to `<archive>/report`).
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    tol: Tolerances,
}

fn run(cli: Cli) -> Outcome<()> {
    let cfg = RunConfig::load(cli.config.as_deref())?;
    match cli.command {
        Command::Simulate(a) => simulate::run(&a, &cfg),
        Command::Analyze(a) => analyze::run(&a, &cfg),
        Command::Synthetic(a) => synth::generate(&a, &cfg),
        Command::Verify(a) => synth::verify(&a, &cfg),
        Command::Report(a) => analyze::report(&a, &cfg),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(2)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("mcfsing: {f}");
            f.code()
        }
    }
}
