//! Command-line front end: batch runs, parameter sweeps, episode traces, and
//! codebook dumps, all emitting deterministic CSV.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process;

use clap::{Args, Parser, Subcommand};

use beamtrack::codebook::build_codebook;
use beamtrack::config::{build_array, build_scenario, load_file, Overrides};
use beamtrack::sim::{
    run_episode, run_row, sweep, write_csv, write_trace, ScenarioConfig, SweepAxis,
};
use beamtrack::tracker::TrackerKind;
use beamtrack::Result;

#[derive(Parser)]
#[command(
    name = "beamtrack",
    version,
    about = "Monte Carlo link-level simulator for hierarchical beam tracking on a THz array"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one tracker over a batch of episodes and emit one CSV row
    Run(RunArgs),
    /// Vary one parameter and run one or more trackers at each value
    Sweep(SweepArgs),
    /// Replay a single episode and emit its per-slot trace
    Trace(TraceArgs),
    /// Emit every codeword of the hierarchical codebook
    DumpCodebook(ScenarioArgs),
}

#[derive(Args, Debug, Default)]
struct ScenarioArgs {
    /// TOML configuration file; flags override its values
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Array elements (a power of two)
    #[arg(long)]
    elements: Option<usize>,
    /// Pilot SNR in dB
    #[arg(long)]
    snr_db: Option<f64>,
    /// Distance-estimator error std in meters
    #[arg(long)]
    sigma_e: Option<f64>,
    /// Timeslots per walk step
    #[arg(long)]
    qi: Option<u32>,
    /// Monte Carlo episodes per configuration
    #[arg(long)]
    episodes: Option<usize>,
    /// Base RNG seed
    #[arg(long)]
    seed: Option<u64>,
    /// Per-level candidate counts, widest level first (comma separated)
    #[arg(long, value_delimiter = ',')]
    pilots_per_level: Option<Vec<usize>>,
    /// Levels refined below the starting level in each tracking slot
    #[arg(long)]
    refine_depth: Option<u32>,
    /// Disable measurement noise
    #[arg(long)]
    no_noise: bool,
    /// Use the full-scale episode count unless --episodes is given
    #[arg(long)]
    full_scale: bool,
    /// Output file (stdout when omitted)
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

impl ScenarioArgs {
    fn flag_layer(&self) -> Overrides {
        Overrides {
            elements: self.elements,
            snr_db: self.snr_db,
            sigma_e_m: self.sigma_e,
            qi: self.qi,
            episodes: self.episodes,
            seed: self.seed,
            pilots_per_level: self.pilots_per_level.clone(),
            refine_depth: self.refine_depth,
            no_noise: self.no_noise.then_some(true),
            full_scale: self.full_scale.then_some(true),
            out: self.out.clone(),
            ..Overrides::default()
        }
    }

    /// The file layer (when given) with the flag layer on top.
    fn merged(&self) -> Result<Overrides> {
        let file_layer = match &self.config {
            Some(path) => load_file(path)?.overrides(),
            None => Overrides::default(),
        };
        Ok(file_layer.overlay(self.flag_layer()))
    }

    /// Defaults, then the file, then the flags.
    fn resolve(&self) -> Result<(ScenarioConfig, Overrides)> {
        let merged = self.merged()?;
        let scenario = build_scenario(&merged)?;
        Ok((scenario, merged))
    }
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    /// Tracker to run: hierarchical, full-coverage, or single-level
    #[arg(long)]
    tracker: Option<String>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    /// Parameter to vary: sigma-e, qi, or pilots-per-level
    #[arg(long)]
    axis: String,
    /// Comma-separated axis values
    #[arg(long, value_delimiter = ',', required = true)]
    values: Vec<f64>,
    /// Comma-separated trackers to run at each value
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "hierarchical,full-coverage,single-level"
    )]
    trackers: Vec<String>,
}

#[derive(Args)]
struct TraceArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    /// Tracker to trace: hierarchical, full-coverage, or single-level
    #[arg(long)]
    tracker: Option<String>,
    /// Episode index to replay
    #[arg(long, default_value_t = 0)]
    episode: u64,
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = dispatch(cli.command) {
        eprintln!("error: {e}");
        process::exit(e.exit_code());
    }
}

fn dispatch(cmd: Command) -> Result<()> {
    match cmd {
        Command::Run(args) => cmd_run(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Trace(args) => cmd_trace(args),
        Command::DumpCodebook(args) => cmd_dump(args),
    }
}

fn pick_tracker(flag: Option<&str>, merged: &Overrides) -> Result<TrackerKind> {
    flag.or(merged.tracker.as_deref())
        .unwrap_or("hierarchical")
        .parse()
}

fn with_output(
    path: Option<&Path>,
    write: impl FnOnce(&mut dyn Write) -> io::Result<()>,
) -> Result<()> {
    match path {
        Some(path) => {
            let mut out = BufWriter::new(File::create(path)?);
            write(&mut out)?;
            out.flush()?;
        }
        None => {
            let stdout = io::stdout();
            let mut out = stdout.lock();
            write(&mut out)?;
        }
    }
    Ok(())
}

fn cmd_run(args: RunArgs) -> Result<()> {
    let (scenario, merged) = args.scenario.resolve()?;
    let kind = pick_tracker(args.tracker.as_deref(), &merged)?;
    let row = run_row(&scenario, kind)?;
    with_output(merged.out.as_deref(), |w| write_csv(w, &[row]))
}

fn cmd_sweep(args: SweepArgs) -> Result<()> {
    let (scenario, merged) = args.scenario.resolve()?;
    let axis: SweepAxis = args.axis.parse()?;
    let trackers: Vec<TrackerKind> = args
        .trackers
        .iter()
        .map(|s| s.parse())
        .collect::<Result<_>>()?;
    let rows = sweep(&scenario, axis, &args.values, &trackers)?;
    with_output(merged.out.as_deref(), |w| write_csv(w, &rows))
}

fn cmd_trace(args: TraceArgs) -> Result<()> {
    let (scenario, merged) = args.scenario.resolve()?;
    let kind = pick_tracker(args.tracker.as_deref(), &merged)?;
    let episode = run_episode(&scenario, kind, args.episode)?;
    with_output(merged.out.as_deref(), |w| {
        write_trace(w, &episode.slot_results)
    })
}

fn cmd_dump(args: ScenarioArgs) -> Result<()> {
    let merged = args.merged()?;
    let codebook = build_codebook(&build_array(&merged)?)?;
    with_output(merged.out.as_deref(), |w| codebook.write_dump(w))
}
