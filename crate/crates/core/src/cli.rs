//! Command-line front end. Exit codes: 0 success, 1 domain error
//! (missing file, malformed document, interface mismatch, ...), 2 usage error.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::bench::{benchmark, sparse_workload, EngineKind, Workload, CSV_HEADER};
use crate::builders::{build_comparator, build_gate, ComparatorSpec, GateKind, TieBreak};
use crate::cartpole::{run_episode_traced, CartPoleState, EpisodeConfig, StartDistribution};
use crate::engine::RecordMode;
use crate::evolve::{evolve_with_progress, history_csv, test_generalization, EvolutionConfig, Genome, Variant};
use crate::io::{read_network, read_schedule, to_dot, write_network, write_raster, IoError};
use crate::model::Network;
use crate::optimizer::{simplify, ExternalSpikes, Pass, SimplifyConfig};
use crate::workload::InputModel;

#[derive(Parser, Debug)]
#[command(name = "risp", version, about = "RISP spiking network simulator, simplifier and cart-pole trainer")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Simulate a network on a spike schedule and print the raster.
    Sim(SimArgs),
    /// Apply simplification passes and check equivalence.
    Simplify(SimplifyArgs),
    /// Print a network as Graphviz dot.
    Viz(VizArgs),
    /// Emit a logic-gate network.
    Gates(GatesArgs),
    /// Emit a spike-count comparator network.
    Comparator(ComparatorArgs),
    /// Run one cart-pole episode.
    Episode(EpisodeArgs),
    /// Train a cart-pole controller with the genetic algorithm.
    Train(TrainArgs),
    /// Measure a controller's mean balancing time over seeded starts.
    Test(TestArgs),
    /// Measure simulation throughput.
    Bench(BenchArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum EngineArg {
    Ref,
    Event,
}

impl From<EngineArg> for EngineKind {
    fn from(e: EngineArg) -> Self {
        match e {
            EngineArg::Ref => EngineKind::Reference,
            EngineArg::Event => EngineKind::EventDriven,
        }
    }
}

#[derive(Args, Debug)]
pub struct SimArgs {
    /// Network document (JSON).
    #[arg(long)]
    pub network: PathBuf,
    /// Schedule file of `apply <neuron> <timestep> <value>` lines.
    #[arg(long)]
    pub schedule: PathBuf,
    /// Number of timesteps to simulate.
    #[arg(long)]
    pub horizon: u64,
    /// Record every neuron instead of outputs only.
    #[arg(long)]
    pub all_neurons: bool,
    #[arg(long, value_enum, default_value = "event")]
    pub engine: EngineArg,
    /// Write the raster here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SimplifyArgs {
    #[arg(long)]
    pub network: PathBuf,
    /// Where to write the simplified network.
    #[arg(long)]
    pub out: PathBuf,
    /// Comma-separated passes: prune, passthrough, normalize.
    #[arg(long, value_delimiter = ',', default_value = "prune,passthrough,normalize")]
    pub passes: Vec<Pass>,
    /// Random equivalence trials.
    #[arg(long, default_value_t = 100)]
    pub trials: usize,
    /// Timesteps per equivalence trial.
    #[arg(long, default_value_t = 200)]
    pub horizon: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Do not assume external spikes have unit value.
    #[arg(long)]
    pub arbitrary_inputs: bool,
}

#[derive(Args, Debug)]
pub struct VizArgs {
    #[arg(long)]
    pub network: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum GateArg {
    And,
    Or,
    Xor,
}

#[derive(Args, Debug)]
pub struct GatesArgs {
    #[arg(long, value_enum)]
    pub kind: GateArg,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum TieBreakArg {
    None,
    X,
    Y,
}

#[derive(Args, Debug)]
pub struct ComparatorArgs {
    /// Counting interval in timesteps (at least 1).
    #[arg(long)]
    pub t: u64,
    #[arg(long, value_enum, default_value = "none")]
    pub tie_break: TieBreakArg,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
pub struct EpisodeOptions {
    /// Intervals per episode (0.02 s each).
    #[arg(long, default_value_t = 15_000)]
    pub max_intervals: u32,
    /// Engine timesteps per interval.
    #[arg(long, default_value_t = 50)]
    pub steps_per_interval: u32,
    /// Clear engine state at the start of every interval.
    #[arg(long)]
    pub reset_engine: bool,
}

impl EpisodeOptions {
    fn config(&self) -> EpisodeConfig {
        EpisodeConfig {
            max_intervals: self.max_intervals,
            steps_per_interval: self.steps_per_interval,
            reset_engine_between_intervals: self.reset_engine,
            ..Default::default()
        }
    }
}

#[derive(Args, Debug)]
pub struct EpisodeArgs {
    #[arg(long)]
    pub network: PathBuf,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub x: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub dx: f64,
    /// Pole angle in radians.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub theta: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub dtheta: f64,
    #[command(flatten)]
    pub episode: EpisodeOptions,
    /// Per-interval CSV trace.
    #[arg(long)]
    pub trace: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum VariantArg {
    #[value(name = "risp-a")]
    RispA,
    #[value(name = "risp-d")]
    RispD,
    #[value(name = "risp-a-l")]
    RispAL,
    #[value(name = "risp-d-l")]
    RispDL,
}

impl From<VariantArg> for Variant {
    fn from(v: VariantArg) -> Self {
        match v {
            VariantArg::RispA => Variant::RispA,
            VariantArg::RispD => Variant::RispD,
            VariantArg::RispAL => Variant::RispAL,
            VariantArg::RispDL => Variant::RispDL,
        }
    }
}

#[derive(Args, Debug)]
pub struct TrainArgs {
    #[arg(long, value_enum)]
    pub variant: VariantArg,
    #[arg(long, default_value_t = 100)]
    pub population: usize,
    #[arg(long, default_value_t = 150)]
    pub epochs: usize,
    #[arg(long)]
    pub seed: u64,
    /// Training episodes per fitness evaluation.
    #[arg(long, default_value_t = 10)]
    pub episodes: usize,
    /// Use 500 genomes and 100 epochs, overriding --population and --epochs.
    #[arg(long)]
    pub full_scale: bool,
    /// Best network document.
    #[arg(long)]
    pub out: PathBuf,
    /// Per-epoch history CSV.
    #[arg(long)]
    pub history: PathBuf,
    /// Add a wall-time column to the history (makes it run-dependent).
    #[arg(long)]
    pub wall_time: bool,
    /// Evaluation threads (default: machine parallelism).
    #[arg(long)]
    pub workers: Option<usize>,
    /// Print per-epoch progress to stderr.
    #[arg(long)]
    pub verbose: bool,
    #[command(flatten)]
    pub episode: EpisodeOptions,
}

#[derive(Args, Debug)]
pub struct TestArgs {
    #[arg(long)]
    pub network: PathBuf,
    #[arg(long, default_value_t = 100)]
    pub tests: usize,
    #[arg(long)]
    pub seed: u64,
    #[command(flatten)]
    pub episode: EpisodeOptions,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum BenchEngineArg {
    Ref,
    Event,
    Both,
}

#[derive(Args, Debug)]
pub struct BenchArgs {
    /// Network to drive; a random sparse network is generated if omitted.
    #[arg(long)]
    pub network: Option<PathBuf>,
    /// Size of the generated network.
    #[arg(long, default_value_t = 200)]
    pub neurons: usize,
    #[arg(long, default_value_t = 2000)]
    pub horizon: u64,
    /// Per-input, per-timestep spike probability.
    #[arg(long, default_value_t = 0.1)]
    pub probability: f64,
    #[arg(long, value_enum, default_value = "both")]
    pub engine: BenchEngineArg,
    #[arg(long, default_value_t = 5)]
    pub repetitions: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Also write the reports as CSV.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("cannot write {path}: {source}")]
    Write { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Document { path: PathBuf, source: IoError },
    #[error("{0}")]
    Domain(String),
    #[error("{0}")]
    Usage(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            _ => 1,
        }
    }
}

fn read_text(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|source| CliError::Read {
        path: path.to_owned(),
        source,
    })
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|source| CliError::Write {
        path: path.to_owned(),
        source,
    })
}

fn load_network(path: &Path) -> Result<Network, CliError> {
    read_network(&read_text(path)?).map_err(|source| CliError::Document {
        path: path.to_owned(),
        source,
    })
}

fn emit(out: &mut dyn Write, path: Option<&Path>, text: &str) -> Result<(), CliError> {
    match path {
        Some(p) => write_text(p, text),
        None => out.write_all(text.as_bytes()).map_err(|source| CliError::Write {
            path: PathBuf::from("<stdout>"),
            source,
        }),
    }
}

fn say(out: &mut dyn Write, text: &str) -> Result<(), CliError> {
    emit(out, None, text)
}

/// Parses `args` (including the program name) and runs the command.
/// Returns the process exit code.
pub fn run_cli<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let text = e.render().to_string();
            if code == 0 {
                let _ = out.write_all(text.as_bytes());
            } else {
                let _ = err.write_all(text.as_bytes());
            }
            return code;
        }
    };
    match dispatch(cli.command, out, err) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

pub fn dispatch(cmd: Command, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), CliError> {
    match cmd {
        Command::Sim(a) => sim(a, out),
        Command::Simplify(a) => simplify_cmd(a, out),
        Command::Viz(a) => {
            let net = load_network(&a.network)?;
            emit(out, a.out.as_deref(), &to_dot(&net))
        }
        Command::Gates(a) => {
            let kind = match a.kind {
                GateArg::And => GateKind::And,
                GateArg::Or => GateKind::Or,
                GateArg::Xor => GateKind::Xor,
            };
            emit(out, a.out.as_deref(), &write_network(&build_gate(kind).network))
        }
        Command::Comparator(a) => {
            let tie_break = match a.tie_break {
                TieBreakArg::None => TieBreak::None,
                TieBreakArg::X => TieBreak::FavorX,
                TieBreakArg::Y => TieBreak::FavorY,
            };
            let c = build_comparator(ComparatorSpec { t: a.t, tie_break })
                .map_err(|e| CliError::Usage(e.to_string()))?;
            emit(out, a.out.as_deref(), &write_network(&c.network))
        }
        Command::Episode(a) => episode(a, out),
        Command::Train(a) => train(a, out, err),
        Command::Test(a) => test(a, out),
        Command::Bench(a) => bench(a, out),
    }
}

fn sim(a: SimArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let net = load_network(&a.network)?;
    let sched = read_schedule(&read_text(&a.schedule)?, &net).map_err(|source| CliError::Document {
        path: a.schedule.clone(),
        source,
    })?;
    let record = if a.all_neurons {
        RecordMode::AllNeurons
    } else {
        RecordMode::OutputsOnly
    };
    let (raster, _) = EngineKind::from(a.engine)
        .run(&net, &sched, a.horizon, record)
        .map_err(|e| CliError::Domain(e.to_string()))?;
    emit(out, a.out.as_deref(), &write_raster(&raster, &net))
}

fn simplify_cmd(a: SimplifyArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let net = load_network(&a.network)?;
    let cfg = SimplifyConfig {
        passes: a.passes,
        external: if a.arbitrary_inputs {
            ExternalSpikes::Arbitrary
        } else {
            ExternalSpikes::Unit
        },
        trials: a.trials,
        horizon: a.horizon,
        seed: a.seed,
        ..Default::default()
    };
    let (simplified, report, verdict) = simplify(&net, &cfg);
    write_text(&a.out, &write_network(&simplified))?;
    say(
        out,
        &format!(
            "neurons: {} -> {}\nsynapses: {} -> {}\n{report}{verdict}",
            net.neuron_count(),
            simplified.neuron_count(),
            net.synapse_count(),
            simplified.synapse_count()
        ),
    )?;
    if verdict.equivalent {
        Ok(())
    } else {
        Err(CliError::Domain(
            "simplified network is not equivalent; original written unchanged".into(),
        ))
    }
}

fn finite_start(x: f64, dx: f64, theta: f64, dtheta: f64) -> Result<CartPoleState, CliError> {
    if [x, dx, theta, dtheta].iter().all(|v| v.is_finite()) {
        Ok(CartPoleState::new(x, dx, theta, dtheta))
    } else {
        Err(CliError::Usage("start state must be finite".into()))
    }
}

fn check_episode(o: &EpisodeOptions) -> Result<(), CliError> {
    if o.steps_per_interval == 0 {
        return Err(CliError::Usage("--steps-per-interval must be at least 1".into()));
    }
    Ok(())
}

fn episode(a: EpisodeArgs, out: &mut dyn Write) -> Result<(), CliError> {
    check_episode(&a.episode)?;
    let net = load_network(&a.network)?;
    let cfg = a.episode.config();
    let start = finite_start(a.x, a.dx, a.theta, a.dtheta)?;
    let (survived, trace) =
        run_episode_traced(&net, start, &cfg).map_err(|e| CliError::Domain(e.to_string()))?;
    if let Some(path) = &a.trace {
        let mut csv = String::from("interval,x,theta,action,left_count,right_count\n");
        for t in &trace {
            let action = match t.action {
                crate::cartpole::Action::Left => "left",
                crate::cartpole::Action::Right => "right",
            };
            csv.push_str(&format!(
                "{},{},{},{action},{},{}\n",
                t.interval, t.x, t.theta, t.left_count, t.right_count
            ));
        }
        write_text(path, &csv)?;
    }
    say(
        out,
        &format!(
            "survived_intervals: {survived}\nseconds: {:.2}\n",
            cfg.seconds(survived as f64)
        ),
    )
}

fn train(a: TrainArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), CliError> {
    check_episode(&a.episode)?;
    let base = if a.full_scale {
        EvolutionConfig::full_scale()
    } else {
        EvolutionConfig {
            population: a.population,
            epochs: a.epochs,
            ..Default::default()
        }
    };
    let cfg = EvolutionConfig {
        seed: a.seed,
        episodes_per_eval: a.episodes,
        workers: a.workers,
        episode: a.episode.config(),
        ..base
    };
    cfg.check().map_err(|e| CliError::Usage(e.to_string()))?;
    let variant = Variant::from(a.variant);
    let verbose = a.verbose;
    let result = evolve_with_progress(variant, &cfg, |s| {
        if verbose {
            let _ = writeln!(err, "epoch {} best {} mean {:.1}", s.epoch, s.best, s.mean);
        }
    })
    .map_err(|e| CliError::Domain(e.to_string()))?;
    write_text(&a.out, &write_network(&result.best.network))?;
    write_text(&a.history, &history_csv(&result.history, a.wall_time))?;
    let ept = result
        .epochs_to_perfect
        .map_or_else(|| "none".to_owned(), |e| e.to_string());
    say(
        out,
        &format!(
            "variant: {variant}\nepochs_run: {}\nbest_fitness: {}\nperfect_fitness: {}\nepochs_to_perfect: {ept}\nneurons: {}\nsynapses: {}\n",
            result.history.len(),
            result.best_fitness.total(),
            result.perfect_fitness,
            result.best.network.neuron_count(),
            result.best.network.synapse_count()
        ),
    )
}

fn test(a: TestArgs, out: &mut dyn Write) -> Result<(), CliError> {
    check_episode(&a.episode)?;
    let net = load_network(&a.network)?;
    let cfg = a.episode.config();
    let genome = Genome { network: net };
    let mean = test_generalization(&genome, a.tests, a.seed, &cfg, &StartDistribution::default())
        .map_err(|e| CliError::Domain(e.to_string()))?;
    say(out, &format!("tests: {}\nmean_seconds: {mean:.2}\n", a.tests))
}

fn bench(a: BenchArgs, out: &mut dyn Write) -> Result<(), CliError> {
    if !(0.0..=1.0).contains(&a.probability) {
        return Err(CliError::Usage("--probability must lie in [0, 1]".into()));
    }
    let input_model = InputModel {
        probability: a.probability,
        value: 1.0,
    };
    let (net, workload) = match &a.network {
        Some(p) => (
            load_network(p)?,
            Workload {
                input_model,
                horizon: a.horizon,
                seed: a.seed,
            },
        ),
        None => {
            let (net, mut w) = sparse_workload(a.neurons.max(1), a.horizon, a.seed);
            w.input_model = input_model;
            (net, w)
        }
    };
    let engines: &[EngineKind] = match a.engine {
        BenchEngineArg::Ref => &[EngineKind::Reference],
        BenchEngineArg::Event => &[EngineKind::EventDriven],
        BenchEngineArg::Both => &EngineKind::ALL,
    };
    let mut reports = Vec::new();
    for &kind in engines {
        let r = benchmark(&net, &workload, kind, a.repetitions)
            .map_err(|e| CliError::Domain(e.to_string()))?;
        say(out, &format!("{r}\n"))?;
        reports.push(r);
    }
    if reports.len() == 2 {
        say(
            out,
            &format!(
                "delivery_counts_match: {}\nspeedup: {:.2}\n",
                reports[0].deliveries == reports[1].deliveries,
                reports[1].deliveries_per_second / reports[0].deliveries_per_second.max(f64::MIN_POSITIVE)
            ),
        )?;
    }
    if let Some(path) = &a.csv {
        let mut csv = format!("{CSV_HEADER}\n");
        for r in &reports {
            csv.push_str(&r.csv_row());
            csv.push('\n');
        }
        write_text(path, &csv)?;
    }
    Ok(())
}
