//! Simulation throughput in synaptic deliveries per second.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::engine::{
    run_event_driven_with_stats, run_reference_with_stats, EngineError, RecordMode, RunStats,
    SpikeSchedule,
};
use crate::model::{Network, ValueMode};
use crate::workload::{random_network, random_schedule, InputModel, LeakSetting, RandomNetworkConfig};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum EngineKind {
    Reference,
    EventDriven,
}

impl EngineKind {
    pub const ALL: [EngineKind; 2] = [EngineKind::Reference, EngineKind::EventDriven];

    pub fn name(self) -> &'static str {
        match self {
            EngineKind::Reference => "reference",
            EngineKind::EventDriven => "event-driven",
        }
    }

    pub fn run(
        self,
        net: &Network,
        schedule: &SpikeSchedule,
        horizon: u64,
        record: RecordMode,
    ) -> Result<(crate::engine::SpikeRaster, RunStats), EngineError> {
        match self {
            EngineKind::Reference => run_reference_with_stats(net, schedule, horizon, record),
            EngineKind::EventDriven => run_event_driven_with_stats(net, schedule, horizon, record),
        }
    }
}

impl fmt::Display for EngineKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EngineKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "ref" | "reference" => Ok(EngineKind::Reference),
            "event" | "event-driven" => Ok(EngineKind::EventDriven),
            other => Err(format!("unknown engine {other:?} (expected ref or event)")),
        }
    }
}

/// Seeded input workload.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Workload {
    pub input_model: InputModel,
    pub horizon: u64,
    pub seed: u64,
}

impl Workload {
    pub fn schedule(&self, net: &Network) -> SpikeSchedule {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        random_schedule(&mut rng, net, self.horizon, self.input_model)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchReport {
    pub engine: EngineKind,
    pub neurons: usize,
    pub synapses: usize,
    pub horizon: u64,
    pub repetitions: usize,
    pub deliveries: u64,
    pub fires: u64,
    /// Median wall time of one run.
    pub wall_seconds: f64,
    pub deliveries_per_second: f64,
}

pub const CSV_HEADER: &str =
    "engine,neurons,synapses,horizon,repetitions,deliveries,fires,wall_seconds,deliveries_per_second";

impl BenchReport {
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{:.9},{:.1}",
            self.engine,
            self.neurons,
            self.synapses,
            self.horizon,
            self.repetitions,
            self.deliveries,
            self.fires,
            self.wall_seconds,
            self.deliveries_per_second
        )
    }
}

impl fmt::Display for BenchReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "engine: {}", self.engine)?;
        writeln!(f, "neurons: {}", self.neurons)?;
        writeln!(f, "synapses: {}", self.synapses)?;
        writeln!(f, "horizon: {}", self.horizon)?;
        writeln!(f, "repetitions: {}", self.repetitions)?;
        writeln!(f, "deliveries: {}", self.deliveries)?;
        writeln!(f, "fires: {}", self.fires)?;
        writeln!(f, "wall_seconds: {:.9}", self.wall_seconds)?;
        writeln!(f, "deliveries_per_second: {:.1}", self.deliveries_per_second)
    }
}

/// Runs the workload `repetitions` times (at least once) on one engine and
/// reports the median wall time.
pub fn benchmark(
    net: &Network,
    workload: &Workload,
    engine: EngineKind,
    repetitions: usize,
) -> Result<BenchReport, EngineError> {
    let schedule = workload.schedule(net);
    benchmark_schedule(net, &schedule, workload.horizon, engine, repetitions)
}

pub fn benchmark_schedule(
    net: &Network,
    schedule: &SpikeSchedule,
    horizon: u64,
    engine: EngineKind,
    repetitions: usize,
) -> Result<BenchReport, EngineError> {
    let repetitions = repetitions.max(1);
    let mut times = Vec::with_capacity(repetitions);
    let mut stats = RunStats::default();
    for _ in 0..repetitions {
        let clock = Instant::now();
        let (_, s) = engine.run(net, schedule, horizon, RecordMode::OutputsOnly)?;
        times.push(clock.elapsed().as_secs_f64());
        stats = s;
    }
    times.sort_by(f64::total_cmp);
    let wall = times[(times.len() - 1) / 2];
    let rate = if stats.deliveries == 0 {
        0.0
    } else {
        stats.deliveries as f64 / wall.max(1e-12)
    };
    Ok(BenchReport {
        engine,
        neurons: net.neuron_count(),
        synapses: net.synapse_count(),
        horizon,
        repetitions,
        deliveries: stats.deliveries,
        fires: stats.fires,
        wall_seconds: wall,
        deliveries_per_second: rate,
    })
}

/// Large, sparsely driven network: `neurons` neurons, 10% of them inputs,
/// each input active with probability 0.1 per timestep.
pub fn sparse_workload(neurons: usize, horizon: u64, seed: u64) -> (Network, Workload) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cfg = RandomNetworkConfig {
        neurons,
        fan_out: 3.0,
        inputs: (neurons / 10).max(1),
        outputs: (neurons / 10).max(1),
        max_delay: 10,
        mode: ValueMode::discrete(),
        leak: LeakSetting::All,
    };
    let net = random_network(&mut rng, &cfg);
    let workload = Workload {
        input_model: InputModel {
            probability: 0.1,
            value: 1.0,
        },
        horizon,
        seed,
    };
    (net, workload)
}
