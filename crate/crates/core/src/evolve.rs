//! Structural genetic algorithm training cart-pole controllers.
//!
//! Genomes are networks with the fixed cart-pole interface plus evolvable
//! hidden neurons (`h0`, `h1`, ...) and synapses. A generation is evaluated
//! (concurrently, merged by population index), then the next one is bred by
//! tournament selection, elitism, crossover and mutation from a single
//! seeded generator, so runs are reproducible regardless of thread count.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use crate::cartpole::{
    run_episode, CartPoleState, EpisodeConfig, MissingInterface, StartDistribution, INPUT_NAMES,
    LEFT_OUTPUT, RIGHT_OUTPUT,
};
use crate::model::{build_network, Interval, Network, NetworkSpec, ValueKind, ValueMode};
use crate::workload::random_value;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Variant {
    RispA,
    RispD,
    RispAL,
    RispDL,
}

impl Variant {
    pub const ALL: [Variant; 4] = [Variant::RispA, Variant::RispD, Variant::RispAL, Variant::RispDL];

    pub fn name(self) -> &'static str {
        match self {
            Variant::RispA => "risp-a",
            Variant::RispD => "risp-d",
            Variant::RispAL => "risp-a-l",
            Variant::RispDL => "risp-d-l",
        }
    }

    pub fn value_mode(self) -> ValueMode {
        match self {
            Variant::RispA | Variant::RispAL => ValueMode::analog(),
            Variant::RispD | Variant::RispDL => ValueMode::discrete(),
        }
    }

    /// Leak flag forced on every neuron.
    pub fn leak(self) -> bool {
        matches!(self, Variant::RispAL | Variant::RispDL)
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm = s.trim().to_ascii_lowercase().replace('_', "-");
        Variant::ALL
            .into_iter()
            .find(|v| v.name() == norm)
            .ok_or_else(|| format!("unknown variant {s:?} (expected risp-a, risp-d, risp-a-l or risp-d-l)"))
    }
}

/// Relative weights of the mutation operators.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MutationRates {
    pub add_neuron: f64,
    pub delete_neuron: f64,
    pub add_synapse: f64,
    pub delete_synapse: f64,
    pub perturb_weight: f64,
    pub perturb_threshold: f64,
    pub perturb_delay: f64,
    /// Probability of applying a further mutation after each one.
    pub repeat: f64,
    /// Analog perturbation standard deviation, as a fraction of the range width.
    pub analog_sigma: f64,
}

impl Default for MutationRates {
    fn default() -> Self {
        Self {
            add_neuron: 0.08,
            delete_neuron: 0.04,
            add_synapse: 0.2,
            delete_synapse: 0.1,
            perturb_weight: 0.3,
            perturb_threshold: 0.18,
            perturb_delay: 0.1,
            repeat: 0.5,
            analog_sigma: 0.15,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvolutionConfig {
    pub population: usize,
    pub epochs: usize,
    pub episodes_per_eval: usize,
    pub seed: u64,
    pub rates: MutationRates,
    pub crossover_rate: f64,
    pub tournament_size: usize,
    pub elitism: usize,
    pub max_hidden: usize,
    pub max_delay: u32,
    /// Hidden neurons in a freshly generated genome, drawn from `0..=initial_hidden`.
    pub initial_hidden: usize,
    /// Synapses in a freshly generated genome, drawn from this inclusive range.
    pub initial_synapses: (usize, usize),
    pub episode: EpisodeConfig,
    pub starts: StartDistribution,
    /// Evaluation threads; `None` uses the machine's parallelism.
    pub workers: Option<usize>,
}

impl Default for EvolutionConfig {
    fn default() -> Self {
        Self {
            population: 100,
            epochs: 150,
            episodes_per_eval: 10,
            seed: 0,
            rates: MutationRates::default(),
            crossover_rate: 0.25,
            tournament_size: 4,
            elitism: 4,
            max_hidden: 12,
            max_delay: 15,
            initial_hidden: 4,
            initial_synapses: (6, 16),
            episode: EpisodeConfig::default(),
            starts: StartDistribution::default(),
            workers: None,
        }
    }
}

impl EvolutionConfig {
    /// Larger protocol: 500 genomes for 100 epochs.
    pub fn full_scale() -> Self {
        Self {
            population: 500,
            epochs: 100,
            ..Self::default()
        }
    }

    pub fn check(&self) -> Result<(), EvolveError> {
        let bad = |m: &str| Err(EvolveError::Config(m.to_owned()));
        if self.population < 2 {
            return bad("population must be at least 2");
        }
        if self.episodes_per_eval < 1 {
            return bad("episodes_per_eval must be at least 1");
        }
        if self.tournament_size < 1 {
            return bad("tournament_size must be at least 1");
        }
        if self.elitism >= self.population {
            return bad("elitism must be smaller than the population");
        }
        if self.max_delay < 1 {
            return bad("max_delay must be at least 1");
        }
        if self.initial_synapses.0 > self.initial_synapses.1 {
            return bad("initial_synapses range is empty");
        }
        if !(0.0..=1.0).contains(&self.crossover_rate) || !(0.0..1.0).contains(&self.rates.repeat) {
            return bad("probabilities must lie in [0, 1)");
        }
        let r = &self.rates;
        let weights = [
            r.add_neuron,
            r.delete_neuron,
            r.add_synapse,
            r.delete_synapse,
            r.perturb_weight,
            r.perturb_threshold,
            r.perturb_delay,
        ];
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) || weights.iter().sum::<f64>() <= 0.0 {
            return bad("mutation rates must be non-negative with a positive sum");
        }
        if self.episode.dt.is_nan() || self.episode.dt <= 0.0 || self.episode.steps_per_interval < 1 {
            return bad("episode needs dt > 0 and at least one step per interval");
        }
        Ok(())
    }

    fn perfect(&self) -> u64 {
        self.episodes_per_eval as u64 * self.episode.max_intervals as u64
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EvolveError {
    #[error("invalid evolution config: {0}")]
    Config(String),
    #[error(transparent)]
    Interface(#[from] MissingInterface),
    #[error("could not build worker pool: {0}")]
    Pool(String),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Genome {
    pub network: Network,
}

impl Genome {
    /// Interface neurons only, no synapses.
    pub fn empty(variant: Variant) -> Self {
        Self {
            network: crate::cartpole::interface_network(variant.value_mode(), 1.0, variant.leak()),
        }
    }

    pub fn hidden_count(&self) -> usize {
        self.network.neuron_count() - INPUT_NAMES.len() - 2
    }
}

fn is_interface(name: &str) -> bool {
    INPUT_NAMES.contains(&name) || name == LEFT_OUTPUT || name == RIGHT_OUTPUT
}

fn hidden_names(spec: &NetworkSpec) -> Vec<String> {
    spec.neurons.iter().filter(|n| !is_interface(n)).cloned().collect()
}

fn next_hidden_name(spec: &NetworkSpec) -> String {
    let next = spec
        .neurons
        .iter()
        .filter_map(|n| n.strip_prefix('h')?.parse::<u64>().ok())
        .max()
        .map_or(0, |k| k + 1);
    format!("h{next}")
}

fn finish(spec: &NetworkSpec) -> Genome {
    Genome {
        network: build_network(spec).expect("genome operators preserve validity"),
    }
}

/// Threshold range that lets an input neuron respond to a unit spike.
fn input_threshold_range(mode: &ValueMode) -> Interval {
    let tr = mode.threshold_range;
    Interval::new(tr.min, tr.max.min(1.0))
}

pub fn random_genome<R: Rng + ?Sized>(rng: &mut R, variant: Variant, cfg: &EvolutionConfig) -> Genome {
    let mode = variant.value_mode();
    let leak = variant.leak();
    let mut s = NetworkSpec::new(mode);
    for name in INPUT_NAMES {
        let t = random_value(rng, mode.kind, input_threshold_range(&mode));
        s.add_neuron(name, t, leak).add_input(name);
    }
    for name in [LEFT_OUTPUT, RIGHT_OUTPUT] {
        let t = random_value(rng, mode.kind, mode.threshold_range);
        s.add_neuron(name, t, leak).add_output(name);
    }
    let hidden = rng.random_range(0..=cfg.initial_hidden.min(cfg.max_hidden));
    for k in 0..hidden {
        let t = random_value(rng, mode.kind, mode.threshold_range);
        s.add_neuron(format!("h{k}"), t, leak);
    }
    let (lo, hi) = cfg.initial_synapses;
    for _ in 0..rng.random_range(lo..=hi) {
        add_random_synapse(rng, &mut s, cfg.max_delay);
    }
    finish(&s)
}

fn add_random_synapse<R: Rng + ?Sized>(rng: &mut R, s: &mut NetworkSpec, max_delay: u32) {
    let mode = s.value_mode;
    let from = s.neurons.choose(rng).expect("interface is never empty").clone();
    let targets: Vec<&String> = s.neurons.iter().filter(|n| !INPUT_NAMES.contains(&n.as_str())).collect();
    let to = (*targets.choose(rng).expect("outputs are targets")).clone();
    let w = random_nonzero(rng, mode.kind, mode.weight_range);
    let d = rng.random_range(1..=max_delay) as i64;
    s.add_synapse(from, to, w, d);
}

fn random_nonzero<R: Rng + ?Sized>(rng: &mut R, kind: ValueKind, range: Interval) -> f64 {
    for _ in 0..8 {
        let v = random_value(rng, kind, range);
        if v != 0.0 {
            return v;
        }
    }
    1.0
}

fn perturb<R: Rng + ?Sized>(rng: &mut R, v: f64, kind: ValueKind, range: Interval, sigma: f64) -> f64 {
    match kind {
        ValueKind::Discrete => {
            let step = rng.random_range(1..=2) as f64;
            let v = if rng.random_bool(0.5) { v + step } else { v - step };
            range.clamp(v)
        }
        ValueKind::Analog => {
            let sd = (sigma * range.width()).max(f64::MIN_POSITIVE);
            let n = Normal::new(0.0, sd).expect("positive deviation");
            range.clamp(v + n.sample(rng))
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Op {
    AddNeuron,
    DeleteNeuron,
    AddSynapse,
    DeleteSynapse,
    PerturbWeight,
    PerturbThreshold,
    PerturbDelay,
}

fn pick_op<R: Rng + ?Sized>(rng: &mut R, r: &MutationRates) -> Op {
    let table = [
        (Op::AddNeuron, r.add_neuron),
        (Op::DeleteNeuron, r.delete_neuron),
        (Op::AddSynapse, r.add_synapse),
        (Op::DeleteSynapse, r.delete_synapse),
        (Op::PerturbWeight, r.perturb_weight),
        (Op::PerturbThreshold, r.perturb_threshold),
        (Op::PerturbDelay, r.perturb_delay),
    ];
    let total: f64 = table.iter().map(|(_, w)| w).sum();
    let mut x = rng.random_range(0.0..total);
    for (op, w) in table {
        if x < w {
            return op;
        }
        x -= w;
    }
    Op::AddSynapse
}

/// Applies one or more random structural or value mutations. A genome with
/// no hidden neurons and no synapses can only grow.
pub fn mutate<R: Rng + ?Sized>(genome: &Genome, rng: &mut R, variant: Variant, cfg: &EvolutionConfig) -> Genome {
    let mut s = genome.network.to_spec();
    let grow_only = genome.hidden_count() == 0 && s.synapses.is_empty();
    loop {
        mutate_once(&mut s, rng, variant, cfg, grow_only);
        if !rng.random_bool(cfg.rates.repeat) {
            break;
        }
    }
    finish(&s)
}

fn mutate_once<R: Rng + ?Sized>(
    s: &mut NetworkSpec,
    rng: &mut R,
    variant: Variant,
    cfg: &EvolutionConfig,
    grow_only: bool,
) {
    let mode = s.value_mode;
    let hidden = hidden_names(s);
    let mut op = pick_op(rng, &cfg.rates);
    if grow_only && !matches!(op, Op::AddNeuron | Op::AddSynapse) {
        op = Op::AddSynapse;
    }
    if op == Op::AddNeuron && hidden.len() >= cfg.max_hidden {
        op = Op::AddSynapse;
    }
    if op == Op::DeleteNeuron && hidden.is_empty() {
        op = Op::DeleteSynapse;
    }
    if s.synapses.is_empty() && matches!(op, Op::DeleteSynapse | Op::PerturbWeight | Op::PerturbDelay) {
        op = Op::AddSynapse;
    }
    match op {
        Op::AddNeuron => {
            let name = next_hidden_name(s);
            let t = random_value(rng, mode.kind, mode.threshold_range);
            s.add_neuron(name.clone(), t, variant.leak());
            if !s.synapses.is_empty() && rng.random_bool(0.5) {
                // split an existing synapse through the new neuron
                let k = rng.random_range(0..s.synapses.len());
                let (from, to) = s.synapses[k].clone();
                let (w, d) = (s.weights[k], s.delays[k]);
                s.remove_synapse(k);
                let w_in = random_nonzero(rng, mode.kind, mode.weight_range);
                let d_in = rng.random_range(1..=d.max(1));
                let d_out = (d - d_in).max(1);
                s.add_synapse(from, name.clone(), w_in, d_in);
                s.add_synapse(name, to, w, d_out);
            } else {
                let from = s.neurons.choose(rng).expect("non-empty").clone();
                let w = random_nonzero(rng, mode.kind, mode.weight_range);
                s.add_synapse(from, name, w, rng.random_range(1..=cfg.max_delay) as i64);
            }
        }
        Op::DeleteNeuron => {
            let victim = hidden.choose(rng).expect("checked non-empty");
            s.remove_neuron(victim);
        }
        Op::AddSynapse => add_random_synapse(rng, s, cfg.max_delay),
        Op::DeleteSynapse => {
            let k = rng.random_range(0..s.synapses.len());
            s.remove_synapse(k);
        }
        Op::PerturbWeight => {
            let k = rng.random_range(0..s.weights.len());
            s.weights[k] = perturb(rng, s.weights[k], mode.kind, mode.weight_range, cfg.rates.analog_sigma);
        }
        Op::PerturbThreshold => {
            let k = rng.random_range(0..s.thresholds.len());
            s.thresholds[k] =
                perturb(rng, s.thresholds[k], mode.kind, mode.threshold_range, cfg.rates.analog_sigma);
        }
        Op::PerturbDelay => {
            let k = rng.random_range(0..s.delays.len());
            let step = rng.random_range(1..=3);
            let d = if rng.random_bool(0.5) { s.delays[k] + step } else { s.delays[k] - step };
            s.delays[k] = d.clamp(1, cfg.max_delay as i64);
        }
    }
}

type SynapseKey = (String, String, i64, usize);

fn synapse_table(s: &NetworkSpec) -> BTreeMap<SynapseKey, f64> {
    let mut seen: BTreeMap<(String, String, i64), usize> = BTreeMap::new();
    let mut out = BTreeMap::new();
    for (k, (from, to)) in s.synapses.iter().enumerate() {
        let base = (from.clone(), to.clone(), s.delays[k]);
        let n = seen.entry(base).or_default();
        out.insert((from.clone(), to.clone(), s.delays[k], *n), s.weights[k]);
        *n += 1;
    }
    out
}

/// Uniform crossover aligned by neuron name and by (endpoints, delay)
/// for synapses. Shared elements take either parent's value; elements
/// present in one parent are inherited with probability 1/2.
pub fn crossover<R: Rng + ?Sized>(a: &Genome, b: &Genome, rng: &mut R) -> Genome {
    let sa = a.network.to_spec();
    let sb = b.network.to_spec();
    let mut child = NetworkSpec::new(sa.value_mode);
    let neurons_b: BTreeMap<&str, (f64, bool)> = sb
        .neurons
        .iter()
        .enumerate()
        .map(|(i, n)| (n.as_str(), (sb.thresholds[i], sb.leaks[i])))
        .collect();
    let neurons_a: BTreeMap<&str, (f64, bool)> = sa
        .neurons
        .iter()
        .enumerate()
        .map(|(i, n)| (n.as_str(), (sa.thresholds[i], sa.leaks[i])))
        .collect();
    // parent a's order first, then neurons only b has
    let mut names: Vec<&str> = sa.neurons.iter().map(String::as_str).collect();
    names.extend(sb.neurons.iter().map(String::as_str).filter(|n| !neurons_a.contains_key(n)));
    for name in names {
        let pick = match (neurons_a.get(name), neurons_b.get(name)) {
            (Some(x), Some(y)) => Some(if rng.random_bool(0.5) { *x } else { *y }),
            (Some(x), None) | (None, Some(x)) => {
                if is_interface(name) || rng.random_bool(0.5) {
                    Some(*x)
                } else {
                    None
                }
            }
            (None, None) => None,
        };
        if let Some((t, leak)) = pick {
            child.add_neuron(name, t, leak);
        }
    }
    let ta = synapse_table(&sa);
    let tb = synapse_table(&sb);
    let keys: BTreeSet<&SynapseKey> = ta.keys().chain(tb.keys()).collect();
    for key in keys {
        let w = match (ta.get(key), tb.get(key)) {
            (Some(x), Some(y)) => Some(if rng.random_bool(0.5) { *x } else { *y }),
            (Some(x), None) | (None, Some(x)) => rng.random_bool(0.5).then_some(*x),
            (None, None) => None,
        };
        let (from, to, d, _) = key;
        if let Some(w) = w {
            if child.neuron_position(from).is_some() && child.neuron_position(to).is_some() {
                child.add_synapse(from.clone(), to.clone(), w, *d);
            }
        }
    }
    child.inputs = sa.inputs.clone();
    child.outputs = sa.outputs.clone();
    finish(&child)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FitnessRecord {
    pub per_episode: Vec<u32>,
}

impl FitnessRecord {
    /// Total intervals survived over all training episodes.
    pub fn total(&self) -> u64 {
        self.per_episode.iter().map(|&n| n as u64).sum()
    }
}

/// Sums survived intervals over the training starts.
pub fn evaluate(genome: &Genome, starts: &[CartPoleState], cfg: &EpisodeConfig) -> Result<FitnessRecord, MissingInterface> {
    let per_episode = starts
        .iter()
        .map(|&s| run_episode(&genome.network, s, cfg))
        .collect::<Result<_, _>>()?;
    Ok(FitnessRecord { per_episode })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EpochStats {
    pub epoch: usize,
    pub best: u64,
    pub mean: f64,
    /// Genomes evaluated this epoch (cached elites excluded).
    pub evaluations: usize,
    pub wall_seconds: f64,
}

#[derive(Clone, Debug)]
pub struct EvolutionResult {
    pub variant: Variant,
    pub best: Genome,
    pub best_fitness: FitnessRecord,
    pub perfect_fitness: u64,
    pub history: Vec<EpochStats>,
    pub epochs_to_perfect: Option<usize>,
    pub training_starts: Vec<CartPoleState>,
}

impl EvolutionResult {
    pub fn is_perfect(&self) -> bool {
        self.best_fitness.total() == self.perfect_fitness
    }
}

/// History as CSV. Wall time varies between runs, so it is only included on request.
pub fn history_csv(history: &[EpochStats], wall_time: bool) -> String {
    let mut out = String::from("epoch,best,mean,evaluations");
    out.push_str(if wall_time { ",wall_seconds\n" } else { "\n" });
    for h in history {
        out.push_str(&format!("{},{},{:.3},{}", h.epoch, h.best, h.mean, h.evaluations));
        if wall_time {
            out.push_str(&format!(",{:.3}", h.wall_seconds));
        }
        out.push('\n');
    }
    out
}

fn pool(workers: Option<usize>) -> Result<rayon::ThreadPool, EvolveError> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(n) = workers {
        b = b.num_threads(n.max(1));
    }
    b.build().map_err(|e| EvolveError::Pool(e.to_string()))
}

fn tournament<R: Rng + ?Sized>(rng: &mut R, fitness: &[u64], size: usize) -> usize {
    let mut best = rng.random_range(0..fitness.len());
    for _ in 1..size {
        let c = rng.random_range(0..fitness.len());
        if fitness[c] > fitness[best] || (fitness[c] == fitness[best] && c < best) {
            best = c;
        }
    }
    best
}

/// Runs the GA until a genome survives every training episode or `epochs`
/// generations have been evaluated.
pub fn evolve(variant: Variant, cfg: &EvolutionConfig) -> Result<EvolutionResult, EvolveError> {
    evolve_with_progress(variant, cfg, |_| {})
}

pub fn evolve_with_progress(
    variant: Variant,
    cfg: &EvolutionConfig,
    mut progress: impl FnMut(&EpochStats),
) -> Result<EvolutionResult, EvolveError> {
    cfg.check()?;
    let pool = pool(cfg.workers)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let starts: Vec<CartPoleState> = (0..cfg.episodes_per_eval).map(|_| cfg.starts.sample(&mut rng)).collect();
    let perfect = cfg.perfect();

    let mut population: Vec<Genome> = (0..cfg.population).map(|_| random_genome(&mut rng, variant, cfg)).collect();
    let mut cached: Vec<Option<FitnessRecord>> = vec![None; cfg.population];
    let mut history = Vec::new();
    let mut epochs_to_perfect = None;

    for epoch in 0..cfg.epochs.max(1) {
        let clock = Instant::now();
        let todo: Vec<usize> = (0..population.len()).filter(|&i| cached[i].is_none()).collect();
        let fresh: Vec<Result<FitnessRecord, MissingInterface>> = pool.install(|| {
            todo.par_iter()
                .map(|&i| evaluate(&population[i], &starts, &cfg.episode))
                .collect()
        });
        for (&i, r) in todo.iter().zip(fresh) {
            cached[i] = Some(r?);
        }
        let fitness: Vec<u64> = cached.iter().map(|r| r.as_ref().expect("evaluated").total()).collect();
        let best = *fitness.iter().max().expect("population is non-empty");
        let stats = EpochStats {
            epoch,
            best,
            mean: fitness.iter().sum::<u64>() as f64 / fitness.len() as f64,
            evaluations: todo.len(),
            wall_seconds: clock.elapsed().as_secs_f64(),
        };
        progress(&stats);
        history.push(stats);
        if best == perfect {
            epochs_to_perfect = Some(epoch);
            break;
        }
        if epoch + 1 == cfg.epochs {
            break;
        }

        let mut order: Vec<usize> = (0..population.len()).collect();
        order.sort_by(|&a, &b| fitness[b].cmp(&fitness[a]).then(a.cmp(&b)));
        let mut next = Vec::with_capacity(cfg.population);
        let mut next_cache = Vec::with_capacity(cfg.population);
        for &e in order.iter().take(cfg.elitism) {
            next.push(population[e].clone());
            next_cache.push(cached[e].clone());
        }
        while next.len() < cfg.population {
            let p = tournament(&mut rng, &fitness, cfg.tournament_size);
            let parent = if rng.random_bool(cfg.crossover_rate) {
                let q = tournament(&mut rng, &fitness, cfg.tournament_size);
                crossover(&population[p], &population[q], &mut rng)
            } else {
                population[p].clone()
            };
            next.push(mutate(&parent, &mut rng, variant, cfg));
            next_cache.push(None);
        }
        population = next;
        cached = next_cache;
    }

    let fitness: Vec<u64> = cached.iter().map(|r| r.as_ref().map_or(0, FitnessRecord::total)).collect();
    let best_idx = (0..fitness.len())
        .max_by(|&a, &b| fitness[a].cmp(&fitness[b]).then(b.cmp(&a)))
        .expect("population is non-empty");
    Ok(EvolutionResult {
        variant,
        best: population[best_idx].clone(),
        best_fitness: cached[best_idx].clone().expect("evaluated"),
        perfect_fitness: perfect,
        history,
        epochs_to_perfect,
        training_starts: starts,
    })
}

/// Mean survived time in simulated seconds over `n_tests` fresh starts.
pub fn test_generalization(
    genome: &Genome,
    n_tests: usize,
    seed: u64,
    episode: &EpisodeConfig,
    starts: &StartDistribution,
) -> Result<f64, MissingInterface> {
    if n_tests == 0 {
        return Ok(0.0);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let tests: Vec<CartPoleState> = (0..n_tests).map(|_| starts.sample(&mut rng)).collect();
    let survived: Vec<u32> = tests
        .par_iter()
        .map(|&s| run_episode(&genome.network, s, episode))
        .collect::<Result<_, _>>()?;
    let total: u64 = survived.iter().map(|&n| n as u64).sum();
    Ok(episode.seconds(total as f64 / n_tests as f64))
}
