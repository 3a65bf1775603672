//! Simplification passes that shrink a network or set its values to unit
//! magnitude without changing what its output neurons do, plus a
//! randomized differential check that compares the two versions.
//!
//! Every pass is sound under the engine semantics:
//!
//! - **passthrough**: a hidden neuron `B` with a single incoming synapse
//!   `u -> B (w1, d1)` with `w1 >= threshold(B)` and a single outgoing synapse
//!   `B -> v (w2, d2)` fires exactly `d1` steps after each `u` fire and never
//!   otherwise, so it is equivalent to `u -> v (w2, d1 + d2)`.
//! - **normalize**: a neuron whose incoming weights are all positive and at
//!   least its threshold fires on every check; with unit weights and unit
//!   threshold it still does.
//! - **prune**: hidden neurons with no path to an output cannot influence
//!   outputs, and neurons unreachable from every input never receive a
//!   delivery.

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::engine::{run_event_driven, RecordMode, SpikeSchedule};
use crate::model::{build_network, Network, NeuronId};
use crate::workload::InputModel;

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct PassReport {
    pub pass: String,
    pub neurons_removed: usize,
    pub synapses_removed: usize,
    pub synapses_added: usize,
    pub values_normalized: usize,
    pub details: Vec<String>,
}

impl PassReport {
    fn new(pass: &str) -> Self {
        Self {
            pass: pass.to_owned(),
            ..Self::default()
        }
    }

    pub fn is_identity(&self) -> bool {
        self.neurons_removed == 0
            && self.synapses_removed == 0
            && self.synapses_added == 0
            && self.values_normalized == 0
    }

    fn absorb(&mut self, other: PassReport) {
        self.neurons_removed += other.neurons_removed;
        self.synapses_removed += other.synapses_removed;
        self.synapses_added += other.synapses_added;
        self.values_normalized += other.values_normalized;
        self.details
            .extend(other.details.into_iter().map(|d| format!("{}: {d}", other.pass)));
    }
}

impl fmt::Display for PassReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "pass: {}", self.pass)?;
        writeln!(f, "neurons_removed: {}", self.neurons_removed)?;
        writeln!(f, "synapses_removed: {}", self.synapses_removed)?;
        writeln!(f, "synapses_added: {}", self.synapses_added)?;
        writeln!(f, "values_normalized: {}", self.values_normalized)?;
        for d in &self.details {
            writeln!(f, "- {d}")?;
        }
        Ok(())
    }
}

fn rebuild(spec: &crate::model::NetworkSpec) -> Network {
    build_network(spec).expect("passes preserve validity")
}

fn fmt_syn(net: &Network, i: usize) -> String {
    let s = net.synapses()[i];
    format!(
        "{} -> {} (w={}, d={})",
        net.name(s.from),
        net.name(s.to),
        s.weight,
        s.delay
    )
}

fn find_relay(net: &Network) -> Option<(NeuronId, usize, usize)> {
    for b in net.neuron_ids() {
        if net.is_input(b) || net.is_output(b) || net.in_degree(b) != 1 || net.out_degree(b) != 1 {
            continue;
        }
        let out = net.outgoing(b).start;
        let inc = net
            .synapses()
            .iter()
            .position(|s| s.to == b)
            .expect("in-degree 1");
        let s_in = net.synapses()[inc];
        let s_out = net.synapses()[out];
        if s_in.from == b || s_out.to == b {
            continue;
        }
        if s_in.weight >= net.threshold(b) {
            return Some((b, inc, out));
        }
    }
    None
}

/// Removes guaranteed relay neurons, merging their two synapses into one
/// whose delay is the sum of both. Applied until no relay remains.
pub fn eliminate_passthrough(net: &Network) -> (Network, PassReport) {
    let mut report = PassReport::new("passthrough");
    let mut cur = net.clone();
    while let Some((b, inc, out)) = find_relay(&cur) {
        let s_in = cur.synapses()[inc];
        let s_out = cur.synapses()[out];
        let detail = format!(
            "removed relay {}: {} + {} => {} -> {} (w={}, d={})",
            cur.name(b),
            fmt_syn(&cur, inc),
            fmt_syn(&cur, out),
            cur.name(s_in.from),
            cur.name(s_out.to),
            s_out.weight,
            s_in.delay + s_out.delay
        );
        let mut spec = cur.to_spec();
        let from = cur.name(s_in.from).to_owned();
        let to = cur.name(s_out.to).to_owned();
        spec.remove_neuron(cur.name(b));
        spec.add_synapse(from, to, s_out.weight, (s_in.delay + s_out.delay) as i64);
        cur = rebuild(&spec);
        report.neurons_removed += 1;
        report.synapses_removed += 2;
        report.synapses_added += 1;
        report.details.push(detail);
    }
    (cur, report)
}

/// What the normalizer may assume about externally applied spikes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum ExternalSpikes {
    /// Every external spike has value 1, as in the cart-pole encoding and
    /// the default equivalence input model. Input neurons then qualify when
    /// their threshold is at most 1.
    #[default]
    Unit,
    /// Arbitrary values; input neurons are never normalized.
    Arbitrary,
}

/// Sets incoming weights and threshold to 1 on every neuron whose incoming
/// weights are all positive and at least its threshold.
pub fn normalize_unit_weights(net: &Network, external: ExternalSpikes) -> (Network, PassReport) {
    let mut report = PassReport::new("normalize");
    let mut spec = net.to_spec();
    for n in net.neuron_ids() {
        let thr = net.threshold(n);
        if net.is_input(n) && (external == ExternalSpikes::Arbitrary || thr > 1.0) {
            continue;
        }
        let incoming: Vec<usize> = net
            .synapses()
            .iter()
            .enumerate()
            .filter(|(_, s)| s.to == n)
            .map(|(i, _)| i)
            .collect();
        let qualifies = incoming.iter().all(|&i| {
            let w = net.synapses()[i].weight;
            w > 0.0 && w >= thr
        });
        if !qualifies {
            continue;
        }
        let mut changed = 0;
        if thr != 1.0 {
            spec.thresholds[n.index()] = 1.0;
            changed += 1;
        }
        for &i in &incoming {
            if spec.weights[i] != 1.0 {
                spec.weights[i] = 1.0;
                changed += 1;
            }
        }
        if changed > 0 {
            report.values_normalized += changed;
            report.details.push(format!(
                "{}: threshold {} and {} incoming weight(s) set to 1",
                net.name(n),
                thr,
                incoming.len()
            ));
        }
    }
    if report.values_normalized == 0 {
        return (net.clone(), report);
    }
    (rebuild(&spec), report)
}

fn reach(net: &Network, seeds: &[NeuronId], forward: bool) -> Vec<bool> {
    let n = net.neuron_count();
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for s in net.synapses() {
        let (a, b) = if forward { (s.from, s.to) } else { (s.to, s.from) };
        adj[a.index()].push(b.index());
    }
    let mut seen = vec![false; n];
    let mut queue: VecDeque<usize> = seeds.iter().map(|s| s.index()).collect();
    for &s in seeds {
        seen[s.index()] = true;
    }
    while let Some(u) = queue.pop_front() {
        for &v in &adj[u] {
            if !seen[v] {
                seen[v] = true;
                queue.push_back(v);
            }
        }
    }
    seen
}

/// Removes hidden neurons that cannot reach an output, and hidden neurons
/// with a positive threshold that no input can reach.
pub fn prune_dead(net: &Network) -> (Network, PassReport) {
    let mut report = PassReport::new("prune");
    let to_out = reach(net, net.outputs(), false);
    let from_in = reach(net, net.inputs(), true);
    let doomed: Vec<NeuronId> = net
        .neuron_ids()
        .filter(|&v| !net.is_input(v) && !net.is_output(v))
        .filter(|&v| !to_out[v.index()] || (!from_in[v.index()] && net.threshold(v) > 0.0))
        .collect();
    if doomed.is_empty() {
        return (net.clone(), report);
    }
    let mut spec = net.to_spec();
    for &v in &doomed {
        let why = if !to_out[v.index()] {
            "no path to an output"
        } else {
            "unreachable from inputs"
        };
        let removed = spec.remove_neuron(net.name(v));
        report.neurons_removed += 1;
        report.synapses_removed += removed;
        report.details.push(format!(
            "removed {} ({why}) with {removed} synapse(s)",
            net.name(v)
        ));
    }
    (rebuild(&spec), report)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Pass {
    Passthrough,
    Normalize,
    Prune,
}

impl Pass {
    pub const ALL: [Pass; 3] = [Pass::Prune, Pass::Passthrough, Pass::Normalize];

    pub fn name(self) -> &'static str {
        match self {
            Pass::Passthrough => "passthrough",
            Pass::Normalize => "normalize",
            Pass::Prune => "prune",
        }
    }
}

impl FromStr for Pass {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "passthrough" | "relay" => Ok(Pass::Passthrough),
            "normalize" | "unit" => Ok(Pass::Normalize),
            "prune" | "dead" => Ok(Pass::Prune),
            other => Err(format!(
                "unknown pass {other:?} (expected passthrough, normalize or prune)"
            )),
        }
    }
}

#[derive(Clone, Debug)]
pub struct SimplifyConfig {
    pub passes: Vec<Pass>,
    pub external: ExternalSpikes,
    pub trials: usize,
    pub horizon: u64,
    pub seed: u64,
    pub input_model: InputModel,
    pub max_rounds: usize,
}

impl Default for SimplifyConfig {
    fn default() -> Self {
        Self {
            passes: Pass::ALL.to_vec(),
            external: ExternalSpikes::Unit,
            trials: 100,
            horizon: 200,
            seed: 0,
            input_model: InputModel::default(),
            max_rounds: 64,
        }
    }
}

pub fn apply_pass(net: &Network, pass: Pass, external: ExternalSpikes) -> (Network, PassReport) {
    match pass {
        Pass::Passthrough => eliminate_passthrough(net),
        Pass::Normalize => normalize_unit_weights(net, external),
        Pass::Prune => prune_dead(net),
    }
}

/// Runs the configured passes to a fixpoint and checks the result against
/// the original. A failed check returns the original network.
pub fn simplify(net: &Network, cfg: &SimplifyConfig) -> (Network, PassReport, EquivalenceVerdict) {
    let mut report = PassReport::new("simplify");
    let mut cur = net.clone();
    for _ in 0..cfg.max_rounds {
        let mut changed = false;
        for &pass in &cfg.passes {
            let (next, r) = apply_pass(&cur, pass, cfg.external);
            if !r.is_identity() {
                changed = true;
                report.absorb(r);
                cur = next;
            }
        }
        if !changed {
            break;
        }
    }
    let verdict = check_equivalence(net, &cur, cfg.trials, cfg.horizon, cfg.seed, cfg.input_model)
        .expect("passes keep the interface");
    if verdict.equivalent {
        (cur, report, verdict)
    } else {
        (net.clone(), report, verdict)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("networks expose different interfaces: inputs {inputs_a:?} vs {inputs_b:?}, outputs {outputs_a:?} vs {outputs_b:?}")]
pub struct InterfaceMismatch {
    pub inputs_a: Vec<String>,
    pub inputs_b: Vec<String>,
    pub outputs_a: Vec<String>,
    pub outputs_b: Vec<String>,
}

/// A schedule and the two diverging output rasters, all by neuron name.
#[derive(Clone, Debug, PartialEq)]
pub struct Counterexample {
    pub trial: usize,
    pub schedule: Vec<(String, u64, f64)>,
    pub raster_a: Vec<(u64, String)>,
    pub raster_b: Vec<(u64, String)>,
}

impl Counterexample {
    /// Re-runs the schedule on `a` and `b`; true if they still diverge.
    pub fn replay(&self, a: &Network, b: &Network, horizon: u64) -> bool {
        let ra = named_outputs(a, &to_schedule(a, &self.schedule), horizon);
        let rb = named_outputs(b, &to_schedule(b, &self.schedule), horizon);
        ra != rb
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EquivalenceVerdict {
    pub equivalent: bool,
    pub trials: usize,
    pub horizon: u64,
    pub first_counterexample: Option<Counterexample>,
}

impl fmt::Display for EquivalenceVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "equivalent: {}", self.equivalent)?;
        writeln!(f, "trials: {}", self.trials)?;
        writeln!(f, "horizon: {}", self.horizon)?;
        if let Some(c) = &self.first_counterexample {
            writeln!(f, "counterexample_trial: {}", c.trial)?;
            for (n, t, v) in &c.schedule {
                writeln!(f, "  apply {n} {t} {v}")?;
            }
            writeln!(f, "  original: {:?}", c.raster_a)?;
            writeln!(f, "  simplified: {:?}", c.raster_b)?;
        }
        Ok(())
    }
}

fn to_schedule(net: &Network, named: &[(String, u64, f64)]) -> SpikeSchedule {
    let mut s = SpikeSchedule::new();
    for (n, t, v) in named {
        s.push(net.id(n).expect("interface neuron"), *t, *v);
    }
    s
}

fn named_outputs(net: &Network, sched: &SpikeSchedule, horizon: u64) -> Vec<(u64, String)> {
    let r = run_event_driven(net, sched, horizon, RecordMode::OutputsOnly)
        .expect("schedule targets inputs");
    let mut v: Vec<(u64, String)> = r
        .fires
        .into_iter()
        .map(|(id, t)| (t, net.name(id).to_owned()))
        .collect();
    v.sort();
    v
}

/// Deterministic per-trial schedule over the (sorted) input names.
pub fn trial_schedule(
    inputs: &[&str],
    horizon: u64,
    seed: u64,
    trial: usize,
    model: InputModel,
) -> Vec<(String, u64, f64)> {
    use rand::Rng;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial as u64);
    let mut out = Vec::new();
    for t in 0..horizon {
        for name in inputs {
            if rng.random_bool(model.probability) {
                out.push(((*name).to_owned(), t, model.value));
            }
        }
    }
    out
}

/// Compares output rasters of `a` and `b` over `trials` random schedules.
pub fn check_equivalence(
    a: &Network,
    b: &Network,
    trials: usize,
    horizon: u64,
    seed: u64,
    model: InputModel,
) -> Result<EquivalenceVerdict, InterfaceMismatch> {
    let (ia, oa) = a.interface();
    let (ib, ob) = b.interface();
    if ia != ib || oa != ob {
        let own = |v: Vec<&str>| v.into_iter().map(str::to_owned).collect();
        return Err(InterfaceMismatch {
            inputs_a: own(ia),
            inputs_b: own(ib),
            outputs_a: own(oa),
            outputs_b: own(ob),
        });
    }
    let first = (0..trials).into_par_iter().find_map_first(|trial| {
        let named = trial_schedule(&ia, horizon, seed, trial, model);
        let ra = named_outputs(a, &to_schedule(a, &named), horizon);
        let rb = named_outputs(b, &to_schedule(b, &named), horizon);
        if ra == rb {
            return None;
        }
        Some(Counterexample {
            trial,
            schedule: named,
            raster_a: ra,
            raster_b: rb,
        })
    });
    Ok(EquivalenceVerdict {
        equivalent: first.is_none(),
        trials,
        horizon,
        first_counterexample: first,
    })
}
