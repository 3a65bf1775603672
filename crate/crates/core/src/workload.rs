//! Seeded random inputs and networks for equivalence trials, benchmarks
//! and tests.

use rand::Rng;

use crate::engine::SpikeSchedule;
use crate::model::{build_network, Interval, Network, NetworkSpec, ValueKind, ValueMode};

/// Each input neuron independently receives a spike of `value` with
/// probability `probability` at every timestep.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InputModel {
    pub probability: f64,
    pub value: f64,
}

impl Default for InputModel {
    fn default() -> Self {
        Self {
            probability: 0.5,
            value: 1.0,
        }
    }
}

pub fn random_schedule<R: Rng + ?Sized>(
    rng: &mut R,
    net: &Network,
    horizon: u64,
    model: InputModel,
) -> SpikeSchedule {
    let mut s = SpikeSchedule::new();
    for t in 0..horizon {
        for &i in net.inputs() {
            if rng.random_bool(model.probability) {
                s.push(i, t, model.value);
            }
        }
    }
    s
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LeakSetting {
    All,
    None,
    Mixed,
}

#[derive(Clone, Debug)]
pub struct RandomNetworkConfig {
    pub neurons: usize,
    /// Mean outgoing synapses per neuron.
    pub fan_out: f64,
    pub inputs: usize,
    pub outputs: usize,
    pub max_delay: u32,
    pub mode: ValueMode,
    pub leak: LeakSetting,
}

impl Default for RandomNetworkConfig {
    fn default() -> Self {
        Self {
            neurons: 10,
            fan_out: 2.0,
            inputs: 2,
            outputs: 2,
            max_delay: 5,
            mode: ValueMode::discrete(),
            leak: LeakSetting::Mixed,
        }
    }
}

pub fn random_value<R: Rng + ?Sized>(rng: &mut R, kind: ValueKind, range: Interval) -> f64 {
    match kind {
        ValueKind::Discrete => rng.random_range(range.min as i64..=range.max as i64) as f64,
        ValueKind::Analog => rng.random_range(range.min..=range.max),
    }
}

fn random_leak<R: Rng + ?Sized>(rng: &mut R, leak: LeakSetting) -> bool {
    match leak {
        LeakSetting::All => true,
        LeakSetting::None => false,
        LeakSetting::Mixed => rng.random_bool(0.5),
    }
}

/// Random network named `n0..n{N-1}`; the first `inputs` neurons are inputs
/// and the last `outputs` neurons are outputs (the two sets may overlap in
/// tiny networks).
pub fn random_network<R: Rng + ?Sized>(rng: &mut R, cfg: &RandomNetworkConfig) -> Network {
    let n = cfg.neurons.max(1);
    let mode = cfg.mode;
    let mut spec = NetworkSpec::new(mode);
    for i in 0..n {
        let t = random_value(rng, mode.kind, mode.threshold_range);
        spec.add_neuron(format!("n{i}"), t, random_leak(rng, cfg.leak));
    }
    let m = (cfg.fan_out * n as f64).round() as usize;
    for _ in 0..m {
        let a = rng.random_range(0..n);
        let b = rng.random_range(0..n);
        let w = random_value(rng, mode.kind, mode.weight_range);
        let d = rng.random_range(1..=cfg.max_delay.max(1)) as i64;
        spec.add_synapse(format!("n{a}"), format!("n{b}"), w, d);
    }
    for i in 0..cfg.inputs.clamp(1, n) {
        spec.add_input(format!("n{i}"));
    }
    for i in n - cfg.outputs.clamp(1, n)..n {
        spec.add_output(format!("n{i}"));
    }
    build_network(&spec).expect("generated network is valid")
}

/// Random network with `relays` guaranteed relay neurons spliced into
/// existing synapses, plus a few dead hidden neurons and neurons whose
/// incoming weights are all positive and above threshold. Used to exercise
/// the simplifier.
pub fn relay_heavy_network<R: Rng + ?Sized>(
    rng: &mut R,
    cfg: &RandomNetworkConfig,
    relays: usize,
) -> Network {
    let base = random_network(rng, cfg);
    let mut spec = base.to_spec();
    let mode = cfg.mode;
    let kind = mode.kind;
    let wr = mode.weight_range;
    let tr = mode.threshold_range;

    for r in 0..relays {
        let name = format!("r{r}");
        // relay: its single incoming weight is at least its threshold
        let t = random_value(rng, kind, Interval::new(tr.min, tr.max.min(wr.max)));
        let w_in = random_value(rng, kind, Interval::new(t.max(wr.min), wr.max));
        spec.add_neuron(name.clone(), t, random_leak(rng, cfg.leak));
        if !spec.synapses.is_empty() && rng.random_bool(0.7) {
            // splice into an existing synapse
            let k = rng.random_range(0..spec.synapses.len());
            let (from, to) = spec.synapses[k].clone();
            let w_out = spec.weights[k];
            let d = spec.delays[k];
            spec.remove_synapse(k);
            let d1 = rng.random_range(1..=cfg.max_delay.max(1)) as i64;
            spec.add_synapse(from, name.clone(), w_in, d1);
            spec.add_synapse(name, to, w_out, d);
        } else {
            let from = spec.neurons[rng.random_range(0..spec.neurons.len())].clone();
            let to = spec.neurons[rng.random_range(0..spec.neurons.len())].clone();
            let d1 = rng.random_range(1..=cfg.max_delay.max(1)) as i64;
            let d2 = rng.random_range(1..=cfg.max_delay.max(1)) as i64;
            let w_out = random_value(rng, kind, wr);
            spec.add_synapse(from, name.clone(), w_in, d1);
            spec.add_synapse(name, to, w_out, d2);
        }
    }

    // dead ends and isolated neurons
    for k in 0..2 {
        let name = format!("dead{k}");
        spec.add_neuron(name.clone(), random_value(rng, kind, tr), random_leak(rng, cfg.leak));
        if k == 0 {
            let from = spec.neurons[rng.random_range(0..spec.neurons.len() - 1)].clone();
            spec.add_synapse(from, name, random_value(rng, kind, wr), 1);
        }
    }

    // a neuron fed only by strong positive weights
    if wr.max > 0.0 {
        let name = "strong".to_string();
        let t = random_value(rng, kind, Interval::new(tr.min, tr.max.min(wr.max)));
        spec.add_neuron(name.clone(), t, random_leak(rng, cfg.leak));
        let lo = match kind {
            ValueKind::Discrete => t.max(1.0),
            ValueKind::Analog => t.max(1e-3),
        };
        for _ in 0..rng.random_range(1..=3) {
            let from = spec.neurons[rng.random_range(0..spec.neurons.len() - 1)].clone();
            let w = random_value(rng, kind, Interval::new(lo, wr.max));
            spec.add_synapse(from, name.clone(), w, rng.random_range(1..=3));
        }
        let to = spec.outputs[0].clone();
        spec.add_synapse(name, to, random_value(rng, kind, wr), 1);
    }
    build_network(&spec).expect("generated network is valid")
}
