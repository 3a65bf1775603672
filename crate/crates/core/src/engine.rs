//! Discrete-time simulation.
//!
//! Semantics, per timestep `t`:
//!
//! 1. external spikes scheduled at `t` are delivered to their input neuron
//!    during `t`;
//! 2. a neuron firing at the end of `t` delivers `w` to `v` during `t + d`
//!    for each outgoing synapse `(u -> v, w, d)`;
//! 3. at the end of `t` every neuron that received at least one delivery is
//!    checked: it fires and resets to 0 if `potential >= threshold`,
//!    otherwise a leaking neuron resets to 0 and a non-leaking one keeps its
//!    potential;
//! 4. neurons without deliveries are not checked;
//! 5. potentials are unbounded.
//!
//! Deliveries to a neuron within one timestep are added in canonical order:
//! external spikes first (schedule order), then synaptic deliveries by
//! canonical synapse index. Both engines follow that order, so analog runs
//! are bit-identical too.
//!
//! [`run`] is the dense reference: it scans every synapse at every
//! timestep against the recorded fire history. [`run_event_driven`] and
//! [`EngineState`] schedule deliveries forward in a timing wheel and skip
//! idle timesteps.

use std::mem;

use crate::model::{Network, NeuronId};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EngineError {
    #[error("schedule targets {0:?}, which is not an input neuron")]
    NonInputTarget(String),
    #[error("delivery to unknown neuron {0}")]
    UnknownNeuron(NeuronId),
    #[error("spike value {value} for {neuron:?} is not an integer in discrete mode")]
    NonIntegerValue { neuron: String, value: f64 },
    #[error("spike value for {0:?} is not finite")]
    NonFiniteValue(String),
}

/// One externally applied spike.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScheduledSpike {
    pub neuron: NeuronId,
    pub timestep: u64,
    pub value: f64,
}

/// Timed input spikes. Entries may be in any order; they are applied in
/// timestep order, and in insertion order within a timestep.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SpikeSchedule {
    pub entries: Vec<ScheduledSpike>,
}

impl SpikeSchedule {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, neuron: NeuronId, timestep: u64, value: f64) -> &mut Self {
        self.entries.push(ScheduledSpike {
            neuron,
            timestep,
            value,
        });
        self
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Entries stably sorted by timestep.
    pub fn sorted(&self) -> Vec<ScheduledSpike> {
        let mut e = self.entries.clone();
        e.sort_by_key(|s| s.timestep);
        e
    }

    /// Checks that every entry targets an input neuron of `net` with an
    /// admissible value.
    pub fn check(&self, net: &Network) -> Result<(), EngineError> {
        for s in &self.entries {
            if s.neuron.index() >= net.neuron_count() {
                return Err(EngineError::UnknownNeuron(s.neuron));
            }
            let name = net.name(s.neuron);
            if !net.is_input(s.neuron) {
                return Err(EngineError::NonInputTarget(name.to_owned()));
            }
            if !s.value.is_finite() {
                return Err(EngineError::NonFiniteValue(name.to_owned()));
            }
            if net.value_mode().is_discrete() && s.value.fract() != 0.0 {
                return Err(EngineError::NonIntegerValue {
                    neuron: name.to_owned(),
                    value: s.value,
                });
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum RecordMode {
    AllNeurons,
    #[default]
    OutputsOnly,
}

/// Recorded firings, sorted by `(timestep, neuron)`. `horizon` is the
/// number of simulated timesteps.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SpikeRaster {
    pub fires: Vec<(NeuronId, u64)>,
    pub horizon: u64,
}

impl SpikeRaster {
    pub fn count(&self, id: NeuronId) -> usize {
        self.fires.iter().filter(|(n, _)| *n == id).count()
    }

    pub fn times(&self, id: NeuronId) -> Vec<u64> {
        self.fires
            .iter()
            .filter(|(n, _)| *n == id)
            .map(|&(_, t)| t)
            .collect()
    }

    pub fn fired_at(&self, id: NeuronId, t: u64) -> bool {
        self.fires.contains(&(id, t))
    }

    /// Keeps only fires of the given neurons.
    pub fn restricted_to(&self, ids: &[NeuronId]) -> SpikeRaster {
        SpikeRaster {
            fires: self
                .fires
                .iter()
                .copied()
                .filter(|(n, _)| ids.contains(n))
                .collect(),
            horizon: self.horizon,
        }
    }
}

/// Delivery and fire totals of one simulation.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct RunStats {
    /// External plus synaptic deliveries integrated within the horizon.
    pub deliveries: u64,
    pub fires: u64,
}

fn record_filter(net: &Network, record: RecordMode) -> Vec<bool> {
    match record {
        RecordMode::AllNeurons => vec![true; net.neuron_count()],
        RecordMode::OutputsOnly => {
            let mut keep = vec![false; net.neuron_count()];
            for o in net.outputs() {
                keep[o.index()] = true;
            }
            keep
        }
    }
}

/// Dense reference simulation of timesteps `0..horizon`.
pub fn run(
    net: &Network,
    schedule: &SpikeSchedule,
    horizon: u64,
    record: RecordMode,
) -> Result<SpikeRaster, EngineError> {
    run_reference_with_stats(net, schedule, horizon, record).map(|(r, _)| r)
}

pub fn run_reference_with_stats(
    net: &Network,
    schedule: &SpikeSchedule,
    horizon: u64,
    record: RecordMode,
) -> Result<(SpikeRaster, RunStats), EngineError> {
    schedule.check(net)?;
    let n = net.neuron_count();
    let keep = record_filter(net, record);
    let ext = schedule.sorted();
    let mut next_ext = 0usize;

    let mut potential = vec![0.0f64; n];
    let mut received = vec![false; n];
    // history[t * n + v]: v fired at t
    let mut history: Vec<bool> = Vec::with_capacity(n * horizon as usize);
    let mut raster = SpikeRaster {
        fires: Vec::new(),
        horizon,
    };
    let mut stats = RunStats::default();

    for t in 0..horizon {
        received.iter_mut().for_each(|r| *r = false);
        while next_ext < ext.len() && ext[next_ext].timestep < t {
            next_ext += 1;
        }
        while next_ext < ext.len() && ext[next_ext].timestep == t {
            let s = ext[next_ext];
            potential[s.neuron.index()] += s.value;
            received[s.neuron.index()] = true;
            stats.deliveries += 1;
            next_ext += 1;
        }
        for s in net.synapses() {
            let d = s.delay as u64;
            if t >= d && history[((t - d) as usize) * n + s.from.index()] {
                potential[s.to.index()] += s.weight;
                received[s.to.index()] = true;
                stats.deliveries += 1;
            }
        }
        for v in 0..n {
            let mut fired = false;
            if received[v] {
                if potential[v] >= net.thresholds()[v] {
                    fired = true;
                    potential[v] = 0.0;
                } else if net.leaks()[v] {
                    potential[v] = 0.0;
                }
            }
            history.push(fired);
            if fired {
                stats.fires += 1;
                if keep[v] {
                    raster.fires.push((NeuronId(v as u32), t));
                }
            }
        }
    }
    Ok((raster, stats))
}

#[derive(Clone, Copy, Debug)]
struct Pending {
    synapse: u32,
    target: u32,
    weight: f64,
}

/// Streaming simulation state for one network. Owns the potentials and
/// the pending deliveries; advance it with [`EngineState::step`].
#[derive(Clone, Debug)]
pub struct EngineState {
    potentials: Vec<f64>,
    wheel: Vec<Vec<Pending>>,
    pending: usize,
    now: u64,
    /// Wheel slot of `now`.
    cursor: usize,
    received: Vec<bool>,
    touched: Vec<u32>,
    fired: Vec<NeuronId>,
    ordered_sums: bool,
    deliveries: u64,
}

impl EngineState {
    /// Fresh state sized for `net`: all potentials 0, nothing pending.
    pub fn new(net: &Network) -> Self {
        let n = net.neuron_count();
        Self {
            potentials: vec![0.0; n],
            wheel: vec![Vec::new(); net.max_delay() as usize + 1],
            pending: 0,
            now: 0,
            cursor: 0,
            received: vec![false; n],
            touched: Vec::new(),
            fired: Vec::new(),
            // integer-valued sums are exact in any order
            ordered_sums: !net.value_mode().is_discrete(),
            deliveries: 0,
        }
    }

    /// Current timestep, i.e. the one the next [`step`](Self::step) simulates.
    pub fn now(&self) -> u64 {
        self.now
    }

    pub fn potentials(&self) -> &[f64] {
        &self.potentials
    }

    pub fn potential(&self, id: NeuronId) -> f64 {
        self.potentials[id.index()]
    }

    /// Number of deliveries scheduled but not yet integrated.
    pub fn pending(&self) -> usize {
        self.pending
    }

    /// Total deliveries integrated so far.
    pub fn deliveries(&self) -> u64 {
        self.deliveries
    }

    /// Returns to the fresh state: potentials 0, nothing pending, `now = 0`.
    pub fn reset(&mut self) {
        self.potentials.iter_mut().for_each(|p| *p = 0.0);
        self.wheel.iter_mut().for_each(Vec::clear);
        self.pending = 0;
        self.now = 0;
        self.cursor = 0;
        self.deliveries = 0;
        self.fired.clear();
        self.touched.clear();
    }

    /// Simulates the current timestep with the given external deliveries and
    /// returns the neurons that fired, ascending.
    pub fn step(
        &mut self,
        net: &Network,
        external: &[(NeuronId, f64)],
    ) -> Result<&[NeuronId], EngineError> {
        debug_assert_eq!(self.potentials.len(), net.neuron_count());
        self.fired.clear();
        if external.is_empty() && self.pending == 0 {
            self.tick();
            return Ok(&self.fired);
        }
        let n = self.potentials.len();
        for &(id, _) in external {
            if id.index() >= n {
                return Err(EngineError::UnknownNeuron(id));
            }
        }

        let slot = self.cursor;
        let mut bucket = mem::take(&mut self.wheel[slot]);
        self.pending -= bucket.len();
        if self.ordered_sums && !bucket.windows(2).all(|w| w[0].synapse <= w[1].synapse) {
            bucket.sort_by_key(|p| p.synapse);
        }

        for &(id, value) in external {
            self.deliver(id.0, value);
        }
        for p in &bucket {
            self.deliver(p.target, p.weight);
        }
        self.deliveries += (external.len() + bucket.len()) as u64;
        bucket.clear();
        self.wheel[slot] = bucket;

        self.touched.sort_unstable();
        let thresholds = net.thresholds();
        let leaks = net.leaks();
        for &v in &self.touched {
            let v = v as usize;
            self.received[v] = false;
            if self.potentials[v] >= thresholds[v] {
                self.potentials[v] = 0.0;
                self.fired.push(NeuronId(v as u32));
            } else if leaks[v] {
                self.potentials[v] = 0.0;
            }
        }
        self.touched.clear();

        let len = self.wheel.len();
        let synapses = net.synapses();
        for &u in &self.fired {
            for si in net.outgoing(u) {
                let s = &synapses[si];
                // delay < len, so one wrap suffices
                let mut at = slot + s.delay as usize;
                if at >= len {
                    at -= len;
                }
                self.wheel[at].push(Pending {
                    synapse: si as u32,
                    target: s.to.0,
                    weight: s.weight,
                });
                self.pending += 1;
            }
        }
        self.tick();
        Ok(&self.fired)
    }

    #[inline]
    fn tick(&mut self) {
        self.now += 1;
        self.cursor += 1;
        if self.cursor == self.wheel.len() {
            self.cursor = 0;
        }
    }

    /// Skips `steps` timesteps without external input. Only possible when
    /// nothing is pending; returns `false` and does nothing otherwise.
    pub fn advance_idle(&mut self, steps: u64) -> bool {
        if self.pending > 0 {
            return false;
        }
        self.fired.clear();
        self.now += steps;
        self.cursor = ((self.cursor as u64 + steps) % self.wheel.len() as u64) as usize;
        true
    }

    #[inline]
    fn deliver(&mut self, target: u32, w: f64) {
        let v = target as usize;
        self.potentials[v] += w;
        if !self.received[v] {
            self.received[v] = true;
            self.touched.push(target);
        }
    }
}

/// Event-driven simulation of timesteps `0..horizon`; produces the same
/// raster as [`run`].
pub fn run_event_driven(
    net: &Network,
    schedule: &SpikeSchedule,
    horizon: u64,
    record: RecordMode,
) -> Result<SpikeRaster, EngineError> {
    run_event_driven_with_stats(net, schedule, horizon, record).map(|(r, _)| r)
}

pub fn run_event_driven_with_stats(
    net: &Network,
    schedule: &SpikeSchedule,
    horizon: u64,
    record: RecordMode,
) -> Result<(SpikeRaster, RunStats), EngineError> {
    schedule.check(net)?;
    let keep = record_filter(net, record);
    let ext = schedule.sorted();
    let mut state = EngineState::new(net);
    let mut raster = SpikeRaster {
        fires: Vec::new(),
        horizon,
    };
    let mut stats = RunStats::default();
    let mut batch: Vec<(NeuronId, f64)> = Vec::new();
    let mut i = 0usize;
    for t in 0..horizon {
        batch.clear();
        while i < ext.len() && ext[i].timestep < t {
            i += 1;
        }
        while i < ext.len() && ext[i].timestep == t {
            batch.push((ext[i].neuron, ext[i].value));
            i += 1;
        }
        let fired = state.step(net, &batch)?;
        stats.fires += fired.len() as u64;
        raster
            .fires
            .extend(fired.iter().filter(|id| keep[id.index()]).map(|&id| (id, t)));
        if i >= ext.len() && state.pending() == 0 {
            break;
        }
    }
    stats.deliveries = state.deliveries();
    Ok((raster, stats))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_network, NetworkSpec, ValueMode};

    fn and_net() -> Network {
        let mut s = NetworkSpec::new(ValueMode::discrete());
        s.add_neuron("A", 1.0, false)
            .add_neuron("B", 1.0, false)
            .add_neuron("X", 2.0, true)
            .add_synapse("A", "X", 1.0, 1)
            .add_synapse("B", "X", 1.0, 1)
            .add_input("A")
            .add_input("B")
            .add_output("X");
        build_network(&s).unwrap()
    }

    fn both_engines(
        net: &Network,
        sched: &SpikeSchedule,
        horizon: u64,
        record: RecordMode,
    ) -> SpikeRaster {
        let a = run(net, sched, horizon, record).unwrap();
        let b = run_event_driven(net, sched, horizon, record).unwrap();
        assert_eq!(a, b);
        a
    }

    #[test]
    fn and_fires_at_one_with_both_inputs() {
        let net = and_net();
        let (a, b, x) = (net.id("A").unwrap(), net.id("B").unwrap(), net.id("X").unwrap());
        let mut s = SpikeSchedule::new();
        s.push(a, 0, 1.0).push(b, 0, 1.0);
        let r = both_engines(&net, &s, 5, RecordMode::AllNeurons);
        assert_eq!(r.fires, vec![(a, 0), (b, 0), (x, 1)]);
    }

    #[test]
    fn and_single_input_leaks_to_zero() {
        let net = and_net();
        let (a, x) = (net.id("A").unwrap(), net.id("X").unwrap());
        let mut state = EngineState::new(&net);
        assert_eq!(state.step(&net, &[(a, 1.0)]).unwrap(), &[a]);
        assert!(state.step(&net, &[]).unwrap().is_empty());
        assert_eq!(state.potential(x), 0.0);
        let mut s = SpikeSchedule::new();
        s.push(a, 0, 1.0);
        let r = both_engines(&net, &s, 5, RecordMode::OutputsOnly);
        assert!(r.fires.is_empty());
    }

    fn single(threshold: f64, leak: bool) -> Network {
        let mut s = NetworkSpec::new(ValueMode::analog().with_ranges(
            crate::model::Interval::new(-2.0, 2.0),
            crate::model::Interval::new(-2.0, 2.0),
        ));
        s.add_neuron("N", threshold, leak).add_input("N").add_output("N");
        build_network(&s).unwrap()
    }

    #[test]
    fn non_leak_neuron_accumulates_across_gaps() {
        let net = single(2.0, false);
        let id = NeuronId(0);
        let mut s = SpikeSchedule::new();
        s.push(id, 1, 1.0).push(id, 5, 1.0);
        let r = both_engines(&net, &s, 10, RecordMode::AllNeurons);
        assert_eq!(r.fires, vec![(id, 5)]);
    }

    #[test]
    fn fresh_state_without_deliveries() {
        let net = and_net();
        let mut state = EngineState::new(&net);
        assert!(state.step(&net, &[]).unwrap().is_empty());
        assert!(state.potentials().iter().all(|&p| p == 0.0));
        assert_eq!(state.now(), 1);
    }

    #[test]
    fn leak_neuron_below_threshold_resets() {
        let net = single(2.0, true);
        let mut state = EngineState::new(&net);
        assert!(state.step(&net, &[(NeuronId(0), 1.0)]).unwrap().is_empty());
        assert_eq!(state.potential(NeuronId(0)), 0.0);
    }

    #[test]
    fn negative_threshold_fires_on_any_delivery() {
        let net = single(-1.0, false);
        let mut state = EngineState::new(&net);
        assert_eq!(state.step(&net, &[(NeuronId(0), 0.65)]).unwrap(), &[NeuronId(0)]);
        // unchecked without deliveries, despite threshold below the potential
        for _ in 0..10 {
            assert!(state.step(&net, &[]).unwrap().is_empty());
        }
    }

    #[test]
    fn step_rejects_unknown_neuron() {
        let net = and_net();
        let mut state = EngineState::new(&net);
        assert_eq!(
            state.step(&net, &[(NeuronId(9), 1.0)]).unwrap_err(),
            EngineError::UnknownNeuron(NeuronId(9))
        );
    }

    #[test]
    fn reset_restores_fresh_state() {
        let net = and_net();
        let a = net.id("A").unwrap();
        let mut state = EngineState::new(&net);
        state.step(&net, &[(a, 1.0)]).unwrap();
        assert_eq!(state.pending(), 1);
        state.reset();
        assert_eq!(state.pending(), 0);
        assert_eq!(state.now(), 0);
        let once = state.clone();
        state.reset();
        assert_eq!(format!("{once:?}"), format!("{state:?}"));
    }

    #[test]
    fn schedule_errors() {
        let net = and_net();
        let mut s = SpikeSchedule::new();
        s.push(net.id("X").unwrap(), 0, 1.0);
        assert!(matches!(run(&net, &s, 3, RecordMode::AllNeurons), Err(EngineError::NonInputTarget(_))));
        let mut s = SpikeSchedule::new();
        s.push(net.id("A").unwrap(), 0, 0.5);
        assert!(matches!(
            run_event_driven(&net, &s, 3, RecordMode::AllNeurons),
            Err(EngineError::NonIntegerValue { .. })
        ));
    }

    #[test]
    fn delay_is_exact() {
        let mut s = NetworkSpec::new(ValueMode::discrete());
        s.add_neuron("I", 1.0, false)
            .add_neuron("O", 1.0, false)
            .add_synapse("I", "O", 1.0, 7)
            .add_input("I")
            .add_output("O");
        let net = build_network(&s).unwrap();
        let mut sch = SpikeSchedule::new();
        sch.push(NeuronId(0), 3, 1.0);
        let r = both_engines(&net, &sch, 20, RecordMode::OutputsOnly);
        assert_eq!(r.fires, vec![(NeuronId(1), 10)]);
        // beyond the horizon nothing is recorded
        let r = both_engines(&net, &sch, 10, RecordMode::OutputsOnly);
        assert!(r.fires.is_empty());
    }

    #[test]
    fn delivery_counts_match() {
        let net = and_net();
        let mut s = SpikeSchedule::new();
        s.push(NeuronId(0), 0, 1.0).push(NeuronId(1), 0, 1.0).push(NeuronId(0), 2, 1.0);
        let (_, a) = run_reference_with_stats(&net, &s, 10, RecordMode::AllNeurons).unwrap();
        let (_, b) = run_event_driven_with_stats(&net, &s, 10, RecordMode::AllNeurons).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.deliveries, 6);
    }
}
