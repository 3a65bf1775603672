//! Network definition: neurons with a threshold and a leak flag, directed
//! weighted synapses with integer delays, and input/output designations.
//!
//! A network is described by eight parallel sets (neurons, thresholds, leaks,
//! synapses, weights, delays, inputs, outputs). [`NetworkSpec`] holds those
//! sets verbatim so that malformed descriptions can be reported;
//! [`Network`] is the validated, canonically indexed, immutable form the
//! engines run.

use std::collections::{HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

/// Dense canonical index of a neuron inside a [`Network`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct NeuronId(pub u32);

impl NeuronId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for NeuronId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ValueKind {
    Analog,
    Discrete,
}

/// Closed interval `[min, max]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub min: f64,
    pub max: f64,
}

impl Interval {
    pub const fn new(min: f64, max: f64) -> Self {
        Self { min, max }
    }

    #[inline]
    pub fn contains(&self, v: f64) -> bool {
        v >= self.min && v <= self.max
    }

    #[inline]
    pub fn clamp(&self, v: f64) -> f64 {
        v.max(self.min).min(self.max)
    }

    pub fn width(&self) -> f64 {
        self.max - self.min
    }

    /// Smallest interval containing both `self` and `other`.
    pub fn union(&self, other: Interval) -> Interval {
        Interval::new(self.min.min(other.min), self.max.max(other.max))
    }
}

/// Value configuration of a network: analog (real) or discrete (integer)
/// weights and thresholds, each restricted to a closed range.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValueMode {
    pub kind: ValueKind,
    pub weight_range: Interval,
    pub threshold_range: Interval,
}

impl ValueMode {
    /// Analog values, weights and thresholds in `[-1, 1]`.
    pub const fn analog() -> Self {
        Self {
            kind: ValueKind::Analog,
            weight_range: Interval::new(-1.0, 1.0),
            threshold_range: Interval::new(-1.0, 1.0),
        }
    }

    /// Integer values, weights in `[-15, 15]`, thresholds in `[0, 15]`.
    pub const fn discrete() -> Self {
        Self {
            kind: ValueKind::Discrete,
            weight_range: Interval::new(-15.0, 15.0),
            threshold_range: Interval::new(0.0, 15.0),
        }
    }

    pub fn is_discrete(&self) -> bool {
        self.kind == ValueKind::Discrete
    }

    /// Whether `v` is an admissible value for this mode (integrality only,
    /// ranges are checked separately).
    pub fn admits(&self, v: f64) -> bool {
        v.is_finite() && (!self.is_discrete() || v.fract() == 0.0)
    }

    pub fn with_ranges(mut self, weight: Interval, threshold: Interval) -> Self {
        self.weight_range = weight;
        self.threshold_range = threshold;
        self
    }
}

impl Default for ValueMode {
    fn default() -> Self {
        Self::discrete()
    }
}

/// The eight sets, verbatim. Endpoints and designations refer to neurons by
/// name. Nothing here is checked until [`validate`] or [`build_network`].
#[derive(Clone, Debug, Default, PartialEq)]
pub struct NetworkSpec {
    pub neurons: Vec<String>,
    pub thresholds: Vec<f64>,
    pub leaks: Vec<bool>,
    pub synapses: Vec<(String, String)>,
    pub weights: Vec<f64>,
    pub delays: Vec<i64>,
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
    pub value_mode: ValueMode,
}

impl NetworkSpec {
    pub fn new(value_mode: ValueMode) -> Self {
        Self {
            value_mode,
            ..Self::default()
        }
    }

    pub fn add_neuron(&mut self, name: impl Into<String>, threshold: f64, leak: bool) -> &mut Self {
        self.neurons.push(name.into());
        self.thresholds.push(threshold);
        self.leaks.push(leak);
        self
    }

    pub fn add_synapse(
        &mut self,
        from: impl Into<String>,
        to: impl Into<String>,
        weight: f64,
        delay: i64,
    ) -> &mut Self {
        self.synapses.push((from.into(), to.into()));
        self.weights.push(weight);
        self.delays.push(delay);
        self
    }

    pub fn add_input(&mut self, name: impl Into<String>) -> &mut Self {
        self.inputs.push(name.into());
        self
    }

    pub fn add_output(&mut self, name: impl Into<String>) -> &mut Self {
        self.outputs.push(name.into());
        self
    }

    pub fn neuron_position(&self, name: &str) -> Option<usize> {
        self.neurons.iter().position(|n| n == name)
    }

    /// Removes a neuron together with every synapse touching it and its
    /// input/output designations. Returns the number of synapses removed.
    pub fn remove_neuron(&mut self, name: &str) -> usize {
        let Some(pos) = self.neuron_position(name) else {
            return 0;
        };
        self.neurons.remove(pos);
        self.thresholds.remove(pos);
        self.leaks.remove(pos);
        self.inputs.retain(|n| n != name);
        self.outputs.retain(|n| n != name);
        let doomed: Vec<usize> = self
            .synapses
            .iter()
            .enumerate()
            .filter(|(_, (a, b))| a == name || b == name)
            .map(|(i, _)| i)
            .collect();
        for &i in doomed.iter().rev() {
            self.remove_synapse(i);
        }
        doomed.len()
    }

    pub fn remove_synapse(&mut self, index: usize) {
        self.synapses.remove(index);
        self.weights.remove(index);
        self.delays.remove(index);
    }
}

/// Which of the eight sets an arity violation concerns.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SetName {
    Thresholds,
    Leaks,
    Weights,
    Delays,
}

impl fmt::Display for SetName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            SetName::Thresholds => "T",
            SetName::Leaks => "L",
            SetName::Weights => "W",
            SetName::Delays => "D",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum ViolationCode {
    ArityMismatch(SetName),
    DuplicateNeuron,
    UnknownEndpoint,
    DelayTooSmall,
    NonIntegerValue,
    NonFiniteValue,
    OutOfRange,
    UnknownDesignation,
    DuplicateDesignation,
    InvalidRange,
}

impl ViolationCode {
    /// Stable machine-readable code.
    pub fn as_str(&self) -> &'static str {
        match self {
            ViolationCode::ArityMismatch(_) => "arity_mismatch",
            ViolationCode::DuplicateNeuron => "duplicate_neuron",
            ViolationCode::UnknownEndpoint => "unknown_endpoint",
            ViolationCode::DelayTooSmall => "delay_too_small",
            ViolationCode::NonIntegerValue => "non_integer_value",
            ViolationCode::NonFiniteValue => "non_finite_value",
            ViolationCode::OutOfRange => "out_of_range",
            ViolationCode::UnknownDesignation => "unknown_designation",
            ViolationCode::DuplicateDesignation => "duplicate_designation",
            ViolationCode::InvalidRange => "invalid_range",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    pub code: ViolationCode,
    pub message: String,
}

impl Violation {
    fn new(code: ViolationCode, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.code.as_str(), self.message)
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("invalid network: {}", render_violations(.0))]
pub struct BuildError(pub Vec<Violation>);

fn render_violations(v: &[Violation]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("; ")
}

fn check_range(out: &mut Vec<Violation>, what: &str, r: Interval) {
    if !(r.min.is_finite() && r.max.is_finite()) || r.min > r.max {
        out.push(Violation::new(
            ViolationCode::InvalidRange,
            format!("{what} range [{}, {}] is empty or not finite", r.min, r.max),
        ));
    }
}

fn check_value(out: &mut Vec<Violation>, mode: &ValueMode, range: Interval, what: &str, v: f64) {
    if !v.is_finite() {
        out.push(Violation::new(
            ViolationCode::NonFiniteValue,
            format!("{what} is not finite ({v})"),
        ));
        return;
    }
    if mode.is_discrete() && v.fract() != 0.0 {
        out.push(Violation::new(
            ViolationCode::NonIntegerValue,
            format!("{what} = {v} is not an integer in discrete mode"),
        ));
    }
    if !range.contains(v) {
        out.push(Violation::new(
            ViolationCode::OutOfRange,
            format!("{what} = {v} outside [{}, {}]", range.min, range.max),
        ));
    }
}

/// Every invariant violation of `spec`; empty when the spec describes a
/// valid network.
pub fn validate(spec: &NetworkSpec) -> Vec<Violation> {
    let mut out = Vec::new();
    let mode = &spec.value_mode;
    let n = spec.neurons.len();
    let m = spec.synapses.len();

    check_range(&mut out, "weight", mode.weight_range);
    check_range(&mut out, "threshold", mode.threshold_range);
    if mode.is_discrete() {
        for (what, r) in [("weight", mode.weight_range), ("threshold", mode.threshold_range)] {
            if r.min.fract() != 0.0 || r.max.fract() != 0.0 {
                out.push(Violation::new(
                    ViolationCode::InvalidRange,
                    format!("{what} range bounds must be integers in discrete mode"),
                ));
            }
        }
    }
    if !(mode.weight_range.contains(1.0) && mode.weight_range.contains(-1.0)) {
        out.push(Violation::new(
            ViolationCode::InvalidRange,
            "weight range must contain 1 and -1",
        ));
    }
    if !mode.threshold_range.contains(1.0) {
        out.push(Violation::new(
            ViolationCode::InvalidRange,
            "threshold range must contain 1",
        ));
    }

    for (set, len, want) in [
        (SetName::Thresholds, spec.thresholds.len(), n),
        (SetName::Leaks, spec.leaks.len(), n),
        (SetName::Weights, spec.weights.len(), m),
        (SetName::Delays, spec.delays.len(), m),
    ] {
        if len != want {
            out.push(Violation::new(
                ViolationCode::ArityMismatch(set),
                format!("set {set} has {len} entries, expected {want}"),
            ));
        }
    }

    let mut names = HashSet::with_capacity(n);
    for name in &spec.neurons {
        if !names.insert(name.as_str()) {
            out.push(Violation::new(
                ViolationCode::DuplicateNeuron,
                format!("neuron {name:?} declared more than once"),
            ));
        }
    }

    for (name, &t) in spec.neurons.iter().zip(&spec.thresholds) {
        check_value(&mut out, mode, mode.threshold_range, &format!("threshold of {name:?}"), t);
    }

    for (i, (from, to)) in spec.synapses.iter().enumerate() {
        for end in [from, to] {
            if !names.contains(end.as_str()) {
                out.push(Violation::new(
                    ViolationCode::UnknownEndpoint,
                    format!("synapse {i} ({from} -> {to}) references unknown neuron {end:?}"),
                ));
            }
        }
        if let Some(&w) = spec.weights.get(i) {
            check_value(
                &mut out,
                mode,
                mode.weight_range,
                &format!("weight of synapse {i} ({from} -> {to})"),
                w,
            );
        }
        if let Some(&d) = spec.delays.get(i) {
            if d < 1 {
                out.push(Violation::new(
                    ViolationCode::DelayTooSmall,
                    format!("delay < 1 on synapse {i} ({from} -> {to}): {d}"),
                ));
            }
        }
    }

    for (what, list) in [("input", &spec.inputs), ("output", &spec.outputs)] {
        let mut seen = HashSet::new();
        for name in list {
            if !names.contains(name.as_str()) {
                out.push(Violation::new(
                    ViolationCode::UnknownDesignation,
                    format!("{what} {name:?} is not a neuron"),
                ));
            }
            if !seen.insert(name.as_str()) {
                out.push(Violation::new(
                    ViolationCode::DuplicateDesignation,
                    format!("{what} {name:?} listed more than once"),
                ));
            }
        }
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Synapse {
    pub from: NeuronId,
    pub to: NeuronId,
    pub weight: f64,
    pub delay: u32,
}

/// A validated network. Neurons keep their declaration order as canonical
/// index; synapses are sorted by `(from, to, delay, weight)` so that equal
/// descriptions produce identical networks and each neuron's outgoing
/// synapses are contiguous.
#[derive(Clone, Debug)]
pub struct Network {
    names: Vec<String>,
    thresholds: Vec<f64>,
    leaks: Vec<bool>,
    synapses: Vec<Synapse>,
    inputs: Vec<NeuronId>,
    outputs: Vec<NeuronId>,
    value_mode: ValueMode,
    // derived
    out_offsets: Vec<u32>,
    in_degree: Vec<u32>,
    is_input: Vec<bool>,
    by_name: HashMap<String, NeuronId>,
    max_delay: u32,
}

impl PartialEq for Network {
    fn eq(&self, other: &Self) -> bool {
        self.names == other.names
            && bits_eq(&self.thresholds, &other.thresholds)
            && self.leaks == other.leaks
            && self.synapses.len() == other.synapses.len()
            && self.synapses.iter().zip(&other.synapses).all(|(a, b)| {
                a.from == b.from
                    && a.to == b.to
                    && a.delay == b.delay
                    && a.weight.to_bits() == b.weight.to_bits()
            })
            && self.inputs == other.inputs
            && self.outputs == other.outputs
            && self.value_mode == other.value_mode
    }
}

fn bits_eq(a: &[f64], b: &[f64]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits())
}

/// Validates `spec` and builds the canonical network.
pub fn build_network(spec: &NetworkSpec) -> Result<Network, BuildError> {
    let violations = validate(spec);
    if !violations.is_empty() {
        return Err(BuildError(violations));
    }
    let by_name: HashMap<String, NeuronId> = spec
        .neurons
        .iter()
        .enumerate()
        .map(|(i, n)| (n.clone(), NeuronId(i as u32)))
        .collect();

    let mut synapses: Vec<Synapse> = spec
        .synapses
        .iter()
        .zip(spec.weights.iter().zip(&spec.delays))
        .map(|((from, to), (&weight, &delay))| Synapse {
            from: by_name[from],
            to: by_name[to],
            weight,
            delay: delay as u32,
        })
        .collect();
    synapses.sort_by(|a, b| {
        (a.from, a.to, a.delay)
            .cmp(&(b.from, b.to, b.delay))
            .then(a.weight.total_cmp(&b.weight))
    });

    let mut inputs: Vec<NeuronId> = spec.inputs.iter().map(|n| by_name[n]).collect();
    let mut outputs: Vec<NeuronId> = spec.outputs.iter().map(|n| by_name[n]).collect();
    inputs.sort_unstable();
    outputs.sort_unstable();

    Ok(Network::assemble(
        spec.neurons.clone(),
        spec.thresholds.clone(),
        spec.leaks.clone(),
        synapses,
        inputs,
        outputs,
        spec.value_mode,
        by_name,
    ))
}

impl Network {
    #[allow(clippy::too_many_arguments)]
    fn assemble(
        names: Vec<String>,
        thresholds: Vec<f64>,
        leaks: Vec<bool>,
        synapses: Vec<Synapse>,
        inputs: Vec<NeuronId>,
        outputs: Vec<NeuronId>,
        value_mode: ValueMode,
        by_name: HashMap<String, NeuronId>,
    ) -> Self {
        let n = names.len();
        let mut out_offsets = vec![0u32; n + 1];
        let mut in_degree = vec![0u32; n];
        for s in &synapses {
            out_offsets[s.from.index() + 1] += 1;
            in_degree[s.to.index()] += 1;
        }
        for i in 0..n {
            out_offsets[i + 1] += out_offsets[i];
        }
        let mut is_input = vec![false; n];
        for id in &inputs {
            is_input[id.index()] = true;
        }
        let max_delay = synapses.iter().map(|s| s.delay).max().unwrap_or(0);
        Self {
            names,
            thresholds,
            leaks,
            synapses,
            inputs,
            outputs,
            value_mode,
            out_offsets,
            in_degree,
            is_input,
            by_name,
            max_delay,
        }
    }

    /// The empty network (no neurons, no synapses).
    pub fn empty(value_mode: ValueMode) -> Self {
        build_network(&NetworkSpec::new(value_mode)).expect("empty network is valid")
    }

    /// Number of neurons, `N`.
    pub fn neuron_count(&self) -> usize {
        self.names.len()
    }

    /// Number of synapses, `M`.
    pub fn synapse_count(&self) -> usize {
        self.synapses.len()
    }

    pub fn value_mode(&self) -> &ValueMode {
        &self.value_mode
    }

    pub fn name(&self, id: NeuronId) -> &str {
        &self.names[id.index()]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn id(&self, name: &str) -> Option<NeuronId> {
        self.by_name.get(name).copied()
    }

    pub fn threshold(&self, id: NeuronId) -> f64 {
        self.thresholds[id.index()]
    }

    pub fn thresholds(&self) -> &[f64] {
        &self.thresholds
    }

    pub fn leak(&self, id: NeuronId) -> bool {
        self.leaks[id.index()]
    }

    pub fn leaks(&self) -> &[bool] {
        &self.leaks
    }

    pub fn synapses(&self) -> &[Synapse] {
        &self.synapses
    }

    /// Outgoing synapses of `id` together with their canonical indices.
    pub fn outgoing(&self, id: NeuronId) -> std::ops::Range<usize> {
        self.out_offsets[id.index()] as usize..self.out_offsets[id.index() + 1] as usize
    }

    pub fn in_degree(&self, id: NeuronId) -> usize {
        self.in_degree[id.index()] as usize
    }

    pub fn out_degree(&self, id: NeuronId) -> usize {
        self.outgoing(id).len()
    }

    pub fn inputs(&self) -> &[NeuronId] {
        &self.inputs
    }

    pub fn outputs(&self) -> &[NeuronId] {
        &self.outputs
    }

    pub fn is_input(&self, id: NeuronId) -> bool {
        self.is_input[id.index()]
    }

    pub fn is_output(&self, id: NeuronId) -> bool {
        self.outputs.binary_search(&id).is_ok()
    }

    pub fn max_delay(&self) -> u32 {
        self.max_delay
    }

    pub fn neuron_ids(&self) -> impl Iterator<Item = NeuronId> + '_ {
        (0..self.names.len() as u32).map(NeuronId)
    }

    /// Re-extracts the eight sets in canonical order.
    pub fn to_spec(&self) -> NetworkSpec {
        NetworkSpec {
            neurons: self.names.clone(),
            thresholds: self.thresholds.clone(),
            leaks: self.leaks.clone(),
            synapses: self
                .synapses
                .iter()
                .map(|s| (self.name(s.from).to_owned(), self.name(s.to).to_owned()))
                .collect(),
            weights: self.synapses.iter().map(|s| s.weight).collect(),
            delays: self.synapses.iter().map(|s| s.delay as i64).collect(),
            inputs: self.inputs.iter().map(|&i| self.name(i).to_owned()).collect(),
            outputs: self.outputs.iter().map(|&i| self.name(i).to_owned()).collect(),
            value_mode: self.value_mode,
        }
    }

    /// Violations of the network's own invariants. Always empty for a
    /// network obtained through [`build_network`].
    pub fn validate(&self) -> Vec<Violation> {
        validate(&self.to_spec())
    }

    /// Sorted input and output names, the observable interface.
    pub fn interface(&self) -> (Vec<&str>, Vec<&str>) {
        let mut i: Vec<&str> = self.inputs.iter().map(|&x| self.name(x)).collect();
        let mut o: Vec<&str> = self.outputs.iter().map(|&x| self.name(x)).collect();
        i.sort_unstable();
        o.sort_unstable();
        (i, o)
    }
}
