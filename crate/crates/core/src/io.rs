//! Text formats: the JSON network document, the `apply`/`fire` line formats
//! for schedules and rasters, and Graphviz dot export.

use std::fmt::Write as _;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::engine::{SpikeRaster, SpikeSchedule};
use crate::model::{build_network, BuildError, Interval, Network, NetworkSpec, ValueKind, ValueMode};

#[derive(Debug, thiserror::Error)]
pub enum IoError {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error(transparent)]
    Invalid(#[from] BuildError),
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("line {line}: {neuron:?} is not an input neuron")]
    NonInputTarget { line: usize, neuron: String },
    #[error("line {line}: unknown neuron {neuron:?}")]
    UnknownNeuron { line: usize, neuron: String },
}

/// A number written as an integer literal when it is integral, otherwise as
/// the shortest decimal that parses back to the same double.
#[derive(Clone, Copy, Debug, PartialEq)]
struct Num(f64);

impl Serialize for Num {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let v = self.0;
        if v.fract() == 0.0 && v.abs() < 9.0e15 && !(v == 0.0 && v.is_sign_negative()) {
            s.serialize_i64(v as i64)
        } else {
            s.serialize_f64(v)
        }
    }
}

impl<'de> Deserialize<'de> for Num {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        f64::deserialize(d).map(Num)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RangesDoc {
    weight: [Num; 2],
    threshold: [Num; 2],
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NeuronDoc {
    id: String,
    threshold: Num,
    leak: bool,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SynapseDoc {
    from: String,
    to: String,
    weight: Num,
    delay: i64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NetworkDocument {
    value_mode: ValueKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    ranges: Option<RangesDoc>,
    neurons: Vec<NeuronDoc>,
    synapses: Vec<SynapseDoc>,
    inputs: Vec<String>,
    outputs: Vec<String>,
}

fn parse_error(e: serde_json::Error) -> IoError {
    IoError::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    }
}

/// Parses and validates a network document.
pub fn read_network(text: &str) -> Result<Network, IoError> {
    let doc: NetworkDocument = serde_json::from_str(text).map_err(parse_error)?;
    let mut mode = match doc.value_mode {
        ValueKind::Analog => ValueMode::analog(),
        ValueKind::Discrete => ValueMode::discrete(),
    };
    if let Some(r) = &doc.ranges {
        mode.weight_range = Interval::new(r.weight[0].0, r.weight[1].0);
        mode.threshold_range = Interval::new(r.threshold[0].0, r.threshold[1].0);
    }
    let mut spec = NetworkSpec::new(mode);
    for n in doc.neurons {
        spec.add_neuron(n.id, n.threshold.0, n.leak);
    }
    for s in doc.synapses {
        spec.add_synapse(s.from, s.to, s.weight.0, s.delay);
    }
    spec.inputs = doc.inputs;
    spec.outputs = doc.outputs;
    Ok(build_network(&spec)?)
}

/// Serializes `net` in canonical order; equal networks give identical bytes.
pub fn write_network(net: &Network) -> String {
    let mode = net.value_mode();
    let doc = NetworkDocument {
        value_mode: mode.kind,
        ranges: Some(RangesDoc {
            weight: [Num(mode.weight_range.min), Num(mode.weight_range.max)],
            threshold: [Num(mode.threshold_range.min), Num(mode.threshold_range.max)],
        }),
        neurons: net
            .neuron_ids()
            .map(|id| NeuronDoc {
                id: net.name(id).to_owned(),
                threshold: Num(net.threshold(id)),
                leak: net.leak(id),
            })
            .collect(),
        synapses: net
            .synapses()
            .iter()
            .map(|s| SynapseDoc {
                from: net.name(s.from).to_owned(),
                to: net.name(s.to).to_owned(),
                weight: Num(s.weight),
                delay: s.delay as i64,
            })
            .collect(),
        inputs: net.inputs().iter().map(|&i| net.name(i).to_owned()).collect(),
        outputs: net.outputs().iter().map(|&i| net.name(i).to_owned()).collect(),
    };
    let mut text = serde_json::to_string_pretty(&doc).expect("document serializes");
    text.push('\n');
    text
}

fn content_lines(text: &str) -> impl Iterator<Item = (usize, Vec<&str>)> {
    text.lines().enumerate().filter_map(|(i, line)| {
        let line = line.split('#').next().unwrap_or("").trim();
        (!line.is_empty()).then(|| (i + 1, line.split_whitespace().collect()))
    })
}

/// Parses `apply <neuron> <timestep> <value>` lines. Blank lines and `#`
/// comments are ignored.
pub fn read_schedule(text: &str, net: &Network) -> Result<SpikeSchedule, IoError> {
    let mut sched = SpikeSchedule::new();
    for (line, fields) in content_lines(text) {
        let malformed = |message: &str| IoError::Malformed {
            line,
            message: message.to_owned(),
        };
        if fields.len() != 4 || fields[0] != "apply" {
            return Err(malformed("expected `apply <neuron> <timestep> <value>`"));
        }
        let id = net.id(fields[1]).ok_or_else(|| IoError::UnknownNeuron {
            line,
            neuron: fields[1].to_owned(),
        })?;
        if !net.is_input(id) {
            return Err(IoError::NonInputTarget {
                line,
                neuron: fields[1].to_owned(),
            });
        }
        let t: u64 = fields[2].parse().map_err(|_| malformed("bad timestep"))?;
        let v: f64 = fields[3].parse().map_err(|_| malformed("bad value"))?;
        if !v.is_finite() {
            return Err(malformed("value is not finite"));
        }
        if net.value_mode().is_discrete() && v.fract() != 0.0 {
            return Err(malformed("non-integer value in discrete mode"));
        }
        sched.push(id, t, v);
    }
    Ok(sched)
}

pub fn write_schedule(sched: &SpikeSchedule, net: &Network) -> String {
    let mut out = String::new();
    for s in sched.sorted() {
        let _ = writeln!(out, "apply {} {} {}", net.name(s.neuron), s.timestep, s.value);
    }
    out
}

/// One `fire <neuron> <timestep>` line per firing, in raster order.
pub fn write_raster(raster: &SpikeRaster, net: &Network) -> String {
    let mut out = String::new();
    for &(id, t) in &raster.fires {
        let _ = writeln!(out, "fire {} {}", net.name(id), t);
    }
    out
}

pub fn read_raster(text: &str, net: &Network) -> Result<SpikeRaster, IoError> {
    let mut raster = SpikeRaster::default();
    for (line, fields) in content_lines(text) {
        if fields.len() != 3 || fields[0] != "fire" {
            return Err(IoError::Malformed {
                line,
                message: "expected `fire <neuron> <timestep>`".into(),
            });
        }
        let id = net.id(fields[1]).ok_or_else(|| IoError::UnknownNeuron {
            line,
            neuron: fields[1].to_owned(),
        })?;
        let t: u64 = fields[2].parse().map_err(|_| IoError::Malformed {
            line,
            message: "bad timestep".into(),
        })?;
        raster.fires.push((id, t));
        raster.horizon = raster.horizon.max(t + 1);
    }
    raster.fires.sort_by_key(|&(id, t)| (t, id));
    Ok(raster)
}

fn dot_escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

/// Graphviz rendering. Nodes are labeled `name / threshold / leak-flag`,
/// edges `weight, d=delay`; inputs get a double border, outputs are bold.
pub fn to_dot(net: &Network) -> String {
    let mut out = String::from("digraph risp {\n  rankdir=LR;\n  node [shape=circle];\n");
    for id in net.neuron_ids() {
        let leak = if net.leak(id) { "L" } else { "-" };
        let mut attrs = format!(
            "label=\"{} / {} / {}\"",
            dot_escape(net.name(id)),
            net.threshold(id),
            leak
        );
        if net.is_input(id) {
            attrs.push_str(", peripheries=2");
        }
        if net.is_output(id) {
            attrs.push_str(", style=bold");
        }
        let _ = writeln!(out, "  n{} [{}];", id.0, attrs);
    }
    for s in net.synapses() {
        let _ = writeln!(
            out,
            "  n{} -> n{} [label=\"{}, d={}\"];",
            s.from.0, s.to.0, s.weight, s.delay
        );
    }
    out.push_str("}\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::NeuronId;

    const AND_DOC: &str = r#"{
  "value_mode": "discrete",
  "neurons": [
    {"id": "A", "threshold": 1, "leak": false},
    {"id": "B", "threshold": 1, "leak": false},
    {"id": "X", "threshold": 2, "leak": true}
  ],
  "synapses": [
    {"from": "A", "to": "X", "weight": 1, "delay": 1},
    {"from": "B", "to": "X", "weight": 1, "delay": 1}
  ],
  "inputs": ["A", "B"],
  "outputs": ["X"]
}"#;

    #[test]
    fn and_round_trip() {
        let net = read_network(AND_DOC).unwrap();
        let text = write_network(&net);
        let back = read_network(&text).unwrap();
        assert_eq!(net, back);
        assert_eq!(text, write_network(&back));
        assert!(text.contains("\"threshold\": 2,"));
    }

    #[test]
    fn missing_delay_is_parse_error() {
        let doc = AND_DOC.replacen(", \"delay\": 1}", "}", 1);
        match read_network(&doc) {
            Err(IoError::Parse { line, message, .. }) => {
                assert!(line > 1);
                assert!(message.contains("delay"));
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn unknown_key_rejected() {
        let doc = AND_DOC.replacen("\"leak\": true", "\"leak\": true, \"refractory\": 2", 1);
        assert!(matches!(read_network(&doc), Err(IoError::Parse { .. })));
    }

    #[test]
    fn analog_fractional_values_accepted() {
        let doc = r#"{"value_mode": "analog",
            "neurons": [{"id": "2", "threshold": 0.5, "leak": false},
                        {"id": "B", "threshold": -0.66, "leak": false}],
            "synapses": [{"from": "2", "to": "B", "weight": 0.65, "delay": 2}],
            "inputs": ["2"], "outputs": []}"#;
        let net = read_network(doc).unwrap();
        assert_eq!(net.threshold(NeuronId(1)), -0.66);
        assert_eq!(net.synapses()[0].weight, 0.65);
        let back = read_network(&write_network(&net)).unwrap();
        assert_eq!(net, back);
    }

    #[test]
    fn validation_errors_surface() {
        let doc = AND_DOC.replacen("\"delay\": 1", "\"delay\": 0", 1);
        assert!(matches!(read_network(&doc), Err(IoError::Invalid(_))));
    }

    #[test]
    fn schedule_and_raster_lines() {
        let net = read_network(AND_DOC).unwrap();
        let s = read_schedule("apply A 0 1\napply B 0 1", &net).unwrap();
        assert_eq!(s.len(), 2);
        assert!(read_schedule("", &net).unwrap().is_empty());
        assert!(matches!(
            read_schedule("apply X 0 1", &net),
            Err(IoError::NonInputTarget { line: 1, .. })
        ));
        assert!(matches!(
            read_schedule("\napply A zero 1", &net),
            Err(IoError::Malformed { line: 2, .. })
        ));
        let r = crate::engine::run(&net, &s, 4, crate::engine::RecordMode::AllNeurons).unwrap();
        let text = write_raster(&r, &net);
        assert_eq!(text, "fire A 0\nfire B 0\nfire X 1\n");
        assert_eq!(read_raster(&text, &net).unwrap().fires, r.fires);
        assert_eq!(write_schedule(&s, &net), "apply A 0 1\napply B 0 1\n");
    }

    #[test]
    fn dot_for_and() {
        let net = read_network(AND_DOC).unwrap();
        let dot = to_dot(&net);
        assert_eq!(dot.matches("label=\"1, d=1\"").count(), 2);
        assert_eq!(dot.matches(" -> ").count(), 2);
        assert!(dot.contains("n2 [label=\"X / 2 / L\", style=bold];"));
        assert!(dot.contains("n0 [label=\"A / 1 / -\", peripheries=2];"));
    }

    #[test]
    fn dot_for_empty_network() {
        let net = Network::empty(ValueMode::discrete());
        assert_eq!(to_dot(&net), "digraph risp {\n  rankdir=LR;\n  node [shape=circle];\n}\n");
    }

    #[test]
    fn negative_zero_survives() {
        let mut spec = NetworkSpec::new(ValueMode::analog());
        spec.add_neuron("a", -0.0, false);
        let net = build_network(&spec).unwrap();
        let back = read_network(&write_network(&net)).unwrap();
        assert_eq!(net, back);
    }
}
