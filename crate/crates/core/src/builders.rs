//! Hand-built networks: two-input logic gates and a spike-count comparator.

use crate::model::{build_network, Interval, Network, NetworkSpec, NeuronId, ValueMode};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GateKind {
    And,
    Or,
    Xor,
}

impl GateKind {
    pub const ALL: [GateKind; 3] = [GateKind::And, GateKind::Or, GateKind::Xor];

    pub fn eval(self, a: bool, b: bool) -> bool {
        match self {
            GateKind::And => a && b,
            GateKind::Or => a || b,
            GateKind::Xor => a != b,
        }
    }
}

/// A gate network with inputs `A`, `B` and output `X`. `X` fires at
/// `latency` after unit spikes applied at the same timestep iff the gate
/// evaluates true.
#[derive(Clone, Debug)]
pub struct Gate {
    pub network: Network,
    pub latency: u64,
}

pub fn build_gate(kind: GateKind) -> Gate {
    let mut s = NetworkSpec::new(ValueMode::discrete());
    s.add_neuron("A", 1.0, false)
        .add_neuron("B", 1.0, false)
        .add_input("A")
        .add_input("B");
    let latency = match kind {
        GateKind::And | GateKind::Or => {
            let threshold = if kind == GateKind::And { 2.0 } else { 1.0 };
            s.add_neuron("X", threshold, true)
                .add_synapse("A", "X", 1.0, 1)
                .add_synapse("B", "X", 1.0, 1);
            1
        }
        GateKind::Xor => {
            // X = OR(A, B) inhibited by AND(A, B) one step later
            s.add_neuron("H", 2.0, true)
                .add_neuron("X", 1.0, true)
                .add_synapse("A", "H", 1.0, 1)
                .add_synapse("B", "H", 1.0, 1)
                .add_synapse("A", "X", 1.0, 2)
                .add_synapse("B", "X", 1.0, 2)
                .add_synapse("H", "X", -2.0, 1);
            2
        }
    };
    s.add_output("X");
    Gate {
        network: build_network(&s).expect("gate network is valid"),
        latency,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum TieBreak {
    #[default]
    None,
    FavorX,
    FavorY,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ComparatorSpec {
    /// Interval length in timesteps.
    pub t: u64,
    pub tie_break: TieBreak,
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
#[error("comparator interval must be at least 1 timestep, got {0}")]
pub struct InvalidComparator(pub u64);

#[derive(Clone, Debug)]
pub struct Comparator {
    pub network: Network,
    pub bias: NeuronId,
    pub input_x: NeuronId,
    pub input_y: NeuronId,
    pub output_x: NeuronId,
    pub output_y: NeuronId,
    /// Timestep, relative to the trial start, at which the winning output fires.
    pub output_timestep: u64,
}

/// Builds a network deciding which of `I_X`, `I_Y` spiked more during
/// `[0, t-1]`, given one `Bias` spike at 0.
///
/// Hidden accumulators `H_X` and `H_Y` (no leak, threshold `t+1`) integrate
/// `+1` from their own input and `-1` from the other. During accumulation
/// their potential stays within `[-t, t]`, so they never fire. At timestep
/// `t` the bias adds a probe of `t` (plus 1 on the favored side for tie
/// breaking), so `H_X` fires iff `a - b >= 1`, and relays to `O_X` at `t+1`.
/// At `t+1` the bias adds `t+1` to both accumulators, which forces them to
/// fire and return to 0; the resulting relay at `t+2` is cancelled by a
/// bias inhibition of the leaking outputs arriving at the same timestep.
pub fn build_comparator(spec: ComparatorSpec) -> Result<Comparator, InvalidComparator> {
    let t = spec.t;
    if t < 1 {
        return Err(InvalidComparator(t));
    }
    let tf = t as f64;
    let ti = t as i64;
    let bound = (tf + 1.0).max(15.0);
    let mode = ValueMode::discrete()
        .with_ranges(Interval::new(-bound, bound), Interval::new(0.0, bound));

    let mut s = NetworkSpec::new(mode);
    s.add_neuron("I_X", 1.0, false)
        .add_neuron("I_Y", 1.0, false)
        .add_neuron("Bias", 1.0, false)
        .add_neuron("H_X", tf + 1.0, false)
        .add_neuron("H_Y", tf + 1.0, false)
        .add_neuron("O_X", 1.0, true)
        .add_neuron("O_Y", 1.0, true);
    for (own, other, hidden, out, favored) in [
        ("I_X", "I_Y", "H_X", "O_X", spec.tie_break == TieBreak::FavorX),
        ("I_Y", "I_X", "H_Y", "O_Y", spec.tie_break == TieBreak::FavorY),
    ] {
        s.add_synapse(own, hidden, 1.0, 1)
            .add_synapse(other, hidden, -1.0, 1)
            .add_synapse("Bias", hidden, tf, ti)
            .add_synapse("Bias", hidden, tf + 1.0, ti + 1)
            .add_synapse(hidden, out, 1.0, 1)
            .add_synapse("Bias", out, -1.0, ti + 2);
        if favored {
            s.add_synapse("Bias", hidden, 1.0, ti);
        }
    }
    s.add_input("I_X").add_input("I_Y").add_input("Bias");
    s.add_output("O_X").add_output("O_Y");
    let network = build_network(&s).expect("comparator network is valid");
    let id = |n: &str| network.id(n).expect("named neuron exists");
    Ok(Comparator {
        bias: id("Bias"),
        input_x: id("I_X"),
        input_y: id("I_Y"),
        output_x: id("O_X"),
        output_y: id("O_Y"),
        output_timestep: t + 1,
        network,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{run, run_event_driven, RecordMode, SpikeSchedule};

    fn gate_trial(g: &Gate, a: bool, b: bool) -> Vec<u64> {
        let net = &g.network;
        let mut s = SpikeSchedule::new();
        if a {
            s.push(net.id("A").unwrap(), 0, 1.0);
        }
        if b {
            s.push(net.id("B").unwrap(), 0, 1.0);
        }
        let r = run(net, &s, 10, RecordMode::OutputsOnly).unwrap();
        assert_eq!(r, run_event_driven(net, &s, 10, RecordMode::OutputsOnly).unwrap());
        r.times(net.id("X").unwrap())
    }

    #[test]
    fn truth_tables() {
        for kind in GateKind::ALL {
            let g = build_gate(kind);
            for (a, b) in [(false, false), (false, true), (true, false), (true, true)] {
                let want = if kind.eval(a, b) { vec![g.latency] } else { vec![] };
                assert_eq!(gate_trial(&g, a, b), want, "{kind:?} {a} {b}");
            }
        }
    }

    #[test]
    fn and_latency_is_one() {
        assert_eq!(build_gate(GateKind::And).latency, 1);
        assert_eq!(build_gate(GateKind::Xor).latency, 2);
    }

    fn compare(c: &Comparator, xs: &[u64], ys: &[u64]) -> (Vec<u64>, Vec<u64>) {
        let mut s = SpikeSchedule::new();
        s.push(c.bias, 0, 1.0);
        for &t in xs {
            s.push(c.input_x, t, 1.0);
        }
        for &t in ys {
            s.push(c.input_y, t, 1.0);
        }
        let h = c.output_timestep + 5;
        let r = run_event_driven(&c.network, &s, h, RecordMode::OutputsOnly).unwrap();
        (r.times(c.output_x), r.times(c.output_y))
    }

    #[test]
    fn comparator_examples() {
        let c = build_comparator(ComparatorSpec { t: 4, tie_break: TieBreak::None }).unwrap();
        assert_eq!(compare(&c, &[0, 1, 2], &[2]), (vec![5], vec![]));
        assert_eq!(compare(&c, &[0, 3], &[1, 2]), (vec![], vec![]));
        let c = build_comparator(ComparatorSpec { t: 3, tie_break: TieBreak::None }).unwrap();
        assert_eq!(compare(&c, &[], &[1]), (vec![], vec![4]));
    }

    #[test]
    fn tie_breaks() {
        for (tb, want) in [
            (TieBreak::FavorX, (vec![4], vec![])),
            (TieBreak::FavorY, (vec![], vec![4])),
        ] {
            let c = build_comparator(ComparatorSpec { t: 3, tie_break: tb }).unwrap();
            assert_eq!(compare(&c, &[0, 2], &[1, 2]), want);
            assert_eq!(compare(&c, &[], &[]), want);
        }
        let c = build_comparator(ComparatorSpec { t: 3, tie_break: TieBreak::FavorX }).unwrap();
        assert_eq!(compare(&c, &[0], &[0, 1]), (vec![], vec![4]));
    }

    #[test]
    fn zero_interval_rejected() {
        assert_eq!(
            build_comparator(ComparatorSpec { t: 0, tie_break: TieBreak::None }).unwrap_err(),
            InvalidComparator(0)
        );
    }

    #[test]
    fn large_interval_widens_ranges() {
        let c = build_comparator(ComparatorSpec { t: 40, tie_break: TieBreak::None }).unwrap();
        assert!(c.network.validate().is_empty());
        let xs: Vec<u64> = (0..40).collect();
        assert_eq!(compare(&c, &xs, &[7]), (vec![41], vec![]));
    }
}
