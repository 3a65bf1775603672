//! Cart-pole balancing with spiking control.
//!
//! Each observation drives a pair of input neurons: negative values spike
//! the `-` neuron, positive values (and zero) the `+` neuron, with one to
//! four unit spikes proportional to the magnitude. The network runs a fixed
//! number of timesteps per control interval; the cart is pushed right when
//! `O_R` fired more than `O_L`, left otherwise.

use rand::Rng;

use crate::engine::EngineState;
use crate::model::{Network, NeuronId};

/// Input neuron names, in encoding order.
pub const INPUT_NAMES: [&str; 8] = [
    "x-", "x+", "dx-", "dx+", "theta-", "theta+", "dtheta-", "dtheta+",
];
pub const LEFT_OUTPUT: &str = "O_L";
pub const RIGHT_OUTPUT: &str = "O_R";

#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct CartPoleState {
    /// Cart position (m).
    pub x: f64,
    /// Cart velocity (m/s).
    pub dx: f64,
    /// Pole angle from vertical (rad).
    pub theta: f64,
    /// Pole angular velocity (rad/s).
    pub dtheta: f64,
}

impl CartPoleState {
    pub fn new(x: f64, dx: f64, theta: f64, dtheta: f64) -> Self {
        Self { x, dx, theta, dtheta }
    }

    pub fn mirrored(&self) -> Self {
        Self::new(-self.x, -self.dx, -self.theta, -self.dtheta)
    }

    fn as_array(&self) -> [f64; 4] {
        [self.x, self.dx, self.theta, self.dtheta]
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Physics {
    pub gravity: f64,
    pub cart_mass: f64,
    pub pole_mass: f64,
    /// Half the pole length (m).
    pub half_length: f64,
    /// Magnitude of the push (N).
    pub force: f64,
}

impl Default for Physics {
    fn default() -> Self {
        Self {
            gravity: 9.8,
            cart_mass: 1.0,
            pole_mass: 0.1,
            half_length: 0.5,
            force: 10.0,
        }
    }
}

/// Magnitudes mapped to four spikes.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ObservationRanges {
    pub x: f64,
    pub dx: f64,
    pub theta: f64,
    pub dtheta: f64,
}

impl Default for ObservationRanges {
    fn default() -> Self {
        Self {
            x: 2.4,
            dx: 3.0,
            theta: 12f64.to_radians(),
            dtheta: 3.0,
        }
    }
}

impl ObservationRanges {
    fn as_array(&self) -> [f64; 4] {
        [self.x, self.dx, self.theta, self.dtheta]
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EpisodeConfig {
    /// Control interval (s).
    pub dt: f64,
    pub steps_per_interval: u32,
    pub max_intervals: u32,
    pub physics: Physics,
    pub x_limit: f64,
    pub theta_limit: f64,
    pub ranges: ObservationRanges,
    pub reset_engine_between_intervals: bool,
}

impl Default for EpisodeConfig {
    fn default() -> Self {
        Self {
            dt: 0.02,
            steps_per_interval: 50,
            max_intervals: 15_000,
            physics: Physics::default(),
            x_limit: 2.4,
            theta_limit: 12f64.to_radians(),
            ranges: ObservationRanges::default(),
            reset_engine_between_intervals: false,
        }
    }
}

impl EpisodeConfig {
    pub fn alive(&self, s: &CartPoleState) -> bool {
        s.x.abs() <= self.x_limit && s.theta.abs() <= self.theta_limit
    }

    /// Simulated seconds represented by `intervals`.
    pub fn seconds(&self, intervals: f64) -> f64 {
        intervals * self.dt
    }
}

/// Classic cart-pole equations of motion, one explicit Euler step of `dt`.
pub fn physics_step(s: &CartPoleState, force: f64, cfg: &EpisodeConfig) -> CartPoleState {
    let p = &cfg.physics;
    let total = p.cart_mass + p.pole_mass;
    let pml = p.pole_mass * p.half_length;
    let (sin, cos) = s.theta.sin_cos();
    let temp = (force + pml * s.dtheta * s.dtheta * sin) / total;
    let theta_acc =
        (p.gravity * sin - cos * temp) / (p.half_length * (4.0 / 3.0 - p.pole_mass * cos * cos / total));
    let x_acc = temp - pml * theta_acc * cos / total;
    CartPoleState {
        x: s.x + cfg.dt * s.dx,
        dx: s.dx + cfg.dt * x_acc,
        theta: s.theta + cfg.dt * s.dtheta,
        dtheta: s.dtheta + cfg.dt * theta_acc,
    }
}

/// Number of unit spikes for each input neuron, in [`INPUT_NAMES`] order.
/// Exactly one neuron of each pair is non-zero, with 1 to 4 spikes.
pub fn encode_observation(s: &CartPoleState, ranges: &ObservationRanges) -> [u8; 8] {
    let mut counts = [0u8; 8];
    for (i, (v, r)) in s.as_array().into_iter().zip(ranges.as_array()).enumerate() {
        let k = (4.0 * v.abs() / r).ceil().clamp(1.0, 4.0) as u8;
        let slot = if v < 0.0 { 2 * i } else { 2 * i + 1 };
        counts[slot] = k;
    }
    counts
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Action {
    Left,
    Right,
}

impl Action {
    pub fn force(self, physics: &Physics) -> f64 {
        match self {
            Action::Left => -physics.force,
            Action::Right => physics.force,
        }
    }
}

/// Right iff the right output fired strictly more often.
pub fn decode_action(left_count: usize, right_count: usize) -> Action {
    if right_count > left_count {
        Action::Right
    } else {
        Action::Left
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("network lacks cart-pole interface neuron(s): {0:?}")]
pub struct MissingInterface(pub Vec<String>);

/// Resolved cart-pole interface of a network.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Interface {
    pub inputs: [NeuronId; 8],
    pub left: NeuronId,
    pub right: NeuronId,
}

impl Interface {
    pub fn resolve(net: &Network) -> Result<Self, MissingInterface> {
        let mut missing = Vec::new();
        let mut find = |name: &str, want_input: bool| -> NeuronId {
            match net.id(name) {
                Some(id) if (want_input && net.is_input(id)) || (!want_input && net.is_output(id)) => id,
                _ => {
                    missing.push(name.to_owned());
                    NeuronId(0)
                }
            }
        };
        let mut inputs = [NeuronId(0); 8];
        for (slot, name) in inputs.iter_mut().zip(INPUT_NAMES) {
            *slot = find(name, true);
        }
        let left = find(LEFT_OUTPUT, false);
        let right = find(RIGHT_OUTPUT, false);
        if missing.is_empty() {
            Ok(Self { inputs, left, right })
        } else {
            Err(MissingInterface(missing))
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IntervalTrace {
    pub interval: u32,
    pub x: f64,
    pub theta: f64,
    pub action: Action,
    pub left_count: usize,
    pub right_count: usize,
}

/// Runs one episode and returns the number of intervals after which the
/// cart and pole were still within limits.
pub fn run_episode(
    net: &Network,
    start: CartPoleState,
    cfg: &EpisodeConfig,
) -> Result<u32, MissingInterface> {
    episode(net, start, cfg, None)
}

/// As [`run_episode`], also recording every interval.
pub fn run_episode_traced(
    net: &Network,
    start: CartPoleState,
    cfg: &EpisodeConfig,
) -> Result<(u32, Vec<IntervalTrace>), MissingInterface> {
    let mut trace = Vec::new();
    let n = episode(net, start, cfg, Some(&mut trace))?;
    Ok((n, trace))
}

fn episode(
    net: &Network,
    start: CartPoleState,
    cfg: &EpisodeConfig,
    mut trace: Option<&mut Vec<IntervalTrace>>,
) -> Result<u32, MissingInterface> {
    let iface = Interface::resolve(net)?;
    let mut engine = EngineState::new(net);
    let mut state = start;
    if !cfg.alive(&state) {
        return Ok(0);
    }
    let mut batch: Vec<(NeuronId, f64)> = Vec::with_capacity(8);
    for interval in 0..cfg.max_intervals {
        if cfg.reset_engine_between_intervals {
            engine.reset();
        }
        let counts = encode_observation(&state, &cfg.ranges);
        let (mut left, mut right) = (0usize, 0usize);
        let last_input = counts.iter().copied().max().unwrap_or(0) as u32;
        for step in 0..cfg.steps_per_interval {
            if step >= last_input && engine.advance_idle((cfg.steps_per_interval - step) as u64) {
                break;
            }
            batch.clear();
            for (&id, &k) in iface.inputs.iter().zip(&counts) {
                if step < k as u32 {
                    batch.push((id, 1.0));
                }
            }
            let fired = engine.step(net, &batch).expect("interface ids are valid");
            for &f in fired {
                if f == iface.left {
                    left += 1;
                }
                if f == iface.right {
                    right += 1;
                }
            }
        }
        let action = decode_action(left, right);
        state = physics_step(&state, action.force(&cfg.physics), cfg);
        if let Some(t) = trace.as_deref_mut() {
            t.push(IntervalTrace {
                interval,
                x: state.x,
                theta: state.theta,
                action,
                left_count: left,
                right_count: right,
            });
        }
        if !state.x.is_finite() || !state.theta.is_finite() || !cfg.alive(&state) {
            return Ok(interval);
        }
    }
    Ok(cfg.max_intervals)
}

/// Uniform start states around upright.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StartDistribution {
    pub x: f64,
    pub dx: f64,
    pub theta: f64,
    pub dtheta: f64,
}

impl Default for StartDistribution {
    fn default() -> Self {
        Self {
            x: 0.5,
            dx: 0.1,
            theta: 3f64.to_radians(),
            dtheta: 0.1,
        }
    }
}

impl StartDistribution {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> CartPoleState {
        let mut u = |m: f64| if m > 0.0 { rng.random_range(-m..=m) } else { 0.0 };
        CartPoleState {
            x: u(self.x),
            dx: u(self.dx),
            theta: u(self.theta),
            dtheta: u(self.dtheta),
        }
    }
}

/// Network with the cart-pole interface and nothing else.
pub fn interface_network(mode: crate::model::ValueMode, threshold: f64, leak: bool) -> Network {
    let mut s = crate::model::NetworkSpec::new(mode);
    for name in INPUT_NAMES {
        s.add_neuron(name, threshold, leak).add_input(name);
    }
    for name in [LEFT_OUTPUT, RIGHT_OUTPUT] {
        s.add_neuron(name, threshold, leak).add_output(name);
    }
    crate::model::build_network(&s).expect("interface network is valid")
}
