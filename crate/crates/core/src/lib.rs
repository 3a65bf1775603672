//! Toolchain for RISP, a reduced instruction spiking processor model:
//! integrate-and-fire neurons with discrete integration cycles, integer
//! synaptic delays, analog or discrete weights and thresholds, and an
//! all-or-nothing leak.
//!
//! - [`model`]: network definition and validation
//! - [`engine`]: dense reference and event-driven simulators
//! - [`io`]: network documents, schedule/raster text, dot export
//! - [`builders`]: logic gates and the spike-count comparator
//! - [`optimizer`]: behavior-preserving simplification passes
//! - [`cartpole`]: cart-pole environment with spike encoding/decoding
//! - [`evolve`]: genetic training of cart-pole controllers
//! - [`bench`]: simulation throughput measurement

pub mod bench;
pub mod builders;
pub mod cartpole;
pub mod cli;
pub mod engine;
pub mod evolve;
pub mod io;
pub mod model;
pub mod optimizer;
pub mod workload;

pub use engine::{run, run_event_driven, EngineState, RecordMode, SpikeRaster, SpikeSchedule};
pub use model::{build_network, validate, Network, NetworkSpec, NeuronId, ValueKind, ValueMode};
