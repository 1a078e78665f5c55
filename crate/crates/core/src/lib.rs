//! Simulation laboratory for online packet scheduling with deadlines.
//!
//! Unit-length packets arrive at a single node, each with a release step, a
//! deadline and a weight; at most one packet leaves per step. The crate
//! provides seeded workload generators, the online policies (MG, greedy,
//! EDF-α, MLP, MM, LMG, SMMG), an exact offline optimum, the batch
//! experiment protocol with competitive-ratio statistics, and the tandem and
//! buffer-sizing studies.
//!
//! Batch work is spread over rayon when the default `parallel` feature is on
//! and runs sequentially otherwise; results are identical either way.

pub mod assignment;
pub mod engine;
pub mod error;
pub mod extensions;
pub mod fixtures;
pub mod harness;
pub mod model;
pub mod policies;
pub mod workload;

pub use assignment::{offline_optimum, offline_optimum_with, solve, solve_bruteforce, OfflineMode};
pub use engine::{run, simulate, Buffer, Policy, StepContext};
pub use error::{Error, Result};
pub use model::{Instance, Packet, PacketId, RunResult, Time, Window};
pub use policies::PolicySpec;
pub use workload::{generate, generate_agreeable, scenario1, ArrivalModel, GenConfig};
