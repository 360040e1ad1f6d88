//! Coverage-feedback fuzzing of a bundled toy processor, with mutation
//! scheduling and seed generation driven by particle swarms that reset when
//! they stop producing new coverage.
//!
//! The pieces, bottom to top:
//!
//! - [`pso`]: swarm machinery over simplex-constrained positions, the
//!   velocity/position updates and the reset monitor.
//! - [`isa`]: the toy instruction set, program encoding and operand tables.
//! - [`dut`]: the instrumented design under test (six injected bugs) and
//!   the golden reference interpreter.
//! - [`coverage`]: the static branch-point registry and coverage maps.
//! - [`mutation`]: the twelve-operator mutation catalog.
//! - [`seed`]: swarm-driven seed program generation.
//! - [`bugs`] and [`detector`]: the injected-bug catalog and the
//!   differential trace comparator that finds and classifies them.
//! - [`campaign`]: the fuzzing loop tying it all together, with variants,
//!   budgets, checkpoints and artifact output.
//! - [`report`]: medians, speedups and coverage curves across repeated runs.
//! - [`cli`]: the `swarmfuzz` command-line front end.
//!
//! The narrative guide under `book/` walks through the same layers with
//! runnable examples.

pub mod bugs;
pub mod campaign;
pub(crate) mod checkpoint;
pub mod cli;
pub mod coverage;
pub mod detector;
pub mod dut;
pub mod error;
pub mod isa;
pub mod mutation;
pub mod pso;
pub mod report;
pub mod seed;

pub use error::Error;
