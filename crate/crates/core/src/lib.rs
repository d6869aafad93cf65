//! Neuro-evolution of recurrent networks over memory cells and deep
//! time-skip connections, driven by an asynchronous island model.
//!
//! The building blocks, bottom up:
//!
//! * [`cells`]: scalar memory-cell forward and backward passes.
//! * [`genome`] and [`innovation`]: the evolvable graph and its numbering.
//! * [`ops`]: structural mutation, crossover and Lamarckian initialization.
//! * [`network`] and [`trainer`]: unrolled evaluation, BPTT and Nesterov SGD.
//! * [`engine`]: islands, the master, workers and the fitness log.
//! * [`data`], [`synth`], [`codec`] and [`experiment`]: I/O and the runner.

pub mod cells;
pub mod codec;
pub mod data;
pub mod engine;
pub mod error;
pub mod experiment;
pub mod genome;
pub mod innovation;
pub mod network;
pub mod ops;
pub mod par;
pub mod synth;
pub mod trainer;

pub use cells::CellKind;
pub use error::{Error, Result};
pub use genome::Genome;
pub use innovation::InnovationRegistry;
pub use ops::OperatorKind;
