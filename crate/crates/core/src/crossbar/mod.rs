//! Analog crossbar of flux-quantized cells with its peripheral circuitry.
//!
//! Array rows are output lines and columns are input lines, so the logical
//! weight matrix is `rows x cols` and `forward` computes `W x`.

pub mod array;
pub mod map;
pub mod periphery;
pub mod update;

pub use array::{ArrayCheckpoint, CrossbarArray, MvmMode, StateGrid, StateInit};
pub use map::{StateMap, DEFAULT_WEIGHT_BOUND};
pub use periphery::{quantize, PeripheryConfig};
pub use update::PulseTrainPlan;
