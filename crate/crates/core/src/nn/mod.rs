//! Fully connected network trained with stochastic pulse updates on crossbar
//! tiles, plus a floating-point reference.

pub mod config;
pub mod network;
pub mod train;

pub use config::{TrainConfig, UpdateMode};
pub use network::{argmax, cross_entropy, softmax, FloatTile, ForwardRecord, Network, Tile};
pub use train::{shuffled_indices, write_training_log, EpochRecord, Trainer};
