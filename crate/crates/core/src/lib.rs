//! Simulation toolkit for superconducting-nanowire crossbar accelerators.
//!
//! - [`device`]: flux-quantized unit cell, state arithmetic and yTron readout
//! - [`etsim`]: electrothermal transient circuit simulator with hotspot
//!   dynamics and flux-quantization enforcement
//! - [`crossbar`]: analog array with DAC/ADC/noise/bound periphery and the
//!   stochastic coincidence update
//! - [`nn`]: fully connected network training on crossbar tiles, with a
//!   floating-point baseline
//! - [`mnist`]: IDX file ingestion
//! - [`cli`]: experiment drivers behind the `fluxcell` binary

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod crossbar;
pub mod device;
pub mod error;
pub mod etsim;
pub mod mnist;
pub mod nn;
pub mod rng;

pub use error::{Error, Result};
