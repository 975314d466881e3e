//! Electrothermal transient simulation of superconducting-nanowire circuits.

pub mod hotspot;
pub mod netlist;
pub mod solver;
pub mod staircase;
pub mod trace;

pub use hotspot::{nanowire_step, NanowireElement};
pub use netlist::{parse, Diagnostic, Netlist, Probe, Waveform};
pub use solver::{enforce_flux_quantization, simulate, simulate_with, SimOptions, Transient};
pub use staircase::{staircase_experiment, PulseTrain, StaircaseResult};
pub use trace::Trace;

/// Unit-cell netlist under incremental programming.
pub const UNIT_CELL_NETLIST: &str = include_str!("../../netlists/unit_cell.net");
/// Unit cell with a 50 Ω shunt in two thermal-coupling cases.
pub const THERMAL_SHUNT_NETLIST: &str = include_str!("../../netlists/thermal_shunt.net");
