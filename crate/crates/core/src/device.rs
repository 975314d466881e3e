//! Single cross-point cell: a superconducting loop closed by a shunted
//! constriction (write element) and read out by a yTron.
//!
//! The cell state is the persistent circulating current, which flux
//! quantization restricts to integer multiples of `PHI0 / l_loop`. Readout
//! ramps the yTron bias arm until it switches; the switching current `W`
//! depends affinely on the circulating current, and integrating the ramp up to
//! the switching instant yields `W^2 / (2 * slope)`.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Magnetic flux quantum h/2e in V·s, fixed at the three-digit value used
/// throughout the device calculations.
pub const PHI0: f64 = 2.07e-15;

/// Constant of the kinetic-inductance rule of thumb, in pH·K/Ω.
pub const KINETIC_INDUCTANCE_COEFF: f64 = 1.38;

/// Relative standard deviation of a single yTron readout.
pub const DEFAULT_READ_NOISE_FRAC: f64 = 1.60e-4;

/// Switching current of the fabricated constriction (A).
pub const MEASURED_I_SW: f64 = 36.65e-6;
/// Loop inductance estimated from square counting (H).
pub const ESTIMATED_L_LOOP: f64 = 526.6e-12;

/// Default yTron bias-arm switching current at zero circulating current (A).
pub const DEFAULT_I_C0: f64 = 80e-6;
/// Default yTron sensitivity dI_c,bias / dI_circ.
pub const DEFAULT_KAPPA: f64 = 0.5;

/// Flux-quantum constants. Not configurable.
pub struct PhysicalConstants;

impl PhysicalConstants {
    pub const PHI0: f64 = PHI0;
}

/// Current step between adjacent loop states, `PHI0 / l_loop`.
pub fn delta_i(l_loop: f64) -> Result<f64> {
    if !(l_loop > 0.0) || !l_loop.is_finite() {
        return Err(Error::param("l_loop", format!("must be positive, got {l_loop}")));
    }
    Ok(PHI0 / l_loop)
}

/// `round(2 * i_sw / delta_i)`. A zero switching current gives zero states.
pub fn num_states(i_sw: f64, l_loop: f64) -> Result<u64> {
    if !(i_sw >= 0.0) || !i_sw.is_finite() {
        return Err(Error::param("i_sw", format!("must be non-negative, got {i_sw}")));
    }
    let step = delta_i(l_loop)?;
    Ok((2.0 * i_sw / step).round() as u64)
}

/// Kinetic inductance per square (H/□) from sheet resistance (Ω/□) and
/// critical temperature (K).
pub fn kinetic_inductance_per_square(r_sheet: f64, t_c: f64) -> Result<f64> {
    if !(t_c > 0.0) {
        return Err(Error::param("t_c", format!("must be positive, got {t_c}")));
    }
    if !(r_sheet >= 0.0) {
        return Err(Error::param("r_sheet", format!("must be non-negative, got {r_sheet}")));
    }
    Ok(KINETIC_INDUCTANCE_COEFF * r_sheet / t_c * 1e-12)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeviceParams {
    /// Constriction switching current (A).
    pub i_sw: f64,
    /// Loop inductance (H).
    pub l_loop: f64,
    /// yTron bias-arm switching current at zero circulating current (A).
    #[serde(default = "default_i_c0")]
    pub i_c0: f64,
    /// yTron sensitivity, dimensionless.
    #[serde(default = "default_kappa")]
    pub kappa: f64,
    /// Relative std of a readout.
    #[serde(default = "default_read_noise")]
    pub read_noise_frac: f64,
}

fn default_i_c0() -> f64 {
    DEFAULT_I_C0
}
fn default_kappa() -> f64 {
    DEFAULT_KAPPA
}
fn default_read_noise() -> f64 {
    DEFAULT_READ_NOISE_FRAC
}

impl Default for DeviceParams {
    fn default() -> Self {
        Self::fabricated_cell()
    }
}

impl DeviceParams {
    pub fn new(i_sw: f64, l_loop: f64, i_c0: f64, kappa: f64) -> Result<Self> {
        let params = Self {
            i_sw,
            l_loop,
            i_c0,
            kappa,
            read_noise_frac: DEFAULT_READ_NOISE_FRAC,
        };
        params.validate()?;
        Ok(params)
    }

    /// The fabricated cell: measured switching current and estimated loop
    /// inductance, with default yTron calibration.
    pub fn fabricated_cell() -> Self {
        Self {
            i_sw: MEASURED_I_SW,
            l_loop: ESTIMATED_L_LOOP,
            i_c0: DEFAULT_I_C0,
            kappa: DEFAULT_KAPPA,
            read_noise_frac: DEFAULT_READ_NOISE_FRAC,
        }
    }

    /// Cell whose loop inductance is back-solved so that
    /// `num_states() == states` at the given switching current.
    pub fn with_num_states(i_sw: f64, states: u64, i_c0: f64, kappa: f64) -> Result<Self> {
        if states < 2 {
            return Err(Error::param("states", "need at least two states"));
        }
        let step = 2.0 * i_sw / states as f64;
        Self::new(i_sw, PHI0 / step, i_c0, kappa)
    }

    pub fn with_read_noise(mut self, frac: f64) -> Self {
        self.read_noise_frac = frac;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.i_sw > 0.0) || !self.i_sw.is_finite() {
            return Err(Error::param("i_sw", format!("must be positive, got {}", self.i_sw)));
        }
        if !(self.l_loop > 0.0) || !self.l_loop.is_finite() {
            return Err(Error::param("l_loop", format!("must be positive, got {}", self.l_loop)));
        }
        if !(self.i_c0 > 0.0) || !self.i_c0.is_finite() {
            return Err(Error::param("i_c0", format!("must be positive, got {}", self.i_c0)));
        }
        if !(self.kappa > 0.0 && self.kappa <= 1.0) {
            return Err(Error::param("kappa", format!("must lie in (0, 1], got {}", self.kappa)));
        }
        if !(self.i_c0 > self.kappa * self.i_sw) {
            return Err(Error::param(
                "i_c0",
                format!(
                    "bias switching current must stay positive: need i_c0 > kappa * i_sw ({} <= {})",
                    self.i_c0,
                    self.kappa * self.i_sw
                ),
            ));
        }
        if !(self.read_noise_frac >= 0.0) || !self.read_noise_frac.is_finite() {
            return Err(Error::param("read_noise_frac", "must be non-negative"));
        }
        Ok(())
    }

    pub fn delta_i(&self) -> f64 {
        PHI0 / self.l_loop
    }

    pub fn num_states(&self) -> u64 {
        (2.0 * self.i_sw / self.delta_i()).round() as u64
    }

    /// Largest reachable state index; the circulating current is bounded by
    /// the constriction switching current.
    pub fn n_max(&self) -> i64 {
        // Tolerate the last ulp when i_sw is an exact multiple of delta_i.
        (self.i_sw / self.delta_i() * (1.0 + 1e-12)).floor() as i64
    }

    /// Number of distinct programmable levels, `2 * n_max + 1`.
    pub fn level_count(&self) -> u64 {
        2 * self.n_max() as u64 + 1
    }

    /// State index left in the loop after set-mode programming with current
    /// `i_prog`: the nearest flux quantum, limited to the reachable range.
    pub fn set_mode_state(&self, i_prog: f64) -> i64 {
        let n_max = self.n_max();
        ((i_prog / self.delta_i()).round() as i64).clamp(-n_max, n_max)
    }

    /// yTron bias-arm switching current for a (possibly fractional) state
    /// index.
    pub fn bias_switching_current(&self, n: f64) -> f64 {
        self.i_c0 + self.kappa * n * self.delta_i()
    }
}

/// Polarity of one update pulse on a row or column line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Pulse {
    Positive,
    Negative,
    Absent,
}

impl Pulse {
    pub fn from_sign(sign: i8) -> Self {
        match sign.signum() {
            1 => Pulse::Positive,
            -1 => Pulse::Negative,
            _ => Pulse::Absent,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeviceState {
    n: i64,
    params: DeviceParams,
}

impl DeviceState {
    pub fn new(params: DeviceParams, n: i64) -> Result<Self> {
        params.validate()?;
        let n_max = params.n_max();
        if n.abs() > n_max {
            return Err(Error::InvalidInput(format!(
                "state index {n} outside [-{n_max}, {n_max}]"
            )));
        }
        Ok(Self { n, params })
    }

    pub fn index(&self) -> i64 {
        self.n
    }

    pub fn params(&self) -> &DeviceParams {
        &self.params
    }

    pub fn circulating_current(&self) -> f64 {
        self.n as f64 * self.params.delta_i()
    }

    /// Coincidence update. Only a row/column pair of opposite polarity moves
    /// the state: row `+` with column `-` adds one flux quantum, row `-` with
    /// column `+` removes one. The result saturates at `±n_max`.
    pub fn apply_update_pulse(self, row: Pulse, col: Pulse) -> Self {
        let step = match (row, col) {
            (Pulse::Positive, Pulse::Negative) => 1,
            (Pulse::Negative, Pulse::Positive) => -1,
            _ => 0,
        };
        let n_max = self.params.n_max();
        Self {
            n: (self.n + step).clamp(-n_max, n_max),
            ..self
        }
    }

    pub fn bias_switching_current(&self) -> f64 {
        self.params.bias_switching_current(self.n as f64)
    }

    /// Time at which a ramp of the given slope (A/s) reaches the bias-arm
    /// switching current.
    pub fn switching_time(&self, ramp_slope: f64) -> Result<f64> {
        check_slope(ramp_slope)?;
        Ok(self.bias_switching_current() / ramp_slope)
    }

    /// Integrated ramp current up to the switching instant (A·s), with
    /// multiplicative readout noise. The state is not modified.
    pub fn read_multiply<R: Rng + ?Sized>(&self, ramp_slope: f64, rng: &mut R) -> Result<f64> {
        let ideal = self.read_multiply_ideal(ramp_slope)?;
        if self.params.read_noise_frac == 0.0 {
            return Ok(ideal);
        }
        let eps: f64 = rng.sample::<f64, _>(StandardNormal) * self.params.read_noise_frac;
        Ok(ideal * (1.0 + eps))
    }

    pub fn read_multiply_ideal(&self, ramp_slope: f64) -> Result<f64> {
        check_slope(ramp_slope)?;
        let w = self.bias_switching_current();
        Ok(w * w / (2.0 * ramp_slope))
    }
}

fn check_slope(ramp_slope: f64) -> Result<()> {
    if !(ramp_slope > 0.0) || !ramp_slope.is_finite() {
        return Err(Error::InvalidInput(format!(
            "ramp slope must be positive, got {ramp_slope}"
        )));
    }
    Ok(())
}
