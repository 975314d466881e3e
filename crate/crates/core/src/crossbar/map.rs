use serde::{Deserialize, Serialize};

use crate::device::DeviceParams;
use crate::error::{Error, Result};

/// Logical weight span used when none is given: the mean half-range
/// `(w(n_max) - w(-n_max)) / 2`.
pub const DEFAULT_WEIGHT_BOUND: f64 = 0.6;

/// Quadratic state-to-weight map of a differential cell pair,
/// `w(n) = c * (W(n)^2 - W(n_ref)^2)` with `W` the yTron bias switching
/// current.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StateMap {
    pub device: DeviceParams,
    pub n_ref: i64,
    pub gain: f64,
}

impl StateMap {
    pub fn new(device: DeviceParams, n_ref: i64, gain: f64) -> Result<Self> {
        device.validate()?;
        if n_ref.abs() > device.n_max() {
            return Err(Error::param("n_ref", "reference state outside the device range"));
        }
        if !(gain > 0.0) || !gain.is_finite() {
            return Err(Error::param("gain", "must be positive"));
        }
        Ok(Self { device, n_ref, gain })
    }

    /// Gain chosen so that the mean half-span of the weight range equals
    /// `weight_bound`.
    pub fn with_weight_bound(device: DeviceParams, n_ref: i64, weight_bound: f64) -> Result<Self> {
        if !(weight_bound > 0.0) || !weight_bound.is_finite() {
            return Err(Error::param("weight_bound", "must be positive"));
        }
        let unit = Self { device, n_ref, gain: 1.0 };
        let n_max = device.n_max() as f64;
        if n_max < 1.0 {
            return Err(Error::param("device", "needs at least one state on each side of zero"));
        }
        let span = unit.weight(n_max) - unit.weight(-n_max);
        Self::new(device, n_ref, 2.0 * weight_bound / span)
    }

    pub fn n_max(&self) -> i64 {
        self.device.n_max()
    }

    /// Weight at a (possibly fractional) state index. Factored as
    /// `c (W - W_ref)(W + W_ref)` to avoid cancellation.
    pub fn weight(&self, n: f64) -> f64 {
        let w_ref = self.device.bias_switching_current(self.n_ref as f64);
        let dw = self.device.kappa * self.device.delta_i() * (n - self.n_ref as f64);
        self.gain * dw * (2.0 * w_ref + dw)
    }

    /// Weight change of one increment coincidence at state `n`.
    pub fn step_up(&self, n: i64) -> f64 {
        self.weight((n + 1) as f64) - self.weight(n as f64)
    }

    /// Mean |w(n+1) - w(n)| over the state range.
    pub fn delta_w_eff(&self) -> f64 {
        let n_max = self.n_max() as f64;
        (self.weight(n_max) - self.weight(-n_max)) / (2.0 * n_max)
    }

    pub fn weight_range(&self) -> (f64, f64) {
        let n_max = self.n_max() as f64;
        (self.weight(-n_max), self.weight(n_max))
    }
}
