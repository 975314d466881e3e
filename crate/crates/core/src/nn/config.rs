use serde::{Deserialize, Serialize};

use crate::crossbar::{MvmMode, PeripheryConfig, DEFAULT_WEIGHT_BOUND};
use crate::device::{DeviceParams, DEFAULT_I_C0, DEFAULT_KAPPA, MEASURED_I_SW};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UpdateMode {
    /// Stochastic coincidence pulses on discrete states.
    Stochastic,
    /// Expected coincidence count applied to continuous states.
    Expected,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub layers: Vec<usize>,
    pub epochs: usize,
    pub lr: f64,
    pub minibatch: usize,
    pub seed: u64,
    /// Programmable states per device, `round(2 I_sw / ΔI)`.
    pub states: u64,
    pub periphery: PeripheryConfig,
    /// Mean half-span of each tile's weight range; the float baseline starts
    /// uniform in `±weight_bound / 2`.
    pub weight_bound: f64,
    pub i_sw: f64,
    pub i_c0: f64,
    pub kappa: f64,
    pub forward_mode: MvmMode,
    pub eval_mode: MvmMode,
    pub update_mode: UpdateMode,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            layers: vec![784, 256, 128, 10],
            epochs: 20,
            lr: 0.01,
            minibatch: 1,
            seed: 1,
            states: 30,
            periphery: PeripheryConfig::default(),
            weight_bound: DEFAULT_WEIGHT_BOUND,
            i_sw: MEASURED_I_SW,
            i_c0: DEFAULT_I_C0,
            kappa: DEFAULT_KAPPA,
            forward_mode: MvmMode::Analog,
            eval_mode: MvmMode::Analog,
            update_mode: UpdateMode::Stochastic,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.layers.len() < 2 || self.layers.contains(&0) {
            return Err(Error::param("layers", "need at least two non-empty layers"));
        }
        if self.minibatch != 1 {
            return Err(Error::param("minibatch", "only minibatch = 1 is supported"));
        }
        if !(self.lr >= 0.0) || !self.lr.is_finite() {
            return Err(Error::param("lr", "must be non-negative"));
        }
        if !(self.weight_bound > 0.0) {
            return Err(Error::param("weight_bound", "must be positive"));
        }
        self.periphery.validate()?;
        self.device()?;
        Ok(())
    }

    pub fn device(&self) -> Result<DeviceParams> {
        DeviceParams::with_num_states(self.i_sw, self.states, self.i_c0, self.kappa)
    }
}
