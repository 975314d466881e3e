use std::fs;
use std::path::Path;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::map::{StateMap, DEFAULT_WEIGHT_BOUND};
use super::periphery::{quantize, PeripheryConfig, MAX_BOUND_ROUNDS};
use crate::device::DeviceParams;
use crate::error::{Error, Result};

pub const CHECKPOINT_FORMAT: &str = "fluxcell.crossbar";
pub const CHECKPOINT_VERSION: u32 = 1;

/// Cell states in row-major order. Continuous states stand in for the
/// many-state limit and only take expected-value updates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StateGrid {
    Discrete(Vec<i32>),
    Continuous(Vec<f64>),
}

impl StateGrid {
    pub fn len(&self) -> usize {
        match self {
            StateGrid::Discrete(v) => v.len(),
            StateGrid::Continuous(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get(&self, k: usize) -> f64 {
        match self {
            StateGrid::Discrete(v) => f64::from(v[k]),
            StateGrid::Continuous(v) => v[k],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum StateInit {
    /// Every cell at the same index.
    Constant(i64),
    /// Uniform integer index over the central half of the range.
    CentralHalf,
    /// Uniform real index over the central half of the range.
    ContinuousCentralHalf,
    /// Explicit states, row-major.
    Grid(StateGrid),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MvmMode {
    /// Full periphery model: DAC, noise, saturation, ADC, rescaling.
    Analog,
    /// Exact real matrix-vector product.
    Ideal,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CrossbarArray {
    rows: usize,
    cols: usize,
    map: StateMap,
    periphery: PeripheryConfig,
    n_max: i64,
    pub(super) states: StateGrid,
    /// Row-major cache of `map.weight(state)`.
    pub(super) weights: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArrayCheckpoint {
    pub format: String,
    pub version: u32,
    pub rows: usize,
    pub cols: usize,
    pub map: StateMap,
    pub periphery: PeripheryConfig,
    pub states: StateGrid,
}

impl CrossbarArray {
    pub fn new<R: Rng + ?Sized>(
        rows: usize,
        cols: usize,
        device: DeviceParams,
        periphery: PeripheryConfig,
        init: StateInit,
        rng: &mut R,
    ) -> Result<Self> {
        let map = StateMap::with_weight_bound(device, 0, DEFAULT_WEIGHT_BOUND)?;
        Self::with_map(rows, cols, map, periphery, init, rng)
    }

    pub fn with_map<R: Rng + ?Sized>(
        rows: usize,
        cols: usize,
        map: StateMap,
        periphery: PeripheryConfig,
        init: StateInit,
        rng: &mut R,
    ) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidInput(format!("array dimensions {rows}x{cols} must be positive")));
        }
        periphery.validate()?;
        let n_max = map.n_max();
        if n_max > i64::from(i32::MAX) {
            return Err(Error::param("device", "state range exceeds 32-bit indices"));
        }
        let size = rows * cols;
        let half = n_max / 2;
        let states = match init {
            StateInit::Constant(n) => {
                if n.abs() > n_max {
                    return Err(Error::InvalidInput(format!("state {n} outside ±{n_max}")));
                }
                StateGrid::Discrete(vec![n as i32; size])
            }
            StateInit::CentralHalf => StateGrid::Discrete(
                (0..size).map(|_| rng.random_range(-half..=half) as i32).collect(),
            ),
            StateInit::ContinuousCentralHalf => {
                let h = n_max as f64 / 2.0;
                StateGrid::Continuous((0..size).map(|_| rng.random_range(-h..=h)).collect())
            }
            StateInit::Grid(g) => g,
        };
        Self::from_parts(rows, cols, map, periphery, states)
    }

    fn from_parts(
        rows: usize,
        cols: usize,
        map: StateMap,
        periphery: PeripheryConfig,
        states: StateGrid,
    ) -> Result<Self> {
        if states.len() != rows * cols {
            return Err(Error::DimensionMismatch { expected: rows * cols, got: states.len() });
        }
        let n_max = map.n_max();
        let out_of_range = match &states {
            StateGrid::Discrete(v) => v.iter().any(|&n| i64::from(n).abs() > n_max),
            StateGrid::Continuous(v) => v.iter().any(|n| !(n.abs() <= n_max as f64)),
        };
        if out_of_range {
            return Err(Error::InvalidInput(format!("state outside ±{n_max}")));
        }
        let weights = (0..states.len()).map(|k| map.weight(states.get(k))).collect();
        Ok(Self { rows, cols, map, periphery, n_max, states, weights })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn map(&self) -> &StateMap {
        &self.map
    }

    pub fn n_max(&self) -> i64 {
        self.n_max
    }

    pub fn periphery(&self) -> &PeripheryConfig {
        &self.periphery
    }

    pub fn set_periphery(&mut self, periphery: PeripheryConfig) -> Result<()> {
        periphery.validate()?;
        self.periphery = periphery;
        Ok(())
    }

    pub fn states(&self) -> &StateGrid {
        &self.states
    }

    pub fn state(&self, i: usize, j: usize) -> f64 {
        self.states.get(i * self.cols + j)
    }

    pub fn set_state(&mut self, i: usize, j: usize, n: f64) -> Result<()> {
        if i >= self.rows || j >= self.cols {
            return Err(Error::InvalidInput(format!("cell ({i}, {j}) outside the array")));
        }
        if !(n.abs() <= self.n_max as f64) {
            return Err(Error::InvalidInput(format!("state {n} outside ±{}", self.n_max)));
        }
        let k = i * self.cols + j;
        match &mut self.states {
            StateGrid::Discrete(v) => {
                if n.fract() != 0.0 {
                    return Err(Error::InvalidInput("discrete cells take integer states".into()));
                }
                v[k] = n as i32;
            }
            StateGrid::Continuous(v) => v[k] = n,
        }
        self.weights[k] = self.map.weight(n);
        Ok(())
    }

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.weights[i * self.cols + j]
    }

    /// Noise-free logical weights, row-major `rows x cols`.
    pub fn read_weights(&self) -> Vec<f64> {
        self.weights.clone()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn forward<R: Rng + ?Sized>(&self, x: &[f64], mode: MvmMode, rng: &mut R) -> Result<Vec<f64>> {
        if x.len() != self.cols {
            return Err(Error::DimensionMismatch { expected: self.cols, got: x.len() });
        }
        Ok(match mode {
            MvmMode::Ideal => self.ideal_mvm(x, false),
            MvmMode::Analog => self.analog_mvm(x, false, rng),
        })
    }

    /// Transpose read: inputs on the output lines, outputs on the input lines.
    pub fn backward<R: Rng + ?Sized>(&self, d: &[f64], mode: MvmMode, rng: &mut R) -> Result<Vec<f64>> {
        if d.len() != self.rows {
            return Err(Error::DimensionMismatch { expected: self.rows, got: d.len() });
        }
        Ok(match mode {
            MvmMode::Ideal => self.ideal_mvm(d, true),
            MvmMode::Analog => self.analog_mvm(d, true, rng),
        })
    }

    fn ideal_mvm(&self, x: &[f64], transpose: bool) -> Vec<f64> {
        if transpose {
            let mut out = vec![0.0; self.cols];
            for (i, &di) in x.iter().enumerate() {
                if di == 0.0 {
                    continue;
                }
                let row = &self.weights[i * self.cols..(i + 1) * self.cols];
                for (o, w) in out.iter_mut().zip(row) {
                    *o += w * di;
                }
            }
            out
        } else {
            self.weights
                .chunks_exact(self.cols)
                .map(|row| row.iter().zip(x).map(|(w, v)| w * v).sum())
                .collect()
        }
    }

    fn analog_mvm<R: Rng + ?Sized>(&self, x: &[f64], transpose: bool, rng: &mut R) -> Vec<f64> {
        let p = &self.periphery;
        let out_len = if transpose { self.cols } else { self.rows };
        let scale = if p.noise_management {
            x.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
        } else {
            1.0
        };
        if scale == 0.0 {
            return vec![0.0; out_len];
        }
        let normalized: Vec<f64> = x.iter().map(|v| (v / scale).clamp(-1.0, 1.0)).collect();
        let bound = p.signal_bound;
        let mut factor = 1.0;
        let mut round = 0;
        loop {
            let input: Vec<f64> = normalized
                .iter()
                .map(|v| {
                    let v = v / factor;
                    if p.quantize {
                        quantize(v, p.dac_bits, 1.0)
                    } else {
                        v
                    }
                })
                .collect();
            let mut y = self.ideal_mvm(&input, transpose);
            let mut saturated = false;
            for v in y.iter_mut() {
                if p.noise_std > 0.0 {
                    *v += p.noise_std * rng.sample::<f64, _>(StandardNormal);
                }
                if v.abs() >= bound {
                    saturated = true;
                }
                *v = if p.quantize { quantize(*v, p.adc_bits, bound) } else { v.clamp(-bound, bound) };
            }
            if !(saturated && p.bound_management && round < MAX_BOUND_ROUNDS) {
                let gain = factor * scale;
                for v in y.iter_mut() {
                    *v *= gain;
                }
                return y;
            }
            factor *= 2.0;
            round += 1;
        }
    }

    pub fn to_checkpoint(&self) -> ArrayCheckpoint {
        ArrayCheckpoint {
            format: CHECKPOINT_FORMAT.to_string(),
            version: CHECKPOINT_VERSION,
            rows: self.rows,
            cols: self.cols,
            map: self.map,
            periphery: self.periphery,
            states: self.states.clone(),
        }
    }

    pub fn from_checkpoint(ck: ArrayCheckpoint) -> Result<Self> {
        if ck.format != CHECKPOINT_FORMAT {
            return Err(Error::Checkpoint(format!("unexpected format `{}`", ck.format)));
        }
        if ck.version != CHECKPOINT_VERSION {
            return Err(Error::Checkpoint(format!(
                "unsupported version {} (expected {CHECKPOINT_VERSION})",
                ck.version
            )));
        }
        ck.periphery.validate()?;
        let map = StateMap::new(ck.map.device, ck.map.n_ref, ck.map.gain)?;
        Self::from_parts(ck.rows, ck.cols, map, ck.periphery, ck.states)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, serde_json::to_string(&self.to_checkpoint())?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let ck: ArrayCheckpoint = serde_json::from_str(&fs::read_to_string(path)?)?;
        Self::from_checkpoint(ck)
    }
}
