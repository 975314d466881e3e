//! Experiment configuration, read from TOML or from a previous run's
//! `metadata.json`.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context};
use serde::{Deserialize, Serialize};

use crate::crossbar::{MvmMode, PeripheryConfig, DEFAULT_WEIGHT_BOUND};
use crate::device::DeviceParams;
use crate::nn::{TrainConfig, UpdateMode};

pub const MNIST_DIR_ENV: &str = "FLUXCELL_MNIST_DIR";
pub const DEFAULT_MNIST_DIR: &str = "data/mnist";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub device: DeviceParams,
    pub periphery: PeripheryConfig,
    pub train: TrainSection,
    pub data: DataSection,
    pub state_diagram: StateDiagramSection,
    pub multiply_map: MultiplyMapSection,
    pub circuit: CircuitSection,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            device: DeviceParams::fabricated_cell(),
            periphery: PeripheryConfig::default(),
            train: TrainSection::default(),
            data: DataSection::default(),
            state_diagram: StateDiagramSection::default(),
            multiply_map: MultiplyMapSection::default(),
            circuit: CircuitSection::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSection {
    /// One crossbar run per entry.
    pub states: Vec<u64>,
    /// Also train the floating-point reference network.
    pub baseline: bool,
    pub layers: Vec<usize>,
    pub epochs: usize,
    pub lr: f64,
    pub weight_bound: f64,
    pub forward_mode: MvmMode,
    pub eval_mode: MvmMode,
    pub update_mode: UpdateMode,
    /// Fill the `wall_seconds` log column. Makes the logs run dependent.
    pub record_time: bool,
    pub checkpoint: bool,
}

impl Default for TrainSection {
    fn default() -> Self {
        let t = TrainConfig::default();
        Self {
            states: vec![30, 60, 100, 1000],
            baseline: false,
            layers: t.layers,
            epochs: t.epochs,
            lr: t.lr,
            weight_bound: DEFAULT_WEIGHT_BOUND,
            forward_mode: t.forward_mode,
            eval_mode: t.eval_mode,
            update_mode: t.update_mode,
            record_time: false,
            checkpoint: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataSection {
    /// Directory holding the four IDX files.
    pub mnist_dir: Option<PathBuf>,
    /// Use only the first samples of each split.
    pub max_train_samples: Option<usize>,
    pub max_test_samples: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StateDiagramSection {
    pub points: usize,
    /// Programming current sweeps `±sweep_fraction * i_sw`.
    pub sweep_fraction: f64,
    /// Readout ramp slope (A/s).
    pub ramp_slope: f64,
    pub read_noise: bool,
}

impl Default for StateDiagramSection {
    fn default() -> Self {
        Self { points: 1001, sweep_fraction: 1.0, ramp_slope: 1e4, read_noise: false }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MultiplyMapSection {
    /// Programming inputs, spread over `±i_sw`.
    pub programming_points: usize,
    pub slope_points: usize,
    /// Ramp slope range (A/s).
    pub slope_min: f64,
    pub slope_max: f64,
    pub read_noise: bool,
}

impl Default for MultiplyMapSection {
    fn default() -> Self {
        Self {
            programming_points: 50,
            slope_points: 50,
            slope_min: 1e3,
            slope_max: 5e4,
            read_noise: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CircuitSection {
    /// Netlist file, or `builtin:unit_cell` / `builtin:thermal_shunt`.
    pub netlist: String,
    pub source: String,
    #[serde(rename = "loop")]
    pub loop_name: String,
    /// Programming pulse amplitude (V).
    pub amplitude: f64,
    pub up: usize,
    pub down: usize,
    pub width: f64,
    pub edge: f64,
    pub spacing: f64,
    pub lead: f64,
    pub tol: f64,
    /// Cases to run; empty runs every case in the netlist, or the netlist as
    /// written when it has none.
    pub cases: Vec<String>,
    /// Also write each trace as JSON.
    pub trace_json: bool,
}

impl Default for CircuitSection {
    fn default() -> Self {
        Self {
            netlist: "builtin:unit_cell".into(),
            source: "vprog".into(),
            loop_name: "cell".into(),
            amplitude: 0.75,
            up: 5,
            down: 5,
            width: 15e-12,
            edge: 1e-12,
            spacing: 300e-12,
            lead: 20e-12,
            tol: 1e-3,
            cases: Vec::new(),
            trace_json: false,
        }
    }
}

#[derive(Deserialize)]
struct MetadataConfig {
    config: ExperimentConfig,
}

impl ExperimentConfig {
    /// Loads a TOML file, or the `config` object of a `.json` metadata file.
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("cannot read config {}", path.display()))?;
        let is_json = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
        if is_json {
            let meta: MetadataConfig =
                serde_json::from_str(&text).with_context(|| format!("invalid metadata {}", path.display()))?;
            Ok(meta.config)
        } else {
            toml::from_str(&text).with_context(|| format!("invalid config {}", path.display()))
        }
    }

    pub fn train_config(&self, states: u64) -> TrainConfig {
        TrainConfig {
            layers: self.train.layers.clone(),
            epochs: self.train.epochs,
            lr: self.train.lr,
            minibatch: 1,
            seed: self.seed,
            states,
            periphery: self.periphery,
            weight_bound: self.train.weight_bound,
            i_sw: self.device.i_sw,
            i_c0: self.device.i_c0,
            kappa: self.device.kappa,
            forward_mode: self.train.forward_mode,
            eval_mode: self.train.eval_mode,
            update_mode: self.train.update_mode,
        }
    }

    /// MNIST directory: config, then environment, then the default.
    pub fn resolve_mnist_dir(&mut self) -> PathBuf {
        let dir = self
            .data
            .mnist_dir
            .clone()
            .or_else(|| std::env::var_os(MNIST_DIR_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from(DEFAULT_MNIST_DIR));
        self.data.mnist_dir = Some(dir.clone());
        dir
    }

    pub fn validate_train(&self) -> anyhow::Result<()> {
        ensure!(
            !self.train.states.is_empty() || self.train.baseline,
            "nothing to train: no state counts and no baseline"
        );
        let mut seen = std::collections::BTreeSet::new();
        for &n in &self.train.states {
            ensure!(seen.insert(n), "state count {n} listed twice");
            self.train_config(n).validate()?;
        }
        if self.train.baseline {
            self.train_config(2).validate()?;
        }
        Ok(())
    }

    pub fn validate_device(&self) -> anyhow::Result<()> {
        self.device.validate()?;
        Ok(())
    }

    pub fn validate_state_diagram(&self) -> anyhow::Result<()> {
        self.validate_device()?;
        let s = &self.state_diagram;
        ensure!(s.points >= 1, "state_diagram.points must be at least 1");
        ensure!(s.sweep_fraction >= 0.0 && s.sweep_fraction.is_finite(), "state_diagram.sweep_fraction must be non-negative");
        ensure!(s.ramp_slope > 0.0 && s.ramp_slope.is_finite(), "state_diagram.ramp_slope must be positive");
        Ok(())
    }

    pub fn validate_multiply_map(&self) -> anyhow::Result<()> {
        self.validate_device()?;
        let m = &self.multiply_map;
        ensure!(m.programming_points >= 1 && m.slope_points >= 1, "multiply_map grid must be non-empty");
        if !(m.slope_min > 0.0 && m.slope_max >= m.slope_min && m.slope_max.is_finite()) {
            bail!("multiply_map slopes must satisfy 0 < slope_min <= slope_max");
        }
        Ok(())
    }
}

/// `n` evenly spaced values from `lo` to `hi` inclusive; a single point sits at `lo`.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_toml_is_default() {
        let cfg: ExperimentConfig = toml::from_str("").unwrap();
        assert_eq!(cfg, ExperimentConfig::default());
    }

    #[test]
    fn sections_override_defaults() {
        let cfg: ExperimentConfig = toml::from_str(
            "seed = 7\n[train]\nstates = [30]\nepochs = 2\n[periphery]\nnoise_std = 0.0\n[circuit]\nloop = \"x\"\n",
        )
        .unwrap();
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.train.states, vec![30]);
        assert_eq!(cfg.periphery.noise_std, 0.0);
        assert_eq!(cfg.periphery.adc_bits, 9);
        assert_eq!(cfg.circuit.loop_name, "x");
        assert_eq!(cfg.train_config(30).seed, 7);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(toml::from_str::<ExperimentConfig>("[train]\nepoch = 3\n").is_err());
    }

    #[test]
    fn rejects_duplicate_or_empty_runs() {
        let mut cfg = ExperimentConfig::default();
        cfg.train.states = vec![30, 30];
        assert!(cfg.validate_train().is_err());
        cfg.train.states.clear();
        assert!(cfg.validate_train().is_err());
        cfg.train.baseline = true;
        assert!(cfg.validate_train().is_ok());
    }

    #[test]
    fn linspace_endpoints() {
        assert_eq!(linspace(0.0, 1.0, 3), vec![0.0, 0.5, 1.0]);
        assert_eq!(linspace(2.0, 5.0, 1), vec![2.0]);
        assert!(linspace(0.0, 1.0, 0).is_empty());
    }
}
