use std::fs;
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::config::{TrainConfig, UpdateMode};
use crate::crossbar::{CrossbarArray, MvmMode, StateInit, StateMap};
use crate::error::{Error, Result};

pub const NETWORK_FORMAT: &str = "fluxcell.network";
pub const NETWORK_VERSION: u32 = 1;

/// Dense floating-point weights, row-major `rows x cols`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FloatTile {
    pub rows: usize,
    pub cols: usize,
    pub weights: Vec<f64>,
}

impl FloatTile {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, weights: vec![0.0; rows * cols] }
    }

    pub fn uniform<R: Rng + ?Sized>(rows: usize, cols: usize, half_width: f64, rng: &mut R) -> Self {
        let weights = (0..rows * cols).map(|_| rng.random_range(-half_width..=half_width)).collect();
        Self { rows, cols, weights }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Tile {
    Crossbar(CrossbarArray),
    Float(FloatTile),
}

impl Tile {
    pub fn rows(&self) -> usize {
        match self {
            Tile::Crossbar(a) => a.rows(),
            Tile::Float(t) => t.rows,
        }
    }

    pub fn cols(&self) -> usize {
        match self {
            Tile::Crossbar(a) => a.cols(),
            Tile::Float(t) => t.cols,
        }
    }

    pub fn weights(&self) -> &[f64] {
        match self {
            Tile::Crossbar(a) => a.weights(),
            Tile::Float(t) => &t.weights,
        }
    }

    /// `W x`; float tiles ignore the mode.
    pub fn forward<R: Rng + ?Sized>(&self, x: &[f64], mode: MvmMode, rng: &mut R) -> Result<Vec<f64>> {
        match self {
            Tile::Crossbar(a) => a.forward(x, mode, rng),
            Tile::Float(t) => {
                if x.len() != t.cols {
                    return Err(Error::DimensionMismatch { expected: t.cols, got: x.len() });
                }
                Ok(t.weights
                    .chunks_exact(t.cols)
                    .map(|row| row.iter().zip(x).map(|(w, v)| w * v).sum())
                    .collect())
            }
        }
    }

    /// `Wᵀ d`; float tiles ignore the mode.
    pub fn backward<R: Rng + ?Sized>(&self, d: &[f64], mode: MvmMode, rng: &mut R) -> Result<Vec<f64>> {
        match self {
            Tile::Crossbar(a) => a.backward(d, mode, rng),
            Tile::Float(t) => {
                if d.len() != t.rows {
                    return Err(Error::DimensionMismatch { expected: t.rows, got: d.len() });
                }
                let mut out = vec![0.0; t.cols];
                for (row, &di) in t.weights.chunks_exact(t.cols).zip(d) {
                    if di != 0.0 {
                        for (o, w) in out.iter_mut().zip(row) {
                            *o += w * di;
                        }
                    }
                }
                Ok(out)
            }
        }
    }

    /// Moves the weights by `lr * d xᵀ` (exactly for float tiles, in
    /// expectation for crossbar tiles).
    pub fn update<R: Rng + ?Sized>(
        &mut self,
        x: &[f64],
        d: &[f64],
        lr: f64,
        mode: UpdateMode,
        rng: &mut R,
    ) -> Result<()> {
        match self {
            Tile::Crossbar(a) => {
                let plan = a.plan_update(x, d, lr)?;
                match mode {
                    UpdateMode::Stochastic => a.apply_update(&plan, rng).map(|_| ()),
                    UpdateMode::Expected => a.apply_expected_update(&plan),
                }
            }
            Tile::Float(t) => {
                if x.len() != t.cols || d.len() != t.rows {
                    return Err(Error::DimensionMismatch { expected: t.rows * t.cols, got: x.len() * d.len() });
                }
                for (row, &di) in t.weights.chunks_exact_mut(t.cols).zip(d) {
                    if di == 0.0 {
                        continue;
                    }
                    let s = lr * di;
                    for (w, &xj) in row.iter_mut().zip(x) {
                        *w += s * xj;
                    }
                }
                Ok(())
            }
        }
    }
}

/// Values recorded by a forward pass for backpropagation.
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardRecord {
    /// Input of each tile, bias entry included.
    pub inputs: Vec<Vec<f64>>,
    pub probabilities: Vec<f64>,
}

/// Fully connected tanh network with a softmax output. Each tile carries one
/// extra input column driven by a constant 1 as the bias.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    layers: Vec<usize>,
    tiles: Vec<Tile>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TileKind {
    Crossbar,
    Float,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct NetworkManifest {
    format: String,
    version: u32,
    layers: Vec<usize>,
    tiles: Vec<(TileKind, String)>,
}

pub fn softmax(z: &[f64]) -> Vec<f64> {
    let m = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = z.iter().map(|v| (v - m).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}

pub fn cross_entropy(probs: &[f64], label: usize) -> f64 {
    -probs[label].max(f64::MIN_POSITIVE).ln()
}

fn with_bias(v: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(v.len() + 1);
    out.extend_from_slice(v);
    out.push(1.0);
    out
}

impl Network {
    pub fn from_tiles(layers: Vec<usize>, tiles: Vec<Tile>) -> Result<Self> {
        if layers.len() != tiles.len() + 1 {
            return Err(Error::DimensionMismatch { expected: layers.len() - 1, got: tiles.len() });
        }
        for (k, t) in tiles.iter().enumerate() {
            if t.cols() != layers[k] + 1 {
                return Err(Error::DimensionMismatch { expected: layers[k] + 1, got: t.cols() });
            }
            if t.rows() != layers[k + 1] {
                return Err(Error::DimensionMismatch { expected: layers[k + 1], got: t.rows() });
            }
        }
        Ok(Self { layers, tiles })
    }

    /// Crossbar tiles, states drawn uniformly from the central half of the
    /// index range (continuous states for expected-value updates).
    pub fn crossbar<R: Rng + ?Sized>(cfg: &TrainConfig, rng: &mut R) -> Result<Self> {
        cfg.validate()?;
        let map = StateMap::with_weight_bound(cfg.device()?, 0, cfg.weight_bound)?;
        let init = match cfg.update_mode {
            UpdateMode::Stochastic => StateInit::CentralHalf,
            UpdateMode::Expected => StateInit::ContinuousCentralHalf,
        };
        let tiles = cfg
            .layers
            .windows(2)
            .map(|w| {
                CrossbarArray::with_map(w[1], w[0] + 1, map, cfg.periphery, init.clone(), rng)
                    .map(Tile::Crossbar)
            })
            .collect::<Result<_>>()?;
        Self::from_tiles(cfg.layers.clone(), tiles)
    }

    /// Floating-point tiles initialized uniformly in `±weight_bound / 2`.
    pub fn float<R: Rng + ?Sized>(cfg: &TrainConfig, rng: &mut R) -> Result<Self> {
        cfg.validate()?;
        let tiles = cfg
            .layers
            .windows(2)
            .map(|w| Tile::Float(FloatTile::uniform(w[1], w[0] + 1, cfg.weight_bound / 2.0, rng)))
            .collect();
        Self::from_tiles(cfg.layers.clone(), tiles)
    }

    pub fn layers(&self) -> &[usize] {
        &self.layers
    }

    pub fn tiles(&self) -> &[Tile] {
        &self.tiles
    }

    pub fn tiles_mut(&mut self) -> &mut [Tile] {
        &mut self.tiles
    }

    pub fn forward_record<R: Rng + ?Sized>(
        &self,
        image: &[f64],
        mode: MvmMode,
        rng: &mut R,
    ) -> Result<ForwardRecord> {
        if image.len() != self.layers[0] {
            return Err(Error::DimensionMismatch { expected: self.layers[0], got: image.len() });
        }
        let mut inputs = Vec::with_capacity(self.tiles.len());
        let mut a = with_bias(image);
        let last = self.tiles.len() - 1;
        for (k, tile) in self.tiles.iter().enumerate() {
            let z = tile.forward(&a, mode, rng)?;
            inputs.push(a);
            if k == last {
                return Ok(ForwardRecord { inputs, probabilities: softmax(&z) });
            }
            let h: Vec<f64> = z.iter().map(|v| v.tanh()).collect();
            a = with_bias(&h);
        }
        unreachable!()
    }

    pub fn forward_pass<R: Rng + ?Sized>(&self, image: &[f64], mode: MvmMode, rng: &mut R) -> Result<Vec<f64>> {
        Ok(self.forward_record(image, mode, rng)?.probabilities)
    }

    pub fn predict<R: Rng + ?Sized>(&self, image: &[f64], mode: MvmMode, rng: &mut R) -> Result<usize> {
        let p = self.forward_pass(image, mode, rng)?;
        Ok(argmax(&p))
    }

    /// Error signals `dL/dz` of every tile's pre-activation, first tile first.
    pub fn deltas<R: Rng + ?Sized>(
        &self,
        rec: &ForwardRecord,
        label: usize,
        mode: MvmMode,
        rng: &mut R,
    ) -> Result<Vec<Vec<f64>>> {
        let n = self.tiles.len();
        let mut out = vec![Vec::new(); n];
        let mut delta = rec.probabilities.clone();
        delta[label] -= 1.0;
        for k in (0..n).rev() {
            if k > 0 {
                let g = self.tiles[k].backward(&delta, mode, rng)?;
                let h = &rec.inputs[k];
                let next: Vec<f64> = (0..self.layers[k]).map(|j| g[j] * (1.0 - h[j] * h[j])).collect();
                out[k] = std::mem::replace(&mut delta, next);
            } else {
                out[0] = std::mem::take(&mut delta);
            }
        }
        Ok(out)
    }

    /// Exact loss gradients per tile, row-major like the weights.
    pub fn gradients(&self, image: &[f64], label: usize) -> Result<Vec<Vec<f64>>> {
        let mut rng = crate::rng::from_seed(0);
        let rec = self.forward_record(image, MvmMode::Ideal, &mut rng)?;
        let deltas = self.deltas(&rec, label, MvmMode::Ideal, &mut rng)?;
        Ok(deltas
            .iter()
            .zip(&rec.inputs)
            .map(|(d, a)| d.iter().flat_map(|di| a.iter().map(move |aj| di * aj)).collect())
            .collect())
    }

    pub fn loss(&self, image: &[f64], label: usize) -> Result<f64> {
        let mut rng = crate::rng::from_seed(0);
        let p = self.forward_pass(image, MvmMode::Ideal, &mut rng)?;
        Ok(cross_entropy(&p, label))
    }

    /// One SGD step on a single sample; returns the sample's loss before the
    /// update.
    pub fn train_step<R1: Rng + ?Sized, R2: Rng + ?Sized>(
        &mut self,
        image: &[f64],
        label: usize,
        cfg: &TrainConfig,
        noise_rng: &mut R1,
        update_rng: &mut R2,
    ) -> Result<f64> {
        if label >= *self.layers.last().unwrap() {
            return Err(Error::InvalidInput(format!("label {label} out of range")));
        }
        let rec = self.forward_record(image, cfg.forward_mode, noise_rng)?;
        let loss = cross_entropy(&rec.probabilities, label);
        let deltas = self.deltas(&rec, label, cfg.forward_mode, noise_rng)?;
        for ((tile, delta), a) in self.tiles.iter_mut().zip(&deltas).zip(&rec.inputs) {
            let d: Vec<f64> = delta.iter().map(|v| -v).collect();
            tile.update(a, &d, cfg.lr, cfg.update_mode, update_rng)?;
        }
        Ok(loss)
    }

    /// Writes `network.json` plus one file per tile into `dir`.
    pub fn save(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        let mut tiles = Vec::new();
        for (k, tile) in self.tiles.iter().enumerate() {
            let file = format!("tile{k}.json");
            let (kind, body) = match tile {
                Tile::Crossbar(a) => (TileKind::Crossbar, serde_json::to_string(&a.to_checkpoint())?),
                Tile::Float(t) => (TileKind::Float, serde_json::to_string(t)?),
            };
            fs::write(dir.join(&file), body)?;
            tiles.push((kind, file));
        }
        let manifest = NetworkManifest {
            format: NETWORK_FORMAT.to_string(),
            version: NETWORK_VERSION,
            layers: self.layers.clone(),
            tiles,
        };
        fs::write(dir.join("network.json"), serde_json::to_string_pretty(&manifest)?)?;
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let manifest: NetworkManifest =
            serde_json::from_str(&fs::read_to_string(dir.join("network.json"))?)?;
        if manifest.format != NETWORK_FORMAT || manifest.version != NETWORK_VERSION {
            return Err(Error::Checkpoint(format!(
                "unsupported network checkpoint {} v{}",
                manifest.format, manifest.version
            )));
        }
        let mut tiles = Vec::new();
        for (kind, file) in &manifest.tiles {
            let body = fs::read_to_string(dir.join(file))?;
            tiles.push(match kind {
                TileKind::Crossbar => Tile::Crossbar(CrossbarArray::from_checkpoint(serde_json::from_str(&body)?)?),
                TileKind::Float => {
                    let t: FloatTile = serde_json::from_str(&body)?;
                    if t.weights.len() != t.rows * t.cols {
                        return Err(Error::Checkpoint(format!("{file}: weight count mismatch")));
                    }
                    Tile::Float(t)
                }
            });
        }
        Self::from_tiles(manifest.layers, tiles)
    }
}

pub fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if *x > v[best] {
            best = i;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    fn small_cfg() -> TrainConfig {
        TrainConfig { layers: vec![6, 5, 4, 3], ..TrainConfig::default() }
    }

    #[test]
    fn softmax_of_zeros_is_uniform() {
        let p = softmax(&[0.0; 10]);
        assert!(p.iter().all(|v| (v - 0.1).abs() < 1e-15));
        let q = softmax(&[1000.0, 0.0]);
        assert!(q[0] > 0.999 && q.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn default_net_has_three_tiles_with_bias_columns() {
        let cfg = TrainConfig::default();
        let mut r = rng::from_seed(3);
        let net = Network::crossbar(&cfg, &mut r).unwrap();
        let dims: Vec<(usize, usize)> = net.tiles().iter().map(|t| (t.rows(), t.cols())).collect();
        assert_eq!(dims, vec![(256, 785), (128, 257), (10, 129)]);
    }

    #[test]
    fn zero_weights_give_uniform_output() {
        let cfg = small_cfg();
        let tiles = cfg.layers.windows(2).map(|w| Tile::Float(FloatTile::zeros(w[1], w[0] + 1))).collect();
        let net = Network::from_tiles(cfg.layers.clone(), tiles).unwrap();
        let mut r = rng::from_seed(0);
        let p = net.forward_pass(&[0.3; 6], MvmMode::Ideal, &mut r).unwrap();
        assert!(p.iter().all(|v| (v - 1.0 / 3.0).abs() < 1e-15));
    }

    #[test]
    fn rejects_mismatched_tiles() {
        let tiles = vec![Tile::Float(FloatTile::zeros(3, 4))];
        assert!(Network::from_tiles(vec![4, 3], tiles).is_err());
        let tiles = vec![Tile::Float(FloatTile::zeros(3, 5))];
        assert!(Network::from_tiles(vec![4, 3], tiles).is_ok());
    }

    #[test]
    fn float_update_is_exact_outer_product() {
        let mut t = Tile::Float(FloatTile::zeros(2, 3));
        let mut r = rng::from_seed(0);
        t.update(&[1.0, -2.0, 0.5], &[0.5, -1.0], 0.1, UpdateMode::Stochastic, &mut r).unwrap();
        assert_eq!(t.weights(), &[0.05, -0.1, 0.025, -0.1, 0.2, -0.05]);
    }

    #[test]
    fn checkpoint_round_trip() {
        let cfg = small_cfg();
        let mut r = rng::from_seed(9);
        let dir = tempfile::tempdir().unwrap();
        for net in [Network::crossbar(&cfg, &mut r).unwrap(), Network::float(&cfg, &mut r).unwrap()] {
            net.save(dir.path()).unwrap();
            assert_eq!(Network::load(dir.path()).unwrap(), net);
        }
    }

    #[test]
    fn training_step_rejects_bad_label() {
        let cfg = small_cfg();
        let mut r = rng::from_seed(1);
        let mut net = Network::float(&cfg, &mut r).unwrap();
        let mut a = rng::from_seed(2);
        let mut b = rng::from_seed(3);
        assert!(net.train_step(&[0.0; 6], 3, &cfg, &mut a, &mut b).is_err());
        assert!(net.train_step(&[0.0; 6], 2, &cfg, &mut a, &mut b).unwrap().is_finite());
    }
}
