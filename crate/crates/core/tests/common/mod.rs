#![allow(dead_code, clippy::needless_range_loop)]

use std::path::PathBuf;

use fluxcell::crossbar::{MvmMode, PeripheryConfig};
use fluxcell::mnist::{Dataset, Split};
use fluxcell::nn::{Network, Tile, TrainConfig, UpdateMode};
use fluxcell::rng;
use rand::Rng;

/// MNIST directory from `FLUXCELL_MNIST_DIR`, else the repository's `data/mnist`.
pub fn mnist_dir() -> Option<PathBuf> {
    let dir = std::env::var_os("FLUXCELL_MNIST_DIR")
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/mnist"));
    dir.join(fluxcell::mnist::TRAIN_IMAGES).exists().then_some(dir)
}

pub fn synthetic(n: usize, dim: usize, classes: u8, seed: u64) -> Dataset {
    let mut r = rng::from_seed(seed);
    Dataset {
        split: Split::Train,
        dim,
        images: (0..n * dim).map(|_| r.random::<f64>()).collect(),
        labels: (0..n).map(|_| r.random_range(0..classes)).collect(),
    }
}

/// Plain loop implementation of the tanh/softmax network, one weight matrix
/// per layer stored row-major with the bias in the last column.
pub struct ReferenceNet {
    pub layers: Vec<usize>,
    pub weights: Vec<Vec<f64>>,
}

impl ReferenceNet {
    fn activations(&self, x: &[f64]) -> (Vec<Vec<f64>>, Vec<f64>) {
        let mut inputs = Vec::new();
        let mut a: Vec<f64> = x.to_vec();
        a.push(1.0);
        let last = self.weights.len() - 1;
        for (k, w) in self.weights.iter().enumerate() {
            let (rows, cols) = (self.layers[k + 1], self.layers[k] + 1);
            let mut z = vec![0.0; rows];
            for i in 0..rows {
                for j in 0..cols {
                    z[i] += w[i * cols + j] * a[j];
                }
            }
            inputs.push(a);
            if k == last {
                let m = z.iter().cloned().fold(f64::MIN, f64::max);
                let s: f64 = z.iter().map(|v| (v - m).exp()).sum();
                return (inputs, z.iter().map(|v| (v - m).exp() / s).collect());
            }
            a = z.iter().map(|v| v.tanh()).collect();
            a.push(1.0);
        }
        unreachable!()
    }

    pub fn loss(&self, x: &[f64], label: usize) -> f64 {
        -self.activations(x).1[label].ln()
    }

    pub fn gradients(&self, x: &[f64], label: usize) -> Vec<Vec<f64>> {
        let (inputs, p) = self.activations(x);
        let n = self.weights.len();
        let mut grads = vec![Vec::new(); n];
        let mut delta = p;
        delta[label] -= 1.0;
        for k in (0..n).rev() {
            let (rows, cols) = (self.layers[k + 1], self.layers[k] + 1);
            let a = &inputs[k];
            let mut g = vec![0.0; rows * cols];
            for i in 0..rows {
                for j in 0..cols {
                    g[i * cols + j] = delta[i] * a[j];
                }
            }
            grads[k] = g;
            if k > 0 {
                let mut next = vec![0.0; self.layers[k]];
                for j in 0..self.layers[k] {
                    let mut s = 0.0;
                    for i in 0..rows {
                        s += self.weights[k][i * cols + j] * delta[i];
                    }
                    next[j] = s * (1.0 - a[j] * a[j]);
                }
                delta = next;
            }
        }
        grads
    }

    pub fn sgd_step(&mut self, x: &[f64], label: usize, lr: f64) {
        let g = self.gradients(x, label);
        for (w, gk) in self.weights.iter_mut().zip(g) {
            for (wi, gi) in w.iter_mut().zip(gk) {
                *wi -= lr * gi;
            }
        }
    }
}

pub fn max_abs(v: impl IntoIterator<Item = f64>) -> f64 {
    v.into_iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Worst relative error per tile between backprop and central differences of
/// the summed loss over a five-sample probe set.
pub fn gradient_check_errors(layers: &[usize], seed: u64) -> Vec<f64> {
    let cfg = TrainConfig { layers: layers.to_vec(), ..TrainConfig::default() };
    let mut net = Network::float(&cfg, &mut rng::from_seed(seed)).unwrap();
    let probe = synthetic(5, layers[0], *layers.last().unwrap() as u8, seed + 1);
    let total_loss = |n: &Network| -> f64 {
        (0..probe.len()).map(|s| n.loss(probe.image(s), probe.label(s) as usize).unwrap()).sum()
    };
    let mut grads: Vec<Vec<f64>> = net.tiles().iter().map(|t| vec![0.0; t.weights().len()]).collect();
    for s in 0..probe.len() {
        for (acc, g) in grads.iter_mut().zip(net.gradients(probe.image(s), probe.label(s) as usize).unwrap()) {
            acc.iter_mut().zip(g).for_each(|(a, b)| *a += b);
        }
    }
    let h = 1e-5;
    let mut errors = Vec::new();
    for k in 0..grads.len() {
        let mut fd = vec![0.0; grads[k].len()];
        for idx in 0..fd.len() {
            let bump = |net: &mut Network, dv: f64| {
                let Tile::Float(t) = &mut net.tiles_mut()[k] else { unreachable!() };
                t.weights[idx] += dv;
            };
            bump(&mut net, h);
            let up = total_loss(&net);
            bump(&mut net, -2.0 * h);
            let down = total_loss(&net);
            bump(&mut net, h);
            fd[idx] = (up - down) / (2.0 * h);
        }
        let err = max_abs(fd.iter().zip(&grads[k]).map(|(a, b)| a - b));
        errors.push(err / max_abs(grads[k].iter().copied()));
    }
    errors
}

/// Crossbar network in the expected-update, ideal-read, near-linear limit
/// against [`ReferenceNet`] SGD from the same start. Returns the worst
/// `max|w - w_ref| / max|w_ref|` over tiles.
pub fn oracle_reduction_error(layers: &[usize], steps: usize) -> f64 {
    // kappa * i_sw / i_c0 ~ 1e-9 makes the state map linear to first order.
    let cfg = TrainConfig {
        layers: layers.to_vec(),
        states: 1000,
        kappa: 1e-9,
        periphery: PeripheryConfig::noiseless(),
        forward_mode: MvmMode::Ideal,
        eval_mode: MvmMode::Ideal,
        update_mode: UpdateMode::Expected,
        ..TrainConfig::default()
    };
    let mut net = Network::crossbar(&cfg, &mut rng::from_seed(cfg.seed)).unwrap();
    let mut reference = ReferenceNet {
        layers: cfg.layers.clone(),
        weights: net.tiles().iter().map(|t| t.weights().to_vec()).collect(),
    };
    let data = synthetic(steps, layers[0], *layers.last().unwrap() as u8, 17);
    let (mut a, mut b) = (rng::from_seed(0), rng::from_seed(1));
    for s in 0..steps {
        let (x, y) = (data.image(s), data.label(s) as usize);
        net.train_step(x, y, &cfg, &mut a, &mut b).unwrap();
        reference.sgd_step(x, y, cfg.lr);
    }
    net.tiles()
        .iter()
        .zip(&reference.weights)
        .map(|(tile, w)| {
            max_abs(tile.weights().iter().zip(w).map(|(p, q)| p - q)) / max_abs(w.iter().copied())
        })
        .fold(0.0, f64::max)
}
