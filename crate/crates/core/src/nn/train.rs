use std::io::Write;
use std::time::Instant;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::config::TrainConfig;
use super::network::{argmax, Network};
use crate::error::{Error, Result};
use crate::etsim::trace::csv_err;
use crate::mnist::Dataset;
use crate::rng::{self, streams, SimRng};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub test_error_percent: f64,
    /// Only filled when timing is requested, so that logs stay reproducible.
    pub wall_seconds: Option<f64>,
}

/// SGD driver owning the network and its random streams.
#[derive(Debug, Clone)]
pub struct Trainer {
    cfg: TrainConfig,
    network: Network,
    epoch: usize,
    shuffle_rng: SimRng,
    noise_rng: SimRng,
    update_rng: SimRng,
    eval_rng: SimRng,
    pub record_time: bool,
}

impl Trainer {
    /// Crossbar network, or floating-point weights when `baseline` is set.
    pub fn new(cfg: TrainConfig, baseline: bool) -> Result<Self> {
        cfg.validate()?;
        let mut init = rng::stream(cfg.seed, streams::INIT);
        let network = if baseline {
            Network::float(&cfg, &mut init)?
        } else {
            Network::crossbar(&cfg, &mut init)?
        };
        Ok(Self::with_network(cfg, network))
    }

    pub fn with_network(cfg: TrainConfig, network: Network) -> Self {
        let s = cfg.seed;
        Self {
            network,
            epoch: 0,
            shuffle_rng: rng::stream(s, streams::SHUFFLE),
            noise_rng: rng::stream(s, streams::FORWARD_NOISE),
            update_rng: rng::stream(s, streams::UPDATE),
            eval_rng: rng::stream(s, streams::EVAL_NOISE),
            record_time: false,
            cfg,
        }
    }

    pub fn config(&self) -> &TrainConfig {
        &self.cfg
    }

    pub fn network(&self) -> &Network {
        &self.network
    }

    pub fn into_network(self) -> Network {
        self.network
    }

    pub fn epochs_done(&self) -> usize {
        self.epoch
    }

    /// One pass over `train` in a freshly shuffled order; returns the mean
    /// loss.
    pub fn train_epoch(&mut self, train: &Dataset) -> Result<f64> {
        if train.is_empty() {
            return Err(Error::InvalidInput("empty training set".into()));
        }
        let order = shuffled_indices(train.len(), &mut self.shuffle_rng);
        let mut total = 0.0;
        for (k, &i) in order.iter().enumerate() {
            let loss = self.network.train_step(
                train.image(i),
                usize::from(train.label(i)),
                &self.cfg,
                &mut self.noise_rng,
                &mut self.update_rng,
            )?;
            if !loss.is_finite() {
                return Err(Error::InvalidState(format!(
                    "non-finite loss in epoch {} at sample {k}",
                    self.epoch + 1
                )));
            }
            total += loss;
        }
        self.epoch += 1;
        Ok(total / train.len() as f64)
    }

    /// Classification error on `test` in percent.
    pub fn evaluate(&mut self, test: &Dataset) -> Result<f64> {
        if test.is_empty() {
            return Err(Error::InvalidInput("empty test set".into()));
        }
        let mut wrong = 0usize;
        for i in 0..test.len() {
            let p = self.network.forward_pass(test.image(i), self.cfg.eval_mode, &mut self.eval_rng)?;
            if argmax(&p) != usize::from(test.label(i)) {
                wrong += 1;
            }
        }
        Ok(100.0 * wrong as f64 / test.len() as f64)
    }

    /// Runs the configured number of epochs, evaluating after each one.
    pub fn run<F: FnMut(&EpochRecord)>(
        &mut self,
        train: &Dataset,
        test: &Dataset,
        mut on_epoch: F,
    ) -> Result<Vec<EpochRecord>> {
        let mut records = Vec::with_capacity(self.cfg.epochs);
        for _ in 0..self.cfg.epochs {
            let start = Instant::now();
            let train_loss = self.train_epoch(train)?;
            let test_error_percent = self.evaluate(test)?;
            let rec = EpochRecord {
                epoch: self.epoch,
                train_loss,
                test_error_percent,
                wall_seconds: self.record_time.then(|| start.elapsed().as_secs_f64()),
            };
            on_epoch(&rec);
            records.push(rec);
        }
        Ok(records)
    }
}

/// Visiting order of one epoch: a uniform permutation of `0..n`.
pub fn shuffled_indices<R: rand::Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    order
}

/// Writes `epoch,train_loss,test_error_percent,wall_seconds` rows.
pub fn write_training_log<W: Write>(out: W, records: &[EpochRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["epoch", "train_loss", "test_error_percent", "wall_seconds"])
        .map_err(csv_err)?;
    for r in records {
        w.write_record([
            r.epoch.to_string(),
            format!("{:.10}", r.train_loss),
            format!("{:.4}", r.test_error_percent),
            r.wall_seconds.map(|s| format!("{s:.3}")).unwrap_or_default(),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}
