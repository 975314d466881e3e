//! Programming staircase: a train of single-polarity pulses on one source,
//! with the loop quantized after each pulse has settled.

use serde::{Deserialize, Serialize};

use super::netlist::{Netlist, Waveform};
use super::solver::{SimOptions, Transient};
use super::trace::Trace;
use crate::device::PHI0;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PulseTrain {
    /// Source whose waveform is replaced by the train.
    pub source: String,
    /// Loop whose circulating current is tracked.
    pub loop_name: String,
    /// Pulse height in source units.
    pub amplitude: f64,
    /// Flat-top duration (s).
    pub width: f64,
    /// Rise and fall time (s).
    pub edge: f64,
    /// Start-to-start pulse spacing (s); must cover the settling time.
    pub spacing: f64,
    /// Quiet time before the first pulse (s).
    pub lead: f64,
    /// +1 or -1 per pulse.
    pub polarities: Vec<i8>,
}

impl PulseTrain {
    pub fn up_down(source: &str, loop_name: &str, amplitude: f64, up: usize, down: usize) -> Self {
        let mut polarities = vec![1; up];
        polarities.extend(std::iter::repeat_n(-1, down));
        Self {
            source: source.to_string(),
            loop_name: loop_name.to_string(),
            amplitude,
            width: 15e-12,
            edge: 1e-12,
            spacing: 300e-12,
            lead: 20e-12,
            polarities,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.width >= 0.0 && self.edge > 0.0 && self.lead > 0.0) {
            return Err(Error::param("pulse_train", "need width >= 0, edge > 0, lead > 0"));
        }
        if !(self.spacing > self.width + 2.0 * self.edge) {
            return Err(Error::param("spacing", "must exceed the pulse duration"));
        }
        if self.polarities.iter().any(|p| p.abs() != 1) {
            return Err(Error::param("polarities", "each pulse must be +1 or -1"));
        }
        Ok(())
    }

    pub fn start(&self, k: usize) -> f64 {
        self.lead + k as f64 * self.spacing
    }

    pub fn end_time(&self) -> f64 {
        self.start(self.polarities.len())
    }

    pub fn waveform(&self) -> Waveform {
        let mut pts = vec![(0.0, 0.0)];
        for (k, &p) in self.polarities.iter().enumerate() {
            let s = self.start(k);
            let v = f64::from(p) * self.amplitude;
            pts.push((s, 0.0));
            pts.push((s + self.edge, v));
            pts.push((s + self.edge + self.width, v));
            pts.push((s + 2.0 * self.edge + self.width, 0.0));
        }
        Waveform::Pwl(pts)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StaircaseResult {
    pub delta_i: f64,
    /// Settled loop current before snapping, one per pulse.
    pub raw: Vec<f64>,
    /// Quantized plateaus: the initial level followed by one per pulse.
    pub plateaus: Vec<f64>,
    /// Sample times of the plateaus.
    pub times: Vec<f64>,
    #[serde(skip)]
    pub trace: Trace,
}

impl StaircaseResult {
    /// Plateau levels as integer multiples of ΔI.
    pub fn levels(&self) -> Vec<i64> {
        self.plateaus.iter().map(|p| (p / self.delta_i).round() as i64).collect()
    }

    /// Per-pulse change of the quantized level.
    pub fn steps(&self) -> Vec<i64> {
        self.levels().windows(2).map(|w| w[1] - w[0]).collect()
    }

    /// Per-pulse change of the raw current in units of ΔI.
    pub fn raw_transfer(&self) -> Vec<f64> {
        self.raw
            .iter()
            .zip(&self.plateaus)
            .map(|(r, p)| (r - p) / self.delta_i)
            .collect()
    }

    /// True when every pulse moved the loop by exactly one quantum in the
    /// direction of its polarity.
    pub fn is_single_flux(&self, polarities: &[i8]) -> bool {
        self.steps().iter().zip(polarities).all(|(s, p)| *s == i64::from(*p))
    }
}

pub fn staircase_experiment(
    net: &Netlist,
    train: &PulseTrain,
    opts: SimOptions,
) -> Result<StaircaseResult> {
    train.validate()?;
    let inductance = net
        .flux_loop(&train.loop_name)
        .ok_or_else(|| Error::InvalidInput(format!("no loop named `{}`", train.loop_name)))?
        .inductance;
    let delta_i = PHI0 / inductance;
    let mut sim = Transient::new(net, opts)?;
    sim.set_source_waveform(&train.source, train.waveform())?;

    sim.run_until(train.lead)?;
    let mut plateaus = vec![sim.quantize_loop(&train.loop_name)?];
    let mut times = vec![sim.time()];
    let mut raw = Vec::with_capacity(train.polarities.len());
    for k in 0..train.polarities.len() {
        sim.run_until(train.start(k + 1))?;
        let li = sim.trace().loop_names.iter().position(|n| *n == train.loop_name).unwrap();
        raw.push(*sim.trace().loop_currents[li].last().unwrap());
        plateaus.push(sim.quantize_loop(&train.loop_name)?);
        times.push(sim.time());
    }
    Ok(StaircaseResult { delta_i, raw, plateaus, times, trace: sim.into_trace() })
}
