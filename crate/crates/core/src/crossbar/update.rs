//! All-parallel stochastic coincidence update.
//!
//! Input line `j` fires in each of `BL` slots with probability
//! `p_j = min(1, C |x_j|)` and output line `i` with `q_i = min(1, C |d_i|)`,
//! where `C = sqrt(lr / (BL * Δw_eff))`. A cell moves one state per slot in
//! which both of its lines fire, so the expected number of coincidences is
//! `BL p_j q_i = lr |x_j d_i| / Δw_eff` when nothing clips.
//!
//! Direction follows `sign(x_j d_i)`. A cell only moves for a row/column pulse
//! pair of opposite polarity (row `+`/column `-` increments, row `-`/column
//! `+` decrements), so each slot is split into four phases:
//!
//! | phase | input lines    | output lines   | effect                 |
//! |-------|----------------|----------------|------------------------|
//! | 1     | `x > 0` send + | `d > 0` send - | increment, `x>0, d>0`  |
//! | 2     | `x < 0` send + | `d < 0` send - | increment, `x<0, d<0`  |
//! | 3     | `x > 0` send - | `d < 0` send + | decrement, `x>0, d<0`  |
//! | 4     | `x < 0` send - | `d > 0` send + | decrement, `x<0, d>0`  |
//!
//! Every fired pair coincides in exactly one phase. Because all of a cell's
//! coincidences in one cycle share a direction, clipping them one by one is
//! the same as clipping their sum, which is what the fast path does.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::array::{CrossbarArray, StateGrid};
use crate::device::{DeviceState, Pulse};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PulseTrainPlan {
    /// Firing probability of each input line (array column).
    pub x_prob: Vec<f64>,
    pub x_sign: Vec<i8>,
    /// Firing probability of each output line (array row).
    pub d_prob: Vec<f64>,
    pub d_sign: Vec<i8>,
    pub bit_length: u32,
    /// Probability scale `C`.
    pub scale: f64,
}

impl PulseTrainPlan {
    /// Expected signed coincidence count of cell `(i, j)`.
    pub fn expected_coincidences(&self, i: usize, j: usize) -> f64 {
        f64::from(self.bit_length)
            * self.x_prob[j]
            * self.d_prob[i]
            * f64::from(self.x_sign[j] * self.d_sign[i])
    }
}

fn sign(v: f64) -> i8 {
    if v > 0.0 {
        1
    } else if v < 0.0 {
        -1
    } else {
        0
    }
}

/// Per-line slot masks, `words` 64-bit words per line.
struct Masks {
    words: usize,
    bits: Vec<u64>,
    active: Vec<usize>,
}

impl Masks {
    fn draw<R: Rng + ?Sized>(probs: &[f64], bl: u32, rng: &mut R) -> Self {
        let words = (bl as usize).div_ceil(64);
        let mut bits = vec![0u64; probs.len() * words];
        let mut active = Vec::new();
        for (line, &p) in probs.iter().enumerate() {
            if p <= 0.0 {
                continue;
            }
            let mut any = false;
            for t in 0..bl as usize {
                if rng.random::<f64>() < p {
                    bits[line * words + t / 64] |= 1 << (t % 64);
                    any = true;
                }
            }
            if any {
                active.push(line);
            }
        }
        Self { words, bits, active }
    }

    fn line(&self, k: usize) -> &[u64] {
        &self.bits[k * self.words..(k + 1) * self.words]
    }

    fn fires(&self, k: usize, t: usize) -> bool {
        self.bits[k * self.words + t / 64] >> (t % 64) & 1 == 1
    }
}

impl CrossbarArray {
    pub fn plan_update(&self, x: &[f64], d: &[f64], lr: f64) -> Result<PulseTrainPlan> {
        if x.len() != self.cols() {
            return Err(Error::DimensionMismatch { expected: self.cols(), got: x.len() });
        }
        if d.len() != self.rows() {
            return Err(Error::DimensionMismatch { expected: self.rows(), got: d.len() });
        }
        if !(lr >= 0.0) || !lr.is_finite() {
            return Err(Error::param("lr", "must be non-negative"));
        }
        let bl = self.periphery().bit_length;
        let scale = (lr / (f64::from(bl) * self.map().delta_w_eff())).sqrt();
        let prob = |v: &f64| (scale * v.abs()).min(1.0);
        Ok(PulseTrainPlan {
            x_prob: x.iter().map(prob).collect(),
            x_sign: x.iter().map(|&v| sign(v)).collect(),
            d_prob: d.iter().map(prob).collect(),
            d_sign: d.iter().map(|&v| sign(v)).collect(),
            bit_length: bl,
            scale,
        })
    }

    fn check_plan(&self, plan: &PulseTrainPlan) -> Result<()> {
        if plan.x_prob.len() != self.cols() || plan.x_sign.len() != self.cols() {
            return Err(Error::DimensionMismatch { expected: self.cols(), got: plan.x_prob.len() });
        }
        if plan.d_prob.len() != self.rows() || plan.d_sign.len() != self.rows() {
            return Err(Error::DimensionMismatch { expected: self.rows(), got: plan.d_prob.len() });
        }
        let bad = |p: &f64| !(0.0..=1.0).contains(p);
        if plan.x_prob.iter().any(bad) || plan.d_prob.iter().any(bad) {
            return Err(Error::InvalidInput("plan probabilities must lie in [0, 1]".into()));
        }
        if plan.bit_length == 0 {
            return Err(Error::InvalidInput("plan bit length must be positive".into()));
        }
        Ok(())
    }

    fn discrete_states(&mut self) -> Result<&mut Vec<i32>> {
        match &mut self.states {
            StateGrid::Discrete(v) => Ok(v),
            StateGrid::Continuous(_) => Err(Error::InvalidState(
                "continuous-state arrays only take expected-value updates".into(),
            )),
        }
    }

    /// Stochastic update. Returns the number of cells whose state changed.
    pub fn apply_update<R: Rng + ?Sized>(&mut self, plan: &PulseTrainPlan, rng: &mut R) -> Result<usize> {
        self.check_plan(plan)?;
        self.discrete_states()?;
        let xm = Masks::draw(&plan.x_prob, plan.bit_length, rng);
        let dm = Masks::draw(&plan.d_prob, plan.bit_length, rng);
        let cols = self.cols();
        let n_max = self.n_max() as i32;
        let map = *self.map();
        let StateGrid::Discrete(states) = &mut self.states else { unreachable!() };
        let mut changed = 0;
        for &i in &dm.active {
            let dl = dm.line(i);
            for &j in &xm.active {
                let count: u32 =
                    xm.line(j).iter().zip(dl).map(|(a, b)| (a & b).count_ones()).sum();
                if count == 0 {
                    continue;
                }
                let k = i * cols + j;
                let step = i32::from(plan.x_sign[j] * plan.d_sign[i]) * count as i32;
                let next = (states[k] + step).clamp(-n_max, n_max);
                if next != states[k] {
                    states[k] = next;
                    self.weights[k] = map.weight(f64::from(next));
                    changed += 1;
                }
            }
        }
        Ok(changed)
    }

    /// Slot-by-slot, phase-by-phase update through the single-cell pulse
    /// rule. Consumes the same random numbers as [`Self::apply_update`] and
    /// gives the same result, far more slowly.
    pub fn apply_update_reference<R: Rng + ?Sized>(
        &mut self,
        plan: &PulseTrainPlan,
        rng: &mut R,
    ) -> Result<()> {
        self.check_plan(plan)?;
        self.discrete_states()?;
        let xm = Masks::draw(&plan.x_prob, plan.bit_length, rng);
        let dm = Masks::draw(&plan.d_prob, plan.bit_length, rng);
        let device = self.map().device;
        let map = *self.map();
        let (rows, cols) = (self.rows(), self.cols());
        // (x sign, d sign, x-line polarity, d-line polarity) per phase.
        const PHASES: [(i8, i8, Pulse, Pulse); 4] = [
            (1, 1, Pulse::Positive, Pulse::Negative),
            (-1, -1, Pulse::Positive, Pulse::Negative),
            (1, -1, Pulse::Negative, Pulse::Positive),
            (-1, 1, Pulse::Negative, Pulse::Positive),
        ];
        let StateGrid::Discrete(states) = &mut self.states else { unreachable!() };
        for t in 0..plan.bit_length as usize {
            for (xs, ds, xp, dp) in PHASES {
                for i in 0..rows {
                    let col_pulse =
                        if plan.d_sign[i] == ds && dm.fires(i, t) { dp } else { Pulse::Absent };
                    for j in 0..cols {
                        let row_pulse =
                            if plan.x_sign[j] == xs && xm.fires(j, t) { xp } else { Pulse::Absent };
                        let k = i * cols + j;
                        let cell = DeviceState::new(device, i64::from(states[k]))?;
                        states[k] = cell.apply_update_pulse(row_pulse, col_pulse).index() as i32;
                    }
                }
            }
        }
        for (k, w) in self.weights.iter_mut().enumerate() {
            *w = map.weight(f64::from(states[k]));
        }
        Ok(())
    }

    /// Deterministic update by the expected coincidence count; requires
    /// continuous states.
    pub fn apply_expected_update(&mut self, plan: &PulseTrainPlan) -> Result<()> {
        self.check_plan(plan)?;
        let cols = self.cols();
        let n_max = self.n_max() as f64;
        let map = *self.map();
        let StateGrid::Continuous(states) = &mut self.states else {
            return Err(Error::InvalidState("expected-value updates need continuous states".into()));
        };
        for (i, (&q, &ds)) in plan.d_prob.iter().zip(&plan.d_sign).enumerate() {
            if q == 0.0 || ds == 0 {
                continue;
            }
            for (j, (&p, &xs)) in plan.x_prob.iter().zip(&plan.x_sign).enumerate() {
                if p == 0.0 || xs == 0 {
                    continue;
                }
                let k = i * cols + j;
                let dn = f64::from(plan.bit_length) * p * q * f64::from(xs * ds);
                states[k] = (states[k] + dn).clamp(-n_max, n_max);
                self.weights[k] = map.weight(states[k]);
            }
        }
        Ok(())
    }
}
