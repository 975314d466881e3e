//! Modified nodal analysis with backward-Euler integration.
//!
//! Unknowns are the non-ground node voltages followed by one branch current
//! for every inductor, voltage source and nanowire. Resistors and current
//! sources are stamped directly. Each step first advances every hotspot with
//! the branch current of the last accepted step, then solves the linear
//! network with the updated nanowire resistances.
//!
//! Step control watches the state variables only (inductor currents and
//! hotspot fractions): a step is retried at half size while any of them moves
//! by more than `tol` (currents relative to `max(|I|, current_scale)`), and
//! the next step doubles once the change falls below `tol / 2`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::hotspot::{nanowire_step, DEFAULT_TAU_THERMAL};
use super::netlist::{ElementKind, Netlist, Source, GROUND};
use super::trace::Trace;
use crate::device::PHI0;
use crate::error::{Error, Result};

/// Hotspot fraction below which a nanowire counts as superconducting.
pub const COLD_FRACTION: f64 = 1e-6;
const HOLD_GMIN: f64 = 1e-12;
/// Settling threshold on |dI/dt| in units of `ΔI / tau_thermal`.
pub const SETTLE_FACTOR: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimOptions {
    pub tol: f64,
    pub dt_min: f64,
    pub dt_max: f64,
    pub dt_initial: f64,
    /// Floor for the relative current-change metric; derived from the
    /// netlist when absent.
    pub current_scale: Option<f64>,
    pub max_steps: usize,
}

impl Default for SimOptions {
    fn default() -> Self {
        Self {
            tol: 1e-3,
            dt_min: 1e-19,
            dt_max: 10e-12,
            dt_initial: 1e-15,
            current_scale: None,
            max_steps: 50_000_000,
        }
    }
}

impl SimOptions {
    pub fn with_tol(tol: f64) -> Self {
        Self { tol, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            return Err(Error::param("tol", "must be positive"));
        }
        if !(self.dt_min > 0.0 && self.dt_min <= self.dt_initial && self.dt_initial <= self.dt_max) {
            return Err(Error::param("dt", "need 0 < dt_min <= dt_initial <= dt_max"));
        }
        if let Some(s) = self.current_scale {
            if !(s > 0.0) {
                return Err(Error::param("current_scale", "must be positive"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
struct Attempt {
    x: DVector<f64>,
    fractions: Vec<f64>,
    inductor_currents: Vec<f64>,
    change: f64,
}

/// A transient run that can be advanced in segments.
#[derive(Debug, Clone)]
pub struct Transient {
    net: Netlist,
    opts: SimOptions,
    n_v: usize,
    /// Unknown index of each element's branch current, if it has one.
    branch: Vec<Option<usize>>,
    waves: Vec<Option<String>>,
    breakpoints: Vec<f64>,
    current_scale: f64,
    t: f64,
    dt: f64,
    x: DVector<f64>,
    fractions: Vec<f64>,
    inductor_currents: Vec<f64>,
    steps: usize,
    trace: Trace,
}

impl Transient {
    pub fn new(net: &Netlist, opts: SimOptions) -> Result<Self> {
        opts.validate()?;
        net.ensure_valid()?;
        let n_v = net.nodes.len() - 1;
        let mut next = n_v;
        let mut branch = Vec::with_capacity(net.elements.len());
        let mut waves = Vec::with_capacity(net.elements.len());
        let mut breakpoints = Vec::new();
        for e in &net.elements {
            let has_branch = matches!(
                e.kind,
                ElementKind::Inductor(_) | ElementKind::VoltageSource(_) | ElementKind::Nanowire(_)
            );
            branch.push(if has_branch {
                next += 1;
                Some(next - 1)
            } else {
                None
            });
            let wave = match &e.kind {
                ElementKind::VoltageSource(Source::Wave(w))
                | ElementKind::CurrentSource(Source::Wave(w)) => Some(w.clone()),
                _ => None,
            };
            if let Some(w) = &wave {
                breakpoints.extend(net.waveforms[w].breakpoints());
            }
            waves.push(wave);
        }
        breakpoints.sort_by(f64::total_cmp);
        breakpoints.dedup();

        let current_scale = opts.current_scale.unwrap_or_else(|| default_current_scale(net));
        let fractions = net
            .elements
            .iter()
            .map(|e| match &e.kind {
                ElementKind::Nanowire(nw) => nw.hotspot_fraction,
                _ => 0.0,
            })
            .collect();

        let nw_names = |names: &[(String, i8)]| -> Vec<String> {
            names
                .iter()
                .filter(|(n, _)| {
                    matches!(net.element(n).map(|e| &e.kind), Some(ElementKind::Nanowire(_)))
                })
                .map(|(n, _)| n.clone())
                .collect()
        };
        let trace = Trace {
            node_names: net.nodes[1..].to_vec(),
            node_voltages: vec![Vec::new(); n_v],
            branch_names: net.elements.iter().map(|e| e.name.clone()).collect(),
            branch_currents: vec![Vec::new(); net.elements.len()],
            hotspot_names: net
                .elements
                .iter()
                .filter(|e| matches!(e.kind, ElementKind::Nanowire(_)))
                .map(|e| e.name.clone())
                .collect(),
            hotspot_fractions: vec![
                Vec::new();
                net.elements.iter().filter(|e| matches!(e.kind, ElementKind::Nanowire(_))).count()
            ],
            loop_names: net.loops.iter().map(|l| l.name.clone()).collect(),
            loop_inductances: net.loops.iter().map(|l| l.inductance).collect(),
            loop_currents: vec![Vec::new(); net.loops.len()],
            loop_nanowires: net.loops.iter().map(|l| nw_names(&l.branches)).collect(),
            loop_settle_tau: net
                .loops
                .iter()
                .map(|l| {
                    l.branches
                        .iter()
                        .filter_map(|(n, _)| match net.element(n).map(|e| &e.kind) {
                            Some(ElementKind::Nanowire(nw)) => Some(nw.tau_thermal),
                            _ => None,
                        })
                        .fold(None, |m: Option<f64>, t| Some(m.map_or(t, |m| m.max(t))))
                        .unwrap_or(DEFAULT_TAU_THERMAL)
                })
                .collect(),
            ..Trace::default()
        };

        let mut sim = Self {
            net: net.clone(),
            opts,
            n_v,
            branch,
            waves,
            breakpoints,
            current_scale,
            t: 0.0,
            dt: opts.dt_initial,
            x: DVector::zeros(next),
            fractions,
            inductor_currents: vec![0.0; net.elements.len()],
            steps: 0,
            trace,
        };
        sim.x = sim.solve(None, &sim.fractions.clone(), &sim.inductor_currents.clone(), 0.0)?;
        sim.record();
        Ok(sim)
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    pub fn netlist(&self) -> &Netlist {
        &self.net
    }

    pub fn trace(&self) -> &Trace {
        &self.trace
    }

    pub fn into_trace(self) -> Trace {
        self.trace
    }

    pub fn accepted_steps(&self) -> usize {
        self.steps
    }

    /// Replaces a source's waveform; corners after the current time become
    /// step breakpoints.
    pub fn set_source_waveform(&mut self, source: &str, wave: super::netlist::Waveform) -> Result<()> {
        let idx = self
            .net
            .element_index(source)
            .ok_or_else(|| Error::InvalidInput(format!("no source named `{source}`")))?;
        let key = format!("__{source}");
        match &mut self.net.elements[idx].kind {
            ElementKind::VoltageSource(s) | ElementKind::CurrentSource(s) => {
                *s = Source::Wave(key.clone())
            }
            _ => return Err(Error::InvalidInput(format!("`{source}` is not a source"))),
        }
        self.breakpoints.extend(wave.breakpoints());
        self.breakpoints.sort_by(f64::total_cmp);
        self.breakpoints.dedup();
        self.net.waveforms.insert(key.clone(), wave);
        self.waves[idx] = Some(key);
        Ok(())
    }

    fn source_value(&self, idx: usize, t: f64) -> f64 {
        match (&self.waves[idx], &self.net.elements[idx].kind) {
            (Some(w), _) => self.net.waveforms[w].value(t),
            (None, ElementKind::VoltageSource(Source::Dc(v)))
            | (None, ElementKind::CurrentSource(Source::Dc(v))) => *v,
            _ => 0.0,
        }
    }

    /// Solves the network at time `t`. With `dt = None` inductors are held at
    /// their given currents, otherwise the backward-Euler companion is used.
    fn solve(
        &self,
        dt: Option<f64>,
        fractions: &[f64],
        inductor_prev: &[f64],
        t: f64,
    ) -> Result<DVector<f64>> {
        let size = self.x.len();
        let mut a = DMatrix::<f64>::zeros(size, size);
        let mut b = DVector::<f64>::zeros(size);
        let row = |node: usize| (node != GROUND).then(|| node - 1);
        if dt.is_none() {
            // With every inductor current pinned, nodes cut off by inductors
            // have no voltage equation; a tiny leak to ground fixes them.
            for k in 0..self.n_v {
                a[(k, k)] += HOLD_GMIN;
            }
        }
        for (k, e) in self.net.elements.iter().enumerate() {
            let (p, n) = (row(e.pos), row(e.neg));
            match &e.kind {
                ElementKind::Resistor(r) => {
                    let g = 1.0 / r;
                    if let Some(p) = p {
                        a[(p, p)] += g;
                    }
                    if let Some(n) = n {
                        a[(n, n)] += g;
                    }
                    if let (Some(p), Some(n)) = (p, n) {
                        a[(p, n)] -= g;
                        a[(n, p)] -= g;
                    }
                }
                ElementKind::CurrentSource(_) => {
                    let i = self.source_value(k, t);
                    if let Some(p) = p {
                        b[p] -= i;
                    }
                    if let Some(n) = n {
                        b[n] += i;
                    }
                }
                kind => {
                    let m = self.branch[k].expect("branch element has an unknown");
                    if let Some(p) = p {
                        a[(p, m)] += 1.0;
                        a[(m, p)] += 1.0;
                    }
                    if let Some(n) = n {
                        a[(n, m)] -= 1.0;
                        a[(m, n)] -= 1.0;
                    }
                    match kind {
                        ElementKind::VoltageSource(_) => b[m] = self.source_value(k, t),
                        ElementKind::Inductor(l) => match dt {
                            Some(dt) => {
                                a[(m, m)] -= l / dt;
                                b[m] = -l / dt * inductor_prev[k];
                            }
                            None => {
                                // Replace the branch equation by I = I0.
                                if let Some(p) = p {
                                    a[(m, p)] = 0.0;
                                }
                                if let Some(n) = n {
                                    a[(m, n)] = 0.0;
                                }
                                a[(m, m)] = 1.0;
                                b[m] = inductor_prev[k];
                            }
                        },
                        ElementKind::Nanowire(nw) => a[(m, m)] -= fractions[k] * nw.r_normal,
                        _ => unreachable!(),
                    }
                }
            }
        }
        a.lu().solve(&b).ok_or_else(|| Error::Simulation {
            time: t,
            reason: "singular circuit matrix".into(),
        })
    }

    fn branch_current(&self, x: &DVector<f64>, k: usize, t: f64) -> f64 {
        let e = &self.net.elements[k];
        match &e.kind {
            ElementKind::Resistor(r) => (self.voltage(x, e.pos) - self.voltage(x, e.neg)) / r,
            ElementKind::CurrentSource(_) => self.source_value(k, t),
            _ => x[self.branch[k].unwrap()],
        }
    }

    fn voltage(&self, x: &DVector<f64>, node: usize) -> f64 {
        if node == GROUND {
            0.0
        } else {
            x[node - 1]
        }
    }

    fn attempt(&self, dt: f64) -> Result<Attempt> {
        let t_new = self.t + dt;
        let mut fractions = self.fractions.clone();
        for (k, e) in self.net.elements.iter().enumerate() {
            if let ElementKind::Nanowire(nw) = &e.kind {
                let mut nw = *nw;
                nw.hotspot_fraction = self.fractions[k];
                fractions[k] = nanowire_step(&nw, self.x[self.branch[k].unwrap()], dt);
            }
        }
        let x = self.solve(Some(dt), &fractions, &self.inductor_currents, t_new)?;
        let mut change: f64 = 0.0;
        let mut inductor_currents = self.inductor_currents.clone();
        for (k, e) in self.net.elements.iter().enumerate() {
            match e.kind {
                ElementKind::Inductor(_) => {
                    let new = x[self.branch[k].unwrap()];
                    let old = self.inductor_currents[k];
                    let scale = new.abs().max(old.abs()).max(self.current_scale);
                    change = change.max((new - old).abs() / scale);
                    inductor_currents[k] = new;
                }
                ElementKind::Nanowire(_) => {
                    change = change.max((fractions[k] - self.fractions[k]).abs());
                }
                _ => {}
            }
        }
        if !change.is_finite() {
            return Err(Error::Simulation { time: t_new, reason: "non-finite solution".into() });
        }
        Ok(Attempt { x, fractions, inductor_currents, change })
    }

    fn record(&mut self) {
        let t = self.t;
        self.trace.time.push(t);
        for k in 0..self.n_v {
            self.trace.node_voltages[k].push(self.x[k]);
        }
        let currents: Vec<f64> =
            (0..self.net.elements.len()).map(|k| self.branch_current(&self.x, k, t)).collect();
        let mut h = 0;
        for (k, e) in self.net.elements.iter().enumerate() {
            self.trace.branch_currents[k].push(currents[k]);
            if matches!(e.kind, ElementKind::Nanowire(_)) {
                self.trace.hotspot_fractions[h].push(self.fractions[k]);
                h += 1;
            }
        }
        for (li, l) in self.net.loops.iter().enumerate() {
            let (name, sign) = &l.branches[0];
            let k = self.net.element_index(name).unwrap();
            self.trace.loop_currents[li].push(f64::from(*sign) * currents[k]);
        }
    }

    /// Advances the solution to `t_stop`.
    pub fn run_until(&mut self, t_stop: f64) -> Result<()> {
        let eps = 1e-6 * self.opts.dt_min;
        while self.t < t_stop - eps {
            let next_break = self
                .breakpoints
                .iter()
                .copied()
                .find(|&b| b > self.t + eps)
                .unwrap_or(f64::INFINITY);
            let limit = (t_stop - self.t).min(next_break - self.t);
            let mut dt = self.dt.min(limit);
            let mut rejected = false;
            let accepted = loop {
                let trial = self.attempt(dt)?;
                if trial.change <= self.opts.tol {
                    break trial;
                }
                if dt <= self.opts.dt_min {
                    return Err(Error::Simulation {
                        time: self.t,
                        reason: format!(
                            "step change {:.3e} exceeds tol {:.3e} at minimum step {:.3e} s",
                            trial.change, self.opts.tol, dt
                        ),
                    });
                }
                dt = (dt / 2.0).max(self.opts.dt_min);
                rejected = true;
            };
            self.t = if dt == limit { next_break.min(t_stop) } else { self.t + dt };
            self.x = accepted.x;
            self.fractions = accepted.fractions;
            self.inductor_currents = accepted.inductor_currents;
            self.steps += 1;
            if self.steps > self.opts.max_steps {
                return Err(Error::Simulation {
                    time: self.t,
                    reason: format!("exceeded {} steps", self.opts.max_steps),
                });
            }
            self.record();

            if rejected {
                self.dt = dt;
            }
            if accepted.change < 0.5 * self.opts.tol && dt >= self.dt {
                self.dt = (2.0 * dt).min(self.opts.dt_max);
            }
            if (self.t - next_break).abs() <= eps {
                self.dt = self.dt.min(self.opts.dt_initial);
            }
        }
        Ok(())
    }

    /// Snaps a loop's circulating current to the nearest multiple of
    /// `phi0 / L_loop`, distributing the correction around the loop.
    /// Returns the corrected current.
    pub fn quantize_loop(&mut self, name: &str) -> Result<f64> {
        let li = self
            .net
            .loops
            .iter()
            .position(|l| l.name == name)
            .ok_or_else(|| Error::InvalidInput(format!("no loop named `{name}`")))?;
        let last = self.trace.len() - 1;
        let snapped = enforce_flux_quantization(&self.trace, name, self.trace.time[last])?;
        let current = self.trace.loop_currents[li][last];
        let delta = snapped - current;
        let branches = self.net.loops[li].branches.clone();
        for (bname, sign) in &branches {
            let k = self.net.element_index(bname).unwrap();
            if matches!(self.net.elements[k].kind, ElementKind::Inductor(_)) {
                self.inductor_currents[k] += f64::from(*sign) * delta;
            }
        }
        let fractions = self.fractions.clone();
        let currents = self.inductor_currents.clone();
        self.x = self.solve(None, &fractions, &currents, self.t)?;
        // Overwrite the final sample with the corrected state.
        for v in self.trace.node_voltages.iter_mut() {
            v.pop();
        }
        for v in self.trace.branch_currents.iter_mut() {
            v.pop();
        }
        for v in self.trace.hotspot_fractions.iter_mut() {
            v.pop();
        }
        for v in self.trace.loop_currents.iter_mut() {
            v.pop();
        }
        self.trace.time.pop();
        self.record();
        Ok(self.trace.loop_currents[li][last])
    }
}

fn default_current_scale(net: &Netlist) -> f64 {
    let nw_min = net
        .elements
        .iter()
        .filter_map(|e| match &e.kind {
            ElementKind::Nanowire(nw) => Some(nw.i_sw),
            _ => None,
        })
        .fold(f64::INFINITY, f64::min);
    if nw_min.is_finite() {
        return nw_min;
    }
    let amplitude = |s: &Source| match s {
        Source::Dc(v) => v.abs(),
        Source::Wave(w) => net.waveforms.get(w).map_or(0.0, |w| w.max_abs()),
    };
    let r_min = net
        .elements
        .iter()
        .filter_map(|e| match e.kind {
            ElementKind::Resistor(r) => Some(r),
            _ => None,
        })
        .fold(f64::INFINITY, f64::min);
    let mut scale: f64 = 0.0;
    for e in &net.elements {
        match &e.kind {
            ElementKind::CurrentSource(s) => scale = scale.max(amplitude(s)),
            ElementKind::VoltageSource(s) if r_min.is_finite() => {
                scale = scale.max(amplitude(s) / r_min)
            }
            _ => {}
        }
    }
    if scale > 0.0 {
        scale
    } else {
        1e-6
    }
}

/// Runs a transient from `t = 0` to `t_end`.
pub fn simulate(net: &Netlist, t_end: f64, tol: f64) -> Result<Trace> {
    simulate_with(net, t_end, SimOptions::with_tol(tol))
}

pub fn simulate_with(net: &Netlist, t_end: f64, opts: SimOptions) -> Result<Trace> {
    if !(t_end >= 0.0) {
        return Err(Error::param("t_end", "must be non-negative"));
    }
    let mut sim = Transient::new(net, opts)?;
    sim.run_until(t_end)?;
    Ok(sim.into_trace())
}

/// Returns the loop current at the last sample not after `t`, rounded to the
/// nearest multiple of `phi0 / L_loop`. Fails unless every nanowire in the
/// loop is cold and the current has settled.
pub fn enforce_flux_quantization(trace: &Trace, loop_name: &str, t: f64) -> Result<f64> {
    let li = trace
        .loop_names
        .iter()
        .position(|n| n == loop_name)
        .ok_or_else(|| Error::InvalidInput(format!("trace has no loop `{loop_name}`")))?;
    let s = trace
        .sample_at(t)
        .ok_or_else(|| Error::InvalidInput(format!("no sample at or before t = {t:e} s")))?;
    let delta_i = PHI0 / trace.loop_inductances[li];
    for nw in &trace.loop_nanowires[li] {
        let h = trace.hotspot_names.iter().position(|n| n == nw).unwrap();
        let f = trace.hotspot_fractions[h][s];
        if f > COLD_FRACTION {
            return Err(Error::InvalidState(format!(
                "nanowire `{nw}` in loop `{loop_name}` is resistive (hotspot fraction {f:.3e}) at t = {:e} s",
                trace.time[s]
            )));
        }
    }
    let current = trace.loop_currents[li][s];
    if s > 0 {
        let slope = (current - trace.loop_currents[li][s - 1]) / (trace.time[s] - trace.time[s - 1]);
        let limit = SETTLE_FACTOR * delta_i / trace.loop_settle_tau[li];
        if slope.abs() >= limit {
            return Err(Error::InvalidState(format!(
                "loop `{loop_name}` not settled at t = {:e} s: |dI/dt| = {:.3e} A/s >= {limit:.3e} A/s",
                trace.time[s],
                slope.abs()
            )));
        }
    }
    Ok(snap_to_quantum(current, delta_i))
}

/// Nearest integer multiple of `delta_i`.
pub fn snap_to_quantum(current: f64, delta_i: f64) -> f64 {
    (current / delta_i).round() * delta_i
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::etsim::netlist::Waveform;

    #[test]
    fn snapping_examples() {
        let di = PHI0 / 10e-9;
        assert!((snap_to_quantum(0.203e-6, di) - di).abs() < 1e-18);
        assert_eq!(snap_to_quantum(0.0, di), 0.0);
        assert_eq!(snap_to_quantum(3.0 * di, di), 3.0 * di);
    }

    #[test]
    fn resistive_divider_dc() {
        let mut net = Netlist::new();
        net.voltage_source("v", "a", "0", Source::Dc(2.0))
            .resistor("r1", "a", "b", 1e3)
            .resistor("r2", "b", "0", 3e3);
        let tr = simulate(&net, 1e-9, 1e-3).unwrap();
        let vb = tr.node_voltages[1].last().unwrap();
        assert!((vb - 1.5).abs() < 1e-12);
        assert!((tr.branch_currents[1].last().unwrap() - 0.5e-3).abs() < 1e-15);
    }

    #[test]
    fn current_source_sign_follows_spice() {
        // 1 mA pulled out of `0` and pushed into `a` through the source's
        // complement: I flows 0 -> a inside the circuit, so V(a) = +1 V.
        let mut net = Netlist::new();
        net.current_source("i", "0", "a", Source::Dc(1e-3)).resistor("r", "a", "0", 1e3);
        let tr = simulate(&net, 1e-12, 1e-3).unwrap();
        assert!((tr.node_voltages[0].last().unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn inductor_holds_initial_current_without_sources() {
        let mut net = Netlist::new();
        net.inductor("l1", "a", "0", 1e-9).inductor("l2", "a", "0", 1e-9);
        net.add_loop("ring", 2e-9, &[("l1", 1), ("l2", -1)]);
        let mut sim = Transient::new(&net, SimOptions::default()).unwrap();
        sim.inductor_currents[0] = 1e-6;
        sim.inductor_currents[1] = -1e-6;
        sim.run_until(1e-6).unwrap();
        let l = sim.trace().loop_current("ring").unwrap();
        assert!((l.last().unwrap() - 1e-6).abs() < 1e-18);
    }

    #[test]
    fn breakpoints_are_hit() {
        let mut net = Netlist::new();
        net.voltage_source("v", "a", "0", Source::Wave("w".into()))
            .resistor("r", "a", "b", 1.0)
            .inductor("l", "b", "0", 1e-12);
        net.waveform("w", Waveform::Pwl(vec![(1e-12, 0.0), (2e-12, 1.0)]));
        let tr = simulate(&net, 5e-12, 1e-2).unwrap();
        assert!(tr.time.contains(&1e-12));
        assert!(tr.time.windows(2).all(|w| w[1] > w[0]));
    }
}
