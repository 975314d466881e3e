use fluxcell::device::PHI0;
use fluxcell::etsim::netlist::Source;
use fluxcell::etsim::{
    enforce_flux_quantization, parse, simulate, simulate_with, staircase_experiment, Netlist,
    PulseTrain, SimOptions, Transient, Waveform, THERMAL_SHUNT_NETLIST, UNIT_CELL_NETLIST,
};
use fluxcell::Error;

fn unit_cell() -> Netlist {
    parse(UNIT_CELL_NETLIST).unwrap()
}

fn train(up: usize, down: usize) -> PulseTrain {
    PulseTrain::up_down("vprog", "cell", 0.75, up, down)
}

const DELTA_I: f64 = PHI0 / 10e-9;

#[test]
fn bundled_netlists_are_valid() {
    let net = unit_cell();
    assert!(net.validate().is_empty(), "{:?}", net.validate());
    let nw = net.element("constriction").unwrap();
    assert!(format!("{nw:?}").contains("i_sw: 2.5e-5"));
    let shunt = parse(THERMAL_SHUNT_NETLIST).unwrap();
    assert!(shunt.validate().is_empty());
    assert_eq!(shunt.cases.len(), 2);
}

#[test]
fn programming_pulse_is_three_times_switching_current() {
    // 0.75 V across the 10 kOhm source resistor.
    let net = unit_cell();
    let Some(Waveform::Pulse { high, .. }) = net.waveforms.get("prog").cloned() else { panic!() };
    assert!((high / 10e3 - 3.0 * 25e-6).abs() < 1e-15);
}

#[test]
fn quiet_circuit_stays_at_zero() {
    let mut net = unit_cell();
    net.waveforms.insert("prog".into(), Waveform::Dc(0.0));
    let tr = simulate(&net, 200e-12, 1e-3).unwrap();
    for series in tr.branch_currents.iter().chain(&tr.node_voltages).chain(&tr.loop_currents) {
        assert!(series.iter().all(|&v| v == 0.0));
    }
}

#[test]
fn rl_step_matches_closed_form() {
    let (v, r, l) = (1.0, 1e3, 1e-9);
    let tau = l / r;
    let mut net = Netlist::new();
    net.voltage_source("v", "a", "0", Source::Dc(v))
        .resistor("r", "a", "b", r)
        .inductor("l", "b", "0", l);
    let tr = simulate_with(&net, 8.0 * tau, SimOptions::with_tol(1e-4)).unwrap();
    let li = tr.branch_names.iter().position(|n| n == "l").unwrap();
    let mut worst: f64 = 0.0;
    for (t, i) in tr.time.iter().zip(&tr.branch_currents[li]) {
        let exact = v / r * (1.0 - (-t / tau).exp());
        worst = worst.max((i - exact).abs() / (v / r));
    }
    assert!(worst < 1e-2, "worst relative error {worst}");
    let last = *tr.branch_currents[li].last().unwrap();
    assert!((last - v / r * (1.0 - (-8.0f64).exp())).abs() < 1e-3 * v / r);
}

#[test]
fn time_samples_strictly_increase() {
    let tr = simulate(&unit_cell(), 300e-12, 1e-3).unwrap();
    assert!(tr.time.windows(2).all(|w| w[1] > w[0]));
}

#[test]
fn single_pulse_moves_one_quantum() {
    let r = staircase_experiment(&unit_cell(), &train(1, 0), SimOptions::default()).unwrap();
    assert_eq!(r.levels(), vec![0, 1]);
    assert!((r.plateaus[1] - DELTA_I).abs() < 1e-18);
    assert!((r.raw[0] - DELTA_I).abs() < 0.5 * DELTA_I);
}

#[test]
fn up_pulses_climb_one_quantum_each() {
    let r = staircase_experiment(&unit_cell(), &train(3, 0), SimOptions::default()).unwrap();
    for (k, (raw, p)) in r.raw.iter().zip(&r.plateaus[1..]).enumerate() {
        let target = (k + 1) as f64 * DELTA_I;
        assert!((raw - target).abs() < 0.5 * DELTA_I);
        assert_eq!(*p, ((p / DELTA_I).round()) * DELTA_I);
        assert!((p - target).abs() < 1e-18);
    }
}

#[test]
fn empty_train_returns_initial_level() {
    let r = staircase_experiment(&unit_cell(), &train(0, 0), SimOptions::default()).unwrap();
    assert_eq!(r.plateaus, vec![0.0]);
}

#[test]
fn symmetric_staircase_returns_home() {
    let r = staircase_experiment(&unit_cell(), &train(5, 5), SimOptions::default()).unwrap();
    assert_eq!(r.levels(), vec![0, 1, 2, 3, 4, 5, 4, 3, 2, 1, 0]);
    assert_eq!(r.plateaus.first(), r.plateaus.last());
}

#[test]
fn halving_tolerance_barely_moves_plateaus() {
    let t = train(3, 2);
    let coarse = staircase_experiment(&unit_cell(), &t, SimOptions::with_tol(1e-3)).unwrap();
    let fine = staircase_experiment(&unit_cell(), &t, SimOptions::with_tol(5e-4)).unwrap();
    for (a, b) in coarse.raw.iter().zip(&fine.raw) {
        assert!((a - b).abs() < 0.25 * DELTA_I);
    }
    assert_eq!(coarse.levels(), fine.levels());
}

#[test]
fn identical_inputs_give_identical_traces() {
    let a = staircase_experiment(&unit_cell(), &train(2, 1), SimOptions::default()).unwrap();
    let b = staircase_experiment(&unit_cell(), &train(2, 1), SimOptions::default()).unwrap();
    assert_eq!(a.trace, b.trace);
    assert_eq!(a.plateaus, b.plateaus);
}

#[test]
fn stored_current_persists() {
    let mut net = unit_cell();
    let t = train(2, 0);
    let mut sim = Transient::new(&net, SimOptions::default()).unwrap();
    sim.set_source_waveform("vprog", t.waveform()).unwrap();
    sim.run_until(t.end_time()).unwrap();
    let stored = sim.quantize_loop("cell").unwrap();
    assert!((stored - 2.0 * DELTA_I).abs() < 1e-18);
    sim.run_until(t.end_time() + 50e-9).unwrap();
    let later = sim.quantize_loop("cell").unwrap();
    assert_eq!(later, stored);
    let cur = sim.trace().loop_current("cell").unwrap();
    assert!((cur.last().unwrap() - stored).abs() < 1e-6 * DELTA_I);
    net.title = None;
}

#[test]
fn quantizing_a_hot_loop_is_refused() {
    let net = unit_cell();
    // Mid-pulse: the constriction is switched.
    let tr = simulate(&net, 30e-12, 1e-3).unwrap();
    let err = enforce_flux_quantization(&tr, "cell", 30e-12).unwrap_err();
    assert!(matches!(err, Error::InvalidState(_)));
    assert!(enforce_flux_quantization(&tr, "nope", 30e-12).is_err());
}

#[test]
fn trace_csv_has_probe_columns() {
    let net = unit_cell();
    let tr = simulate(&net, 100e-12, 1e-3).unwrap();
    let mut buf = Vec::new();
    tr.write_csv(&mut buf, &net.effective_probes()).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let header = text.lines().next().unwrap();
    assert_eq!(header, "time,I(lloop),I(constriction),I(rshunt),V(top),F(constriction),LOOP(cell)");
    assert_eq!(text.lines().count(), tr.len() + 1);
    let json: serde_json::Value = serde_json::from_str(&tr.to_json().unwrap()).unwrap();
    assert_eq!(json["time"].as_array().unwrap().len(), tr.len());
}

#[test]
fn unsettled_train_spacing_is_an_error() {
    // Weak substrate coupling: the wire is still hot 300 ps after the pulse.
    let base = parse(THERMAL_SHUNT_NETLIST).unwrap();
    let weak = base.with_case(base.case("nominal").unwrap()).unwrap();
    let err = staircase_experiment(&weak, &train(1, 0), SimOptions::default()).unwrap_err();
    assert!(matches!(err, Error::InvalidState(_)), "{err}");
}
