//! One PASS/FAIL line per acceptance criterion. Exits non-zero if any fails.
//!
//! The MNIST criterion reads the summaries written by `scripts/sweep.sh`
//! (default `results/sweep`, override with `FLUXCELL_SWEEP_DIR`).

mod common;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use fluxcell::cli::{run_circuit_sim, run_multiply_map, run_state_diagram, run_train, ExperimentConfig};
use fluxcell::crossbar::{CrossbarArray, PeripheryConfig, StateInit, StateMap};
use fluxcell::device::{self, DeviceParams, DeviceState, Pulse, DEFAULT_I_C0, DEFAULT_KAPPA, MEASURED_I_SW};
use fluxcell::etsim::{parse, staircase_experiment, PulseTrain, SimOptions, THERMAL_SHUNT_NETLIST, UNIT_CELL_NETLIST};
use fluxcell::rng;
use rand::seq::SliceRandom;
use rand::Rng;

type Runner = fn(ExperimentConfig, &Path) -> anyhow::Result<fluxcell::cli::Metadata>;
type Check = fn() -> Outcome;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn state_arithmetic() -> Outcome {
    let n = device::num_states(36.65e-6, 526.6e-12).unwrap();
    let di = device::delta_i(3.94e-9).unwrap();
    let lk = device::kinetic_inductance_per_square(97.2, 9.0).unwrap();
    let pass = n == 19 && (di - 525.16e-9).abs() <= 0.01e-9 && (lk - 14.9e-12).abs() <= 0.05e-12;
    outcome(
        pass,
        format!(
            "num_states = {n} (want 19), delta_i(3.94 nH) = {:.2} nA (want 525.16 ± 0.01), \
             L_k = {:.3} pH/sq (want 14.9 ± 0.05)",
            di * 1e9,
            lk * 1e12
        ),
    )
}

fn sfq_staircase() -> Outcome {
    let quantum = 2.07e-15 / 10e-9;
    let mut notes = Vec::new();
    let net = parse(UNIT_CELL_NETLIST).unwrap();
    let train = PulseTrain::up_down("vprog", "cell", 0.75, 5, 5);
    let r = staircase_experiment(&net, &train, SimOptions::default()).unwrap();
    let mut pass = (r.delta_i - 0.207e-6).abs() <= 1e-12 * 0.207e-6;
    let diffs: Vec<f64> = r.plateaus.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
    let worst = diffs.iter().map(|d| (d - quantum).abs()).fold(0.0, f64::max);
    pass &= worst <= 1e-9 * quantum;
    pass &= r.plateaus.first() == r.plateaus.last();
    notes.push(format!("levels {:?}, worst |step - phi0/10nH| = {worst:.1e} A", r.levels()));

    let shunt = parse(THERMAL_SHUNT_NETLIST).unwrap();
    let mut t = PulseTrain::up_down("vprog", "cell", 0.75, 3, 3);
    t.spacing = 3e-9;
    for (case, want_single) in [("thermal", true), ("nominal", false)] {
        let net = shunt.with_case(shunt.case(case).unwrap()).unwrap();
        match staircase_experiment(&net, &t, SimOptions::default()) {
            Ok(r) => {
                let single = r.is_single_flux(&t.polarities);
                pass &= single == want_single;
                notes.push(format!("g_thermal {case}: steps {:?}", r.steps()));
            }
            Err(e) => {
                pass = false;
                notes.push(format!("g_thermal {case}: {e}"));
            }
        }
    }
    outcome(pass, notes.join("; "))
}

fn device_symmetry() -> Outcome {
    let params = DeviceParams::with_num_states(MEASURED_I_SW, 30, DEFAULT_I_C0, DEFAULT_KAPPA).unwrap();
    let n_max = params.n_max();
    let mut r = rng::from_seed(3);
    let mut failures = 0;
    for _ in 0..100_000 {
        let k = r.random_range(0..=n_max / 2);
        let start = r.random_range(-(n_max - k)..=(n_max - k));
        let mut seq: Vec<i8> = std::iter::repeat_n(1, k as usize).chain(std::iter::repeat_n(-1, k as usize)).collect();
        seq.shuffle(&mut r);
        let initial = DeviceState::new(params, start).unwrap();
        let mut cell = initial;
        for s in seq {
            let (row, col) = if s > 0 { (Pulse::Positive, Pulse::Negative) } else { (Pulse::Negative, Pulse::Positive) };
            cell = cell.apply_update_pulse(row, col);
        }
        if cell != initial || cell.circulating_current().to_bits() != initial.circulating_current().to_bits() {
            failures += 1;
        }
    }
    outcome(failures == 0, format!("{failures} of 100000 sequences did not restore the state"))
}

fn update_unbiasedness() -> Outcome {
    let device = DeviceParams::with_num_states(MEASURED_I_SW, 30, DEFAULT_I_C0, DEFAULT_KAPPA).unwrap();
    let map = StateMap::with_weight_bound(device, 0, 0.6).unwrap();
    let periphery = PeripheryConfig::default();
    let bl = f64::from(periphery.bit_length);
    let margin = i64::from(periphery.bit_length);
    let lr = 0.01;
    let dw = map.delta_w_eff();
    let scale = (lr / (bl * dw)).sqrt();
    let mut r = rng::from_seed(4);
    let mut outside = 0;
    let mut worst_z: f64 = 0.0;
    let trials = 10_000;
    for _ in 0..100 {
        let x = r.random_range(-1.0..1.0) / scale;
        let d = r.random_range(-1.0..1.0) / scale;
        let n = r.random_range(-(map.n_max() - margin)..=(map.n_max() - margin));
        let mut cell = CrossbarArray::with_map(1, 1, map, periphery, StateInit::Constant(n), &mut r).unwrap();
        let plan = cell.plan_update(&[x], &[d], lr).unwrap();
        assert!(plan.x_prob[0] < 1.0 && plan.d_prob[0] < 1.0);
        let (mut sum, mut sum2) = (0.0, 0.0);
        for _ in 0..trials {
            cell.set_state(0, 0, n as f64).unwrap();
            cell.apply_update(&plan, &mut r).unwrap();
            let change = (cell.state(0, 0) - n as f64) * dw;
            sum += change;
            sum2 += change * change;
        }
        let mean = sum / trials as f64;
        let var = (sum2 / trials as f64 - mean * mean) * trials as f64 / (trials - 1) as f64;
        let se = (var / trials as f64).sqrt();
        let z = if se > 0.0 { (mean - lr * x * d).abs() / se } else { 0.0 };
        worst_z = worst_z.max(z);
        if z > 3.0 {
            outside += 1;
        }
    }
    outcome(outside == 0, format!("{outside} of 100 triples beyond 3 SE, worst |z| = {worst_z:.2}"))
}

fn oracle_reduction() -> Outcome {
    let grad = common::gradient_check_errors(&[12, 7, 5, 10], 21).into_iter().fold(0.0, f64::max);
    let weights = common::oracle_reduction_error(&[16, 8, 6, 4], 100);
    outcome(
        grad <= 1e-4 && weights <= 1e-6,
        format!("gradient vs finite differences {grad:.1e} (≤ 1e-4), weights after 100 steps {weights:.1e} (≤ 1e-6)"),
    )
}

struct SweepRow {
    run: String,
    seed: u64,
    error: f64,
}

fn read_summary(path: &Path) -> Option<Vec<SweepRow>> {
    let mut rdr = csv::Reader::from_path(path).ok()?;
    rdr.records()
        .map(|r| {
            let r = r.ok()?;
            Some(SweepRow { run: r[0].to_string(), seed: r[2].parse().ok()?, error: r[4].parse().ok()? })
        })
        .collect()
}

fn mnist_reproduction() -> Outcome {
    let dir = std::env::var_os("FLUXCELL_SWEEP_DIR")
        .map(PathBuf::from)
        .unwrap_or_else(|| Path::new(env!("CARGO_MANIFEST_DIR")).join("../../results/sweep"));
    let dir = dir.canonicalize().unwrap_or(dir);
    let mut seeds = Vec::new();
    let mut slowest: f64 = 0.0;
    if let Ok(entries) = fs::read_dir(&dir) {
        let mut paths: Vec<_> = entries.flatten().map(|e| e.path()).collect();
        paths.sort();
        for p in paths {
            let meta: Option<serde_json::Value> =
                fs::read_to_string(p.join("metadata.json")).ok().and_then(|t| serde_json::from_str(&t).ok());
            if let (Some(rows), Some(meta)) = (read_summary(&p.join("summary.csv")), meta) {
                if let Some(times) = meta["results"]["wall_seconds"].as_object() {
                    slowest = times.values().filter_map(|v| v.as_f64()).fold(slowest, f64::max);
                }
                seeds.push(rows);
            }
        }
    }
    if seeds.is_empty() {
        return outcome(false, format!("no sweep results under {}", dir.display()));
    }
    let err = |rows: &[SweepRow], run: &str| rows.iter().find(|r| r.run == run).map(|r| r.error);
    let mut pass = seeds.len() >= 3;
    let mut notes = vec![format!("{} seeds", seeds.len())];
    let mut n30 = Vec::new();
    for rows in &seeds {
        let seed = rows[0].seed;
        let errors: Vec<Option<f64>> = ["baseline", "n30", "n60", "n100", "n1000"].iter().map(|r| err(rows, r)).collect();
        let Some(errors) = errors.into_iter().collect::<Option<Vec<f64>>>() else {
            pass = false;
            notes.push(format!("seed {seed}: incomplete"));
            continue;
        };
        let [base, e30, e60, e100, e1000] = errors[..] else { unreachable!() };
        let monotone = e30 >= e60 && e60 >= e100 && e100 >= e1000;
        pass &= 100.0 - base >= 97.7 && e1000 - base <= 0.5 && monotone;
        n30.push(100.0 - e30);
        notes.push(format!(
            "seed {seed}: baseline {:.2}%, N=30 {:.2}%, N=60 {:.2}%, N=100 {:.2}%, N=1000 {:.2}% accuracy, \
             non-increasing error {monotone}",
            100.0 - base,
            100.0 - e30,
            100.0 - e60,
            100.0 - e100,
            100.0 - e1000
        ));
    }
    let mean30 = n30.iter().sum::<f64>() / n30.len().max(1) as f64;
    pass &= !n30.is_empty() && (mean30 - 96.74).abs() <= 0.7;
    pass &= slowest <= 1800.0;
    notes.push(format!("mean N=30 accuracy {mean30:.2}% (want 96.74 ± 0.7), slowest run {:.0} s", slowest));
    outcome(pass, notes.join("; "))
}

fn multiplication_map() -> Outcome {
    let tmp = tempfile::tempdir().unwrap();
    run_multiply_map(ExperimentConfig::default(), tmp.path()).unwrap();
    let mut rdr = csv::Reader::from_path(tmp.path().join("multiply_map.csv")).unwrap();
    let rows: Vec<[f64; 3]> = rdr
        .records()
        .map(|r| {
            let r = r.unwrap();
            [r[4].parse().unwrap(), r[5].parse().unwrap(), r[6].parse().unwrap()]
        })
        .collect();
    // Columns are slopes 1e3, 2e3, ..., so column 1 doubles column 0.
    let cols = 50;
    let q0 = rows[0][2] * rows[0][1] / rows[0][0].powi(2);
    let contour = rows.iter().map(|[w, x, y]| (y * x / (w * w) / q0 - 1.0).abs()).fold(0.0, f64::max);
    let halving = rows
        .chunks(cols)
        .map(|row| (row[1][2] / row[0][2] - 0.5).abs() / 0.5)
        .fold(0.0, f64::max);
    let single = |i_c0: f64| {
        let p = DeviceParams::new(MEASURED_I_SW, 526.6e-12, i_c0, DEFAULT_KAPPA).unwrap();
        DeviceState::new(p, 0).unwrap().read_multiply_ideal(1e4).unwrap()
    };
    let quadrupling = (single(2.0 * DEFAULT_I_C0) / single(DEFAULT_I_C0) - 4.0).abs() / 4.0;
    outcome(
        contour <= 1e-6 && halving <= 1e-6 && quadrupling <= 1e-6,
        format!("W²/x spread {contour:.1e}, doubling x {halving:.1e}, doubling W {quadrupling:.1e} (each ≤ 1e-6)"),
    )
}

fn rerun_identical(run: Runner, cfg: ExperimentConfig) -> Result<usize, String> {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    let meta = run(cfg, &a).map_err(|e| e.to_string())?;
    let again = ExperimentConfig::load(&a.join("metadata.json")).map_err(|e| e.to_string())?;
    run(again, &b).map_err(|e| e.to_string())?;
    let csvs: Vec<_> = meta.outputs.iter().filter(|o| o.ends_with(".csv")).collect();
    for name in &csvs {
        if fs::read(a.join(name)).ok() != fs::read(b.join(name)).ok() {
            return Err(format!("{name} differs"));
        }
    }
    Ok(csvs.len())
}

fn determinism() -> Outcome {
    let mut noisy = ExperimentConfig { seed: 11, ..ExperimentConfig::default() };
    noisy.state_diagram.read_noise = true;
    noisy.multiply_map.read_noise = true;
    noisy.circuit.up = 2;
    noisy.circuit.down = 2;
    let mut jobs: Vec<(&str, Runner, ExperimentConfig)> = vec![
        ("state-diagram", run_state_diagram, noisy.clone()),
        ("multiply-map", run_multiply_map, noisy.clone()),
        ("circuit-sim", run_circuit_sim, noisy.clone()),
    ];
    let mut pass = true;
    let mut notes = Vec::new();
    match common::mnist_dir() {
        Some(dir) => {
            let mut cfg = noisy.clone();
            cfg.train.states = vec![30];
            cfg.train.baseline = true;
            cfg.train.epochs = 1;
            cfg.data.mnist_dir = Some(dir);
            cfg.data.max_train_samples = Some(200);
            cfg.data.max_test_samples = Some(100);
            jobs.push(("train", run_train, cfg));
        }
        None => {
            pass = false;
            notes.push("train: MNIST files not found".to_string());
        }
    }
    for (name, run, cfg) in jobs {
        match rerun_identical(run, cfg) {
            Ok(n) => notes.push(format!("{name}: {n} CSV identical")),
            Err(e) => {
                pass = false;
                notes.push(format!("{name}: {e}"));
            }
        }
    }
    outcome(pass, notes.join("; "))
}

fn main() -> ExitCode {
    let criteria: [(&str, Check); 8] = [
        ("state arithmetic", state_arithmetic),
        ("SFQ staircase", sfq_staircase),
        ("device symmetry", device_symmetry),
        ("stochastic update unbiasedness", update_unbiasedness),
        ("oracle reduction", oracle_reduction),
        ("MNIST reproduction", mnist_reproduction),
        ("multiplication map", multiplication_map),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (k, (name, check)) in criteria.iter().enumerate() {
        let o = check();
        failed += usize::from(!o.pass);
        println!("criterion {} {name}: {} | {}", k + 1, if o.pass { "PASS" } else { "FAIL" }, o.detail);
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
