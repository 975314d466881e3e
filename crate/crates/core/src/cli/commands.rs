use std::collections::BTreeSet;
use std::fs::{self, File};
use std::io::BufWriter;
use std::path::Path;
use std::time::Instant;

use anyhow::{bail, Context};
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::config::{linspace, ExperimentConfig};
use crate::device::DeviceState;
use crate::etsim::{self, staircase_experiment, Netlist, PulseTrain, SimOptions};
use crate::mnist::{load_split, Split};
use crate::nn::{write_training_log, Trainer};
use crate::rng::{self, streams};

pub const METADATA_FILE: &str = "metadata.json";

/// Sibling of every command's CSV outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub config: ExperimentConfig,
    pub outputs: Vec<String>,
    pub results: serde_json::Value,
}

impl Metadata {
    fn new(command: &str, config: ExperimentConfig) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            config,
            outputs: Vec::new(),
            results: serde_json::Value::Null,
        }
    }

    fn write(&self, out: &Path) -> anyhow::Result<()> {
        let path = out.join(METADATA_FILE);
        fs::write(&path, serde_json::to_string_pretty(self)? + "\n")
            .with_context(|| format!("cannot write {}", path.display()))
    }
}

fn csv_writer(out: &Path, name: &str) -> anyhow::Result<csv::Writer<BufWriter<File>>> {
    let path = out.join(name);
    let f = File::create(&path).with_context(|| format!("cannot create {}", path.display()))?;
    Ok(csv::Writer::from_writer(BufWriter::new(f)))
}

fn create_out(out: &Path) -> anyhow::Result<()> {
    fs::create_dir_all(out).with_context(|| format!("cannot create output directory {}", out.display()))
}

fn fmt(v: f64) -> String {
    format!("{v:e}")
}

pub fn run_train(mut cfg: ExperimentConfig, out: &Path) -> anyhow::Result<Metadata> {
    cfg.validate_train()?;
    let dir = cfg.resolve_mnist_dir();
    let mut train = load_split(&dir, Split::Train).context("loading MNIST training split")?;
    let mut test = load_split(&dir, Split::Test).context("loading MNIST test split")?;
    if let Some(n) = cfg.data.max_train_samples {
        train.truncate(n);
    }
    if let Some(n) = cfg.data.max_test_samples {
        test.truncate(n);
    }
    if train.is_empty() || test.is_empty() {
        bail!("empty dataset after truncation");
    }
    create_out(out)?;

    let mut runs: Vec<(String, Option<u64>)> = Vec::new();
    if cfg.train.baseline {
        runs.push(("baseline".into(), None));
    }
    runs.extend(cfg.train.states.iter().map(|&n| (format!("n{n}"), Some(n))));

    let mut meta = Metadata::new("train", cfg.clone());
    let mut summary = Vec::new();
    let mut timing = serde_json::Map::new();
    for (label, states) in runs {
        let tc = cfg.train_config(states.unwrap_or(2));
        let mut trainer = Trainer::new(tc, states.is_none())?;
        trainer.record_time = cfg.train.record_time;
        let start = Instant::now();
        let records = trainer.run(&train, &test, |r| {
            eprintln!(
                "[{label}] epoch {:>3}  loss {:.4}  test error {:.2}%",
                r.epoch, r.train_loss, r.test_error_percent
            );
        })?;
        timing.insert(label.clone(), json!(start.elapsed().as_secs_f64()));

        let name = format!("train_{label}.csv");
        let f = File::create(out.join(&name)).with_context(|| format!("cannot create {name}"))?;
        write_training_log(BufWriter::new(f), &records)?;
        meta.outputs.push(name);
        if cfg.train.checkpoint {
            let ck = format!("checkpoints/{label}");
            trainer.network().save(&out.join(&ck))?;
            meta.outputs.push(ck);
        }
        let final_error = records.last().map(|r| r.test_error_percent);
        summary.push((label, states, final_error));
    }

    let mut w = csv_writer(out, "summary.csv")?;
    w.write_record(["run", "states", "seed", "epochs", "final_test_error_percent"])?;
    for (label, states, err) in &summary {
        w.write_record([
            label.clone(),
            states.map(|n| n.to_string()).unwrap_or_default(),
            cfg.seed.to_string(),
            cfg.train.epochs.to_string(),
            err.map(|e| format!("{e:.4}")).unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    meta.outputs.push("summary.csv".into());
    meta.results = json!({
        "final_test_error_percent": summary
            .iter()
            .map(|(l, _, e)| (l.clone(), json!(e)))
            .collect::<serde_json::Map<_, _>>(),
        "wall_seconds": timing,
    });
    meta.write(out)?;
    Ok(meta)
}

pub fn run_state_diagram(cfg: ExperimentConfig, out: &Path) -> anyhow::Result<Metadata> {
    cfg.validate_state_diagram()?;
    create_out(out)?;
    let sd = &cfg.state_diagram;
    let dev = cfg.device;
    let span = sd.sweep_fraction * dev.i_sw;
    let mut rng = rng::stream(cfg.seed, streams::READ_NOISE);

    let mut w = csv_writer(out, "state_diagram.csv")?;
    w.write_record(["programming_current", "state_index", "circulating_current", "readout"])?;
    let mut levels = BTreeSet::new();
    for i_prog in linspace(-span, span, sd.points) {
        let cell = DeviceState::new(dev, dev.set_mode_state(i_prog))?;
        let readout = if sd.read_noise {
            cell.read_multiply(sd.ramp_slope, &mut rng)?
        } else {
            cell.read_multiply_ideal(sd.ramp_slope)?
        };
        levels.insert(cell.index());
        w.write_record([
            fmt(i_prog),
            cell.index().to_string(),
            fmt(cell.circulating_current()),
            fmt(readout),
        ])?;
    }
    w.flush()?;

    let mut meta = Metadata::new("state-diagram", cfg);
    meta.outputs.push("state_diagram.csv".into());
    meta.results = json!({
        "plateaus": levels.len(),
        "num_states": dev.num_states(),
        "level_count": dev.level_count(),
        "delta_i": dev.delta_i(),
    });
    meta.write(out)?;
    Ok(meta)
}

pub fn run_multiply_map(cfg: ExperimentConfig, out: &Path) -> anyhow::Result<Metadata> {
    cfg.validate_multiply_map()?;
    create_out(out)?;
    let mm = &cfg.multiply_map;
    let dev = cfg.device;
    let mut rng = rng::stream(cfg.seed, streams::READ_NOISE);
    let currents = linspace(-dev.i_sw, dev.i_sw, mm.programming_points);
    let slopes = linspace(mm.slope_min, mm.slope_max, mm.slope_points);

    let mut grid = Vec::with_capacity(currents.len() * slopes.len());
    for &i_prog in &currents {
        let cell = DeviceState::new(dev, dev.set_mode_state(i_prog))?;
        for &slope in &slopes {
            let v = if mm.read_noise {
                cell.read_multiply(slope, &mut rng)?
            } else {
                cell.read_multiply_ideal(slope)?
            };
            grid.push((cell, v));
        }
    }
    let peak = grid.iter().map(|g| g.1).fold(f64::NEG_INFINITY, f64::max);
    if !(peak > 0.0) {
        bail!("multiply map has no positive readout");
    }

    let mut w = csv_writer(out, "multiply_map.csv")?;
    w.write_record(["row", "col", "programming_current", "state_index", "bias_current", "ramp_slope", "output"])?;
    for (r, &i_prog) in currents.iter().enumerate() {
        for (c, &slope) in slopes.iter().enumerate() {
            let (cell, v) = grid[r * slopes.len() + c];
            w.write_record([
                r.to_string(),
                c.to_string(),
                fmt(i_prog),
                cell.index().to_string(),
                fmt(cell.bias_switching_current()),
                fmt(slope),
                fmt(v / peak),
            ])?;
        }
    }
    w.flush()?;

    let mut meta = Metadata::new("multiply-map", cfg);
    meta.outputs.push("multiply_map.csv".into());
    meta.results = json!({
        "rows": currents.len(),
        "cols": slopes.len(),
        "peak_readout": peak,
    });
    meta.write(out)?;
    Ok(meta)
}

fn load_netlist(name: &str) -> anyhow::Result<Netlist> {
    let text = match name {
        "builtin:unit_cell" => etsim::UNIT_CELL_NETLIST.to_string(),
        "builtin:thermal_shunt" => etsim::THERMAL_SHUNT_NETLIST.to_string(),
        path => fs::read_to_string(path).with_context(|| format!("cannot read netlist {path}"))?,
    };
    let net = etsim::parse(&text).with_context(|| format!("parsing netlist {name}"))?;
    net.ensure_valid()?;
    Ok(net)
}

pub fn run_circuit_sim(cfg: ExperimentConfig, out: &Path) -> anyhow::Result<Metadata> {
    let cs = &cfg.circuit;
    let base = load_netlist(&cs.netlist)?;
    let mut train = PulseTrain::up_down(&cs.source, &cs.loop_name, cs.amplitude, cs.up, cs.down);
    train.width = cs.width;
    train.edge = cs.edge;
    train.spacing = cs.spacing;
    train.lead = cs.lead;
    train.validate()?;
    let opts = SimOptions::with_tol(cs.tol);
    opts.validate()?;

    let case_names: Vec<String> = if !cs.cases.is_empty() {
        cs.cases.clone()
    } else {
        base.cases.iter().map(|c| c.name.clone()).collect()
    };
    let mut jobs = Vec::new();
    if case_names.is_empty() {
        jobs.push(("base".to_string(), base.clone()));
    }
    for name in &case_names {
        let case = base.case(name).with_context(|| format!("netlist has no case `{name}`"))?;
        jobs.push((name.clone(), base.with_case(case)?));
    }
    create_out(out)?;

    let mut meta = Metadata::new("circuit-sim", cfg.clone());
    let mut results = serde_json::Map::new();
    for (name, net) in jobs {
        let r = staircase_experiment(&net, &train, opts).with_context(|| format!("case `{name}`"))?;

        let trace_name = format!("trace_{name}.csv");
        let f = File::create(out.join(&trace_name))?;
        r.trace.write_csv(BufWriter::new(f), &net.effective_probes())?;
        meta.outputs.push(trace_name);
        if cs.trace_json {
            let json_name = format!("trace_{name}.json");
            fs::write(out.join(&json_name), r.trace.to_json()?)?;
            meta.outputs.push(json_name);
        }

        let plateau_name = format!("plateaus_{name}.csv");
        let mut w = csv_writer(out, &plateau_name)?;
        w.write_record(["pulse", "time", "polarity", "raw_current", "plateau_current", "level", "step"])?;
        let levels = r.levels();
        for (k, (&t, &p)) in r.times.iter().zip(&r.plateaus).enumerate() {
            let (pol, raw, step) = if k == 0 {
                (String::new(), String::new(), String::new())
            } else {
                (
                    train.polarities[k - 1].to_string(),
                    fmt(r.raw[k - 1]),
                    (levels[k] - levels[k - 1]).to_string(),
                )
            };
            w.write_record([k.to_string(), fmt(t), pol, raw, fmt(p), levels[k].to_string(), step])?;
        }
        w.flush()?;
        meta.outputs.push(plateau_name);

        results.insert(
            name,
            json!({
                "delta_i": r.delta_i,
                "levels": levels,
                "steps": r.steps(),
                "single_flux": r.is_single_flux(&train.polarities),
                "returns_to_initial": levels.first() == levels.last(),
            }),
        );
    }
    meta.results = serde_json::Value::Object(results);
    meta.write(out)?;
    Ok(meta)
}
