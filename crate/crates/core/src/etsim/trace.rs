use std::io::Write;

use serde::{Deserialize, Serialize};

use super::netlist::Probe;
use crate::error::{Error, Result};

/// Time series recorded by the transient solver, one sample per accepted step.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Trace {
    pub time: Vec<f64>,
    pub node_names: Vec<String>,
    /// `node_voltages[k][s]` is node `k` at sample `s`.
    pub node_voltages: Vec<Vec<f64>>,
    pub branch_names: Vec<String>,
    pub branch_currents: Vec<Vec<f64>>,
    pub hotspot_names: Vec<String>,
    pub hotspot_fractions: Vec<Vec<f64>>,
    pub loop_names: Vec<String>,
    pub loop_inductances: Vec<f64>,
    pub loop_currents: Vec<Vec<f64>>,
    /// Nanowires that must be cold before a loop can be quantized.
    pub loop_nanowires: Vec<Vec<String>>,
    /// Thermal time constant setting each loop's settling threshold.
    pub loop_settle_tau: Vec<f64>,
}

impl Trace {
    pub fn len(&self) -> usize {
        self.time.len()
    }

    pub fn is_empty(&self) -> bool {
        self.time.is_empty()
    }

    pub fn signal(&self, probe: &Probe) -> Option<&[f64]> {
        match probe {
            Probe::Current(n) => pick(&self.branch_names, &self.branch_currents, n),
            Probe::Voltage(n) => pick(&self.node_names, &self.node_voltages, n),
            Probe::Hotspot(n) => pick(&self.hotspot_names, &self.hotspot_fractions, n),
            Probe::Loop(n) => pick(&self.loop_names, &self.loop_currents, n),
        }
    }

    pub fn loop_current(&self, name: &str) -> Option<&[f64]> {
        self.signal(&Probe::Loop(name.to_string()))
    }

    /// Index of the last sample at or before `t`.
    pub fn sample_at(&self, t: f64) -> Option<usize> {
        match self.time.partition_point(|&x| x <= t) {
            0 => None,
            k => Some(k - 1),
        }
    }

    pub fn write_csv<W: Write>(&self, out: W, probes: &[Probe]) -> Result<()> {
        let columns: Vec<&[f64]> = probes
            .iter()
            .map(|p| {
                self.signal(p)
                    .ok_or_else(|| Error::InvalidInput(format!("trace has no signal {}", p.column())))
            })
            .collect::<Result<_>>()?;
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["time".to_string()];
        header.extend(probes.iter().map(Probe::column));
        w.write_record(&header).map_err(csv_err)?;
        for (s, t) in self.time.iter().enumerate() {
            let mut row = Vec::with_capacity(columns.len() + 1);
            row.push(format!("{t:e}"));
            row.extend(columns.iter().map(|c| format!("{:e}", c[s])));
            w.write_record(&row).map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }
}

pub(crate) fn csv_err(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

fn pick<'a>(names: &[String], data: &'a [Vec<f64>], n: &str) -> Option<&'a [f64]> {
    names.iter().position(|x| x == n).map(|i| data[i].as_slice())
}
