//! Circuit description and its text format.
//!
//! One element or directive per line; `*` and `#` start comments. Values
//! accept engineering suffixes (`f p n u m k meg g t`).
//!
//! ```text
//! R  <name> <n+> <n-> <ohms>
//! L  <name> <n+> <n-> <henries>
//! V  <name> <n+> <n-> [<dc volts>] [wave=<ref>]
//! I  <name> <n+> <n-> [<dc amps>]  [wave=<ref>]
//! NW <name> <n+> <n-> <i_sw> [rn=<ohms>] [tau=<s>] [g=<x>] [heat=<x>]
//! .wave  <name> dc <value>
//! .wave  <name> pulse <low> <high> <delay> <rise> <width> <fall>
//! .wave  <name> pwl <t0> <v0> <t1> <v1> ...
//! .loop  <name> <inductance> <elem>:<+|-> ...
//! .probe I(<elem>) V(<node>) F(<nanowire>) LOOP(<loop>) ...
//! .case  <name> <elem>.<param>=<value> ...
//! .end
//! ```
//!
//! Branch currents are positive from `n+` to `n-` through the element. A
//! current source drives its current out of `n+` and into `n-` through the
//! external circuit's complement, as in SPICE. Nodes `0` and `gnd` are ground.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use super::hotspot::NanowireElement;
use crate::error::{Error, Result};

pub const GROUND: usize = 0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Waveform {
    Dc(f64),
    Pulse {
        low: f64,
        high: f64,
        delay: f64,
        rise: f64,
        width: f64,
        fall: f64,
    },
    /// Piecewise-linear, held constant outside the listed points.
    Pwl(Vec<(f64, f64)>),
}

impl Waveform {
    pub fn value(&self, t: f64) -> f64 {
        match self {
            Waveform::Dc(v) => *v,
            Waveform::Pulse { low, high, delay, rise, width, fall } => {
                let pts = [
                    (*delay, *low),
                    (delay + rise, *high),
                    (delay + rise + width, *high),
                    (delay + rise + width + fall, *low),
                ];
                pwl_value(&pts, t)
            }
            Waveform::Pwl(pts) => pwl_value(pts, t),
        }
    }

    /// Times where the waveform has a corner.
    pub fn breakpoints(&self) -> Vec<f64> {
        match self {
            Waveform::Dc(_) => Vec::new(),
            Waveform::Pulse { delay, rise, width, fall, .. } => vec![
                *delay,
                delay + rise,
                delay + rise + width,
                delay + rise + width + fall,
            ],
            Waveform::Pwl(pts) => pts.iter().map(|p| p.0).collect(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        match self {
            Waveform::Dc(v) => v.abs(),
            Waveform::Pulse { low, high, .. } => low.abs().max(high.abs()),
            Waveform::Pwl(pts) => pts.iter().fold(0.0, |m, p| m.max(p.1.abs())),
        }
    }

    fn validate(&self) -> std::result::Result<(), String> {
        match self {
            Waveform::Dc(v) if !v.is_finite() => Err("non-finite dc value".into()),
            Waveform::Pulse { rise, width, fall, delay, .. } => {
                if *rise <= 0.0 || *fall <= 0.0 || *width < 0.0 || *delay < 0.0 {
                    Err("pulse needs rise, fall > 0 and delay, width >= 0".into())
                } else {
                    Ok(())
                }
            }
            Waveform::Pwl(pts) => {
                if pts.is_empty() {
                    return Err("pwl needs at least one point".into());
                }
                if pts.windows(2).any(|w| w[1].0 <= w[0].0) {
                    return Err("pwl times must be strictly increasing".into());
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }
}

fn pwl_value(pts: &[(f64, f64)], t: f64) -> f64 {
    if t <= pts[0].0 {
        return pts[0].1;
    }
    for w in pts.windows(2) {
        let ((t0, v0), (t1, v1)) = (w[0], w[1]);
        if t <= t1 {
            return v0 + (v1 - v0) * (t - t0) / (t1 - t0);
        }
    }
    pts[pts.len() - 1].1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Source {
    Dc(f64),
    Wave(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ElementKind {
    Resistor(f64),
    Inductor(f64),
    VoltageSource(Source),
    CurrentSource(Source),
    Nanowire(NanowireElement),
}

impl ElementKind {
    pub fn keyword(&self) -> &'static str {
        match self {
            ElementKind::Resistor(_) => "R",
            ElementKind::Inductor(_) => "L",
            ElementKind::VoltageSource(_) => "V",
            ElementKind::CurrentSource(_) => "I",
            ElementKind::Nanowire(_) => "NW",
        }
    }

    pub fn is_flux_branch(&self) -> bool {
        matches!(self, ElementKind::Inductor(_) | ElementKind::Nanowire(_))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Element {
    pub name: String,
    pub pos: usize,
    pub neg: usize,
    pub kind: ElementKind,
}

/// A superconducting loop; the first branch defines the circulating current.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FluxLoop {
    pub name: String,
    pub inductance: f64,
    pub branches: Vec<(String, i8)>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Probe {
    Current(String),
    Voltage(String),
    Hotspot(String),
    Loop(String),
}

impl Probe {
    pub fn column(&self) -> String {
        match self {
            Probe::Current(n) => format!("I({n})"),
            Probe::Voltage(n) => format!("V({n})"),
            Probe::Hotspot(n) => format!("F({n})"),
            Probe::Loop(n) => format!("LOOP({n})"),
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        let open = s.find('(')?;
        let inner = s.strip_suffix(')')?.get(open + 1..)?.to_string();
        if inner.is_empty() {
            return None;
        }
        match s[..open].to_ascii_uppercase().as_str() {
            "I" => Some(Probe::Current(inner)),
            "V" => Some(Probe::Voltage(inner)),
            "F" => Some(Probe::Hotspot(inner)),
            "LOOP" => Some(Probe::Loop(inner)),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Override {
    pub element: String,
    pub param: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Case {
    pub name: String,
    pub overrides: Vec<Override>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Netlist {
    pub title: Option<String>,
    /// Node names; index 0 is ground.
    pub nodes: Vec<String>,
    pub elements: Vec<Element>,
    pub loops: Vec<FluxLoop>,
    pub waveforms: BTreeMap<String, Waveform>,
    pub probes: Vec<Probe>,
    pub cases: Vec<Case>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Diagnostic {
    NoGround,
    DanglingNode(String),
    DuplicateName(String),
    NonPositiveValue { element: String },
    InvalidNanowire { element: String, reason: String },
    UnknownWaveform { element: String, waveform: String },
    InvalidWaveform { waveform: String, reason: String },
    ResistiveBranchInLoop { flux_loop: String, element: String },
    UnknownLoopBranch { flux_loop: String, element: String },
    OpenLoop(String),
    NonPositiveLoopInductance(String),
    UnknownProbeTarget(String),
    UnknownCaseTarget { case: String, target: String },
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Diagnostic::NoGround => write!(f, "no element connects to ground"),
            Diagnostic::DanglingNode(n) => write!(f, "node `{n}` has only one connection"),
            Diagnostic::DuplicateName(n) => write!(f, "duplicate name `{n}`"),
            Diagnostic::NonPositiveValue { element } => {
                write!(f, "element `{element}` needs a positive finite value")
            }
            Diagnostic::InvalidNanowire { element, reason } => {
                write!(f, "nanowire `{element}`: {reason}")
            }
            Diagnostic::UnknownWaveform { element, waveform } => {
                write!(f, "source `{element}` references unknown waveform `{waveform}`")
            }
            Diagnostic::InvalidWaveform { waveform, reason } => {
                write!(f, "waveform `{waveform}`: {reason}")
            }
            Diagnostic::ResistiveBranchInLoop { flux_loop, element } => write!(
                f,
                "loop `{flux_loop}` contains `{element}`, which is neither an inductor nor a nanowire"
            ),
            Diagnostic::UnknownLoopBranch { flux_loop, element } => {
                write!(f, "loop `{flux_loop}` references unknown element `{element}`")
            }
            Diagnostic::OpenLoop(l) => write!(f, "loop `{l}` does not form a closed path"),
            Diagnostic::NonPositiveLoopInductance(l) => {
                write!(f, "loop `{l}` needs a positive inductance")
            }
            Diagnostic::UnknownProbeTarget(p) => write!(f, "probe `{p}` has no target"),
            Diagnostic::UnknownCaseTarget { case, target } => {
                write!(f, "case `{case}` overrides unknown parameter `{target}`")
            }
        }
    }
}

impl Netlist {
    pub fn new() -> Self {
        Self { nodes: vec!["0".to_string()], ..Default::default() }
    }

    /// Index of a node, creating it if needed.
    pub fn node(&mut self, name: &str) -> usize {
        if is_ground(name) {
            return GROUND;
        }
        if let Some(i) = self.node_index(name) {
            return i;
        }
        self.nodes.push(name.to_string());
        self.nodes.len() - 1
    }

    pub fn node_index(&self, name: &str) -> Option<usize> {
        if is_ground(name) {
            return Some(GROUND);
        }
        self.nodes.iter().position(|n| n == name)
    }

    pub fn element(&self, name: &str) -> Option<&Element> {
        self.elements.iter().find(|e| e.name == name)
    }

    pub fn element_index(&self, name: &str) -> Option<usize> {
        self.elements.iter().position(|e| e.name == name)
    }

    pub fn flux_loop(&self, name: &str) -> Option<&FluxLoop> {
        self.loops.iter().find(|l| l.name == name)
    }

    pub fn add(&mut self, name: &str, pos: &str, neg: &str, kind: ElementKind) -> &mut Self {
        let pos = self.node(pos);
        let neg = self.node(neg);
        self.elements.push(Element { name: name.to_string(), pos, neg, kind });
        self
    }

    pub fn resistor(&mut self, name: &str, pos: &str, neg: &str, ohms: f64) -> &mut Self {
        self.add(name, pos, neg, ElementKind::Resistor(ohms))
    }

    pub fn inductor(&mut self, name: &str, pos: &str, neg: &str, henries: f64) -> &mut Self {
        self.add(name, pos, neg, ElementKind::Inductor(henries))
    }

    pub fn voltage_source(&mut self, name: &str, pos: &str, neg: &str, src: Source) -> &mut Self {
        self.add(name, pos, neg, ElementKind::VoltageSource(src))
    }

    pub fn current_source(&mut self, name: &str, pos: &str, neg: &str, src: Source) -> &mut Self {
        self.add(name, pos, neg, ElementKind::CurrentSource(src))
    }

    pub fn nanowire(&mut self, name: &str, pos: &str, neg: &str, nw: NanowireElement) -> &mut Self {
        self.add(name, pos, neg, ElementKind::Nanowire(nw))
    }

    pub fn waveform(&mut self, name: &str, wave: Waveform) -> &mut Self {
        self.waveforms.insert(name.to_string(), wave);
        self
    }

    pub fn add_loop(&mut self, name: &str, inductance: f64, branches: &[(&str, i8)]) -> &mut Self {
        self.loops.push(FluxLoop {
            name: name.to_string(),
            inductance,
            branches: branches.iter().map(|(e, s)| (e.to_string(), *s)).collect(),
        });
        self
    }

    /// Probes to export: the declared ones, or every signal when none are set.
    pub fn effective_probes(&self) -> Vec<Probe> {
        if !self.probes.is_empty() {
            return self.probes.clone();
        }
        let mut out: Vec<Probe> =
            self.nodes[1..].iter().map(|n| Probe::Voltage(n.clone())).collect();
        out.extend(self.elements.iter().map(|e| Probe::Current(e.name.clone())));
        out.extend(self.elements.iter().filter_map(|e| match e.kind {
            ElementKind::Nanowire(_) => Some(Probe::Hotspot(e.name.clone())),
            _ => None,
        }));
        out.extend(self.loops.iter().map(|l| Probe::Loop(l.name.clone())));
        out
    }

    pub fn case(&self, name: &str) -> Option<&Case> {
        self.cases.iter().find(|c| c.name == name)
    }

    /// Copy of the netlist with a case's overrides applied.
    pub fn with_case(&self, case: &Case) -> Result<Netlist> {
        let mut out = self.clone();
        for o in &case.overrides {
            out.set_param(&o.element, &o.param, o.value)?;
        }
        Ok(out)
    }

    pub fn set_param(&mut self, element: &str, param: &str, value: f64) -> Result<()> {
        let unknown = || {
            Error::InvalidInput(format!("no parameter `{param}` on element `{element}`"))
        };
        let elem = self
            .elements
            .iter_mut()
            .find(|e| e.name == element)
            .ok_or_else(unknown)?;
        match (&mut elem.kind, param) {
            (ElementKind::Resistor(v), "value") | (ElementKind::Inductor(v), "value") => *v = value,
            (ElementKind::VoltageSource(s), "value") | (ElementKind::CurrentSource(s), "value") => {
                *s = Source::Dc(value)
            }
            (ElementKind::Nanowire(nw), p) => match p {
                "isw" | "value" => nw.i_sw = value,
                "rn" => nw.r_normal = value,
                "tau" => nw.tau_thermal = value,
                "g" => nw.g_thermal = value,
                "heat" => nw.heating = value,
                _ => return Err(unknown()),
            },
            _ => return Err(unknown()),
        }
        Ok(())
    }

    pub fn validate(&self) -> Vec<Diagnostic> {
        let mut diags = Vec::new();
        let mut seen = HashSet::new();
        for e in &self.elements {
            if !seen.insert(e.name.as_str()) {
                diags.push(Diagnostic::DuplicateName(e.name.clone()));
            }
        }
        let mut loop_names = HashSet::new();
        for l in &self.loops {
            if !loop_names.insert(l.name.as_str()) {
                diags.push(Diagnostic::DuplicateName(l.name.clone()));
            }
        }

        let mut degree = vec![0usize; self.nodes.len()];
        for e in &self.elements {
            degree[e.pos] += 1;
            degree[e.neg] += 1;
        }
        if self.elements.is_empty() || degree[GROUND] == 0 {
            diags.push(Diagnostic::NoGround);
        }
        for (i, name) in self.nodes.iter().enumerate().skip(1) {
            if degree[i] < 2 {
                diags.push(Diagnostic::DanglingNode(name.clone()));
            }
        }

        for e in &self.elements {
            let positive = |v: f64| v > 0.0 && v.is_finite();
            match &e.kind {
                ElementKind::Resistor(v) | ElementKind::Inductor(v) if !positive(*v) => {
                    diags.push(Diagnostic::NonPositiveValue { element: e.name.clone() })
                }
                ElementKind::VoltageSource(Source::Wave(w))
                | ElementKind::CurrentSource(Source::Wave(w))
                    if !self.waveforms.contains_key(w) =>
                {
                    diags.push(Diagnostic::UnknownWaveform {
                        element: e.name.clone(),
                        waveform: w.clone(),
                    })
                }
                ElementKind::Nanowire(nw) => {
                    if let Err(err) = nw.validate() {
                        diags.push(Diagnostic::InvalidNanowire {
                            element: e.name.clone(),
                            reason: err.to_string(),
                        });
                    }
                }
                _ => {}
            }
        }
        for (name, w) in &self.waveforms {
            if let Err(reason) = w.validate() {
                diags.push(Diagnostic::InvalidWaveform { waveform: name.clone(), reason });
            }
        }

        for l in &self.loops {
            if !(l.inductance > 0.0) {
                diags.push(Diagnostic::NonPositiveLoopInductance(l.name.clone()));
            }
            let mut ends = Vec::new();
            let mut complete = true;
            for (bname, sign) in &l.branches {
                match self.element(bname) {
                    None => {
                        complete = false;
                        diags.push(Diagnostic::UnknownLoopBranch {
                            flux_loop: l.name.clone(),
                            element: bname.clone(),
                        });
                    }
                    Some(e) => {
                        if !e.kind.is_flux_branch() {
                            diags.push(Diagnostic::ResistiveBranchInLoop {
                                flux_loop: l.name.clone(),
                                element: bname.clone(),
                            });
                        }
                        ends.push(if *sign >= 0 { (e.pos, e.neg) } else { (e.neg, e.pos) });
                    }
                }
            }
            if complete && !is_closed_path(&ends) {
                diags.push(Diagnostic::OpenLoop(l.name.clone()));
            }
        }

        for p in &self.probes {
            let ok = match p {
                Probe::Current(n) => self.element(n).is_some(),
                Probe::Voltage(n) => self.node_index(n).is_some(),
                Probe::Hotspot(n) => {
                    matches!(self.element(n).map(|e| &e.kind), Some(ElementKind::Nanowire(_)))
                }
                Probe::Loop(n) => self.flux_loop(n).is_some(),
            };
            if !ok {
                diags.push(Diagnostic::UnknownProbeTarget(p.column()));
            }
        }

        for c in &self.cases {
            let mut probe = self.clone();
            for o in &c.overrides {
                if probe.set_param(&o.element, &o.param, o.value).is_err() {
                    diags.push(Diagnostic::UnknownCaseTarget {
                        case: c.name.clone(),
                        target: format!("{}.{}", o.element, o.param),
                    });
                }
            }
        }
        diags
    }

    pub fn ensure_valid(&self) -> Result<()> {
        let diags = self.validate();
        if diags.is_empty() {
            Ok(())
        } else {
            let text: Vec<String> = diags.iter().map(|d| d.to_string()).collect();
            Err(Error::InvalidInput(format!("invalid netlist: {}", text.join("; "))))
        }
    }
}

fn is_closed_path(ends: &[(usize, usize)]) -> bool {
    if ends.is_empty() {
        return false;
    }
    ends.windows(2).all(|w| w[0].1 == w[1].0) && ends[ends.len() - 1].1 == ends[0].0
}

fn is_ground(name: &str) -> bool {
    name == "0" || name.eq_ignore_ascii_case("gnd")
}

pub fn parse_value(s: &str) -> Option<f64> {
    let lower = s.to_ascii_lowercase();
    let split = lower
        .find(|c: char| c.is_ascii_alphabetic() && c != 'e')
        .or_else(|| {
            // A trailing bare `e` is not an exponent.
            lower.strip_suffix('e').map(|_| lower.len() - 1)
        })
        .unwrap_or(lower.len());
    let (num, suffix) = lower.split_at(split);
    let exp: i32 = match suffix {
        "" => 0,
        "t" => 12,
        "g" => 9,
        "meg" => 6,
        "k" => 3,
        "m" => -3,
        "u" => -6,
        "n" => -9,
        "p" => -12,
        "f" => -15,
        _ => return None,
    };
    let base: f64 = num.parse().ok()?;
    if exp == 0 {
        return Some(base);
    }
    if num.contains('e') {
        return Some(base * 10f64.powi(exp));
    }
    // Folding the suffix into the literal keeps the result correctly rounded.
    format!("{num}e{exp}").parse().ok()
}

pub fn parse(text: &str) -> Result<Netlist> {
    let mut net = Netlist::new();
    let mut names: HashMap<String, usize> = HashMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let err = |reason: String| Error::Netlist { line: line_no, reason };
        let line = raw.split(['#', ';']).next().unwrap_or("").trim();
        if line.is_empty() || line.starts_with('*') {
            continue;
        }
        let tok: Vec<&str> = line.split_whitespace().collect();
        let value = |s: &str| parse_value(s).ok_or_else(|| err(format!("bad value `{s}`")));
        let kw = tok[0].to_ascii_lowercase();
        match kw.as_str() {
            ".end" => break,
            ".title" => net.title = Some(tok[1..].join(" ")),
            ".wave" => {
                if tok.len() < 3 {
                    return Err(err("`.wave` needs a name and a kind".into()));
                }
                let args: Vec<f64> = tok[3..].iter().map(|s| value(s)).collect::<Result<_>>()?;
                let wave = match tok[2].to_ascii_lowercase().as_str() {
                    "dc" if args.len() == 1 => Waveform::Dc(args[0]),
                    "pulse" if args.len() == 6 => Waveform::Pulse {
                        low: args[0],
                        high: args[1],
                        delay: args[2],
                        rise: args[3],
                        width: args[4],
                        fall: args[5],
                    },
                    "pwl" if !args.is_empty() && args.len().is_multiple_of(2) => {
                        Waveform::Pwl(args.chunks(2).map(|c| (c[0], c[1])).collect())
                    }
                    other => {
                        return Err(err(format!(
                            "waveform `{other}` with {} arguments not understood",
                            args.len()
                        )))
                    }
                };
                net.waveforms.insert(tok[1].to_string(), wave);
            }
            ".loop" => {
                if tok.len() < 4 {
                    return Err(err("`.loop` needs a name, an inductance and branches".into()));
                }
                let inductance = value(tok[2])?;
                let mut branches = Vec::new();
                for b in &tok[3..] {
                    let (name, sign) = b
                        .rsplit_once(':')
                        .ok_or_else(|| err(format!("loop branch `{b}` needs `:+` or `:-`")))?;
                    let sign = match sign {
                        "+" => 1,
                        "-" => -1,
                        _ => return Err(err(format!("loop branch `{b}` needs `:+` or `:-`"))),
                    };
                    branches.push((name.to_string(), sign));
                }
                net.loops.push(FluxLoop { name: tok[1].to_string(), inductance, branches });
            }
            ".probe" => {
                for p in &tok[1..] {
                    net.probes
                        .push(Probe::parse(p).ok_or_else(|| err(format!("bad probe `{p}`")))?);
                }
            }
            ".case" => {
                if tok.len() < 2 {
                    return Err(err("`.case` needs a name".into()));
                }
                let mut overrides = Vec::new();
                for o in &tok[2..] {
                    let (target, v) = o
                        .split_once('=')
                        .ok_or_else(|| err(format!("case override `{o}` needs `elem.param=value`")))?;
                    let (element, param) = target
                        .split_once('.')
                        .ok_or_else(|| err(format!("case override `{o}` needs `elem.param=value`")))?;
                    overrides.push(Override {
                        element: element.to_string(),
                        param: param.to_ascii_lowercase(),
                        value: value(v)?,
                    });
                }
                net.cases.push(Case { name: tok[1].to_string(), overrides });
            }
            k if k.starts_with('.') => return Err(err(format!("unknown directive `{}`", tok[0]))),
            _ => {
                if tok.len() < 4 {
                    return Err(err("element needs a kind, a name and two nodes".into()));
                }
                let name = tok[1].to_string();
                if names.insert(name.clone(), line_no).is_some() {
                    return Err(err(format!("duplicate element name `{name}`")));
                }
                let mut positional = Vec::new();
                let mut keyed = Vec::new();
                for t in &tok[4..] {
                    match t.split_once('=') {
                        Some((k, v)) => keyed.push((k.to_ascii_lowercase(), v)),
                        None => positional.push(value(t)?),
                    }
                }
                let one_value = |what: &str| -> Result<f64> {
                    match positional.as_slice() {
                        [v] => Ok(*v),
                        _ => Err(err(format!("{what} needs exactly one value"))),
                    }
                };
                let source = || -> Result<Source> {
                    let wave = keyed.iter().find(|(k, _)| k == "wave").map(|(_, v)| v.to_string());
                    match (wave, positional.as_slice()) {
                        (Some(w), []) => Ok(Source::Wave(w)),
                        (None, [v]) => Ok(Source::Dc(*v)),
                        (None, []) => Ok(Source::Dc(0.0)),
                        _ => Err(err("source takes either a dc value or wave=<ref>".into())),
                    }
                };
                let reject_keys = |allowed: &[&str]| -> Result<()> {
                    match keyed.iter().find(|(k, _)| !allowed.contains(&k.as_str())) {
                        Some((k, _)) => Err(err(format!("unknown key `{k}`"))),
                        None => Ok(()),
                    }
                };
                let kind = match kw.as_str() {
                    "r" => {
                        reject_keys(&[])?;
                        ElementKind::Resistor(one_value("resistor")?)
                    }
                    "l" => {
                        reject_keys(&[])?;
                        ElementKind::Inductor(one_value("inductor")?)
                    }
                    "v" => {
                        reject_keys(&["wave"])?;
                        ElementKind::VoltageSource(source()?)
                    }
                    "i" => {
                        reject_keys(&["wave"])?;
                        ElementKind::CurrentSource(source()?)
                    }
                    "nw" => {
                        reject_keys(&["rn", "tau", "g", "heat"])?;
                        let mut nw = NanowireElement::new(one_value("nanowire")?);
                        for (k, v) in &keyed {
                            let v = value(v)?;
                            match k.as_str() {
                                "rn" => nw.r_normal = v,
                                "tau" => nw.tau_thermal = v,
                                "g" => nw.g_thermal = v,
                                _ => nw.heating = v,
                            }
                        }
                        ElementKind::Nanowire(nw)
                    }
                    _ => return Err(err(format!("unknown element kind `{}`", tok[0]))),
                };
                net.add(&name, tok[2], tok[3], kind);
            }
        }
    }
    Ok(net)
}
