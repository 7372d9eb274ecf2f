//! Scenario definitions: plants, paths, gates, and the simulation grid.
//!
//! Scenarios live in a line-oriented text format, one `section.key = value`
//! assignment per line with `#` comments. Sections are `plantN` and `pathN`
//! (numbered from 1), the gate schedules `w` and `u`, and `sim`. The parser
//! is strict: unknown keys, duplicate keys, missing keys, and semantic rule
//! violations are all errors, and every message carries a line number where
//! one exists. Parsing never panics regardless of input.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::gating::GateSchedule;
use crate::lti::{PiParams, TransferFunction};
use crate::sync::{ControlPath, PathConfig};

/// Upper bound on plant stages and on control paths. Generous for real use,
/// tight enough that a hostile file cannot request huge state vectors.
pub const MAX_SECTIONS: usize = 16;

/// Upper bound on round(t_end/dt).
pub const MAX_STEPS: usize = 50_000_000;

/// Upper bound on t_end/period for enabled gates, bounding the number of
/// switch instants a run can produce.
pub const MAX_CYCLES: f64 = 1e6;

/// One stage of the plant cascade.
#[derive(Clone, Debug, PartialEq)]
pub struct PlantSpec {
    /// Numerator coefficients, ascending powers of s.
    pub num: Vec<f64>,
    /// Denominator coefficients, ascending powers of s.
    pub den: Vec<f64>,
    /// Initial state, matching the realized order. Defaults to zeros.
    pub initial: Option<Vec<f64>>,
}

impl PlantSpec {
    pub fn transfer_function(&self) -> Result<TransferFunction> {
        TransferFunction::new(self.num.clone(), self.den.clone())
    }
}

/// Controller choice for one path.
#[derive(Clone, Debug, PartialEq)]
pub enum ControllerSpec {
    Pi(PiParams),
    Rational { num: Vec<f64>, den: Vec<f64> },
}

impl ControllerSpec {
    pub fn transfer_function(&self) -> Result<TransferFunction> {
        match self {
            ControllerSpec::Pi(pi) => Ok(PiParams::new(pi.kp, pi.ki)?.transfer_function()),
            ControllerSpec::Rational { num, den } => {
                TransferFunction::new(num.clone(), den.clone())
            }
        }
    }
}

/// One control path as configured.
#[derive(Clone, Debug, PartialEq)]
pub struct PathSpec {
    /// Reference for the measured output.
    pub setpoint: f64,
    pub controller: ControllerSpec,
    /// Plant stage whose output this path tracks, numbered from 1.
    pub measurement: usize,
    /// Output weight of the sync integrator, when one is added.
    pub sync_gain: f64,
    /// Whether to add a sync integrator to controllers without one. The
    /// integrator state itself always starts at zero.
    pub augment: bool,
    /// Initial controller state, matching the realized order of the
    /// controller itself (the sync integrator is not included). Defaults to
    /// zeros.
    pub initial: Option<Vec<f64>>,
}

impl PathSpec {
    /// The realized-path view of this spec, with the measurement index
    /// shifted to 0-based.
    pub fn path_config(&self) -> Result<PathConfig> {
        if self.measurement == 0 {
            return Err(Error::Config(
                "path measurement indices are numbered from 1".into(),
            ));
        }
        Ok(PathConfig {
            setpoint: self.setpoint,
            controller: self.controller.transfer_function()?,
            measurement: self.measurement - 1,
            sync_gain: self.sync_gain,
            augment: self.augment,
        })
    }
}

/// Time grid and recording cadence.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SimConfig {
    /// Integration step in seconds.
    pub dt: f64,
    /// Final time in seconds; must be a whole number of steps.
    pub t_end: f64,
    /// Record every this-many steps; must divide the step count.
    pub record_stride: usize,
}

/// A complete simulation description.
#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    pub plants: Vec<PlantSpec>,
    pub paths: Vec<PathSpec>,
    /// Path selector schedule; high means path 1 is active.
    pub w_gate: GateSchedule,
    /// Sync enable schedule; disabling it freezes every background path.
    pub u_gate: GateSchedule,
    pub sim: SimConfig,
}

impl Scenario {
    /// Number of integration steps, round(t_end/dt).
    pub fn n_steps(&self) -> usize {
        (self.sim.t_end / self.sim.dt).round() as usize
    }

    /// Parses and validates the text form.
    pub fn parse(text: &str) -> Result<Scenario> {
        let scenario = Parser::new(text)?.build()?;
        scenario.validate()?;
        Ok(scenario)
    }

    /// Reads and parses a scenario file.
    pub fn from_file(path: &Path) -> Result<Scenario> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Scenario::parse(&text)
    }

    /// Canonical text form; `parse` of the result reproduces the scenario.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "# scenario: {} plant stage(s), {} control path(s)",
            self.plants.len(),
            self.paths.len()
        );
        for (i, plant) in self.plants.iter().enumerate() {
            let k = i + 1;
            let _ = writeln!(s, "plant{k}.num = {}", join(&plant.num));
            let _ = writeln!(s, "plant{k}.den = {}", join(&plant.den));
            if let Some(init) = &plant.initial {
                let _ = writeln!(s, "plant{k}.initial = {}", join(init));
            }
        }
        for (i, path) in self.paths.iter().enumerate() {
            let k = i + 1;
            let _ = writeln!(s, "path{k}.setpoint = {}", path.setpoint);
            match &path.controller {
                ControllerSpec::Pi(pi) => {
                    let _ = writeln!(s, "path{k}.controller = pi");
                    let _ = writeln!(s, "path{k}.kp = {}", pi.kp);
                    let _ = writeln!(s, "path{k}.ki = {}", pi.ki);
                }
                ControllerSpec::Rational { num, den } => {
                    let _ = writeln!(s, "path{k}.controller = rational");
                    let _ = writeln!(s, "path{k}.num = {}", join(num));
                    let _ = writeln!(s, "path{k}.den = {}", join(den));
                }
            }
            let _ = writeln!(s, "path{k}.measurement = {}", path.measurement);
            let _ = writeln!(s, "path{k}.sync_gain = {}", path.sync_gain);
            let _ = writeln!(s, "path{k}.augment = {}", path.augment);
            if let Some(init) = &path.initial {
                let _ = writeln!(s, "path{k}.initial = {}", join(init));
            }
        }
        for (name, gate) in [("w", &self.w_gate), ("u", &self.u_gate)] {
            let _ = writeln!(s, "{name}.period = {}", gate.period);
            let _ = writeln!(s, "{name}.active_fraction = {}", gate.active_fraction);
            let _ = writeln!(s, "{name}.phase = {}", gate.phase);
            let _ = writeln!(s, "{name}.enabled = {}", gate.enabled);
        }
        let _ = writeln!(s, "sim.dt = {}", self.sim.dt);
        let _ = writeln!(s, "sim.t_end = {}", self.sim.t_end);
        let _ = writeln!(s, "sim.record_stride = {}", self.sim.record_stride);
        s
    }

    /// Built-in demonstration scenarios.
    ///
    /// All three drive a second-order stage feeding a first-order stage and
    /// hand control between two PI paths on a 50 s cycle with a 0.7 duty
    /// fraction. In `example1` the second stage halves its input, so the two
    /// setpoints (100 and 50) describe the same operating point and handoffs
    /// can be made seamless. The `example2` variants raise the second
    /// stage's gain so the setpoints disagree and every handoff must move
    /// the operating point; `example2b` additionally softens the second
    /// path's integral gain.
    pub fn builtin(name: &str) -> Result<Scenario> {
        let (stage2_num, pi2) = match name {
            "example1" => (2.0, PiParams { kp: 3.0, ki: 18.0 }),
            "example2a" => (4.0, PiParams { kp: 3.0, ki: 18.0 }),
            "example2b" => (4.0, PiParams { kp: 3.0, ki: 6.0 }),
            other => {
                return Err(Error::Config(format!(
                    "unknown builtin scenario '{other}'; available: example1, example2a, example2b"
                )))
            }
        };
        let gate = GateSchedule::new(50.0, 0.7, 0.0, true)?;
        let scenario = Scenario {
            plants: vec![
                PlantSpec {
                    num: vec![2.0],
                    den: vec![12.0, 4.0, 1.0],
                    initial: None,
                },
                PlantSpec {
                    num: vec![stage2_num],
                    den: vec![4.0, 1.0],
                    initial: None,
                },
            ],
            paths: vec![
                PathSpec {
                    setpoint: 100.0,
                    controller: ControllerSpec::Pi(PiParams { kp: 2.0, ki: 10.0 }),
                    measurement: 1,
                    sync_gain: 1.0,
                    augment: true,
                    initial: None,
                },
                PathSpec {
                    setpoint: 50.0,
                    controller: ControllerSpec::Pi(pi2),
                    measurement: 2,
                    sync_gain: 1.0,
                    augment: true,
                    initial: None,
                },
            ],
            w_gate: gate,
            u_gate: gate,
            sim: SimConfig {
                dt: 1e-3,
                t_end: 200.0,
                record_stride: 10,
            },
        };
        scenario.validate()?;
        Ok(scenario)
    }

    /// Checks every semantic rule. `parse` calls this; programmatic builders
    /// should too.
    pub fn validate(&self) -> Result<()> {
        if self.plants.is_empty() {
            return Err(Error::Config("at least one plant stage is required".into()));
        }
        if self.paths.is_empty() {
            return Err(Error::Config(
                "at least one control path is required".into(),
            ));
        }
        if self.plants.len() > MAX_SECTIONS || self.paths.len() > MAX_SECTIONS {
            return Err(Error::Config(format!(
                "at most {MAX_SECTIONS} plant stages and {MAX_SECTIONS} control paths are supported"
            )));
        }

        // Plant stages realize, and initial states match their orders.
        let mut feedthrough_zero_so_far = Vec::with_capacity(self.plants.len());
        let mut cumulative_zero = false;
        for (i, plant) in self.plants.iter().enumerate() {
            let tf = plant
                .transfer_function()
                .map_err(|e| prefix(e, &format!("plant{}", i + 1)))?;
            let ss = tf.realize();
            if let Some(init) = &plant.initial {
                if init.len() != ss.n {
                    return Err(Error::Config(format!(
                        "plant{} initial state has {} values but the realization has {} states",
                        i + 1,
                        init.len(),
                        ss.n
                    )));
                }
                if init.iter().any(|v| !v.is_finite()) {
                    return Err(Error::Config(format!(
                        "plant{} initial state must be finite",
                        i + 1
                    )));
                }
            }
            cumulative_zero = cumulative_zero || ss.d == 0.0;
            feedthrough_zero_so_far.push(cumulative_zero);
        }

        // Paths realize, and their measurements exist and carry no direct
        // feedthrough from the control signal, which would close an
        // algebraic loop through the plant.
        for (i, path) in self.paths.iter().enumerate() {
            let config = path
                .path_config()
                .map_err(|e| prefix(e, &format!("path{}", i + 1)))?;
            let realized =
                ControlPath::new(&config).map_err(|e| prefix(e, &format!("path{}", i + 1)))?;
            if path.measurement == 0 || path.measurement > self.plants.len() {
                return Err(Error::Config(format!(
                    "path{} measures stage {} but there are {} plant stage(s)",
                    i + 1,
                    path.measurement,
                    self.plants.len()
                )));
            }
            if !feedthrough_zero_so_far[path.measurement - 1] {
                return Err(Error::Config(format!(
                    "path{} measures stage {} whose output has direct feedthrough from the \
                     control signal; insert a strictly proper stage or measure a later one",
                    i + 1,
                    path.measurement
                )));
            }
            if let Some(init) = &path.initial {
                if init.len() != realized.model.n {
                    return Err(Error::Config(format!(
                        "path{} initial state has {} values but the controller has {} states",
                        i + 1,
                        init.len(),
                        realized.model.n
                    )));
                }
                if init.iter().any(|v| !v.is_finite()) {
                    return Err(Error::Config(format!(
                        "path{} initial state must be finite",
                        i + 1
                    )));
                }
            }
        }

        // Gate schedules re-validate (a hand-built scenario may not have gone
        // through GateSchedule::new), and the selector must be live.
        for (name, gate) in [("w", &self.w_gate), ("u", &self.u_gate)] {
            GateSchedule::new(gate.period, gate.active_fraction, gate.phase, gate.enabled)
                .map_err(|e| prefix(e, &format!("gate {name}")))?;
        }
        if !self.w_gate.enabled {
            return Err(Error::Config(
                "the selector gate w must be enabled; disable sync with the u gate instead".into(),
            ));
        }
        if self.paths.len() == 1 && self.w_gate.active_fraction != 1.0 {
            return Err(Error::Config(
                "a single-path scenario needs w.active_fraction = 1 so the path is always active"
                    .into(),
            ));
        }

        // Time grid.
        let sim = &self.sim;
        if !sim.dt.is_finite() || sim.dt <= 0.0 {
            return Err(Error::Config(format!(
                "sim.dt must be positive and finite, got {}",
                sim.dt
            )));
        }
        if !sim.t_end.is_finite() || sim.t_end < sim.dt {
            return Err(Error::Config(format!(
                "sim.t_end must be at least one step, got {}",
                sim.t_end
            )));
        }
        let steps_f = sim.t_end / sim.dt;
        if steps_f > MAX_STEPS as f64 {
            return Err(Error::Config(format!(
                "run length {} steps exceeds the supported maximum {MAX_STEPS}",
                steps_f.round()
            )));
        }
        let n_steps = steps_f.round() as usize;
        if (n_steps as f64 * sim.dt - sim.t_end).abs() > 1e-9 {
            return Err(Error::Config(format!(
                "sim.t_end = {} is not a whole number of {} s steps",
                sim.t_end, sim.dt
            )));
        }
        if sim.record_stride == 0 {
            return Err(Error::Config("sim.record_stride must be at least 1".into()));
        }
        if !n_steps.is_multiple_of(sim.record_stride) {
            return Err(Error::Config(format!(
                "sim.record_stride = {} does not divide the {} step run, so the final instant \
                 would not be recorded",
                sim.record_stride, n_steps
            )));
        }

        // Switch instants must land on the integration grid, otherwise gate
        // sampling would depend on rounding. Checking the three generators
        // (period, phase, duty interval) covers every edge.
        for (name, gate) in [("w", &self.w_gate), ("u", &self.u_gate)] {
            if !gate.enabled {
                continue;
            }
            if sim.t_end / gate.period > MAX_CYCLES {
                return Err(Error::Config(format!(
                    "gate {name}: more than {MAX_CYCLES} cycles in the run; raise the period"
                )));
            }
            if gate.active_fraction == 0.0 || gate.active_fraction == 1.0 {
                // Constant gates never switch, so alignment is moot, but the
                // phase still shifts nothing observable.
                continue;
            }
            for (what, value) in [
                ("period", gate.period),
                ("phase", gate.phase),
                ("duty interval", gate.active_fraction * gate.period),
            ] {
                let off = (value - sim.dt * (value / sim.dt).round()).abs();
                if off > 1e-9 {
                    return Err(Error::Config(format!(
                        "gate {name}: {what} {value} is {off:.2e} s off the {} s step grid; \
                         switch instants must land on integration steps",
                        sim.dt
                    )));
                }
            }
        }
        Ok(())
    }
}

fn join(values: &[f64]) -> String {
    values
        .iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join(", ")
}

/// Re-tags a Config error with the section it came from.
fn prefix(err: Error, section: &str) -> Error {
    match err {
        Error::Config(msg) => Error::Config(format!("{section}: {msg}")),
        other => other,
    }
}

struct Entry {
    line: usize,
    section: String,
    key: String,
    value: String,
    consumed: bool,
}

struct Parser {
    entries: Vec<Entry>,
    index: HashMap<(String, String), usize>,
}

impl Parser {
    fn new(text: &str) -> Result<Parser> {
        let mut entries: Vec<Entry> = Vec::new();
        let mut index: HashMap<(String, String), usize> = HashMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = match raw.find('#') {
                Some(pos) => &raw[..pos],
                None => raw,
            };
            let content = content.trim();
            if content.is_empty() {
                continue;
            }
            let (lhs, value) = content.split_once('=').ok_or_else(|| Error::Parse {
                line,
                message: "expected 'section.key = value'".into(),
            })?;
            let (section, key) = lhs.trim().split_once('.').ok_or_else(|| Error::Parse {
                line,
                message: "expected a dotted 'section.key' before '='".into(),
            })?;
            let section = section.trim().to_string();
            let key = key.trim().to_string();
            if section.is_empty() || key.is_empty() {
                return Err(Error::Parse {
                    line,
                    message: "section and key must be non-empty".into(),
                });
            }
            let id = (section.clone(), key.clone());
            if let Some(&prev) = index.get(&id) {
                let prev_line = entries[prev].line;
                return Err(Error::Parse {
                    line,
                    message: format!(
                        "duplicate key '{section}.{key}' (first set on line {prev_line})"
                    ),
                });
            }
            index.insert(id, entries.len());
            entries.push(Entry {
                line,
                section,
                key,
                value: value.trim().to_string(),
                consumed: false,
            });
        }
        Ok(Parser { entries, index })
    }

    fn take(&mut self, section: &str, key: &str) -> Option<(usize, String)> {
        let idx = *self.index.get(&(section.to_string(), key.to_string()))?;
        self.entries[idx].consumed = true;
        Some((self.entries[idx].line, self.entries[idx].value.clone()))
    }

    /// Highest N such that sections `name1..nameN` are all present, erroring
    /// on gaps or malformed numbering like `plant07`.
    fn section_count(&self, name: &str) -> Result<usize> {
        let mut seen = Vec::new();
        for entry in &self.entries {
            if let Some(suffix) = entry.section.strip_prefix(name) {
                if suffix.is_empty() {
                    return Err(Error::Parse {
                        line: entry.line,
                        message: format!("section '{name}' needs a number, like {name}1"),
                    });
                }
                let n: usize = suffix.parse().map_err(|_| Error::Parse {
                    line: entry.line,
                    message: format!("bad section number in '{}'", entry.section),
                })?;
                if format!("{name}{n}") != entry.section {
                    return Err(Error::Parse {
                        line: entry.line,
                        message: format!("bad section number in '{}'", entry.section),
                    });
                }
                if n == 0 {
                    return Err(Error::Parse {
                        line: entry.line,
                        message: format!("sections are numbered from 1, got '{}'", entry.section),
                    });
                }
                if !seen.contains(&n) {
                    seen.push(n);
                }
            }
        }
        let count = seen.len();
        if count > MAX_SECTIONS {
            return Err(Error::Config(format!(
                "at most {MAX_SECTIONS} {name} sections are supported"
            )));
        }
        for k in 1..=count {
            if !seen.contains(&k) {
                return Err(Error::Config(format!(
                    "{name} sections must be numbered contiguously from 1; {name}{k} is missing"
                )));
            }
        }
        Ok(count)
    }

    fn build(mut self) -> Result<Scenario> {
        // Reject sections that exist at all outside the known set early, so
        // typos are caught even when every known section parses.
        for entry in &self.entries {
            let s = entry.section.as_str();
            let known = s == "w"
                || s == "u"
                || s == "sim"
                || s.starts_with("plant")
                || s.starts_with("path");
            if !known {
                return Err(Error::Parse {
                    line: entry.line,
                    message: format!("unknown section '{s}'"),
                });
            }
        }
        let n_plants = self.section_count("plant")?;
        let n_paths = self.section_count("path")?;

        let mut plants = Vec::with_capacity(n_plants);
        for k in 1..=n_plants {
            plants.push(self.build_plant(k)?);
        }
        let mut paths = Vec::with_capacity(n_paths);
        for k in 1..=n_paths {
            paths.push(self.build_path(k)?);
        }
        let w_gate = self.build_gate("w")?;
        let u_gate = self.build_gate("u")?;
        let sim = self.build_sim()?;

        if let Some(entry) = self.entries.iter().find(|e| !e.consumed) {
            return Err(Error::Parse {
                line: entry.line,
                message: format!(
                    "unrecognized or inapplicable key '{}.{}'",
                    entry.section, entry.key
                ),
            });
        }
        Ok(Scenario {
            plants,
            paths,
            w_gate,
            u_gate,
            sim,
        })
    }

    fn missing(section: &str, keys: &[&str]) -> Error {
        Error::Config(format!(
            "section {section} is missing required key(s): {}",
            keys.join(", ")
        ))
    }

    fn build_plant(&mut self, k: usize) -> Result<PlantSpec> {
        let section = format!("plant{k}");
        let num = self.take(&section, "num");
        let den = self.take(&section, "den");
        let mut missing = Vec::new();
        if num.is_none() {
            missing.push("num");
        }
        if den.is_none() {
            missing.push("den");
        }
        if !missing.is_empty() {
            return Err(Self::missing(&section, &missing));
        }
        let initial = match self.take(&section, "initial") {
            Some((line, v)) => Some(parse_list(&v, line)?),
            None => None,
        };
        let (nline, nval) = num.unwrap();
        let (dline, dval) = den.unwrap();
        Ok(PlantSpec {
            num: parse_list(&nval, nline)?,
            den: parse_list(&dval, dline)?,
            initial,
        })
    }

    fn build_path(&mut self, k: usize) -> Result<PathSpec> {
        let section = format!("path{k}");
        let setpoint = self.take(&section, "setpoint");
        let controller = self.take(&section, "controller");
        let measurement = self.take(&section, "measurement");
        let mut missing = Vec::new();
        if setpoint.is_none() {
            missing.push("setpoint");
        }
        if controller.is_none() {
            missing.push("controller");
        }
        if measurement.is_none() {
            missing.push("measurement");
        }
        if !missing.is_empty() {
            return Err(Self::missing(&section, &missing));
        }
        let (cline, ckind) = controller.unwrap();
        let controller = match ckind.as_str() {
            "pi" => {
                let kp = self.take(&section, "kp");
                let ki = self.take(&section, "ki");
                let mut missing = Vec::new();
                if kp.is_none() {
                    missing.push("kp");
                }
                if ki.is_none() {
                    missing.push("ki");
                }
                if !missing.is_empty() {
                    return Err(Self::missing(&section, &missing));
                }
                let (kpl, kpv) = kp.unwrap();
                let (kil, kiv) = ki.unwrap();
                ControllerSpec::Pi(PiParams {
                    kp: parse_f64(&kpv, kpl)?,
                    ki: parse_f64(&kiv, kil)?,
                })
            }
            "rational" => {
                let num = self.take(&section, "num");
                let den = self.take(&section, "den");
                let mut missing = Vec::new();
                if num.is_none() {
                    missing.push("num");
                }
                if den.is_none() {
                    missing.push("den");
                }
                if !missing.is_empty() {
                    return Err(Self::missing(&section, &missing));
                }
                let (nline, nval) = num.unwrap();
                let (dline, dval) = den.unwrap();
                ControllerSpec::Rational {
                    num: parse_list(&nval, nline)?,
                    den: parse_list(&dval, dline)?,
                }
            }
            other => {
                return Err(Error::Parse {
                    line: cline,
                    message: format!("controller must be 'pi' or 'rational', got '{other}'"),
                })
            }
        };
        let (sline, sval) = setpoint.unwrap();
        let (mline, mval) = measurement.unwrap();
        let sync_gain = match self.take(&section, "sync_gain") {
            Some((line, v)) => parse_f64(&v, line)?,
            None => 1.0,
        };
        let augment = match self.take(&section, "augment") {
            Some((line, v)) => parse_bool(&v, line)?,
            None => true,
        };
        let initial = match self.take(&section, "initial") {
            Some((line, v)) => Some(parse_list(&v, line)?),
            None => None,
        };
        Ok(PathSpec {
            setpoint: parse_f64(&sval, sline)?,
            controller,
            measurement: parse_usize(&mval, mline)?,
            sync_gain,
            augment,
            initial,
        })
    }

    fn build_gate(&mut self, name: &str) -> Result<GateSchedule> {
        let period = self.take(name, "period");
        let fraction = self.take(name, "active_fraction");
        let mut missing = Vec::new();
        if period.is_none() {
            missing.push("period");
        }
        if fraction.is_none() {
            missing.push("active_fraction");
        }
        if !missing.is_empty() {
            return Err(Self::missing(name, &missing));
        }
        let (pline, pval) = period.unwrap();
        let (fline, fval) = fraction.unwrap();
        let phase = match self.take(name, "phase") {
            Some((line, v)) => parse_f64(&v, line)?,
            None => 0.0,
        };
        let enabled = match self.take(name, "enabled") {
            Some((line, v)) => parse_bool(&v, line)?,
            None => true,
        };
        GateSchedule::new(
            parse_f64(&pval, pline)?,
            parse_f64(&fval, fline)?,
            phase,
            enabled,
        )
        .map_err(|e| prefix(e, &format!("gate {name}")))
    }

    fn build_sim(&mut self) -> Result<SimConfig> {
        let dt = self.take("sim", "dt");
        let t_end = self.take("sim", "t_end");
        let stride = self.take("sim", "record_stride");
        let mut missing = Vec::new();
        if dt.is_none() {
            missing.push("dt");
        }
        if t_end.is_none() {
            missing.push("t_end");
        }
        if stride.is_none() {
            missing.push("record_stride");
        }
        if !missing.is_empty() {
            return Err(Self::missing("sim", &missing));
        }
        let (dline, dval) = dt.unwrap();
        let (tline, tval) = t_end.unwrap();
        let (sline, sval) = stride.unwrap();
        Ok(SimConfig {
            dt: parse_f64(&dval, dline)?,
            t_end: parse_f64(&tval, tline)?,
            record_stride: parse_usize(&sval, sline)?,
        })
    }
}

fn parse_f64(s: &str, line: usize) -> Result<f64> {
    let v: f64 = s.parse().map_err(|_| Error::Parse {
        line,
        message: format!("expected a number, got '{s}'"),
    })?;
    if !v.is_finite() {
        return Err(Error::Parse {
            line,
            message: format!("number must be finite, got '{s}'"),
        });
    }
    Ok(v)
}

fn parse_usize(s: &str, line: usize) -> Result<usize> {
    s.parse().map_err(|_| Error::Parse {
        line,
        message: format!("expected a nonnegative integer, got '{s}'"),
    })
}

fn parse_bool(s: &str, line: usize) -> Result<bool> {
    match s {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => Err(Error::Parse {
            line,
            message: format!("expected 'true' or 'false', got '{s}'"),
        }),
    }
}

fn parse_list(s: &str, line: usize) -> Result<Vec<f64>> {
    s.split(',')
        .map(|part| parse_f64(part.trim(), line))
        .collect()
}
