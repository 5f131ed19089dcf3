//! Scenario configuration: a flat `section.key = value` text format.
//!
//! ```text
//! # comment
//! model.J       = 5        # rad/ps
//! model.Omega   = 100
//! model.g       = 0
//! model.n_max   = 40
//! bath.T        = 300      # K
//! bath.lambda   = 0.05     # rad/ps, 0 switches the bath off
//! sd.kind       = ohmic    # ohmic | lorentzian
//! sd.m          = 1        # ohmic only
//! sd.width      = 1.5      # lorentzian only, required there
//! sd.omega_p    = 10       # defaults to 2J
//! initial.site  = 1        # 0 | 1
//! initial.sm_prep = displaced_thermal   # | bare_thermal | fock
//! initial.fock_n  = 0      # fock only
//! schedule.t_max  = 12     # ps
//! schedule.dt_out = 0.01   # ps
//! sweep.g       = 0:50:2   # start:stop:step or a comma list
//! analysis.t0   = 0        # ps, summary window
//! analysis.t1   = 12
//! solver.method = spectral # | rk | rk_schrodinger
//! output.dir    = out
//! ```
//!
//! Frequencies are angular, in rad/ps (often labelled THz). Keys in
//! the `run.` section are informational (written into manifests) and ignored.

use std::collections::BTreeMap;
use std::path::PathBuf;

use thiserror::Error;

use crate::analysis::Window;
use crate::bath::{BathParams, SpectralKind};
use crate::dynamics::{
    EvolveOptions, InitialCondition, Method, Picture, PositivityCheck, Schedule, Site, SmPreparation,
};
use crate::integrator::Tolerances;
use crate::model::ModelParams;
use crate::units;

/// Temperatures outside this range (K) are treated as unit mistakes.
pub const TEMPERATURE_RANGE: (f64, f64) = (1.0, 1.0e4);
/// Frequencies above this (rad/ps) are treated as unit mistakes.
pub const MAX_FREQUENCY: f64 = 1.0e4;

#[derive(Debug, Error, Clone, PartialEq)]
#[error("{}: {message}", if *.line == 0 { "scenario".to_string() } else { format!("line {}", .line) })]
pub struct ParseError {
    /// 1-based; 0 when the problem is not tied to one line.
    pub line: usize,
    pub message: String,
}

fn err(line: usize, message: impl Into<String>) -> ParseError {
    ParseError {
        line,
        message: message.into(),
    }
}

const KEYS: &[&str] = &[
    "model.J",
    "model.Omega",
    "model.g",
    "model.n_max",
    "bath.T",
    "bath.lambda",
    "sd.kind",
    "sd.m",
    "sd.width",
    "sd.omega_p",
    "initial.site",
    "initial.sm_prep",
    "initial.fock_n",
    "schedule.t_max",
    "schedule.dt_out",
    "sweep.g",
    "analysis.t0",
    "analysis.t1",
    "solver.method",
    "output.dir",
];

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub model: ModelParams,
    pub bath: BathParams,
    pub sd_kind: SpectralKind,
    pub initial: InitialCondition,
    pub schedule: Schedule,
    pub sweep_g: Option<Vec<f64>>,
    /// Summary window; the whole run when absent.
    pub window: Option<Window>,
    pub method: Method,
    pub output_dir: PathBuf,
}

impl Default for Scenario {
    fn default() -> Self {
        parse_scenario("").expect("defaults are valid")
    }
}

#[derive(Debug, Clone)]
struct Entry {
    value: String,
    line: usize,
}

fn tokenize(text: &str) -> Result<BTreeMap<String, Entry>, ParseError> {
    let mut map = BTreeMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let (key, value) = body
            .split_once('=')
            .ok_or_else(|| err(line, format!("expected `section.key = value`, found `{body}`")))?;
        let (key, value) = (key.trim(), value.trim());
        if key.starts_with("run.") {
            continue;
        }
        if !KEYS.contains(&key) {
            return Err(err(line, format!("unknown key `{key}`")));
        }
        if value.is_empty() {
            return Err(err(line, format!("empty value for `{key}`")));
        }
        let entry = Entry {
            value: value.to_string(),
            line,
        };
        if map.insert(key.to_string(), entry).is_some() {
            return Err(err(line, format!("duplicate key `{key}`")));
        }
    }
    Ok(map)
}

struct Fields(BTreeMap<String, Entry>);

impl Fields {
    fn line(&self, key: &str) -> usize {
        self.0.get(key).map_or(0, |e| e.line)
    }

    fn has(&self, key: &str) -> bool {
        self.0.contains_key(key)
    }

    fn str(&self, key: &str) -> Option<&str> {
        self.0.get(key).map(|e| e.value.as_str())
    }

    fn f64(&self, key: &str, default: f64) -> Result<f64, ParseError> {
        match self.0.get(key) {
            None => Ok(default),
            Some(e) => e
                .value
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| err(e.line, format!("`{key}` expects a number, found `{}`", e.value))),
        }
    }

    fn usize(&self, key: &str, default: usize) -> Result<usize, ParseError> {
        match self.0.get(key) {
            None => Ok(default),
            Some(e) => e.value.parse::<usize>().map_err(|_| {
                err(e.line, format!("`{key}` expects a non-negative integer, found `{}`", e.value))
            }),
        }
    }

    fn frequency(&self, key: &str, default: f64) -> Result<f64, ParseError> {
        let v = self.f64(key, default)?;
        if v.abs() > MAX_FREQUENCY {
            return Err(err(
                self.line(key),
                format!("`{key}` = {v} looks like the wrong unit; frequencies are rad/ps"),
            ));
        }
        Ok(v)
    }
}

/// Parse a `start:stop:step` grid (inclusive of `stop`).
pub fn parse_range(text: &str) -> Result<Vec<f64>, String> {
    let parts: Vec<&str> = text.split(':').map(str::trim).collect();
    let [start, stop, step] = parts[..] else {
        return Err(format!("expected start:stop:step, found `{text}`"));
    };
    let num = |s: &str| {
        s.parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| format!("`{s}` is not a number"))
    };
    let (start, stop, step) = (num(start)?, num(stop)?, num(step)?);
    if !(step > 0.0) {
        return Err("grid step must be > 0".into());
    }
    if stop < start {
        return Err("empty grid: stop is below start".into());
    }
    let count = ((stop - start) / step + 1e-9).floor() as usize;
    Ok((0..=count).map(|i| start + step * i as f64).collect())
}

fn parse_sweep(text: &str) -> Result<Vec<f64>, String> {
    let values = if text.contains(':') {
        parse_range(text)?
    } else {
        text.split(',')
            .map(|s| {
                s.trim()
                    .parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| format!("`{}` is not a number", s.trim()))
            })
            .collect::<Result<Vec<_>, _>>()?
    };
    if values.is_empty() {
        return Err("empty sweep".into());
    }
    if let Some(v) = values.iter().find(|v| **v < 0.0) {
        return Err(format!("sweep entries must be >= 0, found {v}"));
    }
    Ok(values)
}

/// Parse scenario text with defaults filled and every parameter validated.
pub fn parse_scenario(text: &str) -> Result<Scenario, ParseError> {
    parse_layers(&[text])
}

/// Parse several layers in order; keys in later layers override earlier ones.
/// Line numbers refer to the layer the key came from.
pub fn parse_layers(layers: &[&str]) -> Result<Scenario, ParseError> {
    let mut merged = BTreeMap::new();
    for text in layers {
        merged.extend(tokenize(text)?);
    }
    build(Fields(merged))
}

fn build(f: Fields) -> Result<Scenario, ParseError> {
    let j = f.frequency("model.J", 5.0)?;
    let omega = f.frequency("model.Omega", 100.0)?;
    let g = f.frequency("model.g", 0.0)?;
    let n_max = f.usize("model.n_max", 40)?;
    let model = ModelParams::new(j, omega, g, n_max).map_err(|e| {
        let key = ["model.J", "model.Omega", "model.g", "model.n_max"]
            .into_iter()
            .find(|k| f.has(k))
            .unwrap_or("model.J");
        err(f.line(key), e.to_string())
    })?;

    let t = f.f64("bath.T", 300.0)?;
    if !(TEMPERATURE_RANGE.0..=TEMPERATURE_RANGE.1).contains(&t) {
        return Err(err(
            f.line("bath.T"),
            format!(
                "bath.T = {t} looks like the wrong unit; expected kelvin in [{}, {}]",
                TEMPERATURE_RANGE.0, TEMPERATURE_RANGE.1
            ),
        ));
    }
    let lambda = f.frequency("bath.lambda", 0.05)?;
    let omega_p = f.frequency("sd.omega_p", 2.0 * j)?;
    let bath = BathParams::new(t, lambda, omega_p).map_err(|e| {
        let key = if f.has("bath.lambda") { "bath.lambda" } else { "sd.omega_p" };
        err(f.line(key), e.to_string())
    })?;

    let sd_kind = parse_sd_kind(&f)?;

    let site = match f.str("initial.site").unwrap_or("1") {
        "0" => Site::Zero,
        "1" => Site::One,
        other => {
            return Err(err(
                f.line("initial.site"),
                format!("initial.site must be 0 or 1, found `{other}`"),
            ))
        }
    };
    let prep = f.str("initial.sm_prep").unwrap_or("displaced_thermal");
    let sm_prep = match prep {
        "displaced_thermal" => SmPreparation::DisplacedThermal,
        "bare_thermal" => SmPreparation::BareThermal,
        "fock" => {
            if !f.has("initial.fock_n") {
                return Err(err(f.line("initial.sm_prep"), "sm_prep = fock requires initial.fock_n"));
            }
            let n = f.usize("initial.fock_n", 0)?;
            if n >= n_max {
                return Err(err(
                    f.line("initial.fock_n"),
                    format!("initial.fock_n = {n} is outside n_max = {n_max}"),
                ));
            }
            SmPreparation::Fock(n)
        }
        other => {
            return Err(err(
                f.line("initial.sm_prep"),
                format!("unknown sm_prep `{other}` (displaced_thermal, bare_thermal, fock)"),
            ))
        }
    };
    if f.has("initial.fock_n") && !matches!(sm_prep, SmPreparation::Fock(_)) {
        return Err(err(f.line("initial.fock_n"), "initial.fock_n only applies to sm_prep = fock"));
    }
    let initial = InitialCondition {
        site,
        sm_prep,
        temperature: t,
    };

    let schedule = Schedule::new(f.f64("schedule.t_max", 12.0)?, f.f64("schedule.dt_out", 0.01)?)
        .map_err(|e| {
            let key = if f.has("schedule.dt_out") { "schedule.dt_out" } else { "schedule.t_max" };
            err(f.line(key), e.to_string())
        })?;

    let sweep_g = match f.str("sweep.g") {
        None => None,
        Some(s) => Some(parse_sweep(s).map_err(|m| err(f.line("sweep.g"), m))?),
    };

    let window = if f.has("analysis.t0") || f.has("analysis.t1") {
        let t0 = f.f64("analysis.t0", 0.0)?;
        let t1 = f.f64("analysis.t1", schedule.t_max)?;
        if !(t0 >= 0.0 && t1 > t0 && t1 <= schedule.t_max + 1e-12) {
            let key = if f.has("analysis.t1") { "analysis.t1" } else { "analysis.t0" };
            return Err(err(
                f.line(key),
                format!("analysis window [{t0}, {t1}] must lie inside [0, t_max]"),
            ));
        }
        Some(Window::new(t0, t1))
    } else {
        None
    };

    let method = match f.str("solver.method").unwrap_or("spectral") {
        "spectral" => Method::Spectral,
        "rk" => Method::runge_kutta(),
        "rk_schrodinger" => Method::RungeKutta {
            picture: Picture::Schrodinger,
            tolerances: Tolerances::default(),
        },
        other => {
            return Err(err(
                f.line("solver.method"),
                format!("unknown solver.method `{other}` (spectral, rk, rk_schrodinger)"),
            ))
        }
    };

    Ok(Scenario {
        model,
        bath,
        sd_kind,
        initial,
        schedule,
        sweep_g,
        window,
        method,
        output_dir: PathBuf::from(f.str("output.dir").unwrap_or("out")),
    })
}

fn parse_sd_kind(f: &Fields) -> Result<SpectralKind, ParseError> {
    let kind = match f.str("sd.kind") {
        Some(k) => k,
        None => {
            if let Some(key) = ["sd.m", "sd.width", "sd.omega_p"].into_iter().find(|k| f.has(k)) {
                return Err(err(f.line(key), format!("`{key}` given without sd.kind")));
            }
            "ohmic"
        }
    };
    match kind {
        "ohmic" => {
            if f.has("sd.width") {
                return Err(err(f.line("sd.width"), "sd.width only applies to sd.kind = lorentzian"));
            }
            let m = f.usize("sd.m", 1)?;
            if m == 0 || m > u32::MAX as usize {
                return Err(err(f.line("sd.m"), "sd.m must be a positive integer"));
            }
            Ok(SpectralKind::OhmicFamily { m: m as u32 })
        }
        "lorentzian" => {
            if f.has("sd.m") {
                return Err(err(f.line("sd.m"), "sd.m only applies to sd.kind = ohmic"));
            }
            if !f.has("sd.width") {
                return Err(err(f.line("sd.kind"), "sd.kind = lorentzian requires sd.width"));
            }
            let width = f.frequency("sd.width", 0.0)?;
            if !(width > 0.0) {
                return Err(err(f.line("sd.width"), "sd.width must be > 0"));
            }
            Ok(SpectralKind::Lorentzian { width })
        }
        other => Err(err(
            f.line("sd.kind"),
            format!("unknown sd.kind `{other}` (ohmic, lorentzian)"),
        )),
    }
}

impl Scenario {
    /// Coupling values to run: the sweep, or the single `model.g`.
    pub fn couplings(&self) -> Vec<f64> {
        self.sweep_g.clone().unwrap_or_else(|| vec![self.model.coupling])
    }

    pub fn evolve_options(&self) -> EvolveOptions {
        EvolveOptions {
            method: self.method,
            positivity: PositivityCheck::Certify,
        }
    }

    /// Canonical text form; parsing it reproduces `self`.
    pub fn to_text(&self) -> String {
        let mut out = Vec::new();
        let m = &self.model;
        out.push(format!("model.J = {}", m.tunnelling));
        out.push(format!("model.Omega = {}", m.mode_freq));
        out.push(format!("model.g = {}", m.coupling));
        out.push(format!("model.n_max = {}", m.n_max()));
        out.push(format!("bath.T = {}", self.bath.temperature));
        out.push(format!("bath.lambda = {}", self.bath.reorganisation));
        match self.sd_kind {
            SpectralKind::OhmicFamily { m } => {
                out.push("sd.kind = ohmic".into());
                out.push(format!("sd.m = {m}"));
            }
            SpectralKind::Lorentzian { width } => {
                out.push("sd.kind = lorentzian".into());
                out.push(format!("sd.width = {width}"));
            }
        }
        out.push(format!("sd.omega_p = {}", self.bath.peak_freq));
        out.push(format!("initial.site = {}", self.initial.site.index()));
        match self.initial.sm_prep {
            SmPreparation::DisplacedThermal => out.push("initial.sm_prep = displaced_thermal".into()),
            SmPreparation::BareThermal => out.push("initial.sm_prep = bare_thermal".into()),
            SmPreparation::Fock(n) => {
                out.push("initial.sm_prep = fock".into());
                out.push(format!("initial.fock_n = {n}"));
            }
        }
        out.push(format!("schedule.t_max = {}", self.schedule.t_max));
        out.push(format!("schedule.dt_out = {}", self.schedule.dt_out));
        if let Some(g) = &self.sweep_g {
            let list: Vec<String> = g.iter().map(|v| v.to_string()).collect();
            out.push(format!("sweep.g = {}", list.join(",")));
        }
        if let Some(w) = self.window {
            out.push(format!("analysis.t0 = {}", w.t0));
            out.push(format!("analysis.t1 = {}", w.t1));
        }
        let method = match self.method {
            Method::Spectral => "spectral",
            Method::RungeKutta {
                picture: Picture::Interaction,
                ..
            } => "rk",
            Method::RungeKutta {
                picture: Picture::Schrodinger,
                ..
            } => "rk_schrodinger",
        };
        out.push(format!("solver.method = {method}"));
        out.push(format!("output.dir = {}", self.output_dir.display()));
        let mut text = out.join("\n");
        text.push('\n');
        text
    }

    /// Resolved scenario plus informational `run.` lines.
    pub fn manifest(&self, extra: &[(String, String)]) -> String {
        let mut text = self.to_text();
        text.push_str(&format!("run.units = {}\n", units::UNIT_CONVENTION));
        for (k, v) in extra {
            text.push_str(&format!("run.{k} = {v}\n"));
        }
        text
    }
}

pub const PRESET_NAMES: &[&str] = &["fig3", "fig4a", "fig4b", "fig4c", "fig4d", "fig7", "fig8"];

/// Named configuration shipped with the crate.
pub fn preset(name: &str) -> Option<&'static str> {
    Some(match name {
        "fig3" => include_str!("../presets/fig3.cfg"),
        "fig4a" => include_str!("../presets/fig4a.cfg"),
        "fig4b" => include_str!("../presets/fig4b.cfg"),
        "fig4c" => include_str!("../presets/fig4c.cfg"),
        "fig4d" => include_str!("../presets/fig4d.cfg"),
        "fig7" => include_str!("../presets/fig7.cfg"),
        "fig8" => include_str!("../presets/fig8.cfg"),
        _ => return None,
    })
}
