//! INI-style run configuration.
//!
//! Files use laboratory units (fs, nm, mm, V/m, 1/ns, cm⁻³, rad/fs, C·m);
//! everything is converted to SI here and nowhere else. Missing keys keep
//! the reference value, unknown keys are an error.

use std::collections::HashMap;
use std::fmt::Write as _;

use mbprop::constants::FS;
use mbprop::model::{BlochState, MediumParams, PulseRole, PulseSpec};
use mbprop::solver::{RunConfig, SolverHooks, DEFAULT_DT, DEFAULT_NZ, DEFAULT_TAIL_WINDOW};
use thiserror::Error;


#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: [{section}] {key}: {message}")]
    Value { line: usize, section: String, key: String, message: String },
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PulseEntry {
    /// V/m
    pub amplitude: f64,
    /// Intensity FWHM, s
    pub duration: f64,
    /// s; ignored for the read pulse, which follows the delay
    pub center: f64,
}

/// Optional sweep definitions; command-line flags take precedence.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Sweep {
    /// (start, stop, step), s
    pub taus: Option<(f64, f64, f64)>,
    /// (from, to), s
    pub fit: Option<(f64, f64)>,
    pub rho_bb: Option<Vec<f64>>,
}

/// Resolved configuration, SI units.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigFile {
    pub params: MediumParams,
    pub pump: PulseEntry,
    pub read: PulseEntry,
    /// Zero amplitude means no seed pulse.
    pub seed: PulseEntry,
    pub dt: f64,
    pub nz: usize,
    pub tail_window: f64,
    /// m
    pub probes: Vec<f64>,
    pub delay: f64,
    pub rho_aa: f64,
    pub rho_bb: f64,
    pub sweep: Sweep,
}

impl Default for ConfigFile {
    fn default() -> Self {
        let r = RunConfig::reference(0.0, 0.2);
        let entry = |p: PulseSpec| PulseEntry { amplitude: p.peak_amplitude, duration: p.duration_fwhm, center: p.center_time };
        ConfigFile {
            params: r.params,
            pump: entry(r.pump()),
            read: entry(r.pulse(PulseRole::Read).expect("reference read pulse")),
            seed: PulseEntry { amplitude: 0.0, duration: 50.0 * FS, center: 500.0 * FS },
            dt: DEFAULT_DT,
            nz: DEFAULT_NZ,
            tail_window: DEFAULT_TAIL_WINDOW,
            probes: r.probes.clone(),
            delay: 0.0,
            rho_aa: 0.0,
            rho_bb: 0.2,
            sweep: Sweep::default(),
        }
    }
}

#[derive(Clone, Copy)]
enum Rule {
    Any,
    Positive,
    NonNegative,
    NonZero,
    Fraction,
}

impl Rule {
    fn check(self, v: f64) -> Result<(), &'static str> {
        let ok = v.is_finite()
            && match self {
                Rule::Any => true,
                Rule::Positive => v > 0.0,
                Rule::NonNegative => v >= 0.0,
                Rule::NonZero => v != 0.0,
                Rule::Fraction => (0.0..=1.0).contains(&v),
            };
        if ok {
            return Ok(());
        }
        Err(match self {
            Rule::Any => "must be finite",
            Rule::Positive => "must be strictly positive",
            Rule::NonNegative => "must be non-negative",
            Rule::NonZero => "must be nonzero",
            Rule::Fraction => "must lie in [0, 1]",
        })
    }
}

struct Scalar {
    section: &'static str,
    key: &'static str,
    unit: &'static str,
    /// SI value = file value × 10^exp
    exp: i32,
    rule: Rule,
    field: fn(&mut ConfigFile) -> &mut f64,
}

const NS_INV: i32 = 9;
const CM3_INV: i32 = 6;
const NM: i32 = -9;
const MM: i32 = -3;
const FEMTO: i32 = -15;
const RAD_PER_FS: i32 = 15;

/// Decimal `text × 10^exp`, correctly rounded: the power of ten is applied
/// to the decimal exponent, never through a floating-point product.
fn shift(text: &str, exp: i32) -> Result<f64, String> {
    let t = text.trim();
    let bad = || format!("`{t}` is not a number");
    let (mantissa, e) = match t.find(['e', 'E']) {
        Some(i) => (&t[..i], t[i + 1..].parse::<i32>().map_err(|_| bad())?),
        None => (t, 0),
    };
    mantissa.parse::<f64>().map_err(|_| bad())?;
    let v = format!("{mantissa}e{}", e + exp).parse::<f64>().map_err(|_| bad())?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(bad())
    }
}

fn to_si(v: f64, exp: i32) -> f64 {
    shift(&format!("{v:e}"), exp).unwrap_or(f64::NAN)
}

/// Shortest file-unit text that loads back to exactly `si`.
fn file_text(si: f64, exp: i32) -> String {
    let sci = format!("{si:e}");
    let (mantissa, e) = sci.split_once('e').expect("exponent form");
    let e = e.parse::<i32>().expect("integer exponent") - exp;
    let (sign, mantissa) = mantissa.strip_prefix('-').map_or(("", mantissa), |m| ("-", m));
    let digits: String = mantissa.chars().filter(|c| *c != '.').collect();
    if si == 0.0 {
        return "0".into();
    }
    if !(-5..7).contains(&e) {
        return format!("{sign}{mantissa}e{e}");
    }
    // place the decimal point: value = 0.d1d2... × 10^(e+1)
    let point = e + 1;
    let body = if point <= 0 {
        format!("0.{}{digits}", "0".repeat((-point) as usize))
    } else if point as usize >= digits.len() {
        format!("{digits}{}", "0".repeat(point as usize - digits.len()))
    } else {
        format!("{}.{}", &digits[..point as usize], &digits[point as usize..])
    };
    format!("{sign}{body}")
}

macro_rules! scalar {
    ($section:literal, $key:literal, $unit:literal, $exp:expr, $rule:ident, $($path:tt)+) => {
        Scalar { section: $section, key: $key, unit: $unit, exp: $exp, rule: Rule::$rule, field: |c| &mut c.$($path)+ }
    };
}

const SCALARS: &[Scalar] = &[
    scalar!("medium", "dipole_ax", "C m", 0, NonZero, params.dipole_ax),
    scalar!("medium", "dipole_ia", "C m", 0, NonZero, params.dipole_ia),
    scalar!("medium", "dipole_bi", "C m", 0, NonZero, params.dipole_bi),
    scalar!("medium", "dipole_bx", "C m", 0, NonZero, params.dipole_bx),
    scalar!("medium", "gamma_a", "1/ns", NS_INV, Positive, params.gamma_a),
    scalar!("medium", "gamma_b", "1/ns", NS_INV, Positive, params.gamma_b),
    scalar!("medium", "gamma_col", "1/ns", NS_INV, Positive, params.gamma_col),
    scalar!("medium", "delta", "rad/fs", RAD_PER_FS, NonZero, params.delta),
    scalar!("medium", "density", "1/cm^3", CM3_INV, Positive, params.density),
    scalar!("medium", "lambda_ax", "nm", NM, Positive, params.lambda_ax),
    scalar!("medium", "lambda_bx", "nm", NM, Positive, params.lambda_bx),
    scalar!("medium", "length", "mm", MM, Positive, params.length),
    scalar!("pulses", "pump_amplitude", "V/m", 0, NonNegative, pump.amplitude),
    scalar!("pulses", "pump_duration", "fs", FEMTO, Positive, pump.duration),
    scalar!("pulses", "pump_center", "fs", FEMTO, Any, pump.center),
    scalar!("pulses", "read_amplitude", "V/m", 0, NonNegative, read.amplitude),
    scalar!("pulses", "read_duration", "fs", FEMTO, Positive, read.duration),
    scalar!("pulses", "seed_amplitude", "V/m", 0, NonNegative, seed.amplitude),
    scalar!("pulses", "seed_duration", "fs", FEMTO, Positive, seed.duration),
    scalar!("pulses", "seed_center", "fs", FEMTO, Any, seed.center),
    scalar!("grid", "dt", "fs", FEMTO, Positive, dt),
    scalar!("grid", "tail_window", "fs", FEMTO, NonNegative, tail_window),
    scalar!("run", "delay", "fs", FEMTO, Any, delay),
    scalar!("run", "rho_aa", "", 0, Fraction, rho_aa),
    scalar!("run", "rho_bb", "", 0, Fraction, rho_bb),
];

const SECTIONS: &[&str] = &["medium", "pulses", "grid", "run", "sweep"];

fn parse_list(s: &str, exp: i32) -> Result<Vec<f64>, String> {
    s.split(',').map(|x| shift(x, exp)).collect()
}

fn parse_colon(s: &str, n: usize, exp: i32) -> Result<Vec<f64>, String> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != n {
        return Err(format!("expected {n} colon-separated numbers, got `{}`", s.trim()));
    }
    parts.into_iter().map(|x| shift(x, exp)).collect()
}

/// `start:stop:step` in fs → (start, stop, step) in s.
pub fn parse_tau_range(s: &str) -> Result<(f64, f64, f64), String> {
    let v = parse_colon(s, 3, FEMTO)?;
    if !(v[2] > 0.0) || v[1] < v[0] {
        return Err(format!("range `{}` needs step > 0 and stop >= start", s.trim()));
    }
    Ok((v[0], v[1], v[2]))
}

/// `from:to` in fs → (from, to) in s.
pub fn parse_fit_range(s: &str) -> Result<(f64, f64), String> {
    let v = parse_colon(s, 2, FEMTO)?;
    if v[1] <= v[0] {
        return Err(format!("fit range `{}` needs to > from", s.trim()));
    }
    Ok((v[0], v[1]))
}

pub fn parse_fraction_list(s: &str) -> Result<Vec<f64>, String> {
    let v = parse_list(s, 0)?;
    if let Some(x) = v.iter().find(|x| !(0.0..=1.0).contains(*x)) {
        return Err(format!("{x} outside [0, 1]"));
    }
    Ok(v)
}

/// Sample points (s) of an inclusive `(start, stop, step)` delay range,
/// stepped in fs so that round inputs give round delays.
pub fn expand_range((start, stop, step): (f64, f64, f64)) -> Vec<f64> {
    let fs = |x: f64| to_si(x, -FEMTO);
    let (a, b, h) = (fs(start), fs(stop), fs(step));
    let n = ((b - a) / h + 1e-9).floor() as usize;
    (0..=n).map(|i| to_si(a + i as f64 * h, FEMTO)).collect()
}

pub fn parse(text: &str) -> Result<ConfigFile, ConfigError> {
    let mut cfg = ConfigFile::default();
    let mut section: Option<&str> = None;
    let mut seen: HashMap<(String, String), usize> = HashMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if let Some(name) = content.strip_prefix('[') {
            let name = name
                .strip_suffix(']')
                .ok_or_else(|| ConfigError::Syntax { line, message: format!("malformed section header `{content}`") })?
                .trim();
            section = Some(
                SECTIONS
                    .iter()
                    .copied()
                    .find(|s| *s == name)
                    .ok_or_else(|| ConfigError::Syntax { line, message: format!("unknown section [{name}]") })?,
            );
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .ok_or_else(|| ConfigError::Syntax { line, message: format!("expected `key = value`, got `{content}`") })?;
        let (key, value) = (key.trim(), value.trim());
        let sec = section.ok_or_else(|| ConfigError::Syntax { line, message: format!("key `{key}` outside any section") })?;
        let value_err = |message: String| ConfigError::Value {
            line,
            section: sec.to_string(),
            key: key.to_string(),
            message,
        };
        if let Some(first) = seen.insert((sec.to_string(), key.to_string()), line) {
            return Err(value_err(format!("duplicate key, first set on line {first}")));
        }
        if let Some(s) = SCALARS.iter().find(|s| s.section == sec && s.key == key) {
            let v = shift(value, s.exp).map_err(value_err)?;
            s.rule.check(v).map_err(|m| value_err(format!("{m}, got {value}")))?;
            *(s.field)(&mut cfg) = v;
            continue;
        }
        match (sec, key) {
            ("grid", "nz") => {
                cfg.nz = value
                    .parse::<usize>()
                    .ok()
                    .filter(|n| *n > 0)
                    .ok_or_else(|| value_err(format!("must be a positive integer, got {value}")))?;
            }
            ("grid", "probes") => {
                let v = parse_list(value, MM).map_err(value_err)?;
                if v.iter().any(|z| !(*z >= 0.0)) {
                    return Err(value_err("probe positions must be non-negative".into()));
                }
                cfg.probes = v;
            }
            ("sweep", "taus") => cfg.sweep.taus = Some(parse_tau_range(value).map_err(value_err)?),
            ("sweep", "fit") => cfg.sweep.fit = Some(parse_fit_range(value).map_err(value_err)?),
            ("sweep", "rho_bb") => cfg.sweep.rho_bb = Some(parse_fraction_list(value).map_err(value_err)?),
            _ => return Err(value_err("unknown key".into())),
        }
    }
    if !seen.contains_key(&("grid".to_string(), "probes".to_string())) {
        cfg.probes = vec![0.0, cfg.params.length];
    }
    cfg.run_config().validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
    Ok(cfg)
}

impl ConfigFile {
    /// Solver configuration; the seed pulse is included only when its
    /// amplitude is positive.
    pub fn run_config(&self) -> RunConfig {
        let mut pulses = vec![
            PulseSpec::new(PulseRole::Pump, self.pump.amplitude, self.pump.duration, self.pump.center),
            PulseSpec::new(PulseRole::Read, self.read.amplitude, self.read.duration, self.pump.center + self.delay),
        ];
        if self.seed.amplitude > 0.0 {
            pulses.push(PulseSpec::new(PulseRole::Seed, self.seed.amplitude, self.seed.duration, self.seed.center));
        }
        RunConfig {
            params: self.params,
            pulses,
            delay_tau: self.delay,
            initial_state: BlochState::with_populations(self.rho_aa, self.rho_bb),
            dt: self.dt,
            nz: self.nz,
            tail_window: self.tail_window,
            probes: self.probes.clone(),
            hooks: SolverHooks::default(),
        }
    }

    /// Configuration text that parses back to `self` exactly.
    pub fn dump(&self) -> String {
        let mut me = self.clone();
        let mut out = String::new();
        for sec in SECTIONS {
            let _ = writeln!(out, "[{sec}]");
            for s in SCALARS.iter().filter(|s| s.section == *sec) {
                let v = file_text(*(s.field)(&mut me), s.exp);
                let unit = if s.unit.is_empty() { String::new() } else { format!("  # {}", s.unit) };
                let _ = writeln!(out, "{} = {v}{unit}", s.key);
            }
            let list = |v: &[f64], exp: i32| v.iter().map(|x| file_text(*x, exp)).collect::<Vec<_>>().join(", ");
            match *sec {
                "grid" => {
                    let _ = writeln!(out, "nz = {}", self.nz);
                    let _ = writeln!(out, "probes = {}  # mm", list(&self.probes, MM));
                }
                "sweep" => {
                    if let Some((a, b, c)) = self.sweep.taus {
                        let _ = writeln!(out, "taus = {}  # fs", list(&[a, b, c], FEMTO).replace(", ", ":"));
                    }
                    if let Some((a, b)) = self.sweep.fit {
                        let _ = writeln!(out, "fit = {}  # fs", list(&[a, b], FEMTO).replace(", ", ":"));
                    }
                    if let Some(v) = &self.sweep.rho_bb {
                        let _ = writeln!(out, "rho_bb = {}", list(v, 0));
                    }
                }
                _ => {}
            }
            out.push('\n');
        }
        out
    }
}
