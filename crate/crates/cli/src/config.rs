//! Flat `key = value unit` run configuration.
//!
//! Every key is declared in [`SCHEMA`] with its kind and constraint. A run
//! starts from the bundled case-study preset and applies a config file and
//! `--set` overrides on top. Values keep the unit they were written in, so
//! the echo in an output header re-parses to the same configuration.

use std::f64::consts::PI;
use std::fmt;
use std::path::Path;

use endiff_core::constants::{AMU, ELECTRON_MASS, ELEMENTARY_CHARGE};
use endiff_core::{physics, Alignment, Kernel, MillerIndex, MisalignmentMode, PatternModel, Scenario};

use crate::error::CliError;

pub const CASE_STUDY: &str = include_str!("../presets/case_study.conf");
pub const PRESET_NAMES: [&str; 1] = ["case_study"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dim {
    Length,
    Time,
    Mass,
    Energy,
    Frequency,
    Temperature,
    Angle,
    Wavenumber,
    Momentum,
}

impl Dim {
    fn name(self) -> &'static str {
        match self {
            Dim::Length => "length",
            Dim::Time => "time",
            Dim::Mass => "mass",
            Dim::Energy => "energy",
            Dim::Frequency => "frequency",
            Dim::Temperature => "temperature",
            Dim::Angle => "angle",
            Dim::Wavenumber => "wavenumber",
            Dim::Momentum => "momentum",
        }
    }
}

/// Marks the Talbot-time unit, resolved once mass and period are known.
const TALBOT: f64 = f64::NAN;

/// (symbol, dimension, factor to SI). Frequencies convert to angular
/// frequency.
const UNITS: &[(&str, Dim, f64)] = &[
    ("m", Dim::Length, 1.0),
    ("mm", Dim::Length, 1e-3),
    ("um", Dim::Length, 1e-6),
    ("nm", Dim::Length, 1e-9),
    ("pm", Dim::Length, 1e-12),
    ("s", Dim::Time, 1.0),
    ("ms", Dim::Time, 1e-3),
    ("us", Dim::Time, 1e-6),
    ("ns", Dim::Time, 1e-9),
    ("talbot", Dim::Time, TALBOT),
    ("kg", Dim::Mass, 1.0),
    ("amu", Dim::Mass, AMU),
    ("Da", Dim::Mass, AMU),
    ("me", Dim::Mass, ELECTRON_MASS),
    ("J", Dim::Energy, 1.0),
    ("eV", Dim::Energy, ELEMENTARY_CHARGE),
    ("keV", Dim::Energy, 1e3 * ELEMENTARY_CHARGE),
    ("MeV", Dim::Energy, 1e6 * ELEMENTARY_CHARGE),
    ("Hz", Dim::Frequency, 2.0 * PI),
    ("kHz", Dim::Frequency, 2.0 * PI * 1e3),
    ("MHz", Dim::Frequency, 2.0 * PI * 1e6),
    ("rad/s", Dim::Frequency, 1.0),
    ("K", Dim::Temperature, 1.0),
    ("mK", Dim::Temperature, 1e-3),
    ("uK", Dim::Temperature, 1e-6),
    ("nK", Dim::Temperature, 1e-9),
    ("rad", Dim::Angle, 1.0),
    ("mrad", Dim::Angle, 1e-3),
    ("urad", Dim::Angle, 1e-6),
    ("1/m", Dim::Wavenumber, 1.0),
    ("1/um", Dim::Wavenumber, 1e6),
    ("1/nm", Dim::Wavenumber, 1e9),
    ("kg*m/s", Dim::Momentum, 1.0),
];

fn unit(symbol: &str) -> Option<(&'static str, Dim, f64)> {
    let symbol = match symbol {
        "µm" => "um",
        "µs" => "us",
        "µK" => "uK",
        "µrad" => "urad",
        "1/µm" => "1/um",
        other => other,
    };
    UNITS.iter().find(|(s, _, _)| *s == symbol).copied()
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Kind {
    Quantity(Dim),
    QuantityOrAuto(Dim),
    QuantityOrNone(Dim),
    Integer,
    Number,
    Miller,
    IntegerList,
    NumberList,
    QuantityList(Dim),
    Choice(&'static [&'static str]),
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Constraint {
    Any,
    Positive,
    NonNegative,
    AtLeast(i64),
}

struct KeySpec {
    name: &'static str,
    kind: Kind,
    constraint: Constraint,
}

const fn key(name: &'static str, kind: Kind, constraint: Constraint) -> KeySpec {
    KeySpec { name, kind, constraint }
}

const ALIGNMENT_MODES: &[&str] = &["perfect", "general", "small-pinhole"];
const NUTATION_MODES: &[&str] = &["general", "small-pinhole"];
const MODELS: &[&str] = &["full", "broad"];
const KERNELS: &[&str] = &["squared", "linear"];

use Constraint::*;
use Kind::*;

const SCHEMA: &[KeySpec] = &[
    key("crystal.lattice_constant", Quantity(Dim::Length), Positive),
    key("crystal.atomic_number", Integer, AtLeast(1)),
    key("crystal.radius", Quantity(Dim::Length), Positive),
    key("crystal.half_thickness", Quantity(Dim::Length), Positive),
    key("beam.energy", Quantity(Dim::Energy), Positive),
    key("beam.spot_hwhm", Quantity(Dim::Length), Positive),
    key("mask.reflection", Miller, Any),
    key("mask.orders", IntegerList, Any),
    key("mask.pinhole_width", Number, Positive),
    key("mask.period", QuantityOrAuto(Dim::Length), Positive),
    key("source.mass", Quantity(Dim::Mass), Positive),
    key("source.trap_frequency", Quantity(Dim::Frequency), Positive),
    key("source.temperature", Quantity(Dim::Temperature), NonNegative),
    key("source.sigma_x", QuantityOrAuto(Dim::Length), Positive),
    key("source.sigma_p", QuantityOrAuto(Dim::Momentum), Positive),
    key("evolution.t0", Quantity(Dim::Time), Positive),
    key("evolution.t", Quantity(Dim::Time), NonNegative),
    key("evolution.model", Choice(MODELS), Any),
    key("alignment.mode", Choice(ALIGNMENT_MODES), Any),
    key("alignment.sigma_beta", Quantity(Dim::Angle), Positive),
    key("electron.x", Quantity(Dim::Length), Any),
    key("electron.y", Quantity(Dim::Length), Any),
    key("decoherence.tau0", QuantityOrNone(Dim::Time), Positive),
    key("decoherence.sigma_q", Quantity(Dim::Wavenumber), NonNegative),
    key("grid.points", Integer, AtLeast(16)),
    key("grid.half_width", Number, Positive),
    key("carpet.rows", Integer, AtLeast(2)),
    key("carpet.t_max", Quantity(Dim::Time), Positive),
    key("misalign.mode", Choice(NUTATION_MODES), Any),
    key("misalign.sigma_beta", Quantity(Dim::Angle), Positive),
    key("misalign.y_fractions", NumberList, NonNegative),
    key("macro.time", Quantity(Dim::Time), Positive),
    key("macro.sigma_q_min", Quantity(Dim::Wavenumber), Positive),
    key("macro.sigma_q_max", Quantity(Dim::Wavenumber), Positive),
    key("macro.scan_points", Integer, AtLeast(3)),
    key("macro.kernel", Choice(KERNELS), Any),
    key("macro.reference_mass", Quantity(Dim::Mass), Positive),
    key("table.masses", QuantityList(Dim::Mass), Positive),
    key("table.period", QuantityOrAuto(Dim::Length), Positive),
    key("systematics.impact_parameter", Quantity(Dim::Length), Positive),
    key("systematics.cavity_radius", Quantity(Dim::Length), Positive),
    key("systematics.time", Quantity(Dim::Time), NonNegative),
];

fn spec_index(name: &str) -> Option<usize> {
    SCHEMA.iter().position(|k| k.name == name)
}

/// Formats a float so that parsing the text gives back the same bits.
pub fn fmt_number(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 || (1e-4..1e6).contains(&a) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quantity {
    pub value: f64,
    pub unit: &'static str,
}

impl Quantity {
    fn factor(&self) -> f64 {
        unit(self.unit).map(|u| u.2).expect("units come from the table")
    }

    pub fn is_talbot(&self) -> bool {
        self.unit == "talbot"
    }

    /// SI value; Talbot multiples are scaled by `talbot_time`.
    pub fn si(&self, talbot_time: f64) -> f64 {
        if self.is_talbot() {
            self.value * talbot_time
        } else {
            self.value * self.factor()
        }
    }
}

impl fmt::Display for Quantity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", fmt_number(self.value), self.unit)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Quantity(Quantity),
    Auto,
    None,
    Integer(i64),
    Number(f64),
    Miller([i32; 3]),
    IntegerList(Vec<i64>),
    NumberList(Vec<f64>),
    QuantityList(Vec<f64>, &'static str),
    Choice(&'static str),
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |v: &[String]| v.join(" ");
        match self {
            Value::Quantity(q) => write!(f, "{q}"),
            Value::Auto => f.write_str("auto"),
            Value::None => f.write_str("none"),
            Value::Integer(i) => write!(f, "{i}"),
            Value::Number(x) => f.write_str(&fmt_number(*x)),
            Value::Miller([h, k, l]) => write!(f, "{h} {k} {l}"),
            Value::IntegerList(v) => f.write_str(&join(&v.iter().map(|i| i.to_string()).collect::<Vec<_>>())),
            Value::NumberList(v) => f.write_str(&join(&v.iter().map(|x| fmt_number(*x)).collect::<Vec<_>>())),
            Value::QuantityList(v, u) => {
                write!(f, "{} {u}", join(&v.iter().map(|x| fmt_number(*x)).collect::<Vec<_>>()))
            }
            Value::Choice(c) => f.write_str(c),
        }
    }
}

fn bad(key: &str, message: impl Into<String>) -> CliError {
    CliError::Config {
        key: Some(key.to_string()),
        message: message.into(),
    }
}

fn parse_f64(key: &str, token: &str) -> Result<f64, CliError> {
    token
        .parse::<f64>()
        .ok()
        .filter(|x| x.is_finite())
        .ok_or_else(|| bad(key, format!("`{token}` is not a finite number")))
}

fn parse_int(key: &str, token: &str) -> Result<i64, CliError> {
    token
        .parse::<i64>()
        .map_err(|_| bad(key, format!("`{token}` is not an integer")))
}

fn parse_quantity(key: &str, dim: Dim, tokens: &[&str]) -> Result<Quantity, CliError> {
    match tokens {
        [number, symbol] => {
            let value = parse_f64(key, number)?;
            let (unit, d, _) = unit(symbol).ok_or_else(|| bad(key, format!("unknown unit `{symbol}`")))?;
            if d != dim {
                return Err(bad(key, format!("unit `{symbol}` is a {}, expected a {}", d.name(), dim.name())));
            }
            Ok(Quantity { value, unit })
        }
        [_] => Err(bad(key, format!("missing unit, expected a {}", dim.name()))),
        _ => Err(bad(key, format!("expected `<number> <unit>` for a {}", dim.name()))),
    }
}

fn check(spec: &KeySpec, x: f64) -> Result<(), CliError> {
    let ok = match spec.constraint {
        Any => true,
        Positive => x > 0.0,
        NonNegative => x >= 0.0,
        AtLeast(n) => x >= n as f64,
    };
    if ok {
        Ok(())
    } else {
        let what = match spec.constraint {
            Positive => "positive".to_string(),
            NonNegative => "non-negative".to_string(),
            AtLeast(n) => format!("at least {n}"),
            Any => unreachable!(),
        };
        Err(bad(spec.name, format!("must be {what}, got {}", fmt_number(x))))
    }
}

fn parse_value(spec: &KeySpec, text: &str) -> Result<Value, CliError> {
    let key = spec.name;
    let tokens: Vec<&str> = text.split_whitespace().collect();
    if tokens.is_empty() {
        return Err(bad(key, "missing value"));
    }
    let value = match spec.kind {
        Quantity(dim) => Value::Quantity(parse_quantity(key, dim, &tokens)?),
        QuantityOrAuto(_) if tokens == ["auto"] => Value::Auto,
        QuantityOrAuto(dim) => Value::Quantity(parse_quantity(key, dim, &tokens)?),
        QuantityOrNone(_) if tokens == ["none"] => Value::None,
        QuantityOrNone(dim) => Value::Quantity(parse_quantity(key, dim, &tokens)?),
        Integer => match tokens[..] {
            [t] => Value::Integer(parse_int(key, t)?),
            _ => return Err(bad(key, "expected a single integer")),
        },
        Number => match tokens[..] {
            [t] => Value::Number(parse_f64(key, t)?),
            _ => return Err(bad(key, "expected a single dimensionless number")),
        },
        Miller => match tokens[..] {
            [h, k, l] => {
                let idx = [h, k, l]
                    .iter()
                    .map(|t| parse_int(key, t).and_then(|i| i32::try_from(i).map_err(|_| bad(key, "index out of range"))))
                    .collect::<Result<Vec<_>, _>>()?;
                if idx.iter().all(|&i| i == 0) {
                    return Err(bad(key, "the zero reflection has no period"));
                }
                Value::Miller([idx[0], idx[1], idx[2]])
            }
            _ => return Err(bad(key, "expected three integer Miller indices")),
        },
        IntegerList => Value::IntegerList(tokens.iter().map(|t| parse_int(key, t)).collect::<Result<_, _>>()?),
        NumberList => Value::NumberList(tokens.iter().map(|t| parse_f64(key, t)).collect::<Result<_, _>>()?),
        QuantityList(dim) => {
            let (symbol, numbers) = tokens.split_last().expect("non-empty");
            if numbers.is_empty() {
                return Err(bad(key, "expected `<numbers...> <unit>`"));
            }
            let q = parse_quantity(key, dim, &[numbers[0], symbol])?;
            let values = numbers.iter().map(|t| parse_f64(key, t)).collect::<Result<_, _>>()?;
            Value::QuantityList(values, q.unit)
        }
        Choice(options) => match tokens[..] {
            [t] => Value::Choice(
                options
                    .iter()
                    .find(|o| **o == t)
                    .copied()
                    .ok_or_else(|| bad(key, format!("`{t}` is not one of {}", options.join(", "))))?,
            ),
            _ => return Err(bad(key, format!("expected one of {}", options.join(", ")))),
        },
    };
    match &value {
        Value::Quantity(q) => check(spec, q.value)?,
        Value::Integer(i) => check(spec, *i as f64)?,
        Value::Number(x) => check(spec, *x)?,
        Value::NumberList(v) | Value::QuantityList(v, _) => v.iter().try_for_each(|x| check(spec, *x))?,
        _ => {}
    }
    Ok(value)
}

/// Splits `key = value` (or `key value`) and strips trailing comments.
fn split_assignment(line: &str) -> Option<(&str, &str)> {
    let line = line.split('#').next().unwrap_or("").trim();
    if line.is_empty() {
        return None;
    }
    match line.split_once('=') {
        Some((k, v)) => Some((k.trim(), v.trim())),
        None => Some(line.split_once(char::is_whitespace).map_or((line, ""), |(k, v)| (k, v.trim()))),
    }
}

/// Complete set of key values, in schema order.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    values: Vec<Value>,
}

impl RunConfig {
    /// The bundled case-study configuration.
    pub fn case_study() -> Self {
        Self::from_complete_text(CASE_STUDY).expect("bundled preset is valid")
    }

    pub fn preset(name: &str) -> Option<Self> {
        (name == "case_study").then(Self::case_study)
    }

    /// Parses a text that must assign every key exactly once.
    pub fn from_complete_text(text: &str) -> Result<Self, CliError> {
        let mut slots: Vec<Option<Value>> = vec![None; SCHEMA.len()];
        Self::apply_lines(text, &mut |i, v| slots[i] = Some(v))?;
        let values = slots
            .into_iter()
            .zip(SCHEMA)
            .map(|(v, spec)| v.ok_or_else(|| bad(spec.name, "missing from configuration")))
            .collect::<Result<_, _>>()?;
        Ok(Self { values })
    }

    fn apply_lines(text: &str, sink: &mut dyn FnMut(usize, Value)) -> Result<(), CliError> {
        let mut seen = vec![false; SCHEMA.len()];
        for line in text.lines() {
            let Some((name, raw)) = split_assignment(line) else {
                continue;
            };
            let i = spec_index(name).ok_or_else(|| bad(name, format!("unknown key `{name}`")))?;
            if std::mem::replace(&mut seen[i], true) {
                return Err(bad(name, "assigned more than once"));
            }
            sink(i, parse_value(&SCHEMA[i], raw)?);
        }
        Ok(())
    }

    /// Applies the assignments in `text` on top of `self`.
    pub fn apply_text(&mut self, text: &str) -> Result<(), CliError> {
        let values = &mut self.values;
        Self::apply_lines(text, &mut |i, v| values[i] = v)
    }

    /// Loads a preset name or a config file and layers it over the case study.
    pub fn load(source: &str) -> Result<Self, CliError> {
        if let Some(cfg) = Self::preset(source) {
            return Ok(cfg);
        }
        let path = Path::new(source);
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config {
            key: None,
            message: format!("cannot read config `{source}`: {e} (presets: {})", PRESET_NAMES.join(", ")),
        })?;
        let mut cfg = Self::case_study();
        cfg.apply_text(&text)?;
        Ok(cfg)
    }

    /// Applies one `key=value` override.
    pub fn set(&mut self, assignment: &str) -> Result<(), CliError> {
        let Some((name, raw)) = assignment.split_once('=') else {
            return Err(CliError::Config {
                key: None,
                message: format!("override `{assignment}` is not of the form key=value"),
            });
        };
        let name = name.trim();
        let i = spec_index(name).ok_or_else(|| bad(name, format!("unknown key `{name}`")))?;
        self.values[i] = parse_value(&SCHEMA[i], raw)?;
        Ok(())
    }

    pub fn get(&self, name: &str) -> &Value {
        &self.values[spec_index(name).unwrap_or_else(|| panic!("no key {name}"))]
    }

    /// Canonical `key = value` lines.
    pub fn echo(&self) -> Vec<String> {
        SCHEMA
            .iter()
            .zip(&self.values)
            .map(|(spec, v)| format!("{} = {v}", spec.name))
            .collect()
    }

    /// Recovers the configuration echoed in an emitted CSV header.
    pub fn from_header(csv: &str) -> Result<Self, CliError> {
        let mut inside = false;
        let mut block = String::new();
        for line in csv.lines() {
            let Some(rest) = line.strip_prefix('#') else {
                break;
            };
            match rest.trim() {
                "config begin" => inside = true,
                "config end" => break,
                body if inside => {
                    block.push_str(body);
                    block.push('\n');
                }
                _ => {}
            }
        }
        Self::from_complete_text(&block)
    }

    fn quantity(&self, name: &str) -> Quantity {
        match self.get(name) {
            Value::Quantity(q) => *q,
            other => panic!("{name} holds {other:?}"),
        }
    }

    /// SI value of a quantity key that does not accept Talbot units.
    pub fn si(&self, name: &str) -> Result<f64, CliError> {
        let q = self.quantity(name);
        if q.is_talbot() {
            return Err(bad(name, "Talbot units are only valid for times"));
        }
        Ok(q.si(f64::NAN))
    }

    fn optional_si(&self, name: &str) -> Option<f64> {
        match self.get(name) {
            Value::Quantity(q) => Some(q.si(f64::NAN)),
            _ => None,
        }
    }

    pub fn integer(&self, name: &str) -> i64 {
        match self.get(name) {
            Value::Integer(i) => *i,
            other => panic!("{name} holds {other:?}"),
        }
    }

    pub fn number(&self, name: &str) -> f64 {
        match self.get(name) {
            Value::Number(x) => *x,
            other => panic!("{name} holds {other:?}"),
        }
    }

    pub fn choice(&self, name: &str) -> &'static str {
        match self.get(name) {
            Value::Choice(c) => c,
            other => panic!("{name} holds {other:?}"),
        }
    }

    pub fn number_list(&self, name: &str) -> Vec<f64> {
        match self.get(name) {
            Value::NumberList(v) => v.clone(),
            Value::QuantityList(v, u) => {
                let f = unit(u).map(|x| x.2).unwrap_or(1.0);
                v.iter().map(|x| x * f).collect()
            }
            other => panic!("{name} holds {other:?}"),
        }
    }

    pub fn usize(&self, name: &str) -> usize {
        usize::try_from(self.integer(name)).expect("validated non-negative")
    }

    /// Resolves a time key, expanding Talbot multiples with `talbot_time`.
    pub fn time(&self, name: &str, talbot_time: f64) -> f64 {
        self.quantity(name).si(talbot_time)
    }

    pub fn model(&self) -> PatternModel {
        match self.choice("evolution.model") {
            "broad" => PatternModel::BroadEnvelope,
            _ => PatternModel::Full,
        }
    }

    pub fn kernel(&self) -> Kernel {
        match self.choice("macro.kernel") {
            "linear" => Kernel::Linear,
            _ => Kernel::Squared,
        }
    }

    fn nutation(&self, mode_key: &str, sigma_key: &str) -> Result<Alignment, CliError> {
        let mode = match self.choice(mode_key) {
            "perfect" => return Ok(Alignment::Perfect),
            "general" => MisalignmentMode::General,
            _ => MisalignmentMode::SmallPinhole,
        };
        Ok(Alignment::Nutation {
            sigma_beta: self.si(sigma_key)?,
            mode,
        })
    }

    /// Misaligned configuration used by the `misalign` command.
    pub fn misalignment(&self) -> Result<Alignment, CliError> {
        self.nutation("misalign.mode", "misalign.sigma_beta")
    }

    /// Builds the experiment with every time resolved to seconds.
    pub fn scenario(&self) -> Result<Scenario, CliError> {
        let mut s = Scenario::case_study();
        s.lattice_constant = self.si("crystal.lattice_constant")?;
        s.atomic_number = u32::try_from(self.integer("crystal.atomic_number"))
            .map_err(|_| bad("crystal.atomic_number", "out of range"))?;
        s.radius = self.si("crystal.radius")?;
        s.half_thickness = self.si("crystal.half_thickness")?;
        s.beam_energy = self.si("beam.energy")?;
        s.spot_hwhm = self.si("beam.spot_hwhm")?;
        let Value::Miller([h, k, l]) = *self.get("mask.reflection") else {
            unreachable!()
        };
        s.reference = MillerIndex::new(h, k, l);
        let Value::IntegerList(orders) = self.get("mask.orders") else {
            unreachable!()
        };
        s.orders = orders
            .iter()
            .map(|&n| i32::try_from(n).map_err(|_| bad("mask.orders", "order out of range")))
            .collect::<Result<_, _>>()?;
        if s.orders.is_empty() || s.orders.contains(&0) {
            return Err(bad("mask.orders", "needs at least one non-zero diffraction order"));
        }
        let mut sorted = s.orders.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != s.orders.len() {
            return Err(bad("mask.orders", "orders must be distinct"));
        }
        s.pinhole_width = self.number("mask.pinhole_width");
        if s.pinhole_width > 1.0 {
            return Err(bad("mask.pinhole_width", "must not exceed 1 (fraction of the order spacing)"));
        }
        s.period = self.optional_si("mask.period");
        s.mass = self.si("source.mass")?;
        s.trap_frequency = self.si("source.trap_frequency")?;
        s.temperature = self.si("source.temperature")?;
        s.source_widths = match (self.optional_si("source.sigma_x"), self.optional_si("source.sigma_p")) {
            (Some(sx), Some(sp)) => {
                if sx * sp < 0.5 * endiff_core::constants::HBAR * (1.0 - 1e-12) {
                    return Err(bad("source.sigma_p", "σ_X σ_P is below the uncertainty bound ħ/2"));
                }
                Some((sx, sp))
            }
            (None, None) => None,
            (Some(_), None) => return Err(bad("source.sigma_p", "must be given together with source.sigma_x")),
            (None, Some(_)) => return Err(bad("source.sigma_x", "must be given together with source.sigma_p")),
        };
        s.alignment = self.nutation("alignment.mode", "alignment.sigma_beta")?;
        s.electron_x = self.si("electron.x")?;
        s.electron_y = self.si("electron.y")?;
        s.reference_mass = self.si("macro.reference_mass")?;
        s.kernel = self.kernel();

        if s.crystal().is_err() {
            return Err(section_error("crystal", s.crystal().unwrap_err()));
        }
        let period = s.period().map_err(|e| section_error("mask.reflection", e))?;
        let tm = physics::talbot_time(s.mass, period).map_err(|e| section_error("source.mass", e))?;
        s.t0 = Some(self.time("evolution.t0", tm));
        s.t = self.time("evolution.t", tm);
        s.macro_time = self.time("macro.time", tm);
        Ok(s)
    }

    pub fn decoherence(&self, talbot_time: f64) -> Option<(f64, f64)> {
        match self.get("decoherence.tau0") {
            Value::Quantity(q) => Some((q.si(talbot_time), self.quantity("decoherence.sigma_q").si(f64::NAN))),
            _ => None,
        }
    }

    pub fn optional_length(&self, name: &str) -> Option<f64> {
        self.optional_si(name)
    }
}

fn section_error(key: &str, e: endiff_core::Error) -> CliError {
    match e {
        endiff_core::Error::Numerical { .. } => CliError::Core(e),
        other => bad(key, other.to_string()),
    }
}

/// Attaches a key to a core error raised while building a component.
pub fn in_section(key: &str) -> impl Fn(endiff_core::Error) -> CliError + '_ {
    move |e| section_error(key, e)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn preset_covers_every_key() {
        let cfg = RunConfig::case_study();
        assert_eq!(cfg.echo().len(), SCHEMA.len());
    }

    #[test]
    fn echo_reparses() {
        let mut cfg = RunConfig::case_study();
        cfg.set("evolution.t = 0.37 talbot").unwrap();
        cfg.set("source.sigma_x = 3.1e-12 m").unwrap();
        cfg.set("source.sigma_p = 1e-23 kg*m/s").unwrap();
        let text = cfg.echo().join("\n");
        assert_eq!(RunConfig::from_complete_text(&text).unwrap(), cfg);
    }

    #[test]
    fn numbers_round_trip() {
        for x in [0.0, 1e-3, 0.1 + 0.2, 2e9, 7e11, 6.02214076e23, -1.5e-31, 123456.789] {
            assert_eq!(fmt_number(x).parse::<f64>().unwrap(), x);
        }
    }

    #[test]
    fn unknown_key_is_named() {
        let err = RunConfig::case_study().set("crystal.radiu = 3 nm").unwrap_err();
        assert!(err.to_string().contains("crystal.radiu"));
        assert_eq!(err.exit_code(), 1);
    }

    #[test]
    fn unit_mismatch_is_named() {
        let mut cfg = RunConfig::case_study();
        let err = cfg.set("source.mass = 3 nm").unwrap_err();
        assert!(err.to_string().contains("source.mass"));
        assert!(err.to_string().contains("expected a mass"));
        assert!(cfg.set("source.mass = 3").is_err());
        assert!(cfg.set("beam.energy = 1 talbot").is_err());
    }

    #[test]
    fn invariants_are_checked() {
        let mut cfg = RunConfig::case_study();
        assert!(cfg.set("crystal.radius = -1 nm").is_err());
        assert!(cfg.set("mask.reflection = 0 0 0").is_err());
        cfg.set("mask.orders = 1 1").unwrap();
        let err = cfg.scenario().unwrap_err();
        assert!(err.to_string().contains("mask.orders"));

        let mut cfg = RunConfig::case_study();
        cfg.set("source.sigma_x = 1 pm").unwrap();
        assert!(cfg.scenario().unwrap_err().to_string().contains("source.sigma_p"));
        cfg.set("source.sigma_p = 1e-30 kg*m/s").unwrap();
        assert!(cfg.scenario().unwrap_err().to_string().contains("uncertainty"));
    }

    #[test]
    fn talbot_times_resolve() {
        let cfg = RunConfig::case_study();
        let s = cfg.scenario().unwrap();
        let tm = s.talbot_time().unwrap();
        assert_eq!(s.t0, Some(tm));
        assert_eq!(s.t, tm);
        assert_eq!(s.macro_time, 1e-3);
    }

    #[test]
    fn case_study_scenario_matches_library_preset() {
        let mut s = RunConfig::case_study().scenario().unwrap();
        let mut reference = Scenario::case_study();
        reference.t0 = s.t0;
        reference.t = s.t;
        assert!((s.trap_frequency / reference.trap_frequency - 1.0).abs() < 1e-15);
        s.trap_frequency = reference.trap_frequency;
        assert!((s.beam_energy / reference.beam_energy - 1.0).abs() < 1e-15);
        s.beam_energy = reference.beam_energy;
        assert_eq!(s, reference);
    }

    #[test]
    fn comments_and_bare_assignments() {
        let mut cfg = RunConfig::case_study();
        cfg.apply_text("# note\nmask.period 192 pm # trailing\n\n").unwrap();
        assert_eq!(cfg.optional_length("mask.period"), Some(192e-12));
        assert!(cfg.apply_text("grid.points = 64\ngrid.points = 65").is_err());
    }
}
