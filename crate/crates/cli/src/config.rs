//! Scenario configuration: built-in defaults, then a TOML file, then
//! `--set key=value` overrides.
//!
//! ```toml
//! N = 2
//! M = 2
//! D = "20m"
//! sigma2 = "-90dBm"
//! rate = "10Mbps"            # or one row per waveguide: [["5Mbps", "10Mbps"], ...]
//! feed = "shared-origin"     # or "per-waveguide-axis"
//! power_caps = "30dBm"       # optional; scalar or one per waveguide
//!
//! [solver]
//! max_iterations = 100
//! tolerance = 1e-10
//! schedule = "sequential"    # or "jacobi"
//! ```
//!
//! On the command line lists are comma separated and matrix rows are
//! separated by `;`, e.g. `--set rate=5Mbps,10Mbps;5Mbps,10Mbps`.

use std::fmt;
use std::path::{Path, PathBuf};

use pinch_noma::{
    build_channel_table, build_layout, derive_params, ChannelTable, FeedConvention, RateRequirements, SolverOptions,
    SystemLayout, UpdateSchedule, WaveguideParams,
};
use thiserror::Error;

use crate::units::{dbm_to_watts, parse_quantity, Dimension};

/// Where a setting came from, for error messages.
#[derive(Debug, Clone, PartialEq)]
pub enum Origin {
    Default,
    File { path: PathBuf, line: Option<usize> },
    Flag(String),
}

impl fmt::Display for Origin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Origin::Default => write!(f, "defaults"),
            Origin::File { path, line: Some(line) } => write!(f, "{}:{line}", path.display()),
            Origin::File { path, line: None } => write!(f, "{}", path.display()),
            Origin::Flag(flag) => write!(f, "--set {flag}"),
        }
    }
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{origin}: {message}")]
    Syntax { origin: Origin, message: String },
    #[error("{origin}: unknown key `{key}`")]
    UnknownKey { key: String, origin: Origin },
    #[error("{origin}: bad value for `{key}`: {reason}")]
    BadValue { key: String, origin: Origin, reason: String },
    #[error("--set {0}: expected key=value")]
    MalformedOverride(String),
    #[error("inconsistent scenario: {0}")]
    Inconsistent(String),
}

#[derive(Debug, Clone, PartialEq)]
pub enum RateSpec {
    Uniform(f64),
    /// One row of `M` targets per waveguide.
    PerUser(Vec<Vec<f64>>),
}

#[derive(Debug, Clone, PartialEq)]
pub enum CapSpec {
    Uniform(f64),
    PerWaveguide(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub num_waveguides: usize,
    pub users_per_waveguide: usize,
    /// `D`, meters.
    pub spacing: f64,
    /// `d`, meters.
    pub height: f64,
    pub carrier_frequency: f64,
    /// `lambda / lambda_g`.
    pub guided_ratio: f64,
    /// `sigma^2`, watts.
    pub noise_power: f64,
    pub bandwidth: f64,
    pub rate: RateSpec,
    pub feed: FeedConvention,
    pub power_caps: Option<CapSpec>,
    pub max_iterations: usize,
    pub tolerance: f64,
    pub initial_power: f64,
    pub schedule: UpdateSchedule,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            num_waveguides: 2,
            users_per_waveguide: 2,
            spacing: 20.0,
            height: 3.0,
            carrier_frequency: 28e9,
            guided_ratio: 1.4,
            noise_power: dbm_to_watts(-90.0),
            bandwidth: 10e6,
            rate: RateSpec::Uniform(10e6),
            feed: FeedConvention::SharedOrigin,
            power_caps: None,
            max_iterations: 100,
            tolerance: 1e-10,
            initial_power: 1e-9,
            schedule: UpdateSchedule::Sequential,
        }
    }
}

/// A value before it is interpreted for a particular key.
#[derive(Debug, Clone, PartialEq)]
enum Raw {
    Text(String),
    List(Vec<Raw>),
}

const KEYS: &[(&str, &[&str])] = &[
    ("num_waveguides", &["N"]),
    ("users_per_waveguide", &["M"]),
    ("spacing", &["D"]),
    ("height", &["d"]),
    ("carrier_frequency", &["fc"]),
    ("guided_ratio", &[]),
    ("noise_power", &["sigma2"]),
    ("bandwidth", &["W"]),
    ("rate", &[]),
    ("feed", &[]),
    ("power_caps", &[]),
    ("solver.max_iterations", &[]),
    ("solver.tolerance", &[]),
    ("solver.initial_power", &[]),
    ("solver.schedule", &[]),
];

fn canonical_key(key: &str) -> Option<&'static str> {
    KEYS.iter().find(|(name, aliases)| *name == key || aliases.contains(&key)).map(|(name, _)| *name)
}

impl ScenarioConfig {
    /// Defaults, then `path` if given, then each `key=value` in order.
    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<Self, ConfigError> {
        let mut config = match path {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|source| ConfigError::Io { path: path.to_path_buf(), source })?;
                Self::from_toml_str(&text, path)?
            }
            None => Self::default(),
        };
        for kv in overrides {
            config.apply_override(kv)?;
        }
        config.validate()?;
        Ok(config)
    }

    /// Defaults overlaid with a TOML document; `path` only labels errors.
    pub fn from_toml_str(text: &str, path: &Path) -> Result<Self, ConfigError> {
        let doc: toml::Table = text.parse().map_err(|e: toml::de::Error| ConfigError::Syntax {
            origin: Origin::File { path: path.to_path_buf(), line: e.span().map(|s| line_at(text, s.start)) },
            message: e.message().to_string(),
        })?;
        let mut config = Self::default();
        let mut entries = Vec::new();
        flatten("", &doc, &mut entries);
        for (key, value) in entries {
            let origin = Origin::File { path: path.to_path_buf(), line: line_of_key(text, &key) };
            let raw = raw_from_toml(&value).ok_or_else(|| ConfigError::BadValue {
                key: key.clone(),
                origin: origin.clone(),
                reason: format!("unsupported value {value}"),
            })?;
            config.set(&key, raw, origin)?;
        }
        Ok(config)
    }

    pub fn apply_override(&mut self, kv: &str) -> Result<(), ConfigError> {
        let (key, value) = kv.split_once('=').ok_or_else(|| ConfigError::MalformedOverride(kv.to_string()))?;
        let key = key.trim();
        if key.is_empty() {
            return Err(ConfigError::MalformedOverride(kv.to_string()));
        }
        self.set(key, raw_from_flag(value), Origin::Flag(kv.to_string()))
    }

    fn set(&mut self, key: &str, raw: Raw, origin: Origin) -> Result<(), ConfigError> {
        let name = canonical_key(key)
            .ok_or_else(|| ConfigError::UnknownKey { key: key.to_string(), origin: origin.clone() })?;
        let bad = |reason: String| ConfigError::BadValue { key: key.to_string(), origin: origin.clone(), reason };
        let scalar = |dim: Dimension| -> Result<f64, ConfigError> {
            match &raw {
                Raw::Text(t) => positive_quantity(t, dim).map_err(bad),
                Raw::List(_) => Err(bad("expected a single value".into())),
            }
        };
        match name {
            "num_waveguides" => self.num_waveguides = count(&raw).map_err(bad)?,
            "users_per_waveguide" => self.users_per_waveguide = count(&raw).map_err(bad)?,
            "spacing" => self.spacing = scalar(Dimension::Length)?,
            "height" => self.height = scalar(Dimension::Length)?,
            "carrier_frequency" => self.carrier_frequency = scalar(Dimension::Frequency)?,
            "guided_ratio" => self.guided_ratio = scalar(Dimension::Plain)?,
            "noise_power" => self.noise_power = scalar(Dimension::Power)?,
            "bandwidth" => self.bandwidth = scalar(Dimension::Frequency)?,
            "rate" => {
                self.rate = match &raw {
                    Raw::Text(t) => RateSpec::Uniform(positive_quantity(t, Dimension::Rate).map_err(bad)?),
                    Raw::List(rows) => RateSpec::PerUser(
                        rows.iter()
                            .map(|row| match row {
                                Raw::List(cells) => cells
                                    .iter()
                                    .map(|c| match c {
                                        Raw::Text(t) => positive_quantity(t, Dimension::Rate),
                                        Raw::List(_) => Err("rate matrix nested too deeply".into()),
                                    })
                                    .collect(),
                                Raw::Text(_) => Err("rate list must hold one row per waveguide".into()),
                            })
                            .collect::<Result<_, String>>()
                            .map_err(bad)?,
                    ),
                }
            }
            "feed" => {
                self.feed = match text(&raw).map_err(bad)? {
                    "shared-origin" => FeedConvention::SharedOrigin,
                    "per-waveguide-axis" => FeedConvention::PerWaveguideAxis,
                    other => return Err(bad(format!("`{other}` (expected shared-origin or per-waveguide-axis)"))),
                }
            }
            "power_caps" => {
                self.power_caps = Some(match &raw {
                    Raw::Text(t) => CapSpec::Uniform(positive_quantity(t, Dimension::Power).map_err(bad)?),
                    Raw::List(items) => CapSpec::PerWaveguide(
                        items
                            .iter()
                            .map(|c| match c {
                                Raw::Text(t) => positive_quantity(t, Dimension::Power),
                                Raw::List(_) => Err("expected one cap per waveguide".into()),
                            })
                            .collect::<Result<_, String>>()
                            .map_err(bad)?,
                    ),
                })
            }
            "solver.max_iterations" => self.max_iterations = count(&raw).map_err(bad)?,
            "solver.tolerance" => self.tolerance = scalar(Dimension::Plain)?,
            "solver.initial_power" => self.initial_power = scalar(Dimension::Power)?,
            "solver.schedule" => {
                self.schedule = match text(&raw).map_err(bad)? {
                    "sequential" => UpdateSchedule::Sequential,
                    "jacobi" => UpdateSchedule::Jacobi,
                    other => return Err(bad(format!("`{other}` (expected sequential or jacobi)"))),
                }
            }
            _ => unreachable!("every canonical key is handled"),
        }
        Ok(())
    }

    /// Shape checks that need the final `N` and `M`.
    pub fn validate(&self) -> Result<(), ConfigError> {
        if let RateSpec::PerUser(rows) = &self.rate {
            if rows.len() != self.num_waveguides || rows.iter().any(|r| r.len() != self.users_per_waveguide) {
                return Err(ConfigError::Inconsistent(format!(
                    "rate matrix must be {}x{} (one row per waveguide)",
                    self.num_waveguides, self.users_per_waveguide
                )));
            }
        }
        if let Some(CapSpec::PerWaveguide(caps)) = &self.power_caps {
            if caps.len() != self.num_waveguides {
                return Err(ConfigError::Inconsistent(format!(
                    "{} power caps given for {} waveguides",
                    caps.len(),
                    self.num_waveguides
                )));
            }
        }
        Ok(())
    }

    pub fn layout(&self) -> pinch_noma::Result<SystemLayout> {
        build_layout(self.num_waveguides, self.users_per_waveguide, self.spacing, self.height, self.feed)
    }

    pub fn params(&self) -> pinch_noma::Result<WaveguideParams> {
        derive_params(self.carrier_frequency, self.guided_ratio)
    }

    pub fn channel_table(&self) -> pinch_noma::Result<ChannelTable> {
        build_channel_table(&self.layout()?, &self.params()?, self.noise_power)
    }

    pub fn requirements(&self) -> pinch_noma::Result<RateRequirements> {
        let (n, m) = (self.num_waveguides, self.users_per_waveguide);
        match &self.rate {
            RateSpec::Uniform(r) => RateRequirements::uniform(n, m, *r, self.bandwidth),
            RateSpec::PerUser(rows) => RateRequirements::new(n, m, rows.concat(), self.bandwidth),
        }
    }

    pub fn caps(&self) -> Option<Vec<f64>> {
        self.power_caps.as_ref().map(|c| match c {
            CapSpec::Uniform(v) => vec![*v; self.num_waveguides],
            CapSpec::PerWaveguide(v) => v.clone(),
        })
    }

    pub fn solver_options(&self) -> SolverOptions {
        SolverOptions {
            max_iterations: self.max_iterations,
            tolerance: self.tolerance,
            initial_power: self.initial_power,
            power_caps: self.caps(),
            schedule: self.schedule,
        }
    }
}

fn positive_quantity(text: &str, dim: Dimension) -> Result<f64, String> {
    let v = parse_quantity(text, dim).map_err(|e| e.to_string())?;
    if v > 0.0 {
        Ok(v)
    } else {
        Err(format!("`{text}` must be strictly positive"))
    }
}

fn count(raw: &Raw) -> Result<usize, String> {
    let t = text(raw)?;
    match t.parse::<usize>() {
        Ok(0) => Err("must be at least 1".into()),
        Ok(v) => Ok(v),
        Err(_) => Err(format!("`{t}` is not a positive integer")),
    }
}

fn text(raw: &Raw) -> Result<&str, String> {
    match raw {
        Raw::Text(t) => Ok(t.trim()),
        Raw::List(_) => Err("expected a single value".into()),
    }
}

fn raw_from_flag(value: &str) -> Raw {
    let split = |s: &str| Raw::List(s.split(',').map(|c| Raw::Text(c.trim().to_string())).collect());
    if value.contains(';') {
        Raw::List(value.split(';').map(split).collect())
    } else if value.contains(',') {
        split(value)
    } else {
        Raw::Text(value.trim().to_string())
    }
}

fn raw_from_toml(value: &toml::Value) -> Option<Raw> {
    match value {
        toml::Value::String(s) => Some(Raw::Text(s.clone())),
        toml::Value::Integer(i) => Some(Raw::Text(i.to_string())),
        toml::Value::Float(f) => Some(Raw::Text(f.to_string())),
        toml::Value::Array(items) => items.iter().map(raw_from_toml).collect::<Option<_>>().map(Raw::List),
        _ => None,
    }
}

fn flatten(prefix: &str, table: &toml::Table, out: &mut Vec<(String, toml::Value)>) {
    for (k, v) in table {
        let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
        match v {
            toml::Value::Table(inner) => flatten(&key, inner, out),
            other => out.push((key, other.clone())),
        }
    }
}

fn line_at(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

/// One-based line on which a (possibly dotted) key is assigned.
fn line_of_key(text: &str, dotted: &str) -> Option<usize> {
    let (section, leaf) = dotted.rsplit_once('.').unwrap_or(("", dotted));
    let mut current = String::new();
    for (i, line) in text.lines().enumerate() {
        let t = line.trim();
        if let Some(header) = t.strip_prefix('[').and_then(|h| h.strip_suffix(']')) {
            current = header.trim().to_string();
            continue;
        }
        let assigned = t.strip_prefix(leaf).is_some_and(|rest| rest.trim_start().starts_with('='));
        if assigned && current == section {
            return Some(i + 1);
        }
    }
    None
}
