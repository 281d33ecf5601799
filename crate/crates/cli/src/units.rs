//! Quantities with unit suffixes, as accepted in config files and `--set`.
//!
//! A bare number is taken in the SI base unit of its dimension (watts,
//! hertz, bits per second, meters). Suffixes are case-sensitive, so `mW`
//! and `MW` are different things.

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dimension {
    Power,
    Frequency,
    Rate,
    Length,
    Plain,
}

impl Dimension {
    fn suffixes(self) -> &'static [(&'static str, Scale)] {
        use Scale::*;
        match self {
            Dimension::Power => {
                &[("dBm", DbMilli), ("dBW", Db), ("mW", Linear(1e-3)), ("uW", Linear(1e-6)), ("W", Linear(1.0))]
            }
            Dimension::Frequency => {
                &[("GHz", Linear(1e9)), ("MHz", Linear(1e6)), ("kHz", Linear(1e3)), ("Hz", Linear(1.0))]
            }
            Dimension::Rate => {
                &[("Gbps", Linear(1e9)), ("Mbps", Linear(1e6)), ("kbps", Linear(1e3)), ("bps", Linear(1.0))]
            }
            Dimension::Length => &[("km", Linear(1e3)), ("cm", Linear(1e-2)), ("mm", Linear(1e-3)), ("m", Linear(1.0))],
            Dimension::Plain => &[],
        }
    }

    fn name(self) -> &'static str {
        match self {
            Dimension::Power => "power",
            Dimension::Frequency => "frequency",
            Dimension::Rate => "rate",
            Dimension::Length => "length",
            Dimension::Plain => "number",
        }
    }
}

#[derive(Debug, Clone, Copy)]
enum Scale {
    Linear(f64),
    Db,
    DbMilli,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum UnitError {
    #[error("`{text}` is not a {dimension} (expected a number with one of: {expected})")]
    Malformed { text: String, dimension: &'static str, expected: String },
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

pub fn watts_to_dbm(watts: f64) -> f64 {
    10.0 * watts.log10() + 30.0
}

/// Parses `text` as a quantity of the given dimension, returning SI units.
pub fn parse_quantity(text: &str, dimension: Dimension) -> Result<f64, UnitError> {
    let trimmed = text.trim();
    let malformed = || UnitError::Malformed {
        text: text.to_string(),
        dimension: dimension.name(),
        expected: if dimension == Dimension::Plain {
            "no suffix".to_string()
        } else {
            dimension.suffixes().iter().map(|(s, _)| *s).collect::<Vec<_>>().join(", ")
        },
    };
    let (number, scale) = dimension
        .suffixes()
        .iter()
        .find_map(|&(suffix, scale)| trimmed.strip_suffix(suffix).map(|rest| (rest.trim_end(), scale)))
        .unwrap_or((trimmed, Scale::Linear(1.0)));
    let value: f64 = number.parse().map_err(|_| malformed())?;
    if !value.is_finite() {
        return Err(malformed());
    }
    Ok(match scale {
        Scale::Linear(k) => value * k,
        Scale::Db => 10f64.powf(value / 10.0),
        Scale::DbMilli => dbm_to_watts(value),
    })
}
