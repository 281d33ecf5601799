//! Parameter sweeps. Points run in parallel; rows come back in parameter
//! order, then method order, so identical inputs give identical CSV bytes.

use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use anyhow::{anyhow, bail, Context};
use pinch_noma::{asymptotic_decoupled_power, equal_power_solve, evaluate_solution, fixed_point_solve, Error};
use rayon::prelude::*;

use crate::config::ScenarioConfig;
use crate::units::{parse_quantity, watts_to_dbm, Dimension};

pub const CSV_HEADER: [&str; 6] = ["param", "method", "total_power_w", "total_power_dbm", "iterations", "feasible"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParam {
    /// Total power after `t` passes, i.e. the solve capped at `t` iterations.
    Iterations,
    NumWaveguides,
    IntervalD,
    RateTarget,
}

impl SweepParam {
    pub fn name(self) -> &'static str {
        match self {
            SweepParam::Iterations => "iterations",
            SweepParam::NumWaveguides => "num_waveguides",
            SweepParam::IntervalD => "interval_D",
            SweepParam::RateTarget => "rate_target",
        }
    }

    fn dimension(self) -> Dimension {
        match self {
            SweepParam::Iterations | SweepParam::NumWaveguides => Dimension::Plain,
            SweepParam::IntervalD => Dimension::Length,
            SweepParam::RateTarget => Dimension::Rate,
        }
    }

    fn integral(self) -> bool {
        matches!(self, SweepParam::Iterations | SweepParam::NumWaveguides)
    }

    /// Values used when `--sweep` names the parameter without a range.
    pub fn default_values(self) -> Vec<f64> {
        match self {
            SweepParam::Iterations => (1..=15).map(f64::from).collect(),
            SweepParam::NumWaveguides => (1..=7).map(f64::from).collect(),
            SweepParam::IntervalD => arithmetic(1.0, 40.0, 0.25),
            SweepParam::RateTarget => vec![5e6, 10e6, 15e6],
        }
    }

    fn format_value(self, v: f64) -> String {
        if self.integral() {
            format!("{}", v as u64)
        } else {
            format!("{v:.16e}")
        }
    }
}

impl FromStr for SweepParam {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> anyhow::Result<Self> {
        Ok(match s {
            "iterations" => SweepParam::Iterations,
            "num_waveguides" | "N" => SweepParam::NumWaveguides,
            "interval_D" | "D" => SweepParam::IntervalD,
            "rate_target" | "rate" => SweepParam::RateTarget,
            other => bail!("unknown sweep parameter `{other}` (iterations, num_waveguides, interval_D, rate_target)"),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Method {
    Proposed,
    Equal,
    Asymptote,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Proposed => "proposed",
            Method::Equal => "equal",
            Method::Asymptote => "asymptote",
        })
    }
}

impl FromStr for Method {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> anyhow::Result<Self> {
        Ok(match s.trim() {
            "proposed" => Method::Proposed,
            "equal" => Method::Equal,
            "asymptote" => Method::Asymptote,
            other => bail!("unknown method `{other}` (proposed, equal, asymptote)"),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub param: SweepParam,
    pub values: Vec<f64>,
    pub methods: Vec<Method>,
}

impl SweepSpec {
    /// `sweep` is `PARAM`, `PARAM=start:stop:step`, `PARAM=v1,v2,...`, or
    /// `interval_D=zoom`; `methods` is a comma-separated list.
    pub fn parse(sweep: &str, methods: &str) -> anyhow::Result<Self> {
        let (name, values) = match sweep.split_once('=') {
            Some((n, v)) => (n.trim(), Some(v.trim())),
            None => (sweep.trim(), None),
        };
        let param: SweepParam = name.parse()?;
        let quantity = |t: &str| parse_quantity(t, param.dimension()).map_err(|e| anyhow!("--sweep {sweep}: {e}"));
        let values = match values {
            None => param.default_values(),
            Some("zoom") if param == SweepParam::IntervalD => arithmetic(37.5, 39.0, 0.01),
            Some(v) if v.contains(':') => {
                let parts: Vec<&str> = v.split(':').collect();
                let [start, stop, step] = parts[..] else {
                    bail!("--sweep {sweep}: range must be start:stop:step");
                };
                let (start, stop, step) = (quantity(start)?, quantity(stop)?, quantity(step)?);
                if !(step > 0.0) {
                    bail!("--sweep {sweep}: step must be positive");
                }
                arithmetic(start, stop, step)
            }
            Some(v) => v.split(',').map(quantity).collect::<anyhow::Result<_>>()?,
        };
        let methods = methods.split(',').map(str::parse).collect::<anyhow::Result<Vec<Method>>>()?;
        let spec = SweepSpec { param, values, methods };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        if self.values.is_empty() {
            bail!("sweep over {} has no values", self.param.name());
        }
        if self.values.windows(2).any(|w| !(w[1] > w[0])) {
            bail!("sweep values for {} must be strictly increasing", self.param.name());
        }
        if self.param.integral() && self.values.iter().any(|&v| v < 1.0 || v.fract() != 0.0) {
            bail!("{} takes positive integers", self.param.name());
        }
        if self.values.iter().any(|&v| !(v > 0.0)) {
            bail!("{} takes positive values", self.param.name());
        }
        if self.methods.is_empty() {
            bail!("no methods selected");
        }
        Ok(())
    }
}

/// `start, start + step, ...` up to `stop`, computed by index so the grid
/// does not drift.
fn arithmetic(start: f64, stop: f64, step: f64) -> Vec<f64> {
    let count = ((stop - start) / step + 1e-9).floor();
    if count < 0.0 {
        return Vec::new();
    }
    (0..=count as usize).map(|k| start + k as f64 * step).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub param: f64,
    pub method: Method,
    /// Empty when the method has no allocation at this point.
    pub total_power: Option<f64>,
    pub iterations: usize,
    /// Converged, within caps, and every rate re-checked against its target.
    pub feasible: bool,
}

pub fn config_at(base: &ScenarioConfig, param: SweepParam, value: f64) -> anyhow::Result<ScenarioConfig> {
    let mut c = base.clone();
    match param {
        SweepParam::Iterations => c.max_iterations = value as usize,
        SweepParam::NumWaveguides => c.num_waveguides = value as usize,
        SweepParam::IntervalD => c.spacing = value,
        SweepParam::RateTarget => c.rate = crate::config::RateSpec::Uniform(value),
    }
    c.validate()?;
    Ok(c)
}

/// Errors that make one point empty rather than failing the sweep.
fn point_failure(e: &Error) -> bool {
    matches!(e, Error::NumericalFailure { .. } | Error::VanishingGain { .. } | Error::SingularGeometry { .. })
}

pub fn evaluate_point(config: &ScenarioConfig, param: f64, method: Method) -> anyhow::Result<Row> {
    let empty = |iterations| Row { param, method, total_power: None, iterations, feasible: false };
    if method == Method::Asymptote {
        let total =
            asymptotic_decoupled_power(&config.requirements()?, config.height, &config.params()?, config.noise_power)?;
        return Ok(Row { param, method, total_power: Some(total), iterations: 0, feasible: true });
    }
    let table = match config.channel_table() {
        Ok(t) => t,
        Err(e) if point_failure(&e) => return Ok(empty(0)),
        Err(e) => return Err(e.into()),
    };
    let requirements = config.requirements()?;
    let options = config.solver_options();
    let caps = options.power_caps.as_deref();
    match method {
        Method::Proposed => match fixed_point_solve(&table, &requirements, &options) {
            Ok((state, report)) => {
                let eval = evaluate_solution(&table, &state, &requirements, caps)?;
                let feasible = report.feasible && eval.satisfies_rates() && eval.within_caps();
                Ok(Row {
                    param,
                    method,
                    total_power: Some(state.total_power()),
                    iterations: report.iterations_used,
                    feasible,
                })
            }
            Err(Error::NumericalFailure { iteration }) => Ok(empty(iteration)),
            Err(e) => Err(e.into()),
        },
        Method::Equal => match equal_power_solve(&table, &requirements, &options) {
            Ok(eq) if eq.ceiling_violation.is_some() => Ok(empty(eq.iterations)),
            Ok(eq) => {
                let state = eq.state(config.users_per_waveguide);
                let eval = evaluate_solution(&table, &state, &requirements, caps)?;
                let feasible = eq.feasible && eval.satisfies_rates() && eval.within_caps();
                Ok(Row { param, method, total_power: Some(state.total_power()), iterations: eq.iterations, feasible })
            }
            Err(Error::NumericalFailure { iteration }) => Ok(empty(iteration)),
            Err(e) => Err(e.into()),
        },
        Method::Asymptote => unreachable!(),
    }
}

pub fn run_sweep(config: &ScenarioConfig, spec: &SweepSpec) -> anyhow::Result<Vec<Row>> {
    spec.validate()?;
    let per_point: Vec<Vec<Row>> = spec
        .values
        .par_iter()
        .map(|&v| {
            let c = config_at(config, spec.param, v)
                .with_context(|| format!("{} = {}", spec.param.name(), spec.param.format_value(v)))?;
            spec.methods.iter().map(|&m| evaluate_point(&c, v, m)).collect::<anyhow::Result<Vec<Row>>>()
        })
        .collect::<anyhow::Result<_>>()?;
    Ok(per_point.into_iter().flatten().collect())
}

pub fn write_csv<W: Write>(rows: &[Row], param: SweepParam, out: W) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in rows {
        let (watts, dbm) = match r.total_power {
            Some(p) => (format!("{p:.16e}"), format!("{:.16e}", watts_to_dbm(p))),
            None => (String::new(), String::new()),
        };
        w.write_record([
            param.format_value(r.param),
            r.method.to_string(),
            watts,
            dbm,
            r.iterations.to_string(),
            r.feasible.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<R: Read>(input: R) -> anyhow::Result<Vec<Row>> {
    let mut reader = csv::Reader::from_reader(input);
    let header: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    if header != CSV_HEADER {
        bail!("unexpected header {header:?}; expected {}", CSV_HEADER.join(","));
    }
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        let line = i + 2;
        let field = |k: usize| record.get(k).unwrap_or("");
        let parse_f = |k: usize| -> anyhow::Result<f64> {
            field(k).parse().with_context(|| format!("line {line}: bad {} `{}`", CSV_HEADER[k], field(k)))
        };
        rows.push(Row {
            param: parse_f(0)?,
            method: field(1).parse().with_context(|| format!("line {line}"))?,
            total_power: if field(2).is_empty() { None } else { Some(parse_f(2)?) },
            iterations: field(4).parse().with_context(|| format!("line {line}: bad iterations"))?,
            feasible: field(5).parse().with_context(|| format!("line {line}: bad feasible flag"))?,
        });
    }
    Ok(rows)
}
