//! Derived statistics over sweep CSV rows.

use std::fmt::Write as _;

use crate::sweep::{Method, Row, SweepParam};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Reduction {
    /// `1 - proposed / equal`.
    Finite(f64),
    /// The equal split cannot meet the targets at any power, so the
    /// reduction is total.
    EqualInfeasible,
}

impl Reduction {
    pub fn fraction(self) -> f64 {
        match self {
            Reduction::Finite(r) => r,
            Reduction::EqualInfeasible => 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Envelope {
    pub range: (f64, f64),
    /// Interior local maxima `(param, total)` of the proposed curve.
    pub maxima: Vec<(f64, f64)>,
    /// Largest local maximum in each of the equal-width windows; `None` for
    /// a window without one.
    pub window_peaks: Vec<((f64, f64), Option<f64>)>,
    pub nonincreasing: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryOptions {
    pub param: SweepParam,
    /// Threshold on the relative change between successive trace values.
    pub tolerance: f64,
    pub envelope_range: (f64, f64),
    pub envelope_windows: usize,
}

impl SummaryOptions {
    pub fn new(param: SweepParam) -> Self {
        Self { param, tolerance: 1e-10, envelope_range: (5.0, 40.0), envelope_windows: 5 }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Summary {
    /// `total / reference_total - 1` per shared param value (proposed rows).
    pub increase_over_reference: Vec<(f64, f64)>,
    /// `(from, to, total(to) / total(from) - 1)` between consecutive waveguide counts.
    pub consecutive_increase: Vec<(f64, f64, f64)>,
    pub reductions: Vec<(f64, Reduction)>,
    /// `(param, proposed / asymptote - 1)` at the largest param with both.
    pub asymptote_gap: Option<(f64, f64)>,
    pub envelope: Option<Envelope>,
    pub first_converged_iteration: Option<usize>,
}

fn curve(rows: &[Row], method: Method) -> Vec<(f64, f64)> {
    let mut c: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.method == method && r.feasible)
        .filter_map(|r| Some((r.param, r.total_power?)))
        .collect();
    c.sort_by(|a, b| a.0.total_cmp(&b.0));
    c
}

fn lookup(curve: &[(f64, f64)], param: f64) -> Option<f64> {
    curve.iter().find(|(p, _)| *p == param).map(|(_, v)| *v)
}

pub fn local_maxima(curve: &[(f64, f64)]) -> Vec<(f64, f64)> {
    curve.windows(3).filter(|w| w[1].1 > w[0].1 && w[1].1 >= w[2].1).map(|w| w[1]).collect()
}

pub fn envelope(curve: &[(f64, f64)], range: (f64, f64), windows: usize) -> Envelope {
    let inside: Vec<(f64, f64)> = curve.iter().copied().filter(|(p, _)| *p >= range.0 && *p <= range.1).collect();
    let maxima = local_maxima(&inside);
    let width = (range.1 - range.0) / windows as f64;
    let window_peaks: Vec<((f64, f64), Option<f64>)> = (0..windows)
        .map(|k| {
            let lo = range.0 + k as f64 * width;
            let hi = if k + 1 == windows { range.1 } else { lo + width };
            let last = k + 1 == windows;
            let peak = maxima
                .iter()
                .filter(|(p, _)| *p >= lo && (*p < hi || (last && *p <= hi)))
                .map(|(_, v)| *v)
                .reduce(f64::max);
            ((lo, hi), peak)
        })
        .collect();
    let peaks: Vec<f64> = window_peaks.iter().filter_map(|(_, p)| *p).collect();
    let nonincreasing = peaks.windows(2).all(|w| w[1] <= w[0]);
    Envelope { range, maxima, window_peaks, nonincreasing }
}

pub fn summarize(rows: &[Row], reference: Option<&[Row]>, options: &SummaryOptions) -> Summary {
    let proposed = curve(rows, Method::Proposed);
    let mut s = Summary::default();

    if let Some(reference) = reference {
        let base = curve(reference, Method::Proposed);
        s.increase_over_reference =
            proposed.iter().filter_map(|&(p, v)| lookup(&base, p).map(|b| (p, v / b - 1.0))).collect();
    }

    if options.param == SweepParam::NumWaveguides {
        s.consecutive_increase = proposed.windows(2).map(|w| (w[0].0, w[1].0, w[1].1 / w[0].1 - 1.0)).collect();
    }

    // equal rows without a total are ceiling violations, not missing data
    for r in rows.iter().filter(|r| r.method == Method::Equal) {
        let Some(p) = lookup(&proposed, r.param) else { continue };
        let red = match (r.total_power, r.feasible) {
            (Some(e), true) => Reduction::Finite(1.0 - p / e),
            (None, _) => Reduction::EqualInfeasible,
            (Some(_), false) => continue,
        };
        s.reductions.push((r.param, red));
    }
    s.reductions.sort_by(|a, b| a.0.total_cmp(&b.0));

    let asym = curve(rows, Method::Asymptote);
    s.asymptote_gap = proposed.iter().rev().find_map(|&(p, v)| lookup(&asym, p).map(|a| (p, v / a - 1.0)));

    if options.param == SweepParam::IntervalD {
        s.envelope = Some(envelope(&proposed, options.envelope_range, options.envelope_windows));
    }

    if options.param == SweepParam::Iterations {
        // every row of a trace, feasible or not
        let mut trace: Vec<(f64, f64)> = rows
            .iter()
            .filter(|r| r.method == Method::Proposed)
            .filter_map(|r| Some((r.param, r.total_power?)))
            .collect();
        trace.sort_by(|a, b| a.0.total_cmp(&b.0));
        s.first_converged_iteration =
            trace.windows(2).find(|w| ((w[1].1 - w[0].1) / w[0].1).abs() < options.tolerance).map(|w| w[1].0 as usize);
    }
    s
}

pub fn render(summary: &Summary) -> String {
    let mut out = String::new();
    for (p, r) in &summary.increase_over_reference {
        let _ = writeln!(out, "increase over reference at {p:e}: {:.2}%", 100.0 * r);
    }
    for (a, b, r) in &summary.consecutive_increase {
        let _ = writeln!(out, "increase N={a} -> N={b}: {:.2}%", 100.0 * r);
    }
    for (p, r) in &summary.reductions {
        match r {
            Reduction::Finite(f) => {
                let _ = writeln!(out, "reduction vs equal at {p:e}: {:.2}%", 100.0 * f);
            }
            Reduction::EqualInfeasible => {
                let _ = writeln!(out, "reduction vs equal at {p:e}: 100% (equal split infeasible)");
            }
        }
    }
    if let Some((p, g)) = summary.asymptote_gap {
        let _ = writeln!(out, "gap to asymptote at {p:e}: {:+.4}%", 100.0 * g);
    }
    if let Some(env) = &summary.envelope {
        let _ = writeln!(out, "local maxima in [{}, {}]: {}", env.range.0, env.range.1, env.maxima.len());
        for ((lo, hi), peak) in &env.window_peaks {
            match peak {
                Some(v) => {
                    let _ = writeln!(out, "  window [{lo:.3}, {hi:.3}]: peak {v:.6e} W");
                }
                None => {
                    let _ = writeln!(out, "  window [{lo:.3}, {hi:.3}]: no maximum");
                }
            }
        }
        let _ = writeln!(out, "envelope nonincreasing: {}", env.nonincreasing);
    }
    match summary.first_converged_iteration {
        Some(t) => {
            let _ = writeln!(out, "first iteration below tolerance: {t}");
        }
        None if out.is_empty() => {
            let _ = writeln!(out, "nothing to report");
        }
        None => {}
    }
    out
}
