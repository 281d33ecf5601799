use std::fmt::Write as _;
use std::io::Write;

use anyhow::Context;
use pinch_noma::{
    evaluate_solution, fixed_point_solve, AllocationState, ConvergenceReport, Error, RateRequirements, SolutionReport,
    SolverOptions, Termination,
};

use crate::config::ScenarioConfig;
use crate::units::watts_to_dbm;

#[derive(Debug, Clone, PartialEq)]
pub enum Status {
    Feasible,
    /// Human-readable statement of the constraint that failed.
    Infeasible(String),
}

#[derive(Debug, Clone)]
pub struct Solved {
    pub state: AllocationState,
    pub report: ConvergenceReport,
    pub evaluation: SolutionReport,
}

#[derive(Debug, Clone)]
pub struct SolveOutcome {
    pub status: Status,
    /// Absent when the iteration diverged.
    pub solved: Option<Solved>,
    pub requirements: RateRequirements,
}

impl SolveOutcome {
    pub fn total_power(&self) -> Option<f64> {
        self.solved.as_ref().map(|s| s.state.total_power())
    }
}

pub fn run_solve(config: &ScenarioConfig) -> anyhow::Result<SolveOutcome> {
    let table = config.channel_table().context("building channel table")?;
    let requirements = config.requirements().context("rate requirements")?;
    let options = config.solver_options();
    let (state, report) = match fixed_point_solve(&table, &requirements, &options) {
        Ok(r) => r,
        Err(Error::NumericalFailure { iteration }) => {
            let mut why = format!("powers diverged at iteration {iteration}; rate targets unreachable");
            // name a cap if the last finite iterate already broke one
            if let (Some(caps), true) = (options.power_caps.as_deref(), iteration > 1) {
                let partial = SolverOptions { max_iterations: iteration - 1, ..options.clone() };
                let (state, report) = fixed_point_solve(&table, &requirements, &partial)?;
                if let Some(&n) = report.cap_violations.first() {
                    why =
                        format!("{} before the iteration diverged", cap_message(n, state.waveguide_power(n), caps[n]));
                }
            }
            return Ok(SolveOutcome { status: Status::Infeasible(why), solved: None, requirements });
        }
        Err(e) => return Err(e.into()),
    };
    let caps = options.power_caps.as_deref();
    let evaluation = evaluate_solution(&table, &state, &requirements, caps)?;

    let status = if let Some(&n) = report.cap_violations.first() {
        let cap = caps.map_or(f64::NAN, |c| c[n]);
        Status::Infeasible(cap_message(n, state.waveguide_power(n), cap))
    } else if report.terminated_by == Termination::MaxIterations {
        Status::Infeasible(format!("no fixed point within {} iterations", report.iterations_used))
    } else if let Some(&(n, m)) = evaluation.rate_violations.first() {
        Status::Infeasible(format!(
            "rate of user {m} on waveguide {n} is {:.6e} bit/s, below its target {:.6e} bit/s",
            evaluation.rate(n, m),
            requirements.min_rate(n, m)
        ))
    } else {
        Status::Feasible
    };
    Ok(SolveOutcome { status, solved: Some(Solved { state, report, evaluation }), requirements })
}

fn cap_message(n: usize, need: f64, cap: f64) -> String {
    format!(
        "waveguide {n} needs {need:.6e} W ({:.3} dBm), above its power cap {cap:.6e} W ({:.3} dBm)",
        watts_to_dbm(need),
        watts_to_dbm(cap)
    )
}

pub fn render_summary(config: &ScenarioConfig, outcome: &SolveOutcome) -> String {
    let mut s = String::new();
    let (n_wg, m_users) = (config.num_waveguides, config.users_per_waveguide);
    let _ = writeln!(s, "scenario: N={n_wg} M={m_users} D={} m d={} m", config.spacing, config.height);
    let Some(solved) = &outcome.solved else {
        let _ = writeln!(s, "feasible: no");
        return s;
    };
    let total = solved.state.total_power();
    let _ = writeln!(s, "total power: {total:.6e} W ({:.3} dBm)", watts_to_dbm(total));
    for n in 0..n_wg {
        let p = solved.state.waveguide_power(n);
        let alphas: Vec<String> = (0..m_users)
            .map(|m| solved.state.coefficient(n, m).map_or("-".to_string(), |a| format!("{a:.6}")))
            .collect();
        let _ = writeln!(s, "  P_{n} = {p:.6e} W ({:.3} dBm)  alpha = [{}]", watts_to_dbm(p), alphas.join(", "));
    }
    let _ = writeln!(s, "iterations: {}", solved.report.iterations_used);
    let _ = writeln!(s, "feasible: {}", if outcome.status == Status::Feasible { "yes" } else { "no" });
    s
}

pub const USER_CSV_HEADER: [&str; 8] =
    ["waveguide", "user", "rank", "power_w", "power_dbm", "coefficient", "rate_bps", "target_bps"];

/// One row per user with its achieved rate.
pub fn write_user_csv<W: Write>(outcome: &SolveOutcome, out: W) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(USER_CSV_HEADER)?;
    if let Some(solved) = &outcome.solved {
        let st = &solved.state;
        for n in 0..st.num_waveguides() {
            for m in 0..st.users_per_waveguide() {
                let p = st.power(n, m);
                w.write_record([
                    n.to_string(),
                    m.to_string(),
                    solved.evaluation.orders[n].rank_of(m).to_string(),
                    format!("{p:.16e}"),
                    format!("{:.16e}", watts_to_dbm(p)),
                    st.coefficient(n, m).map_or(String::new(), |a| format!("{a:.16e}")),
                    format!("{:.16e}", solved.evaluation.rate(n, m)),
                    format!("{:.16e}", outcome.requirements.min_rate(n, m)),
                ])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}
