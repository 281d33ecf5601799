use anyhow::{bail, Context};
use pinch_noma::oracle::{brute_force_partition, MAX_ORACLE_USERS};
use pinch_noma::{
    fixed_point_solve, ChannelTable, OracleGrid, OracleResult, PropertyReport, RateRequirements, SolverOptions,
};
use rayon::prelude::*;

#[derive(Debug, Clone)]
pub struct OracleCheck {
    pub fixed_point_total: f64,
    pub best: Option<OracleResult>,
    /// `2 * grid_resolution * N * M`.
    pub slack: f64,
    pub evaluations: u64,
}

impl OracleCheck {
    pub fn passed(&self) -> bool {
        self.best.as_ref().is_some_and(|b| (b.best_total_power - self.fixed_point_total).abs() <= self.slack)
    }
}

/// Grid search over every user's power, split across threads by the first
/// user's grid index. `upper` defaults to four times the largest fixed-point
/// user power.
pub fn oracle_check(
    table: &ChannelTable,
    requirements: &RateRequirements,
    options: &SolverOptions,
    upper: Option<f64>,
    points: usize,
) -> anyhow::Result<OracleCheck> {
    let users = table.num_waveguides() * table.users_per_waveguide();
    if users > MAX_ORACLE_USERS {
        bail!("grid search needs N*M <= {MAX_ORACLE_USERS}, got {users}");
    }
    let (state, report) = fixed_point_solve(table, requirements, options)?;
    if !report.feasible {
        bail!("fixed point not reached, nothing to compare against");
    }
    let upper = upper.unwrap_or_else(|| 4.0 * state.powers().iter().copied().fold(0.0, f64::max));
    let floor = (0..table.num_waveguides())
        .flat_map(|n| (0..table.users_per_waveguide()).map(move |m| (n, m)))
        .map(|(n, m)| table.normalized_noise(n, m))
        .fold(f64::INFINITY, f64::min);
    let grid = OracleGrid::logarithmic(floor / 10.0, upper, points).context("oracle grid")?;
    let parts: Vec<(Option<OracleResult>, u64)> = (0..grid.len())
        .into_par_iter()
        .map(|k| brute_force_partition(table, requirements, &grid, k..k + 1))
        .collect::<pinch_noma::Result<_>>()?;
    let evaluations = parts.iter().map(|(_, e)| e).sum();
    let best = parts.into_iter().filter_map(|(r, _)| r).reduce(OracleResult::better);
    let slack = best.as_ref().map_or(0.0, |b| 2.0 * b.grid_resolution * users as f64);
    Ok(OracleCheck { fixed_point_total: state.total_power(), best, slack, evaluations })
}

/// Largest relative per-user difference between fixed points reached from
/// two uniform starting powers.
pub fn uniqueness_gap(
    table: &ChannelTable,
    requirements: &RateRequirements,
    options: &SolverOptions,
    starts: (f64, f64),
) -> anyhow::Result<f64> {
    let solve = |p0| {
        let opts = SolverOptions { initial_power: p0, ..options.clone() };
        fixed_point_solve(table, requirements, &opts)
    };
    let (a, _) = solve(starts.0)?;
    let (b, _) = solve(starts.1)?;
    Ok(a.powers().iter().zip(b.powers()).map(|(x, y)| (x - y).abs() / x.abs().max(y.abs())).fold(0.0, f64::max))
}

#[derive(Debug, Clone)]
pub struct VerifyOutcome {
    pub oracle: Option<OracleCheck>,
    pub properties: PropertyReport,
    pub uniqueness_gap: f64,
}

impl VerifyOutcome {
    pub fn passed(&self, uniqueness_tolerance: f64) -> bool {
        self.oracle.as_ref().is_none_or(OracleCheck::passed)
            && self.properties.passed()
            && self.uniqueness_gap <= uniqueness_tolerance
    }
}
