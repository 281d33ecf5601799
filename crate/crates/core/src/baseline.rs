//! Equal-coefficient benchmark: every user of a waveguide gets `P_n / M` and
//! only the waveguide power is minimized.
//!
//! With `alpha = 1/M` the user at one-based rank `m` has
//! `SINR = (P/M) / ((M-m) P/M + IIN) < 1/(M-m)`, so its rate can never reach
//! `W log2(1 + 1/(M-m))`. A requirement at or above that ceiling is
//! infeasible for any power.

use alloc::vec;
use alloc::vec::Vec;

use crate::channel::ChannelTable;
use crate::error::{Error, Result};
use crate::power::{
    cap_violations, decoding_order, iin, max_relative_change, AllocationState, DecodingOrder, RateRequirements,
    SolverOptions, Termination, UpdateSchedule,
};

#[derive(Debug, Clone, PartialEq)]
pub struct BaselineResult {
    /// `P_n` per waveguide at termination, watts.
    pub waveguide_powers: Vec<f64>,
    pub feasible: bool,
    /// Zero-based rank of the user whose requirement sets `P_n`.
    pub binding_rank: Vec<usize>,
    pub iterations: usize,
    pub terminated_by: Termination,
    /// `(waveguide, zero-based rank)` of a user above the equal-split rate ceiling.
    pub ceiling_violation: Option<(usize, usize)>,
    pub cap_violations: Vec<usize>,
    pub final_order: Vec<DecodingOrder>,
}

impl BaselineResult {
    /// Total power, or `None` when the baseline has no feasible allocation.
    pub fn total_power(&self) -> Option<f64> {
        self.feasible.then(|| self.waveguide_powers.iter().sum())
    }

    /// Per-user view `p_{n,m} = P_n / M`.
    pub fn state(&self, users_per_waveguide: usize) -> AllocationState {
        equal_state(&self.waveguide_powers, users_per_waveguide)
    }
}

fn equal_state(waveguide_powers: &[f64], users: usize) -> AllocationState {
    let mut s = AllocationState::zeros(waveguide_powers.len(), users);
    for (n, &p) in waveguide_powers.iter().enumerate() {
        for m in 0..users {
            s.set_power(n, m, p / users as f64);
        }
    }
    s
}

/// Smallest `P_n` meeting every user's rate under the equal split, given the
/// other waveguides' powers in `external`; returns `(P_n, binding rank)` or
/// the violating rank.
fn waveguide_equal_power(
    table: &ChannelTable,
    external: &AllocationState,
    order: &DecodingOrder,
    requirements: &RateRequirements,
    n: usize,
) -> core::result::Result<(f64, usize), usize> {
    let users = order.len();
    let mut best = (0.0, 0);
    for (rank, &user) in order.users().iter().enumerate() {
        let gamma = requirements.sinr_target(n, user);
        let decoded_later = (users - 1 - rank) as f64;
        let headroom = 1.0 - gamma * decoded_later;
        if headroom <= 0.0 {
            return Err(rank);
        }
        let need = users as f64 * gamma * iin(table, external, n, user) / headroom;
        if need > best.0 {
            best = (need, rank);
        }
    }
    Ok(best)
}

/// Runs the equal-coefficient baseline with the same outer iteration (order
/// from the previous pass, then per-waveguide update) as the main solver.
pub fn equal_power_solve(
    table: &ChannelTable,
    requirements: &RateRequirements,
    options: &SolverOptions,
) -> Result<BaselineResult> {
    let n_wg = table.num_waveguides();
    let m_users = table.users_per_waveguide();
    if (requirements.num_waveguides(), requirements.users_per_waveguide()) != (n_wg, m_users) {
        return Err(Error::ShapeMismatch {
            expected: (n_wg, m_users),
            found: (requirements.num_waveguides(), requirements.users_per_waveguide()),
        });
    }
    options.validate(n_wg)?;

    let mut powers = vec![options.initial_power * m_users as f64; n_wg];
    let mut binding_rank = vec![0; n_wg];
    let mut terminated_by = Termination::MaxIterations;
    let mut iterations = 0;
    for iteration in 1..=options.max_iterations {
        iterations = iteration;
        let state = equal_state(&powers, m_users);
        let orders: Vec<DecodingOrder> = (0..n_wg).map(|n| decoding_order(table, &state, n)).collect();
        let mut next = powers.clone();
        for (n, order) in orders.iter().enumerate() {
            let external = match options.schedule {
                UpdateSchedule::Sequential => equal_state(&next, m_users),
                UpdateSchedule::Jacobi => state.clone(),
            };
            match waveguide_equal_power(table, &external, order, requirements, n) {
                Ok((p, rank)) => {
                    next[n] = p;
                    binding_rank[n] = rank;
                }
                Err(rank) => {
                    return Ok(BaselineResult {
                        waveguide_powers: vec![f64::INFINITY; n_wg],
                        feasible: false,
                        binding_rank,
                        iterations,
                        terminated_by,
                        ceiling_violation: Some((n, rank)),
                        cap_violations: Vec::new(),
                        final_order: orders,
                    });
                }
            }
        }
        if next.iter().any(|p| !p.is_finite()) {
            return Err(Error::NumericalFailure { iteration });
        }
        let change = max_relative_change(&powers, &next);
        powers = next;
        if change <= options.tolerance {
            terminated_by = Termination::Tolerance;
            break;
        }
    }
    let state = equal_state(&powers, m_users);
    let final_order = (0..n_wg).map(|n| decoding_order(table, &state, n)).collect();
    let cap_violations = cap_violations(options.power_caps.as_deref(), powers.iter().copied());
    Ok(BaselineResult {
        feasible: terminated_by == Termination::Tolerance && cap_violations.is_empty(),
        waveguide_powers: powers,
        binding_rank,
        iterations,
        terminated_by,
        ceiling_violation: None,
        cap_violations,
        final_order,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::power::{evaluate_solution, fixed_point_solve};
    use approx::assert_relative_eq;

    #[test]
    fn single_user_matches_main_solver() {
        let t =
            ChannelTable::from_normalized(3, 1, vec![1e-5, 2e-5, 1.5e-5], |s, d, _, _| 0.02 + 0.01 * (s + d) as f64)
                .unwrap();
        let r = RateRequirements::uniform(3, 1, 10e6, 10e6).unwrap();
        let eq = equal_power_solve(&t, &r, &SolverOptions::default()).unwrap();
        let (state, _) = fixed_point_solve(&t, &r, &SolverOptions::default()).unwrap();
        assert!(eq.feasible);
        for n in 0..3 {
            assert_eq!(eq.waveguide_powers[n], state.waveguide_power(n));
        }
    }

    #[test]
    fn ceiling_reports_infeasibility() {
        let t = ChannelTable::from_normalized(1, 3, vec![1e-5; 3], |_, _, _, _| 0.0).unwrap();
        let r = RateRequirements::uniform(1, 3, 15e6, 10e6).unwrap();
        let gamma = r.sinr_target(0, 0);
        assert_relative_eq!(gamma * 2.0, 3.657, max_relative = 1e-3);
        let eq = equal_power_solve(&t, &r, &SolverOptions::default()).unwrap();
        assert!(!eq.feasible);
        assert_eq!(eq.ceiling_violation, Some((0, 0)));
        assert_eq!(eq.total_power(), None);

        // exactly on the ceiling: M=2, R = W gives gamma = 1 for the first rank
        let t = ChannelTable::from_normalized(1, 2, vec![1e-5; 2], |_, _, _, _| 0.0).unwrap();
        let r = RateRequirements::uniform(1, 2, 10e6, 10e6).unwrap();
        let eq = equal_power_solve(&t, &r, &SolverOptions::default()).unwrap();
        assert_eq!(eq.ceiling_violation, Some((0, 0)));
    }

    #[test]
    fn two_user_closed_form() {
        let t = ChannelTable::from_normalized(1, 2, vec![1e-5; 2], |_, _, _, _| 0.0).unwrap();
        // gamma = 0.5
        let rate = 10e6 * libm::log2(1.5);
        let r = RateRequirements::uniform(1, 2, rate, 10e6).unwrap();
        assert_relative_eq!(r.sinr_target(0, 0), 0.5, max_relative = 1e-14);
        let eq = equal_power_solve(&t, &r, &SolverOptions::default()).unwrap();
        assert!(eq.feasible);
        assert_relative_eq!(eq.waveguide_powers[0], 2e-5, max_relative = 1e-12);
        assert_eq!(eq.binding_rank, vec![0]);

        let rep = evaluate_solution(&t, &eq.state(2), &r, None).unwrap();
        assert!(rep.satisfies_rates());
        let first = rep.orders[0].user_at(0);
        assert_relative_eq!(rep.rate(0, first), rate, max_relative = 1e-9);
    }
}
