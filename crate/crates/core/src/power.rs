//! Decoding order, SINR/rate evaluation and the minimum-power fixed-point
//! iteration.
//!
//! Per-user powers `p_{n,m}` are the primary variables. The waveguide power
//! `P_n = sum_m p_{n,m}` and the coefficients `alpha_{n,m} = p_{n,m} / P_n` are
//! derived views, so the coefficient simplex constraints hold by construction.
//!
//! Within a waveguide the users are decoded in the order given by
//! [`DecodingOrder`]: rank 0 is decoded first and treats every later-ranked
//! user's signal as interference; the last rank sees no intra-waveguide
//! interference at all.

use alloc::vec;
use alloc::vec::Vec;

use crate::channel::ChannelTable;
use crate::error::{positive, Error, Result};

/// Relative rate shortfall below which a requirement counts as met.
pub const RATE_RELATIVE_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct AllocationState {
    num_waveguides: usize,
    users_per_waveguide: usize,
    powers: Vec<f64>,
}

impl AllocationState {
    /// `powers` is row-major `N x M`, in watts.
    pub fn new(num_waveguides: usize, users_per_waveguide: usize, powers: Vec<f64>) -> Result<Self> {
        if powers.len() != num_waveguides * users_per_waveguide {
            return Err(Error::ShapeMismatch {
                expected: (num_waveguides, users_per_waveguide),
                found: (powers.len() / users_per_waveguide.max(1), powers.len() % users_per_waveguide.max(1)),
            });
        }
        if let Some(&bad) = powers.iter().find(|p| !(**p >= 0.0 && p.is_finite())) {
            return Err(Error::InvalidArgument { name: "power", value: bad });
        }
        Ok(Self { num_waveguides, users_per_waveguide, powers })
    }

    pub fn uniform(num_waveguides: usize, users_per_waveguide: usize, power: f64) -> Self {
        Self { num_waveguides, users_per_waveguide, powers: vec![power; num_waveguides * users_per_waveguide] }
    }

    pub fn zeros(num_waveguides: usize, users_per_waveguide: usize) -> Self {
        Self::uniform(num_waveguides, users_per_waveguide, 0.0)
    }

    pub fn num_waveguides(&self) -> usize {
        self.num_waveguides
    }

    pub fn users_per_waveguide(&self) -> usize {
        self.users_per_waveguide
    }

    pub fn power(&self, n: usize, m: usize) -> f64 {
        self.powers[n * self.users_per_waveguide + m]
    }

    pub fn set_power(&mut self, n: usize, m: usize, p: f64) {
        self.powers[n * self.users_per_waveguide + m] = p;
    }

    pub fn powers(&self) -> &[f64] {
        &self.powers
    }

    pub fn waveguide_powers_of(&self, n: usize) -> &[f64] {
        let m = self.users_per_waveguide;
        &self.powers[n * m..(n + 1) * m]
    }

    /// `P_n`.
    pub fn waveguide_power(&self, n: usize) -> f64 {
        self.waveguide_powers_of(n).iter().sum()
    }

    /// `alpha_{n,m}`, or `None` for an inactive waveguide (`P_n = 0`).
    pub fn coefficient(&self, n: usize, m: usize) -> Option<f64> {
        let total = self.waveguide_power(n);
        (total > 0.0).then(|| self.power(n, m) / total)
    }

    pub fn total_power(&self) -> f64 {
        self.powers.iter().sum()
    }

    pub fn scaled(&self, beta: f64) -> AllocationState {
        AllocationState { powers: self.powers.iter().map(|p| p * beta).collect(), ..self.clone() }
    }

    fn shape(&self) -> (usize, usize) {
        (self.num_waveguides, self.users_per_waveguide)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateRequirements {
    num_waveguides: usize,
    users_per_waveguide: usize,
    min_rates: Vec<f64>,
    bandwidth: f64,
}

impl RateRequirements {
    /// `min_rates` is row-major `N x M` in bits/s; `bandwidth` in Hz.
    pub fn new(num_waveguides: usize, users_per_waveguide: usize, min_rates: Vec<f64>, bandwidth: f64) -> Result<Self> {
        if num_waveguides == 0 || users_per_waveguide == 0 {
            return Err(Error::InvalidArgument { name: "requirements size", value: 0.0 });
        }
        if min_rates.len() != num_waveguides * users_per_waveguide {
            return Err(Error::ShapeMismatch {
                expected: (num_waveguides, users_per_waveguide),
                found: (min_rates.len() / users_per_waveguide, min_rates.len() % users_per_waveguide),
            });
        }
        positive("bandwidth", bandwidth)?;
        for &r in &min_rates {
            positive("min_rate", r)?;
        }
        Ok(Self { num_waveguides, users_per_waveguide, min_rates, bandwidth })
    }

    pub fn uniform(num_waveguides: usize, users_per_waveguide: usize, rate: f64, bandwidth: f64) -> Result<Self> {
        Self::new(num_waveguides, users_per_waveguide, vec![rate; num_waveguides * users_per_waveguide], bandwidth)
    }

    pub fn num_waveguides(&self) -> usize {
        self.num_waveguides
    }

    pub fn users_per_waveguide(&self) -> usize {
        self.users_per_waveguide
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    pub fn min_rate(&self, n: usize, m: usize) -> f64 {
        self.min_rates[n * self.users_per_waveguide + m]
    }

    /// SINR needed to reach the minimum rate: `2^(R/W) - 1`.
    pub fn sinr_target(&self, n: usize, m: usize) -> f64 {
        libm::exp2(self.min_rate(n, m) / self.bandwidth) - 1.0
    }

    fn shape(&self) -> (usize, usize) {
        (self.num_waveguides, self.users_per_waveguide)
    }
}

/// SIC order of one waveguide: `users()[rank]` is the user decoded at `rank`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecodingOrder(Vec<usize>);

impl DecodingOrder {
    /// Stable ascending sort of `keys`; equal keys keep ascending user index.
    pub fn from_keys(keys: &[f64]) -> DecodingOrder {
        let mut users: Vec<usize> = (0..keys.len()).collect();
        users.sort_by(|&a, &b| keys[a].total_cmp(&keys[b]));
        DecodingOrder(users)
    }

    pub fn from_permutation(users: Vec<usize>) -> Result<DecodingOrder> {
        let mut seen = vec![false; users.len()];
        for &u in &users {
            if u >= users.len() || seen[u] {
                return Err(Error::InvalidIndex { what: "decoding order entry", index: u, bound: users.len() });
            }
            seen[u] = true;
        }
        Ok(DecodingOrder(users))
    }

    pub fn identity(users_per_waveguide: usize) -> DecodingOrder {
        DecodingOrder((0..users_per_waveguide).collect())
    }

    pub fn users(&self) -> &[usize] {
        &self.0
    }

    pub fn user_at(&self, rank: usize) -> usize {
        self.0[rank]
    }

    pub fn rank_of(&self, user: usize) -> usize {
        self.0.iter().position(|&u| u == user).expect("user not in decoding order")
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Normalized inter-waveguide interference plus noise seen by user `(n, m)`.
/// Only the powers of waveguides other than `n` are read from `state`.
pub fn iin(table: &ChannelTable, state: &AllocationState, n: usize, m: usize) -> f64 {
    let users = table.users_per_waveguide();
    let row = table.cross_row(n, m);
    let mut total = 0.0;
    for src in (0..table.num_waveguides()).filter(|&s| s != n) {
        let gains = &row[src * users..(src + 1) * users];
        let powers = state.waveguide_powers_of(src);
        total += gains.iter().zip(powers).map(|(g, p)| g * p).sum::<f64>();
    }
    total + table.normalized_noise(n, m)
}

/// Own power over normalized inter-waveguide interference plus noise.
pub fn nsiinr(table: &ChannelTable, state: &AllocationState, n: usize, m: usize) -> f64 {
    state.power(n, m) / iin(table, state, n, m)
}

/// Decoding order of waveguide `n` given the other waveguides' powers.
///
/// Users are ranked by ascending `P_n / IIN_{n,m}`, i.e. by their own-power
/// ratio with the waveguide's common transmit power in the numerator. Every
/// user of a waveguide hears the same superposed signal, so the SIC order is
/// a property of the normalized channel, not of the split between users. The
/// common factor `P_n` drops out, leaving a sort on `1 / IIN`.
pub fn decoding_order(table: &ChannelTable, state: &AllocationState, n: usize) -> DecodingOrder {
    let keys: Vec<f64> = (0..table.users_per_waveguide()).map(|m| 1.0 / iin(table, state, n, m)).collect();
    DecodingOrder::from_keys(&keys)
}

/// SINR and rate (bits/s) of the user at `rank` in waveguide `n`.
pub fn sinr_and_rate(
    table: &ChannelTable,
    state: &AllocationState,
    order: &DecodingOrder,
    n: usize,
    rank: usize,
    bandwidth: f64,
) -> (f64, f64) {
    let user = order.user_at(rank);
    let intra: f64 = order.users()[rank + 1..].iter().map(|&u| state.power(n, u)).sum();
    let sinr = state.power(n, user) / (intra + iin(table, state, n, user));
    (sinr, bandwidth * libm::log2(1.0 + sinr))
}

/// Minimum per-user powers on waveguide `n` (indexed by user, not rank) for
/// the given order and fixed external powers: back-substitution from the
/// last-decoded user down to the first, each meeting its rate with equality.
pub fn waveguide_min_powers(
    table: &ChannelTable,
    external: &AllocationState,
    order: &DecodingOrder,
    requirements: &RateRequirements,
    n: usize,
) -> Vec<f64> {
    let mut powers = vec![0.0; table.users_per_waveguide()];
    let mut later = 0.0;
    for &user in order.users().iter().rev() {
        let p = requirements.sinr_target(n, user) * (later + iin(table, external, n, user));
        powers[user] = p;
        later += p;
    }
    powers
}

/// The per-user update map with the decoding orders held fixed:
/// `f_{n,o_m}(P) = gamma_{n,o_m} (sum_{j>m} p_{n,o_j} + IIN_{n,o_m}(P))`.
///
/// It is affine in `P` with a strictly positive constant term, which is what
/// makes it positive, monotone and scalable.
pub fn standard_interference(
    table: &ChannelTable,
    requirements: &RateRequirements,
    orders: &[DecodingOrder],
    state: &AllocationState,
) -> AllocationState {
    let mut out = AllocationState::zeros(state.num_waveguides, state.users_per_waveguide);
    for (n, order) in orders.iter().enumerate() {
        for (rank, &user) in order.users().iter().enumerate() {
            let later: f64 = order.users()[rank + 1..].iter().map(|&u| state.power(n, u)).sum();
            let value = requirements.sinr_target(n, user) * (later + iin(table, state, n, user));
            out.set_power(n, user, value);
        }
    }
    out
}

/// How the waveguides see each other's updates within one iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum UpdateSchedule {
    /// Waveguides are processed in index order and each one sees the powers
    /// already updated earlier in the same pass.
    #[default]
    Sequential,
    /// Every waveguide sees only the previous iteration's powers.
    Jacobi,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverOptions {
    pub max_iterations: usize,
    /// Stop once the largest relative per-user power change is at most this.
    pub tolerance: f64,
    /// Uniform starting power for every user, in watts.
    pub initial_power: f64,
    /// Optional per-waveguide caps `P_n <= cap_n`.
    pub power_caps: Option<Vec<f64>>,
    pub schedule: UpdateSchedule,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            max_iterations: 100,
            tolerance: 1e-10,
            initial_power: 1e-9,
            power_caps: None,
            schedule: UpdateSchedule::Sequential,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self, num_waveguides: usize) -> Result<()> {
        if self.max_iterations == 0 {
            return Err(Error::InvalidArgument { name: "max_iterations", value: 0.0 });
        }
        positive("tolerance", self.tolerance)?;
        positive("initial_power", self.initial_power)?;
        if let Some(caps) = &self.power_caps {
            if caps.len() != num_waveguides {
                return Err(Error::ShapeMismatch { expected: (num_waveguides, 1), found: (caps.len(), 1) });
            }
            for &c in caps {
                if !(c > 0.0) {
                    return Err(Error::InvalidArgument { name: "power_cap", value: c });
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    Tolerance,
    MaxIterations,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub iterations_used: usize,
    /// Total power after each full pass.
    pub total_power_trace: Vec<f64>,
    pub terminated_by: Termination,
    pub final_order: Vec<DecodingOrder>,
    /// Waveguides whose power exceeds their cap at termination.
    pub cap_violations: Vec<usize>,
    pub feasible: bool,
}

fn check_shapes(table: &ChannelTable, requirements: &RateRequirements) -> Result<()> {
    let expected = (table.num_waveguides(), table.users_per_waveguide());
    if requirements.shape() != expected {
        return Err(Error::ShapeMismatch { expected, found: requirements.shape() });
    }
    Ok(())
}

pub(crate) fn max_relative_change(old: &[f64], new: &[f64]) -> f64 {
    old.iter()
        .zip(new)
        .map(|(&a, &b)| {
            let scale = libm::fmax(libm::fabs(a), libm::fabs(b));
            if scale == 0.0 {
                0.0
            } else {
                libm::fabs(b - a) / scale
            }
        })
        .fold(0.0, libm::fmax)
}

pub(crate) fn cap_violations(caps: Option<&[f64]>, waveguide_powers: impl Iterator<Item = f64>) -> Vec<usize> {
    match caps {
        None => Vec::new(),
        Some(caps) => waveguide_powers.zip(caps).enumerate().filter(|(_, (p, cap))| p > *cap).map(|(n, _)| n).collect(),
    }
}

/// Iterates ranking and back-substitution until no user's power moves by
/// more than `options.tolerance` (relative) or `max_iterations` passes ran.
///
/// Each pass ranks every waveguide's users from the previous pass's powers,
/// then recomputes each waveguide's minimum powers for that order. An
/// infeasible outcome (cap exceeded, or no convergence) is reported through
/// `ConvergenceReport::feasible`, not as an error.
pub fn fixed_point_solve(
    table: &ChannelTable,
    requirements: &RateRequirements,
    options: &SolverOptions,
) -> Result<(AllocationState, ConvergenceReport)> {
    check_shapes(table, requirements)?;
    options.validate(table.num_waveguides())?;
    let n_wg = table.num_waveguides();
    let m_users = table.users_per_waveguide();

    let mut state = AllocationState::uniform(n_wg, m_users, options.initial_power);
    let mut trace = Vec::new();
    let mut terminated_by = Termination::MaxIterations;
    for iteration in 1..=options.max_iterations {
        let orders: Vec<DecodingOrder> = (0..n_wg).map(|n| decoding_order(table, &state, n)).collect();
        let mut next = state.clone();
        for (n, order) in orders.iter().enumerate() {
            let external = match options.schedule {
                UpdateSchedule::Sequential => &next,
                UpdateSchedule::Jacobi => &state,
            };
            let powers = waveguide_min_powers(table, external, order, requirements, n);
            for (m, p) in powers.into_iter().enumerate() {
                next.set_power(n, m, p);
            }
        }
        if next.powers.iter().any(|p| !p.is_finite()) {
            return Err(Error::NumericalFailure { iteration });
        }
        trace.push(next.total_power());
        let change = max_relative_change(&state.powers, &next.powers);
        state = next;
        if change <= options.tolerance {
            terminated_by = Termination::Tolerance;
            break;
        }
    }

    let final_order = (0..n_wg).map(|n| decoding_order(table, &state, n)).collect();
    let cap_violations = cap_violations(options.power_caps.as_deref(), (0..n_wg).map(|n| state.waveguide_power(n)));
    let feasible = terminated_by == Termination::Tolerance && cap_violations.is_empty();
    let report = ConvergenceReport {
        iterations_used: trace.len(),
        total_power_trace: trace,
        terminated_by,
        final_order,
        cap_violations,
        feasible,
    };
    Ok((state, report))
}

/// Rates and constraint residuals of an arbitrary state, with orders
/// recomputed from the state itself.
#[derive(Debug, Clone, PartialEq)]
pub struct SolutionReport {
    pub orders: Vec<DecodingOrder>,
    /// Achieved rate per user, row-major `N x M`, bits/s.
    pub rates: Vec<f64>,
    /// `(target - achieved) / target` per user; positive means short.
    pub relative_shortfall: Vec<f64>,
    pub max_rate_shortfall: f64,
    /// Users `(n, m)` whose shortfall exceeds [`RATE_RELATIVE_TOLERANCE`].
    pub rate_violations: Vec<(usize, usize)>,
    /// `max_n |sum_m alpha_{n,m} - 1|` over active waveguides.
    pub coefficient_sum_residual: f64,
    /// Largest distance of any `alpha_{n,m}` outside `[0, 1]`.
    pub coefficient_range_residual: f64,
    /// `cap_n - P_n` per waveguide when caps are given.
    pub cap_margin: Option<Vec<f64>>,
    /// Waveguides with `P_n = 0`, whose coefficients are undefined.
    pub inactive_waveguides: Vec<usize>,
}

impl SolutionReport {
    pub fn rate(&self, n: usize, m: usize) -> f64 {
        self.rates[n * self.orders[0].len() + m]
    }

    pub fn satisfies_rates(&self) -> bool {
        self.rate_violations.is_empty()
    }

    pub fn within_caps(&self) -> bool {
        self.cap_margin.as_ref().is_none_or(|m| m.iter().all(|&x| x >= 0.0))
    }
}

pub fn evaluate_solution(
    table: &ChannelTable,
    state: &AllocationState,
    requirements: &RateRequirements,
    caps: Option<&[f64]>,
) -> Result<SolutionReport> {
    check_shapes(table, requirements)?;
    if state.shape() != requirements.shape() {
        return Err(Error::ShapeMismatch { expected: requirements.shape(), found: state.shape() });
    }
    let n_wg = table.num_waveguides();
    let m_users = table.users_per_waveguide();
    let orders: Vec<DecodingOrder> = (0..n_wg).map(|n| decoding_order(table, state, n)).collect();
    let mut rates = vec![0.0; n_wg * m_users];
    let mut relative_shortfall = vec![0.0; n_wg * m_users];
    let mut rate_violations = Vec::new();
    for (n, order) in orders.iter().enumerate() {
        for rank in 0..m_users {
            let user = order.user_at(rank);
            let (_, rate) = sinr_and_rate(table, state, order, n, rank, requirements.bandwidth());
            let target = requirements.min_rate(n, user);
            rates[n * m_users + user] = rate;
            relative_shortfall[n * m_users + user] = (target - rate) / target;
        }
    }
    for n in 0..n_wg {
        for m in 0..m_users {
            if relative_shortfall[n * m_users + m] > RATE_RELATIVE_TOLERANCE {
                rate_violations.push((n, m));
            }
        }
    }
    let max_rate_shortfall = relative_shortfall.iter().copied().fold(f64::NEG_INFINITY, libm::fmax);

    let mut coefficient_sum_residual: f64 = 0.0;
    let mut coefficient_range_residual: f64 = 0.0;
    let mut inactive_waveguides = Vec::new();
    for n in 0..n_wg {
        if state.waveguide_power(n) <= 0.0 {
            inactive_waveguides.push(n);
            continue;
        }
        let alphas: Vec<f64> = (0..m_users).filter_map(|m| state.coefficient(n, m)).collect();
        coefficient_sum_residual = coefficient_sum_residual.max(libm::fabs(alphas.iter().sum::<f64>() - 1.0));
        for a in alphas {
            coefficient_range_residual = coefficient_range_residual.max((-a).max(a - 1.0).max(0.0));
        }
    }
    let cap_margin = caps.map(|caps| caps.iter().enumerate().map(|(n, c)| c - state.waveguide_power(n)).collect());

    Ok(SolutionReport {
        orders,
        rates,
        relative_shortfall,
        max_rate_shortfall,
        rate_violations,
        coefficient_sum_residual,
        coefficient_range_residual,
        cap_margin,
        inactive_waveguides,
    })
}

/// Allocation-free feasibility test with the same semantics as
/// `evaluate_solution(..).satisfies_rates()`, for grid searches.
pub(crate) fn meets_rates(table: &ChannelTable, state: &AllocationState, requirements: &RateRequirements) -> bool {
    let m_users = table.users_per_waveguide();
    let mut iins = [0.0f64; 8];
    let mut ranked = [0usize; 8];
    debug_assert!(m_users <= 8);
    for n in 0..table.num_waveguides() {
        for m in 0..m_users {
            iins[m] = iin(table, state, n, m);
            ranked[m] = m;
        }
        // descending IIN, ties by ascending index (same as `decoding_order`)
        ranked[..m_users].sort_by(|&a, &b| (1.0 / iins[a]).total_cmp(&(1.0 / iins[b])));
        let mut later = 0.0;
        for &user in ranked[..m_users].iter().rev() {
            let p = state.power(n, user);
            let sinr = p / (later + iins[user]);
            let rate = requirements.bandwidth() * libm::log2(1.0 + sinr);
            let target = requirements.min_rate(n, user);
            if (target - rate) / target > RATE_RELATIVE_TOLERANCE {
                return false;
            }
            later += p;
        }
    }
    true
}
