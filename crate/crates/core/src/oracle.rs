//! Independent checks on the solver: exhaustive grid search for tiny
//! instances, the large-spacing decoupled closed form, and a randomized
//! checker for the standard-interference properties of the update map.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::Range;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::channel::{ChannelTable, WaveguideParams};
use crate::error::{positive, Error, Result};
use crate::power::{meets_rates, standard_interference, AllocationState, DecodingOrder, RateRequirements};

/// Largest `N * M` the exhaustive search accepts.
pub const MAX_ORACLE_USERS: usize = 4;

/// Candidate per-user power levels, ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleGrid {
    values: Vec<f64>,
}

impl OracleGrid {
    /// `points` log-spaced values from `lower` to `upper` inclusive.
    pub fn logarithmic(lower: f64, upper: f64, points: usize) -> Result<Self> {
        positive("lower", lower)?;
        positive("upper", upper)?;
        if upper <= lower {
            return Err(Error::InvalidArgument { name: "upper", value: upper });
        }
        if points < 2 {
            return Err(Error::InvalidArgument { name: "points", value: points as f64 });
        }
        let (lo, hi) = (libm::log(lower), libm::log(upper));
        let step = (hi - lo) / (points - 1) as f64;
        let mut values: Vec<f64> = (0..points).map(|k| libm::exp(lo + step * k as f64)).collect();
        values[0] = lower;
        values[points - 1] = upper;
        Ok(Self { values })
    }

    /// Default window: from a tenth of the smallest normalized noise up to
    /// `upper`, 40 points per user.
    pub fn for_table(table: &ChannelTable, upper: f64) -> Result<Self> {
        let mut floor = f64::INFINITY;
        for n in 0..table.num_waveguides() {
            for m in 0..table.users_per_waveguide() {
                floor = floor.min(table.normalized_noise(n, m));
            }
        }
        Self::logarithmic(floor / 10.0, upper, 40)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Width of the cell `(values[k-1], values[k]]`; the first point uses the
    /// cell above it.
    fn cell_width(&self, k: usize) -> f64 {
        if k == 0 {
            self.values[1] - self.values[0]
        } else {
            self.values[k] - self.values[k - 1]
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    pub best_total_power: f64,
    pub best_state: AllocationState,
    /// Largest grid-cell width among the chosen coordinates, watts. The
    /// optimum can sit anywhere inside those cells.
    pub grid_resolution: f64,
    pub evaluations: u64,
    best_indices: Vec<usize>,
}

impl OracleResult {
    /// Merge of two partial searches: lower total wins, ties go to the
    /// lexicographically smaller grid point.
    pub fn better(self, other: OracleResult) -> OracleResult {
        let evaluations = self.evaluations + other.evaluations;
        let keep_self = match self.best_total_power.total_cmp(&other.best_total_power) {
            core::cmp::Ordering::Less => true,
            core::cmp::Ordering::Greater => false,
            core::cmp::Ordering::Equal => self.best_indices <= other.best_indices,
        };
        let mut best = if keep_self { self } else { other };
        best.evaluations = evaluations;
        best
    }
}

fn check_oracle_size(table: &ChannelTable, requirements: &RateRequirements) -> Result<usize> {
    let users = table.num_waveguides() * table.users_per_waveguide();
    if users > MAX_ORACLE_USERS {
        return Err(Error::InvalidArgument { name: "N*M for brute force", value: users as f64 });
    }
    if (requirements.num_waveguides(), requirements.users_per_waveguide())
        != (table.num_waveguides(), table.users_per_waveguide())
    {
        return Err(Error::ShapeMismatch {
            expected: (table.num_waveguides(), table.users_per_waveguide()),
            found: (requirements.num_waveguides(), requirements.users_per_waveguide()),
        });
    }
    Ok(users)
}

/// Exhaustive search restricted to grid points whose first coordinate index
/// lies in `first`. Returns the feasible point of least total power, if any,
/// plus the number of points examined.
pub fn brute_force_partition(
    table: &ChannelTable,
    requirements: &RateRequirements,
    grid: &OracleGrid,
    first: Range<usize>,
) -> Result<(Option<OracleResult>, u64)> {
    let users = check_oracle_size(table, requirements)?;
    let k = grid.len();
    let first = first.start.min(k)..first.end.min(k);
    let (n_wg, m_users) = (table.num_waveguides(), table.users_per_waveguide());
    let values = grid.values();

    let mut idx = vec![0usize; users];
    idx[0] = first.start;
    let mut state = AllocationState::zeros(n_wg, m_users);
    let mut best: Option<(f64, Vec<usize>)> = None;
    let mut evaluations = 0u64;
    if first.is_empty() {
        return Ok((None, 0));
    }
    loop {
        for (u, &i) in idx.iter().enumerate() {
            state.set_power(u / m_users, u % m_users, values[i]);
        }
        evaluations += 1;
        let total: f64 = idx.iter().map(|&i| values[i]).sum();
        let improves = best.as_ref().is_none_or(|(b, _)| total < *b);
        if improves && meets_rates(table, &state, requirements) {
            best = Some((total, idx.clone()));
        }
        // odometer, last coordinate fastest
        let mut pos = users;
        loop {
            if pos == 0 {
                let result = best.map(|(total, indices)| {
                    let powers = indices.iter().map(|&i| values[i]).collect();
                    OracleResult {
                        best_total_power: total,
                        best_state: AllocationState::new(n_wg, m_users, powers).expect("grid values are valid"),
                        grid_resolution: indices.iter().map(|&i| grid.cell_width(i)).fold(0.0, f64::max),
                        evaluations,
                        best_indices: indices,
                    }
                });
                return Ok((result, evaluations));
            }
            pos -= 1;
            idx[pos] += 1;
            let limit = if pos == 0 { first.end } else { k };
            if idx[pos] < limit {
                break;
            }
            if pos == 0 {
                continue;
            }
            idx[pos] = 0;
        }
    }
}

/// Exhaustive minimum-power search over `grid^(N*M)`, with decoding orders
/// recomputed from every candidate. `Ok(None)` means no grid point meets all
/// rates. Only instances with `N * M <= 4` are accepted.
pub fn brute_force_min_power(
    table: &ChannelTable,
    requirements: &RateRequirements,
    grid: &OracleGrid,
) -> Result<Option<OracleResult>> {
    brute_force_partition(table, requirements, grid, 0..grid.len()).map(|(r, _)| r)
}

/// Total minimum power when waveguides stop interfering and each user's own
/// channel is its overhead pinch alone, `|h|^2 = eta / d^2`.
pub fn asymptotic_decoupled_power(
    requirements: &RateRequirements,
    height: f64,
    params: &WaveguideParams,
    noise_power: f64,
) -> Result<f64> {
    positive("height", height)?;
    positive("noise_power", noise_power)?;
    let noise = noise_power * height * height / params.eta;
    let mut total = 0.0;
    for n in 0..requirements.num_waveguides() {
        // equal channels: ties keep index order
        let mut later = 0.0;
        for m in (0..requirements.users_per_waveguide()).rev() {
            let p = requirements.sinr_target(n, m) * (later + noise);
            later += p;
        }
        total += later;
    }
    Ok(total)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Property {
    Positivity,
    Monotonicity,
    Scalability,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Counterexample {
    pub property: Property,
    pub sample: usize,
    pub waveguide: usize,
    pub user: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PropertyReport {
    pub seed: u64,
    pub samples: usize,
    pub positivity_violations: usize,
    pub monotonicity_violations: usize,
    pub scalability_violations: usize,
    pub counterexample: Option<Counterexample>,
}

impl PropertyReport {
    pub fn passed(&self) -> bool {
        self.positivity_violations + self.monotonicity_violations + self.scalability_violations == 0
    }
}

/// Samples random power vectors and random fixed decoding orders and checks,
/// for the per-user update map `f`:
///
/// * positivity, `f(P) > 0` (the zero vector is always the first sample);
/// * monotonicity, `P >= P'` componentwise implies `f(P) >= f(P')`;
/// * scalability, `beta f(P) > f(beta P)` for `beta` in `(1, 10]`.
pub fn verify_standard_properties(
    table: &ChannelTable,
    requirements: &RateRequirements,
    sample_count: usize,
    seed: u64,
) -> Result<PropertyReport> {
    let (n_wg, m_users) = (table.num_waveguides(), table.users_per_waveguide());
    if (requirements.num_waveguides(), requirements.users_per_waveguide()) != (n_wg, m_users) {
        return Err(Error::ShapeMismatch {
            expected: (n_wg, m_users),
            found: (requirements.num_waveguides(), requirements.users_per_waveguide()),
        });
    }
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for n in 0..n_wg {
        for m in 0..m_users {
            lo = lo.min(table.normalized_noise(n, m));
            hi = hi.max(table.normalized_noise(n, m));
        }
    }
    let (log_lo, log_hi) = (libm::log(lo * 1e-3), libm::log(hi * 1e3));

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = PropertyReport {
        seed,
        samples: sample_count,
        positivity_violations: 0,
        monotonicity_violations: 0,
        scalability_violations: 0,
        counterexample: None,
    };
    let record = |report: &mut PropertyReport, property: Property, sample: usize, n: usize, m: usize| {
        match property {
            Property::Positivity => report.positivity_violations += 1,
            Property::Monotonicity => report.monotonicity_violations += 1,
            Property::Scalability => report.scalability_violations += 1,
        }
        if report.counterexample.is_none() {
            report.counterexample = Some(Counterexample { property, sample, waveguide: n, user: m });
        }
    };

    let mut users: Vec<usize> = (0..m_users).collect();
    for sample in 0..sample_count {
        let orders: Vec<DecodingOrder> = (0..n_wg)
            .map(|_| {
                users.shuffle(&mut rng);
                DecodingOrder::from_permutation(users.clone()).expect("shuffle is a permutation")
            })
            .collect();
        let base = if sample == 0 {
            AllocationState::zeros(n_wg, m_users)
        } else {
            let powers = (0..n_wg * m_users).map(|_| libm::exp(rng.random_range(log_lo..log_hi))).collect();
            AllocationState::new(n_wg, m_users, powers).expect("sampled powers are valid")
        };
        let f_base = standard_interference(table, requirements, &orders, &base);

        let mut raised = base.clone();
        for n in 0..n_wg {
            for m in 0..m_users {
                if rng.random_bool(0.5) {
                    let bump = rng.random_range(0.0..10.0) * libm::fmax(base.power(n, m), lo);
                    raised.set_power(n, m, base.power(n, m) + bump);
                }
            }
        }
        let f_raised = standard_interference(table, requirements, &orders, &raised);

        let beta: f64 = 1.0 + rng.random_range(0.0..9.0) + f64::EPSILON;
        let f_scaled = standard_interference(table, requirements, &orders, &base.scaled(beta));

        for n in 0..n_wg {
            for m in 0..m_users {
                let v = f_base.power(n, m);
                if !(v > 0.0) {
                    record(&mut report, Property::Positivity, sample, n, m);
                }
                if f_raised.power(n, m) < v {
                    record(&mut report, Property::Monotonicity, sample, n, m);
                }
                if !(beta * v > f_scaled.power(n, m)) {
                    record(&mut report, Property::Scalability, sample, n, m);
                }
            }
        }
    }
    Ok(report)
}
