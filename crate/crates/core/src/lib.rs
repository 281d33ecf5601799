//! Minimum total transmit power for downlink NOMA users served by several
//! pinching-antenna dielectric waveguides.
//!
//! The crate is `no_std` (it needs `alloc`) and purely numerical:
//!
//! * [`geometry`] places feeds, pinches and users;
//! * [`channel`] evaluates the line-of-sight phasor gains and the normalized
//!   [`ChannelTable`] consumed by the solver;
//! * [`power`] holds the decoding-order rule, SINR/rate evaluation, the
//!   per-waveguide back-substitution cascade and the fixed-point iteration;
//! * [`baseline`] is the equal-coefficient benchmark;
//! * [`oracle`] carries the independent checks: a brute-force grid search,
//!   the large-spacing decoupled closed form and a randomized checker for the
//!   positivity / monotonicity / scalability properties of the update map.
//!
//! Everything is SI: meters, hertz, watts, bits per second. Indices in the
//! API are zero-based; the position formulas use `index + 1`.

#![no_std]
#![warn(missing_debug_implementations)]
// `!(x > 0.0)` is meant to reject NaN too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod baseline;
pub mod channel;
mod error;
pub mod geometry;
pub mod oracle;
pub mod power;

pub use baseline::{equal_power_solve, BaselineResult};
pub use channel::{
    build_channel_table, cross_channel_gain, derive_params, own_channel_gain, ChannelTable, ComplexGain,
    WaveguideParams, SPEED_OF_LIGHT,
};
pub use error::{Error, Result};
pub use geometry::{build_layout, FeedConvention, Position3D, SystemLayout};
pub use oracle::{
    asymptotic_decoupled_power, brute_force_min_power, verify_standard_properties, OracleGrid, OracleResult,
    PropertyReport,
};
pub use power::{
    decoding_order, evaluate_solution, fixed_point_solve, iin, nsiinr, sinr_and_rate, waveguide_min_powers,
    AllocationState, ConvergenceReport, DecodingOrder, RateRequirements, SolutionReport, SolverOptions, Termination,
    UpdateSchedule,
};
