//! Scenario files, single solves, sweeps and derived statistics for the
//! `pinch-noma` solver. The binary in `main.rs` is a thin layer over these
//! modules.

// `!(x > 0.0)` is meant to reject NaN too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod solve;
pub mod summary;
pub mod sweep;
pub mod units;
pub mod verify;
