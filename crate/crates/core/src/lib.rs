//! Dense-WLAN uplink association workbench.
//!
//! Placement and path loss live in [`topology`], the MIMO link model in
//! [`phy`], DCF timing and utilities in [`mac`], the assignment solver in
//! [`matching`]. [`scenario`] realizes a network and its link tables,
//! [`association`] holds the schemes, and [`simcore`] is the CSMA/CA
//! simulator with the Monte Carlo drivers.

// NaN-rejecting `!(x > 0.0)` checks and index loops over parallel arrays.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod association;
pub mod error;
pub mod mac;
pub mod matching;
pub mod phy;
pub mod scenario;
pub mod simcore;
pub mod topology;

pub use error::{Error, Result};
