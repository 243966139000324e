//! Proportional-fair scheduling (PFS) with optimal power allocation for
//! downlink single-carrier NOMA.
//!
//! The crate is split by role:
//!
//! * [`pfs`] keeps the long-term averaged rates and evaluates the PF metric.
//! * [`allocation`] holds the coefficient-function machinery, the envelope
//!   scheduler for ideal NOMA (no SIC limit) and the exhaustive scheduler for
//!   practical NOMA with a SIC limit `s_max`.
//! * [`sinr`] models the CQI distribution of a user in a multi-cell network.
//! * [`estimator`] solves the fixed-point system that predicts per-user mean
//!   rates under ideal NOMA from those distributions.
//! * [`sim`] is the system-level Monte-Carlo engine (hexagonal layout,
//!   propagation, fading, RSRP reports, frame loop).
//! * [`stats`] aggregates rates into throughput figures and deviation CDFs.
//! * [`oracle`] contains slow reference implementations used for
//!   verification only.
//!
//! The crate is `no_std` (with `alloc`) when the default `std` feature is
//! disabled.

#![cfg_attr(not(feature = "std"), no_std)]
#![forbid(unsafe_code)]
// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod allocation;
pub mod error;
pub mod estimator;
pub mod oracle;
pub mod pfs;
pub mod quad;
pub mod sim;
pub mod sinr;
pub mod stats;

pub use allocation::{Allocation, Candidate, CqiSample, PairCase, PairRelation};
pub use error::{Error, Result};
pub use estimator::{EstimatorOptions, RateSolution, Solver};
pub use pfs::UserState;
pub use sinr::SinrDistribution;
