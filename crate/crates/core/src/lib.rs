//! Performance models for periodic safety-message broadcast in a fully
//! connected V2V network.
//!
//! Two MACs are covered: IEEE 802.11p DCF in broadcast mode and SpCDC, a
//! scheme that sets the backoff counter from the number of neighbours whose
//! current packets have been generated but not yet heard. Each MAC has
//!
//! * a fixed-point steady-state model ([`analytic`]), and
//! * a seeded slot-level Monte Carlo simulator ([`sim`] driving a
//!   [`mac`] policy),
//!
//! and [`bench`] sweeps both over parameter grids, writes CSV/JSON tables,
//! renders SVG plots and produces comparison reports.

// Guards are written `!(x > 0.0)` so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytic;
pub mod bench;
pub mod error;
pub mod mac;
pub mod params;
pub mod rng;
pub mod sim;
pub mod stats;

pub use error::{Error, Result};
pub use params::{derive_timing, DerivedTiming, ScenarioParams};
