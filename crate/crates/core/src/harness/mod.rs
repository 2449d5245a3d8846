//! Scenario generators, sweeps, random corpora and file formats.

pub mod auction;
pub mod fixtures;
pub mod format;
pub mod latency;
pub mod random;
pub mod sweep;

pub use auction::{gen_auction_model, AuctionParams};
pub use latency::{gen_latency_model, run_debug_experiment, LatencyParams};
pub use sweep::{run_privacy_sweep, SweepResult};
