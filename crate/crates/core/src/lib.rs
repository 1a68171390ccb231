//! Physical-layer simulator for a two-mode (TE0/TE1) mode-division
//! multiplexed silicon photonic link carrying DMT/OFDM with 16-QAM.

pub mod error;
pub mod frontend;
pub mod link;
pub mod measure;
pub mod metrics;
pub mod ofdm;
pub mod photonic;
pub mod plot;
pub mod signal;
pub mod units;

pub use error::{Error, Result};
