//! Hybrid (analog RF + digital baseband) precoder design for point-to-point
//! mmWave massive MIMO downlinks whose transmitter uses one-bit DACs.
//!
//! The crate covers the clustered channel model, the one-bit quantizer with
//! its AQNM and Bussgang linearizations, the achievable-rate lower bound, the
//! alternating-optimization precoder design and a seeded Monte Carlo harness.

pub mod channel;
pub mod config;
pub mod error;
pub mod harness;
pub mod linalg;
pub mod precoding;
pub mod quantization;
pub mod rate;
pub mod validate;

pub use error::{Error, Result};
pub use linalg::{CMatrix, C64};
