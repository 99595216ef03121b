//! Design toolkit for protograph LDPC codes with local irregularity.
//!
//! * [`protograph`]: base matrices, local degree distributions, JSON files.
//! * [`jfun`], [`exit`], [`capacity`]: Gaussian-approximation EXIT analysis and thresholds.
//! * [`optimize`]: genetic search over local degree distributions.
//! * [`lifting`]: parity-check matrices from protographs, 4-cycle removal, alist I/O.
//! * [`sim`]: BI-AWGN Monte Carlo with sum-product decoding.

pub mod capacity;
pub mod codes;
pub mod error;
pub mod exit;
pub mod jfun;
pub mod lifting;
pub mod optimize;
pub mod protograph;
pub mod sim;

pub use error::{Error, Result};
