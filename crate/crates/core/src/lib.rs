//! Rectangular analog joint source-channel coding.
//!
//! * [`mapping`]: ideal encoder/decoder for the parallel-line curve and a
//!   geometric projection oracle.
//! * [`circuit`]: behavioral model of the comparator/VCVS/multiplexer stages.
//! * [`channel`]: baseband AWGN channel parameterized by CSNR.
//! * [`experiments`]: SDR-vs-CSNR sweeps and transfer curves.
//! * [`power`]: BOM power and cost roll-up.
//! * [`config`], [`cli`]: run configuration and the `ajscc` command line.

pub mod channel;
pub mod circuit;
pub mod cli;
pub mod config;
pub mod error;
pub mod experiments;
pub mod mapping;
pub mod power;

pub use error::{Error, Result};
