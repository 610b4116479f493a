//! Simulation, decoding and pulse optimization for a parity-recovering
//! bosonic error-correction scheme: the truncated four-component cat code
//! stabilized by selective photon addition driven through a frequency comb.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod error;
pub mod budget;
pub mod circuitmodel;
pub mod cli;
pub mod codes;
pub mod decoder;
pub mod dissipator;
pub mod experiments;
pub mod fit;
pub mod grape;
pub mod opensystem;
pub mod qalg;
pub mod table;

pub use error::{Error, Result};
