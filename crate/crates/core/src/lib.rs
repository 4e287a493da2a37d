//! Self-triggered stabilization of discrete-time linear plants over a quantized,
//! possibly jammed, sensor channel.
//!
//! The sensor sends one integer per sample: the cell index of the output in a box quantizer
//! whose center and range both sides track. The next sampling instant is computed at the
//! current sample from a bound on how far the output can drift. Two controllers are provided:
//! an observer-based loop ([`standard`]) and a deadbeat loop on a finer actuation grid
//! ([`deadbeat`]) that needs no estimator at the encoder. [`dos`] adds a duration-budgeted
//! jammer and the resilient range update; [`sim`] runs closed loops and sweeps.

// `!(x <= y)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod config;
pub mod deadbeat;
pub mod dos;
pub mod error;
pub mod matops;
pub mod plant;
pub mod quantizer;
pub mod sim;
pub mod standard;

pub use error::{Error, Result};
