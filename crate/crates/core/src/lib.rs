#![allow(clippy::neg_cmp_op_on_partial_ord)]
//! Dynamic- and geometric-phase magnetometry with a single two-level spin.
//!
//! The crate covers the whole chain from spin dynamics to field estimates:
//!
//! - [`spin`]: Bloch-vector state and exact piecewise-constant propagation.
//! - [`sequences`]: Ramsey, Hahn-echo and Berry pulse plans and their execution.
//! - [`analytic`]: closed-form signals, slopes, field ranges and sensitivities.
//! - [`noise`]: spectral densities, filter functions, the decoherence integral
//!   and an Ornstein–Uhlenbeck Monte-Carlo oracle.
//! - [`estimate`]: signal-to-field inversion for both protocols.
//! - [`harness`]: parameter sweeps, power-law fits and the regime scans.
//!
//! Internally everything is SI with angular frequencies (rad/s, s, T).

pub mod analytic;
pub mod error;
pub mod estimate;
pub mod harness;
pub mod noise;
pub mod numerics;
pub mod parallel;
pub mod quadrature;
pub mod sequences;
pub mod spin;
pub mod units;

pub use error::{Error, Result};
pub use units::PhysicalConstants;
