//! Core algorithms for saturating and minimizing finite weighted transition
//! systems: quantale-weighted relations, probabilistic kernels, timed
//! processes, and continuous-time Markov chains, together with the lax-flow
//! machinery that ties saturation to weak bisimulation.
//!
//! The crate is `no_std` (with `alloc`); all IO and file formats live in the
//! companion CLI crate.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod bisim;
pub mod ctmc;
pub mod kleisli;
pub mod laxflow;
mod num;
pub mod probweak;
pub mod quantale;
pub mod saturation;
pub mod timed;

/// Comparison tolerance for numeric weights (probabilities, rates, delays).
pub const EPS: f64 = 1e-9;

/// Convergence tolerance for numeric fixed-point iteration.
pub const CONV_TOL: f64 = 1e-12;

/// Numeric values above this threshold are treated as infinite.
pub const INF_CAP: f64 = 1e15;
