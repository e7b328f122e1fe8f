//! Analysis toolkit for kinetic-inductance traveling-wave (KIT) amplifier
//! experiments.
//!
//! The crate is organized around the four stages of a KIT amplifier
//! characterization campaign:
//!
//! - [`twpa`] — physics model of three-wave-mixing parametric gain in a
//!   dispersion-engineered nonlinear transmission line: Bloch dispersion of
//!   the periodically loaded line, phase mismatch, the analytic gain formula,
//!   and a coupled-mode ODE integrator serving as its numerical oracle.
//! - [`network`] — two-port S-parameter networks, Touchstone I/O, T-matrix
//!   cascading, and TRL (thru-reflect-line) calibration solving the 8-term
//!   error model so cryogenic measurements can be de-embedded.
//! - [`noise`] — system noise temperature and gain fits from
//!   variable-temperature-load sweeps via the Planck noise law, photon-unit
//!   conversion, and a distributed internal gain/loss model of the amplifier.
//! - [`readout`] — single-shot dispersive readout scoring: matched-filter
//!   integration of heterodyne records, threshold selection, assignment
//!   fidelity, and a seeded synthetic shot generator.
//!
//! Batch operations (gain profiles, per-frequency fits, shot projection,
//! Monte-Carlo sweeps) run data-parallel via rayon when the default
//! `parallel` feature is enabled and fall back to equivalent sequential
//! loops when it is not. Results are bitwise identical either way.

pub mod config;
pub mod constants;
pub mod network;
pub mod noise;
pub mod readout;
pub mod twpa;

mod par;

pub use num_complex::Complex64;
