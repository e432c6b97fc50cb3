//! Spectral analysis of the linearized Euler equations around the shear flow
//! `u(y) = tanh y`.
//!
//! The crate is organised bottom-up: [`flow`] evaluates the profile,
//! [`rayleigh`] solves the homogeneous Rayleigh equation, [`wronskian`] and
//! [`kernels`] build the spectral quantities on top of it, [`evolution`]
//! assembles stream functions from them, and [`direct`] integrates the same
//! equation in time as an independent check. [`harness`] holds the config,
//! fitting and comparison plumbing used by the command-line runner.

pub mod direct;
pub mod error;
pub mod evolution;
pub mod flow;
pub mod harness;
pub mod kernels;
pub mod quad;
pub mod rayleigh;
pub mod wronskian;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;
