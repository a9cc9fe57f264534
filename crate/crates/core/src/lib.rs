//! Covariance-matrix simulator for continuous-variable dense coding on a
//! four-mode TTPC (totally three-party correlated) entangled state.
//!
//! The crate models zero-mean Gaussian states of N optical modes in
//! shot-noise units (vacuum quadrature variance 1) and builds on that a
//! small verification stack:
//!
//! * [`gaussian`] — quadrature covariance engine: states, symplectic
//!   operations (two-mode squeezer, beamsplitter, phase shift), and variances
//!   of linear quadrature forms.
//! * [`ttpc`] — the four-mode TTPC source (two EPR pairs combined on a
//!   balanced beamsplitter) and its eight three-mode correlation relations,
//!   each with variance 4 * exp(-2r).
//! * [`protocols`] — the six dense-coding channel configurations between
//!   stations Alice, Bob, Claire and Daisy: closed-form noise spectra,
//!   optimal feedforward gains, and declarative network descriptions that the
//!   engine evaluates independently of the closed forms.
//! * [`capacity`] — Shannon capacity of each configuration under a mean
//!   photon-number budget split between squeezing and signal modulation.
//! * [`netsim`] — Monte Carlo network simulation with explicit classical
//!   message routing; a statistical cross-check of the analytic spectra.
//!
//! The default `parallel` feature runs Monte Carlo batches and grid sweeps on
//! a rayon thread pool; results are bitwise identical to the sequential path
//! because samples are drawn from per-batch counter-based RNG streams and
//! batch summaries are merged in a fixed order.

pub mod capacity;
mod error;
mod exec;
pub mod gaussian;
pub mod netsim;
pub mod protocols;
pub mod ttpc;

pub use error::{Error, Result};
pub use exec::Execution;
