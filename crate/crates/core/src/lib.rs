//! Simulator for gravitationally induced photon echoes in vertically stacked
//! Th-229 nuclear targets.
//!
//! The gravitational redshift across an altitude difference detunes each
//! slice of the stack from the drive; rotating the stack changes the sign or
//! magnitude of those detunings, which rephases (θ = π) or freezes (θ = π/2)
//! the nuclear polarization.
//!
//! * [`units`]: constants, redshift gradient, linewidth convention
//! * [`detuning`]: targets, rotation schedules, transverse Doppler shift
//! * [`solver`]: Maxwell-Bloch cascade integration
//! * [`analysis`]: spectra, echo windows, efficiency and fidelity
//! * [`scenarios`]: built-in configurations
//! * [`config`], [`runner`], [`sweep`]: config files, table output, sweeps

pub mod analysis;
pub mod config;
pub mod detuning;
pub mod error;
pub mod runner;
pub mod scenarios;
pub mod solver;
pub mod sweep;
pub mod units;

pub use config::{Physics, RunConfig};
pub use error::{Error, Result};
pub use scenarios::{Registry, Scenario};
