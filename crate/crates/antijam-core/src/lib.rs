//! Simulation and signal processing for suppressing interrupted-sampling
//! repeater jamming (ISRJ) against LFM pulse radar.
//!
//! The processing chain is:
//!
//! 1. [`siggen`] builds the received baseband signal (target echo, ISRJ, noise)
//!    from a [`scenario::ScenarioConfig`].
//! 2. [`tfr::glwd`] computes a generalized linear canonical Wigner distribution
//!    whose parameters come from [`tfr::select_glwd_params`].
//! 3. [`linedet::detect_target_ridge`] finds the long continuous target ridge.
//! 4. [`suppress`] masks the STFT around that ridge, reconstructs, pulse
//!    compresses, runs CA-CFAR and scores the result.
//!
//! [`harness`] strings the stages together for single runs and Monte Carlo sweeps.
//!
//! ```
//! use antijam_core::scenario::{range_to_delay, delay_to_range};
//! let tau = range_to_delay(900.0).unwrap();
//! assert!((delay_to_range(tau).unwrap() - 900.0).abs() < 1e-9);
//! ```

pub mod error;
pub mod harness;
pub mod lct;
pub mod linedet;
pub mod par;
pub mod scenario;
pub mod siggen;
pub mod suppress;
pub mod tfr;

mod fft;

pub use error::{Error, Result};
pub use siggen::ComplexSignal;

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
