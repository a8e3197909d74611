//! Simulation suite for memristive cellular neural networks.
//!
//! The crate is organised bottom-up:
//!
//! * [`device`]: flux-controlled memristors, the piecewise-linear resistor and
//!   single-device hysteresis tracing.
//! * [`cell`]: isolated-cell driving-point analysis.
//! * [`lattice`]: the M×N engine: templates, boundary frames, image coding and
//!   the four synchronous explicit-Euler dynamics variants, plus the scripted
//!   run loop.
//! * [`protocols`]: named template catalogue and the experiment procedures
//!   (image holding, suspend/resume, flux decay, parasitic conductance, waves).
//! * [`chaos`]: the driven two-cell systems with Poincaré sectioning.
//! * [`io`] and [`config`]: PGM/PPM/CSV files and the run-configuration format.
//!
//! All quantities are in dimensionless circuit units (R = C = L = 1).

pub mod cell;
pub mod chaos;
pub mod config;
pub mod device;
mod error;
pub mod io;
pub mod lattice;
pub mod protocols;

pub use error::{Error, Result};

/// Piecewise-linear saturation `0.5 (|x + 1| - |x - 1|)`.
#[inline]
pub fn saturation(x: f64) -> f64 {
    0.5 * ((x + 1.0).abs() - (x - 1.0).abs())
}

/// Three-valued sign with `sgn(0) = 0`.
#[inline]
pub fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Unit step: 0 for `z < 0`, 1 for `z >= 0`.
#[inline]
pub fn unit_step(z: f64) -> f64 {
    if z >= 0.0 {
        1.0
    } else {
        0.0
    }
}

pub(crate) fn check_step(dt: f64) -> Result<()> {
    if dt > 0.0 && dt.is_finite() {
        Ok(())
    } else {
        Err(Error::NonPositiveStep(dt))
    }
}
