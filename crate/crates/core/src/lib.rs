//! Random billiards on the unit 2-torus driven by disk-shaped Gaussian
//! thermostats.
//!
//! A point particle flies in straight lines between circular scatterers.
//! At each collision the normal velocity component flips sign and the
//! tangential component is redrawn from a centered Gaussian whose variance
//! is set by the scatterer's inverse temperature. Sampling the system at
//! collisions gives a Markov chain on (boundary point, normal speed); the
//! continuous-time process is its suspension flow.
//!
//! The crate is split into:
//! - [`geometry`]: torus tables, validation, periodic-image ray tracing,
//!   horizon probing;
//! - [`dynamics`]: the thermostat kick, the collision chain, the flow, and
//!   the suspension lift;
//! - [`measures`]: closed-form densities, the piecewise Lyapunov potential,
//!   and the equilibrium residual-time tail coefficient;
//! - [`statistics`]: histograms, total-variation estimates, stationary
//!   ensembles, tail curves, slope fits, drift ratios;
//! - [`rng`]: counter-based reproducible random streams.
//!
//! The crate is `no_std`-compatible (with `alloc`); the default `std`
//! feature routes floating-point math through the faster intrinsics.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod dynamics;
pub mod error;
pub mod geometry;
pub mod math;
pub mod measures;
pub mod rng;
pub mod statistics;

pub use error::{Error, Result};
