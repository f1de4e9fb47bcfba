//! Pseudo-spectral simulation of the stochastic Navier–Stokes equations on
//! the periodic box `[0, 2π)³`, with a cutoff cascade of smooth levels.

pub mod commands;
pub mod config;
pub mod cutoffs;
pub mod ensemble;
pub mod error;
pub mod initial_data;
pub mod integrator;
pub mod io;
pub mod noise;
pub mod rng;
pub mod spectral;
pub mod stopping;
pub mod verify;

pub use error::{Result, SnseError};
