//! Pseudo-spectral solver for the 3D incompressible Navier-Stokes equations on
//! the periodic unit cube, with log-domain higher-order derivative diagnostics
//! and the power-law analysis of derivative ratios ahead of the enstrophy peak.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod analysis;
pub mod checkpoint;
pub mod cli;
pub mod config;
pub mod diagnostics;
pub mod error;
pub mod integrator;
pub mod io;
pub mod spectral;

pub use error::{Error, Result};
