//! Command line and HTTP front ends for the shielded tilt-optimisation
//! pipeline.

pub mod api;
pub mod cli;
pub mod options;
