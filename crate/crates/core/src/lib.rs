pub mod brownian;
pub mod cli;
pub mod config;
pub mod error;
pub mod geometry;
pub mod kernels;
pub mod linalg;
pub mod montecarlo;
pub mod output;
pub mod quad;
pub mod rng;
pub mod spectral;
pub mod specfun;
pub mod stats;
pub mod verify;

pub use error::{Error, Result};
