//! Exponential last-passage percolation, its queueing representation,
//! multiclass stationary measures and Busemann functions.

pub mod busemann;
pub mod error;
pub mod exact;
pub mod lattice;
pub mod lpp;
pub mod multiclass;
pub mod queueing;
pub mod rng;
pub mod stats;

pub use error::{Error, Result};
pub use lattice::{MultiConfig, Point, SeqWindow, WeightField};
pub use rng::RngSpec;
