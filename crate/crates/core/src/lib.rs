//! One-dimensional model of a soft-walled microchannel: lubrication flow
//! coupled to a peridynamic Euler–Bernoulli wall.

pub mod beam;
pub mod config;
pub mod damage;
pub mod dispersion;
pub mod error;
pub mod grid;
pub mod io;
pub mod linalg;
pub mod lubrication;
pub mod solver;
pub mod special;

pub use error::{Error, Result};
