pub mod analysis;
pub mod config;
pub mod equilibrium;
pub mod error;
pub mod kinetic;
pub mod micro;
pub mod scenario;
pub mod solver;
pub mod stability;
pub mod wspace;

pub use error::{Error, Result};
