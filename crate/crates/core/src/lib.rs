//! Single-interval social distancing in the SIR model: Lambert-W final sizes,
//! a switched-ODE simulator, Goldilocks policies and scenario classification.

pub mod error;
pub mod final_size;
pub mod intervention;
pub mod lambert_w;
pub mod scenario_io;
pub mod sir_dynamics;
pub mod stability;

pub use error::{Error, Result};
