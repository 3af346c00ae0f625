//! Thermodynamic-limit Lanczos coefficients of extensive many-body systems.

pub mod cli;
pub mod error;
pub mod exact;
pub mod finite_ref;
pub mod jet;
pub mod models;
pub mod quadrature;
pub mod scalar;
pub mod series;
pub mod spectral;
pub mod tl_solver;

pub use error::{Error, Result};
pub use models::{CumulantModel, SaddleSolution};
