pub mod commands;
pub mod diagram;
pub mod error;
pub mod geometry;
pub mod kernels;
pub mod observables;
pub mod quadrature;
pub mod record;
pub mod rep;
pub mod scene;

pub use error::{Error, Result};
