pub mod cli;
pub mod diagnostics;
pub mod error;
pub mod expr;
pub mod farfield;
pub mod geometry;
pub mod incident;
pub mod media;
pub mod quadrature;
pub mod scalar;
pub mod solver;
pub mod specfun;

pub use error::{Error, Result};

pub type Point = scalar::Vec2<f64>;
