pub mod abel;
pub mod cli;
pub mod config;
pub mod curve;
pub mod error;
pub mod homology;
pub mod kernel;
pub mod partition;
pub mod path;
pub mod periods;
pub mod quadrature;
pub mod report;
pub mod surface;
pub mod thomae;
pub mod theta;

pub use num_complex::Complex64 as C64;
