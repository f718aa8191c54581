pub mod error;
pub mod fields;
pub mod constants;
pub mod geometry;
pub mod gl;
pub mod spectral;
pub mod sweep;
