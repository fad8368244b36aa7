//! Numerics for timelike Liouville field theory.

pub mod correlators;
pub mod dozz;
pub mod error;
pub mod mc;
pub mod quad;
pub mod semiclassical;
pub mod special_fn;
pub mod sphere_geom;
pub mod wrong_sign;

pub use error::{Error, Result};
pub use num_complex::Complex64;
