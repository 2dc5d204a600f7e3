//! Central values and central derivatives of twisted canonical Hecke
//! L-functions attached to imaginary quadratic fields `Q(sqrt(-D))`.

pub mod central;
pub mod character;
pub mod charsum;
pub mod dirichlet;
pub mod error;
pub mod kernels;
pub mod quad;
pub mod selftest;
pub mod sweep;

pub use error::{Error, Result};
