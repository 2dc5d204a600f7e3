//! Numerical building blocks: quadrature, special functions, zeta values
//! and contour integrals.

pub mod contour;
pub mod miller_yang;
pub mod quadrature;
pub mod special;
pub mod zeta;

pub use contour::{vertical_line_integral, AccuracyBudget, DecayCertificate};
pub use miller_yang::{miller_yang_i, miller_yang_series};
pub use special::{
    digamma, digamma_int, exp_integral_e1, inc_gamma_ratio, log_kernel, log_kernel_ratio,
    log_kernel_ratio_quadrature, EULER_GAMMA,
};
