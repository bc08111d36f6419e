//! Bivariate Fox H-function evaluation by Mellin–Barnes quadrature, integral
//! and derivative identities as descriptor transformations, and performance
//! metrics of the α-η-μ / inverse-gamma composite fading channel.

pub mod cli;
pub mod error;
pub mod fading;
pub mod fox_h;
pub mod identities;
pub mod mellin_barnes;
pub mod montecarlo;
pub mod quadrature;
pub mod selftest;
pub mod sweep;
pub mod special;

pub use error::{Error, Result};
