//! Modulational stability of periodic travelling waves of `u_t = u_xxx + f(u)_x`.
//!
//! The pipeline runs from the effective potential through complete integrals,
//! their parameter gradients, the generalized kernel of the linearization and
//! the stability cubic, and cross-checks the result against the Evans function.

pub mod calculus;
pub mod error;
pub mod floquet;
pub mod jordan;
pub mod modulation;
pub mod ode;
pub mod par;
pub mod poly;
pub mod potential;
pub mod quadrature;
pub mod report;
pub mod spectral;

pub use error::{Error, Result};
