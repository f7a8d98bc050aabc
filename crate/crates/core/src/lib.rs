//! Mixed local-nonlocal heat flow `u_t + (-Laplacian + (-Laplacian)^s) u = h(t) f(u)`
//! on R^N (N = 1, 2): exact spectral semigroup, kernel quadrature and bound
//! certification, a Duhamel integrator with blow-up detection, integral
//! criteria for global existence and nonexistence, and a Fujita sweep harness.

pub mod bessel;
pub mod criteria;
pub mod datum;
pub mod error;
pub mod harness;
pub mod kernel;
pub mod nonlinearity;
pub mod quadrature;
pub mod solver;
pub mod spectral;

pub use error::{Error, Result};
