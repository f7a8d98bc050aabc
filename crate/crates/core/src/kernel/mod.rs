//! Direct quadrature of the fractional and mixed heat kernels and numerical
//! certification of their identities and two-sided bounds.

mod checks;
mod eval;
mod flow;

pub use checks::*;
pub use eval::{Kernel, SymbolKind};
pub use flow::{kernel_decay_slope, verify_mass_lower_bound, LinearFlow, MassProbe};
