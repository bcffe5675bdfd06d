//! Numerical building blocks shared by the solvers.

pub mod interp;
pub mod ode;
pub mod quad;
pub mod roots;
