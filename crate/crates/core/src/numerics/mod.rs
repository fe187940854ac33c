//! Small numerical kernels shared by the solvers.

pub mod interp;
pub mod ode;
pub mod tridiag;
