//! Sparse linear algebra for the implicit time steps: CSR storage, ILU(0)
//! preconditioning and preconditioned BiCGSTAB.

mod bicgstab;
mod csr;
mod ilu;

pub use bicgstab::{bicgstab, SolveStats, SolverOptions};
pub use csr::{CsrBuilder, CsrMatrix};
pub use ilu::Ilu0;

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub(crate) fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}
