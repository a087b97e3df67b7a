//! Quadrature, finite differences and optimization.

mod finite_diff;
mod optimize;
mod quadrature;

pub use finite_diff::{finite_diff_grad, finite_diff_hess, gradient_step, hessian_step, FiniteDiffError};
pub use optimize::{maximize, minimize, Method, OptimDiagnostics, OptimError, OptimizerSpec, Optimum};
pub use quadrature::{
    integrate_line, integrate_weighted, integrate_wrt, InfiniteMap, QuadError, Quadrature, QuadratureSpec,
    DIVERGENCE_THRESHOLD,
};
