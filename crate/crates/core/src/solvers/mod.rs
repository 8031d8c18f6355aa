//! Newton iteration, MINRES, and the lower end of the Hessian spectrum.

mod eigen;
mod minres;
mod newton;
mod skyline;

pub use eigen::{smallest_eigs, EigenResult, EigenSettings};
pub use minres::{jacobi, linear_solve, minres, LinearSolveReport, MinresSettings};
pub use newton::{newton_solve, NewtonReport, NewtonSettings, NewtonStatus};
pub use skyline::EnvelopeLdl;

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub(crate) fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}
