use crate::discretization::SymmetricOperator;
use crate::error::{Error, Result};

use super::{dot, norm};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MinresSettings {
    /// Stop once the preconditioned residual norm is below this value.
    pub tol: f64,
    pub max_iterations: usize,
}

impl MinresSettings {
    pub fn new(tol: f64, dim: usize) -> Self {
        Self { tol, max_iterations: (20 * dim).max(1000) }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct LinearSolveReport {
    pub converged: bool,
    pub iterations: usize,
    /// Preconditioned residual norm estimate after every iteration.
    pub history: Vec<f64>,
    /// Euclidean norm of `b − A x` recomputed at exit.
    pub residual: f64,
}

/// Jacobi preconditioner `|diag(A)|⁻¹`; zero diagonal entries map to 1.
pub fn jacobi(op: &SymmetricOperator) -> Vec<f64> {
    op.diagonal().iter().map(|d| if *d != 0.0 { 1.0 / d.abs() } else { 1.0 }).collect()
}

/// Preconditioned MINRES (Paige & Saunders) for symmetric, possibly
/// indefinite systems, started from zero. Always returns the last iterate.
pub fn minres(op: &SymmetricOperator, b: &[f64], settings: &MinresSettings) -> (Vec<f64>, LinearSolveReport) {
    let n = b.len();
    let minv = jacobi(op);
    let psolve = |r: &[f64]| -> Vec<f64> { r.iter().zip(&minv).map(|(a, m)| a * m).collect() };

    let mut x = vec![0.0; n];
    let mut report = LinearSolveReport::default();
    let mut r1 = b.to_vec();
    let mut y = psolve(&r1);
    let beta1 = dot(&r1, &y).sqrt();
    if beta1 == 0.0 || beta1 <= settings.tol {
        report.converged = true;
        report.residual = norm(b);
        return (x, report);
    }

    let eps = f64::EPSILON;
    let mut r2 = r1.clone();
    let mut w = vec![0.0; n];
    let mut w1 = vec![0.0; n];
    let mut w2 = vec![0.0; n];
    let mut v = vec![0.0; n];
    let mut av = vec![0.0; n];
    let (mut oldb, mut beta) = (0.0, beta1);
    let (mut dbar, mut epsln, mut phibar) = (0.0, 0.0, beta1);
    let (mut cs, mut sn) = (-1.0f64, 0.0f64);

    for itn in 1..=settings.max_iterations {
        let s = 1.0 / beta;
        for (vi, yi) in v.iter_mut().zip(&y) {
            *vi = s * yi;
        }
        op.apply(&v, &mut av);
        if itn >= 2 {
            let f = beta / oldb;
            for (a, r) in av.iter_mut().zip(&r1) {
                *a -= f * r;
            }
        }
        let alfa = dot(&v, &av);
        let f = alfa / beta;
        for (a, r) in av.iter_mut().zip(&r2) {
            *a -= f * r;
        }
        std::mem::swap(&mut r1, &mut r2);
        r2.copy_from_slice(&av);
        y = psolve(&r2);
        oldb = beta;
        let bb = dot(&r2, &y);
        beta = bb.max(0.0).sqrt();

        let oldeps = epsln;
        let delta = cs * dbar + sn * alfa;
        let gbar = sn * dbar - cs * alfa;
        epsln = sn * beta;
        dbar = -cs * beta;
        let gamma = gbar.hypot(beta).max(eps);
        cs = gbar / gamma;
        sn = beta / gamma;
        let phi = cs * phibar;
        phibar *= sn;

        let denom = 1.0 / gamma;
        std::mem::swap(&mut w1, &mut w2);
        std::mem::swap(&mut w2, &mut w);
        for i in 0..n {
            w[i] = (v[i] - oldeps * w1[i] - delta * w2[i]) * denom;
            x[i] += phi * w[i];
        }

        report.iterations = itn;
        report.history.push(phibar);
        if phibar <= settings.tol || beta == 0.0 {
            report.converged = true;
            break;
        }
    }
    let ax = op.mul_vec(&x);
    report.residual = b.iter().zip(&ax).map(|(bi, ai)| (bi - ai) * (bi - ai)).sum::<f64>().sqrt();
    (x, report)
}

/// Solves `A x = b` to a preconditioned residual norm `tol`, failing if the
/// iteration limit is hit first.
pub fn linear_solve(op: &SymmetricOperator, rhs: &[f64], tol: f64) -> Result<Vec<f64>> {
    if rhs.len() != op.dim() {
        return Err(Error::LengthMismatch { expected: op.dim(), found: rhs.len() });
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!("tolerance must be positive, got {tol}")));
    }
    let (x, report) = minres(op, rhs, &MinresSettings::new(tol, op.dim()));
    if !report.converged {
        return Err(Error::LinearSolve {
            iterations: report.iterations,
            residual: report.history.last().copied().unwrap_or(f64::NAN),
        });
    }
    Ok(x)
}
