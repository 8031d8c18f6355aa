use serde::{Deserialize, Serialize};

use super::minres::{minres, MinresSettings};
use super::norm;
use crate::dd::Dd;
use crate::discretization::Problem;
use crate::error::{Error, Result};
use crate::spline::FieldCoefficients;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NewtonSettings {
    pub residual_abs_tol: f64,
    pub max_iterations: usize,
    /// Sufficient-decrease constant of the backtracking rule.
    pub sufficient_decrease: f64,
    pub min_step: f64,
    /// Inner solve stops at `linear_rel_tol · ‖r‖` (preconditioned norm).
    pub linear_rel_tol: f64,
}

impl Default for NewtonSettings {
    fn default() -> Self {
        Self {
            residual_abs_tol: 1e-12,
            max_iterations: 200,
            sufficient_decrease: 1e-4,
            min_step: 1e-12,
            linear_rel_tol: 1e-10,
        }
    }
}

impl NewtonSettings {
    pub fn one_d() -> Self {
        Self { residual_abs_tol: 1e-13, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [self.residual_abs_tol, self.sufficient_decrease, self.min_step, self.linear_rel_tol];
        if positive.iter().any(|v| !(*v > 0.0)) || self.sufficient_decrease >= 1.0 || self.max_iterations == 0 {
            return Err(Error::InvalidParameter(format!("invalid Newton settings {self:?}")));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum NewtonStatus {
    Converged,
    MaxIterations,
    LineSearchStagnation,
    NonFinite,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NewtonReport {
    pub status: NewtonStatus,
    pub iterations: usize,
    pub residual_norm: f64,
    pub energy: f64,
    /// Residual norm before each iteration and at exit.
    pub residual_history: Vec<f64>,
    /// Accepted step length per iteration.
    pub step_lengths: Vec<f64>,
    pub linear_iterations: Vec<usize>,
}

impl NewtonReport {
    pub fn converged(&self) -> bool {
        self.status == NewtonStatus::Converged
    }
}

/// Newton's method on the free coefficients with a cubic backtracking line
/// search on `½‖r‖²`. Stationary points of any index are admissible. On
/// failure the best iterate is returned together with the failure status.
pub fn newton_solve(
    problem: &Problem,
    initial: &FieldCoefficients,
    settings: &NewtonSettings,
) -> Result<(FieldCoefficients, NewtonReport)> {
    settings.validate()?;
    let cm = problem.constraints();
    if initial.values.len() != cm.dof_count() {
        return Err(Error::LengthMismatch { expected: cm.dof_count(), found: initial.values.len() });
    }
    let extended = problem.extended_precision();
    let mut x = cm.gather(&initial.values);
    let mut xl = if extended && !initial.low.is_empty() { cm.gather(&initial.low) } else { vec![0.0; x.len()] };
    let expand = |x: &[f64], xl: &[f64]| if extended { problem.expand_extended(x, xl) } else { problem.expand(x) };
    let mut u = expand(&x, &xl);
    let mut report = NewtonReport {
        status: NewtonStatus::MaxIterations,
        iterations: 0,
        residual_norm: f64::NAN,
        energy: f64::NAN,
        residual_history: Vec::new(),
        step_lengths: Vec::new(),
        linear_iterations: Vec::new(),
    };

    let finish = |u: FieldCoefficients, mut report: NewtonReport, status: NewtonStatus, rn: f64| {
        report.status = status;
        report.residual_norm = rn;
        report.energy = problem.total_energy(&u).unwrap_or(f64::NAN);
        report.residual_history.push(rn);
        (u, report)
    };

    let mut r = match problem.residual(&u) {
        Ok(r) => r,
        Err(_) => return Ok(finish(u, report, NewtonStatus::NonFinite, f64::NAN)),
    };
    let mut rn = norm(&r);
    for it in 0..settings.max_iterations {
        if rn <= settings.residual_abs_tol {
            return Ok(finish(u, report, NewtonStatus::Converged, rn));
        }
        report.residual_history.push(rn);
        report.iterations = it + 1;

        let k = match problem.hessian(&u) {
            Ok(k) => k,
            Err(_) => return Ok(finish(u, report, NewtonStatus::NonFinite, rn)),
        };
        let neg: Vec<f64> = r.iter().map(|v| -v).collect();
        let pre_norm = {
            let m = super::minres::jacobi(&k);
            neg.iter().zip(&m).map(|(a, b)| a * a * b).sum::<f64>().sqrt()
        };
        let (dx, lin) =
            minres(&k, &neg, &MinresSettings::new(settings.linear_rel_tol * pre_norm, k.dim()));
        report.linear_iterations.push(lin.iterations);
        let kdx = k.mul_vec(&dx);
        let slope: f64 = r.iter().zip(&kdx).map(|(a, b)| a * b).sum();

        let f0 = 0.5 * rn * rn;
        let mut lambda = 1.0;
        let mut prev: Option<(f64, f64)> = None;
        let accepted = loop {
            let (trial, trial_low): (Vec<f64>, Vec<f64>) = if extended {
                x.iter()
                    .zip(&xl)
                    .zip(&dx)
                    .map(|((a, al), b)| {
                        let s = Dd::new(*a, *al).add_f64(lambda * b);
                        (s.hi, s.lo)
                    })
                    .unzip()
            } else {
                (x.iter().zip(&dx).map(|(a, b)| a + lambda * b).collect(), Vec::new())
            };
            let ut = expand(&trial, &trial_low);
            let ft = match problem.residual(&ut) {
                Ok(rt) => Some((trial, trial_low, ut, rt)),
                Err(_) => None,
            };
            let fval = ft.as_ref().map_or(f64::INFINITY, |(_, _, _, rt)| 0.5 * norm(rt).powi(2));
            if fval <= f0 + settings.sufficient_decrease * lambda * slope.min(0.0) && ft.is_some() {
                break ft;
            }
            if lambda < settings.min_step {
                break None;
            }
            let next = if !fval.is_finite() {
                0.1 * lambda
            } else if slope >= 0.0 {
                0.5 * lambda
            } else {
                match prev {
                    None => -slope / (2.0 * (fval - f0 - slope)),
                    Some((lp, fp)) => {
                        let r1 = fval - f0 - lambda * slope;
                        let r2 = fp - f0 - lp * slope;
                        let a = (r1 / (lambda * lambda) - r2 / (lp * lp)) / (lambda - lp);
                        let b = (-lp * r1 / (lambda * lambda) + lambda * r2 / (lp * lp)) / (lambda - lp);
                        if a == 0.0 {
                            -slope / (2.0 * b)
                        } else {
                            let disc = b * b - 3.0 * a * slope;
                            if disc < 0.0 {
                                0.5 * lambda
                            } else if b <= 0.0 {
                                (-b + disc.sqrt()) / (3.0 * a)
                            } else {
                                -slope / (b + disc.sqrt())
                            }
                        }
                    }
                }
            };
            prev = Some((lambda, fval));
            let next = if next.is_finite() { next } else { 0.5 * lambda };
            lambda = next.clamp(0.1 * lambda, 0.5 * lambda);
        };
        match accepted {
            Some((trial, trial_low, ut, rt)) => {
                report.step_lengths.push(lambda);
                x = trial;
                if extended {
                    xl = trial_low;
                }
                u = ut;
                r = rt;
                rn = norm(&r);
                log::debug!("newton {it}: |r| = {rn:.3e}, step {lambda:.3e}, minres {}", lin.iterations);
            }
            None => return Ok(finish(u, report, NewtonStatus::LineSearchStagnation, rn)),
        }
    }
    if rn <= settings.residual_abs_tol {
        return Ok(finish(u, report, NewtonStatus::Converged, rn));
    }
    Ok(finish(u, report, NewtonStatus::MaxIterations, rn))
}
