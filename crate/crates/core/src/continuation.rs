//! Branch tracking over the material parameters.
//!
//! A branch is followed by solving at an incremented parameter value from
//! the previous solution. Failed steps are halved a bounded number of times
//! before the branch is declared lost.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::discretization::{BoundaryConditions, Problem};
use crate::error::{Error, Result};
use crate::solvers::{newton_solve, smallest_eigs, EigenSettings, NewtonReport, NewtonSettings};
use crate::spline::{refine_uniform, FieldCoefficients, SplineSpace};

/// Tracked parameter of a schedule leg.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Param {
    B5,
    L,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Leg {
    pub vary: Param,
    pub target: f64,
    /// Step magnitude; the sign is taken from the direction of the target.
    pub step: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Schedule {
    pub legs: Vec<Leg>,
}

impl Schedule {
    pub fn new(legs: Vec<Leg>) -> Result<Self> {
        let s = Self { legs };
        s.validate()?;
        Ok(s)
    }

    /// Legs through a list of `(B5, l)` waypoints starting at `start`; each
    /// consecutive pair must differ in exactly one parameter.
    pub fn through(start: (f64, f64), waypoints: &[(f64, f64)], db5: f64, dl: f64) -> Result<Self> {
        let mut legs = Vec::new();
        let mut at = start;
        for &w in waypoints {
            let leg = match (w.0 != at.0, w.1 != at.1) {
                (true, false) => Leg { vary: Param::B5, target: w.0, step: db5 },
                (false, true) => Leg { vary: Param::L, target: w.1, step: dl },
                (false, false) => continue,
                (true, true) => {
                    return Err(Error::InvalidParameter(format!(
                        "waypoint {w:?} changes both B5 and l from {at:?}"
                    )))
                }
            };
            legs.push(leg);
            at = w;
        }
        Self::new(legs)
    }

    pub fn validate(&self) -> Result<()> {
        for leg in &self.legs {
            if !(leg.step > 0.0 && leg.step.is_finite()) || !leg.target.is_finite() {
                return Err(Error::InvalidParameter(format!("invalid schedule leg {leg:?}")));
            }
            if leg.vary == Param::L && leg.target < 0.0 {
                return Err(Error::InvalidParameter(format!("negative length scale target in {leg:?}")));
            }
        }
        Ok(())
    }
}

fn default_magnitude() -> f64 {
    1e-2
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum InitialGuess {
    Homogeneous,
    Random {
        seed: u64,
        #[serde(default = "default_magnitude")]
        magnitude: f64,
    },
}

impl InitialGuess {
    pub fn validate(&self) -> Result<()> {
        if let InitialGuess::Random { magnitude, .. } = self {
            if !(*magnitude > 0.0 && magnitude.is_finite()) {
                return Err(Error::InvalidParameter(format!("random guess magnitude {magnitude} must be > 0")));
            }
        }
        Ok(())
    }
}

/// Admissible starting field: constrained coefficients at their prescribed
/// values, free ones zero or i.i.d. uniform in `[-magnitude, magnitude]`
/// from a ChaCha stream keyed by the seed.
pub fn make_initial_guess(problem: &Problem, spec: &InitialGuess) -> Result<FieldCoefficients> {
    spec.validate()?;
    let nf = problem.constraints().free_count();
    let free = match *spec {
        InitialGuess::Homogeneous => vec![0.0; nf],
        InitialGuess::Random { seed, magnitude } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..nf).map(|_| rng.gen_range(-magnitude..=magnitude)).collect()
        }
    };
    Ok(problem.expand(&free))
}

/// A converged equilibrium at fixed parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BranchPoint {
    pub b5: Option<f64>,
    pub l: f64,
    pub coeffs: FieldCoefficients,
    pub energy: f64,
    /// Ascending; empty until assessed.
    pub smallest_eigs: Vec<f64>,
    /// `None` until assessed.
    pub stable: Option<bool>,
    pub report: NewtonReport,
}

impl BranchPoint {
    pub fn converged(&self) -> bool {
        self.report.converged()
    }

    pub fn min_eig(&self) -> Option<f64> {
        self.smallest_eigs.first().copied()
    }
}

/// Problem at the parameters of a point.
pub fn problem_at(base: &Problem, b5: Option<f64>, l: f64) -> Result<Problem> {
    let mut model = base.model().with_l(l)?;
    if let Some(b5) = b5 {
        model = model.with_b5(b5)?;
    }
    base.with_model(model)
}

/// Newton solve at the parameters of `problem`, packaged as a point. The
/// point is returned even when Newton fails; check [`BranchPoint::converged`].
pub fn solve_point(problem: &Problem, initial: &FieldCoefficients, newton: &NewtonSettings) -> Result<BranchPoint> {
    let (coeffs, report) = newton_solve(problem, initial, newton)?;
    Ok(BranchPoint {
        b5: problem.model().b5(),
        l: problem.model().l(),
        energy: report.energy,
        coeffs,
        smallest_eigs: Vec::new(),
        stable: None,
        report,
    })
}

/// Fills in the smallest Hessian eigenvalues and the stability flag.
pub fn assess_stability(problem: &Problem, point: &BranchPoint, eig: &EigenSettings) -> Result<BranchPoint> {
    let p = problem_at(problem, point.b5, point.l)?;
    let k = p.hessian(&point.coeffs)?;
    let res = smallest_eigs(&k, eig)?;
    let mut out = point.clone();
    out.stable = Some(res.values.iter().all(|v| *v > 0.0));
    out.smallest_eigs = res.values;
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrackSettings {
    pub newton: NewtonSettings,
    /// Eigenvalues at every recorded point when set.
    pub eigen: Option<EigenSettings>,
    /// Halvings of the step allowed before the branch counts as lost.
    pub max_bisections: usize,
    /// Adjacent energy changes above this multiple of the median change are
    /// flagged as suspected branch switches.
    pub jump_factor: f64,
}

impl Default for TrackSettings {
    fn default() -> Self {
        Self { newton: NewtonSettings::default(), eigen: None, max_bisections: 6, jump_factor: 10.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BranchLoss {
    pub leg: usize,
    /// Parameter value of the last failed attempt.
    pub at: f64,
    pub reason: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub space: SplineSpace,
    pub bcs: BoundaryConditions,
    pub guess: Option<InitialGuess>,
    pub schedule: Schedule,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BranchCurve {
    pub points: Vec<BranchPoint>,
    /// Leg index of every point (the start point has none).
    pub legs: Vec<Option<usize>>,
    pub lost: Option<BranchLoss>,
    /// Indices `i` where the change from point `i-1` to `i` is a suspected jump.
    pub jumps: Vec<usize>,
    pub provenance: Provenance,
}

impl BranchCurve {
    pub fn complete(&self) -> bool {
        self.lost.is_none()
    }

    pub fn last(&self) -> &BranchPoint {
        self.points.last().expect("curve holds at least its start point")
    }
}

fn param_of(point: &BranchPoint, vary: Param) -> Result<f64> {
    match vary {
        Param::L => Ok(point.l),
        Param::B5 => point.b5.ok_or_else(|| Error::InvalidParameter("B5 leg on a 1D problem".into())),
    }
}

/// Follows the branch of `start` along `schedule`.
pub fn track_branch(
    problem: &Problem,
    start: BranchPoint,
    schedule: &Schedule,
    settings: &TrackSettings,
    guess: Option<InitialGuess>,
) -> Result<BranchCurve> {
    schedule.validate()?;
    let mut start = start;
    if let (Some(eig), true) = (&settings.eigen, start.smallest_eigs.is_empty()) {
        start = assess_stability(problem, &start, eig)?;
    }
    let mut curve = BranchCurve {
        points: vec![start],
        legs: vec![None],
        lost: None,
        jumps: Vec::new(),
        provenance: Provenance {
            space: problem.space().clone(),
            bcs: *problem.bcs(),
            guess,
            schedule: schedule.clone(),
        },
    };

    'legs: for (li, leg) in schedule.legs.iter().enumerate() {
        let mut step = leg.step;
        let mut depth = 0;
        loop {
            let prev = curve.last();
            let current = param_of(prev, leg.vary)?;
            let gap = leg.target - current;
            if gap.abs() <= 1e-12 * leg.target.abs().max(1.0) {
                break;
            }
            let next = if gap.abs() <= step { leg.target } else { current + step.copysign(gap) };
            let (b5, l) = match leg.vary {
                Param::L => (prev.b5, next),
                Param::B5 => (Some(next), prev.l),
            };
            let p = problem_at(problem, b5, l)?;
            let point = solve_point(&p, &prev.coeffs, &settings.newton)?;
            if point.converged() {
                let point = match &settings.eigen {
                    Some(eig) => assess_stability(problem, &point, eig)?,
                    None => point,
                };
                log::info!("leg {li}: b5 {:?} l {:.6} energy {:.12e}", point.b5, point.l, point.energy);
                curve.points.push(point);
                curve.legs.push(Some(li));
                if depth > 0 {
                    depth -= 1;
                    step = (2.0 * step).min(leg.step);
                }
            } else if depth < settings.max_bisections {
                depth += 1;
                step *= 0.5;
                log::warn!("leg {li}: no convergence at {next}; halving step to {step}");
            } else {
                curve.lost = Some(BranchLoss {
                    leg: li,
                    at: next,
                    reason: format!("{:?} after {} halvings", point.report.status, depth),
                });
                break 'legs;
            }
        }
    }
    curve.jumps = energy_jumps(&curve.points, settings.jump_factor);
    Ok(curve)
}

/// Indices whose energy change from the previous point exceeds
/// `factor` times the median absolute change.
pub fn energy_jumps(points: &[BranchPoint], factor: f64) -> Vec<usize> {
    if points.len() < 3 {
        return Vec::new();
    }
    let deltas: Vec<f64> = points.windows(2).map(|w| (w[1].energy - w[0].energy).abs()).collect();
    let mut sorted = deltas.clone();
    sorted.sort_by(f64::total_cmp);
    let median = sorted[sorted.len() / 2];
    if median == 0.0 {
        return Vec::new();
    }
    deltas.iter().enumerate().filter(|(_, d)| **d > factor * median).map(|(i, _)| i + 1).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Refined {
    /// Transferred field on the fine space, before re-solving.
    pub transferred: BranchPoint,
    pub resolved: BranchPoint,
    pub energy_before: f64,
    pub energy_after: f64,
}

/// Refines a point `levels` times by knot insertion and re-solves on the fine
/// space at the same parameters.
pub fn refine_and_resolve(
    problem: &Problem,
    point: &BranchPoint,
    levels: usize,
    newton: &NewtonSettings,
) -> Result<(Problem, Refined)> {
    let mut coeffs = point.coeffs.clone();
    for _ in 0..levels {
        coeffs = refine_uniform(&coeffs).1;
    }
    let coarse = problem_at(problem, point.b5, point.l)?;
    let fine = Problem::new(coeffs.space.clone(), *coarse.model(), *coarse.bcs())?;
    let energy_before = fine.total_energy(&coeffs)?;
    let transferred = BranchPoint {
        coeffs: coeffs.clone(),
        energy: energy_before,
        smallest_eigs: Vec::new(),
        stable: None,
        ..point.clone()
    };
    let resolved = if levels == 0 { point.clone() } else { solve_point(&fine, &coeffs, newton)? };
    let energy_after = resolved.energy;
    Ok((fine, Refined { transferred, resolved, energy_before, energy_after }))
}

/// Largest coefficient difference between two fields on the same space.
pub fn coefficient_distance(a: &FieldCoefficients, b: &FieldCoefficients) -> f64 {
    a.values.iter().zip(&b.values).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Image of a 1D field under `X ↦ 1 − X`, `u ↦ d − u`, the symmetry of the
/// boundary value problem. On the uniform clamped basis this reverses and
/// reflects the coefficients.
pub fn reflect_1d(u: &FieldCoefficients, d: f64) -> FieldCoefficients {
    let mut out = u.clone();
    out.values = u.values.iter().rev().map(|c| d - c).collect();
    out.low = u.low.iter().rev().map(|c| -c).collect();
    out
}

/// Whether two 1D solutions coincide up to the reflection symmetry.
pub fn same_up_to_symmetry(a: &FieldCoefficients, b: &FieldCoefficients, d: f64, tol: f64) -> bool {
    coefficient_distance(a, b) <= tol || coefficient_distance(a, &reflect_1d(b, d)) <= tol
}

/// Outcome of locating where a tracked branch stops being distinct from a
/// reference branch, or where two energies cross.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    /// Largest parameter value known to satisfy the predicate.
    pub lo: f64,
    /// Smallest value known to violate it.
    pub hi: f64,
    pub evaluations: usize,
}

impl Transition {
    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }
}

/// Bisection for the boundary of a predicate that holds at `lo` and fails at
/// `hi` (either ordering of the two values), stopping once the bracket is
/// narrower than `tol`. The predicate may keep state between calls, such as
/// the last solution on the side where it held.
pub fn bisect_transition(
    mut lo: f64,
    mut hi: f64,
    tol: f64,
    mut holds: impl FnMut(f64) -> Result<bool>,
) -> Result<Transition> {
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter("bisection tolerance must be positive".into()));
    }
    let mut evaluations = 0;
    while (hi - lo).abs() > tol {
        let mid = 0.5 * (lo + hi);
        evaluations += 1;
        if holds(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(Transition { lo, hi, evaluations })
}
