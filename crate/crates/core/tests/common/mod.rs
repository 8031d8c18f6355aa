//! Finite-difference oracles shared by the derivative tests and the
//! acceptance suite. Each returns the worst `‖a − fd‖_∞ / (‖a‖_∞ + 1)` over
//! its random states.
#![allow(dead_code)]

use gradelast::continuation::{make_initial_guess, InitialGuess};
use gradelast::discretization::{BoundaryConditions, Model, Problem};
use gradelast::material::*;
use gradelast::spline::SplineSpace;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn max_abs(v: impl IntoIterator<Item = f64>) -> f64 {
    v.into_iter().fold(0.0, |m, x| m.max(x.abs()))
}

pub fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    max_abs(a.iter().zip(b).map(|(x, y)| x - y)) / (max_abs(a.iter().copied()) + 1.0)
}

pub fn random_state(rng: &mut ChaCha8Rng) -> (PointState3D, MaterialParams3D) {
    let mut f = [[0.0; 3]; 3];
    let mut g = [[[0.0; 3]; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            f[i][j] = if i == j { 1.0 } else { 0.0 } + rng.gen_range(-0.2..0.2);
            for k in j..3 {
                let v = rng.gen_range(-1.0..1.0);
                g[i][j][k] = v;
                g[i][k][j] = v;
            }
        }
    }
    let p = MaterialParams3D::from_b5(rng.gen_range(100.0..500.0), 0.25, rng.gen_range(0.05..0.5)).unwrap();
    (PointState3D::new(f, g), p)
}

fn perturb_f(s: &PointState3D, i: usize, j: usize, h: f64) -> PointState3D {
    let mut f = s.f;
    f[i][j] += h;
    PointState3D::new(f, s.grad_f)
}

/// Symmetric perturbation of `G_{iJK}` and `G_{iKJ}`.
fn perturb_g(s: &PointState3D, i: usize, j: usize, k: usize, h: f64) -> PointState3D {
    let mut g = s.grad_f;
    g[i][j][k] += h;
    if j != k {
        g[i][k][j] += h;
    }
    PointState3D::new(s.f, g)
}

fn flat_stress(s: &PointState3D, p: &MaterialParams3D) -> Vec<f64> {
    let (pp, b) = stresses_3d(s, p);
    pp.iter().flatten().copied().chain(b.iter().flatten().flatten().copied()).collect()
}

/// 1D stresses against FD of the energy (step 1e-6) and tangent against FD
/// of the stresses (step 1e-5).
pub fn one_d_point_errors(states: usize, seed: u64) -> (f64, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut ws, mut wt): (f64, f64) = (0.0, 0.0);
    for _ in 0..states {
        let (ux, uxx) = (rng.gen_range(-1.5..1.5), rng.gen_range(-5.0..5.0));
        let p = MaterialParams1D::new(rng.gen_range(0.0..0.5)).unwrap();
        let h = 1e-6;
        let (s, b) = stress_1d(ux, uxx, &p);
        let fs = (psi_1d(ux + h, uxx, &p) - psi_1d(ux - h, uxx, &p)) / (2.0 * h);
        let fb = (psi_1d(ux, uxx + h, &p) - psi_1d(ux, uxx - h, &p)) / (2.0 * h);
        ws = ws.max(rel_err(&[s, b], &[fs, fb]));
        let k = hess_1d(ux, uxx, &p);
        let h = 1e-5;
        let (sp, bp) = stress_1d(ux + h, uxx, &p);
        let (sm, bm) = stress_1d(ux - h, uxx, &p);
        let (sq, bq) = stress_1d(ux, uxx + h, &p);
        let (sr, br) = stress_1d(ux, uxx - h, &p);
        let fd = [(sp - sm) / (2.0 * h), (sq - sr) / (2.0 * h), (bp - bm) / (2.0 * h), (bq - br) / (2.0 * h)];
        wt = wt.max(rel_err(&[k[0][0], k[0][1], k[1][0], k[1][1]], &fd));
    }
    (ws, wt)
}

/// `P` and `B` against central FD of `Ψ`, step 1e-6.
pub fn three_d_stress_error(states: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let h = 1e-6;
    let mut worst: f64 = 0.0;
    for _ in 0..states {
        let (s, p) = random_state(&mut rng);
        let (pk, b) = stresses_3d(&s, &p);
        let mut analytic = Vec::new();
        let mut fd = Vec::new();
        for i in 0..3 {
            for j in 0..3 {
                analytic.push(pk[i][j]);
                fd.push((psi_3d(&perturb_f(&s, i, j, h), &p) - psi_3d(&perturb_f(&s, i, j, -h), &p)) / (2.0 * h));
                for k in j..3 {
                    let mult = if j == k { 1.0 } else { 2.0 };
                    analytic.push(mult * b[i][j][k]);
                    fd.push(
                        (psi_3d(&perturb_g(&s, i, j, k, h), &p) - psi_3d(&perturb_g(&s, i, j, k, -h), &p)) / (2.0 * h),
                    );
                }
            }
        }
        worst = worst.max(rel_err(&analytic, &fd));
    }
    worst
}

/// All three tangent blocks against central FD of the stresses, step 1e-6.
/// The mixed block is checked both as `∂P/∂G` and as `∂B/∂F`.
pub fn three_d_tangent_error(states: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let h = 1e-6;
    let mut worst: f64 = 0.0;
    let diff = |a: Vec<f64>, b: Vec<f64>| -> Vec<f64> { a.iter().zip(b).map(|(x, y)| (x - y) / (2.0 * h)).collect() };
    for _ in 0..states {
        let (s, p) = random_state(&mut rng);
        let t = tangent_blocks_3d(&s, &p);
        let mut analytic = Vec::new();
        let mut fd = Vec::new();
        for j in 0..3 {
            for jj in 0..3 {
                let d = diff(flat_stress(&perturb_f(&s, j, jj, h), &p), flat_stress(&perturb_f(&s, j, jj, -h), &p));
                for i in 0..3 {
                    for ii in 0..3 {
                        analytic.push(t.pp[i][ii][j][jj]);
                        fd.push(d[3 * i + ii]);
                        for ll in 0..3 {
                            analytic.push(t.pb[j][jj][i][ii][ll]);
                            fd.push(d[9 + 9 * i + 3 * ii + ll]);
                        }
                    }
                }
                for k in jj..3 {
                    let mult = if jj == k { 1.0 } else { 2.0 };
                    let d = diff(
                        flat_stress(&perturb_g(&s, j, jj, k, h), &p),
                        flat_stress(&perturb_g(&s, j, jj, k, -h), &p),
                    );
                    for i in 0..3 {
                        for ii in 0..3 {
                            analytic.push(mult * t.pb[i][ii][j][jj][k]);
                            fd.push(d[3 * i + ii]);
                            for ll in 0..3 {
                                analytic.push(mult * t.bb[i][ii][ll][j][jj][k]);
                                fd.push(d[9 + 9 * i + 3 * ii + ll]);
                            }
                        }
                    }
                }
            }
        }
        worst = worst.max(rel_err(&analytic, &fd));
    }
    worst
}

/// Small 1D and 3D problems with the random-state magnitude used on each.
pub fn fd_problems() -> Vec<(Problem, f64)> {
    let p1 = Problem::new(
        SplineSpace::new(1, 4, 12, 1).unwrap(),
        Model::OneD(MaterialParams1D::new(0.1).unwrap()),
        BoundaryConditions::OneD { d: 2f64.powi(-10) },
    )
    .unwrap();
    let p3 = Problem::new(
        SplineSpace::new(3, 2, 2, 3).unwrap(),
        Model::ThreeD(MaterialParams3D::from_b5(180.0, 0.25, 0.2).unwrap()),
        BoundaryConditions::ThreeD { t2: 0.01, t3: 0.01 },
    )
    .unwrap();
    vec![(p1, 0.3), (p3, 0.05)]
}

/// Assembled residual against central FD of the total energy, step 1e-6.
pub fn residual_error(problem: &Problem, magnitude: f64, states: usize, seed: u64) -> f64 {
    let h = 1e-6;
    let mut worst: f64 = 0.0;
    for s in 0..states as u64 {
        let u = make_initial_guess(problem, &InitialGuess::Random { seed: seed + s, magnitude }).unwrap();
        let x = problem.constraints().gather(&u.values);
        let r = problem.residual(&u).unwrap();
        let fd: Vec<f64> = (0..x.len())
            .map(|k| {
                let mut xp = x.clone();
                xp[k] += h;
                let mut xm = x.clone();
                xm[k] -= h;
                let ep = problem.total_energy(&problem.expand(&xp)).unwrap();
                let em = problem.total_energy(&problem.expand(&xm)).unwrap();
                (ep - em) / (2.0 * h)
            })
            .collect();
        worst = worst.max(rel_err(&r, &fd));
    }
    worst
}

/// Assembled Hessian against column-wise central FD of the residual, step 1e-6.
pub fn hessian_error(problem: &Problem, magnitude: f64, states: usize, seed: u64) -> f64 {
    let h = 1e-6;
    let mut worst: f64 = 0.0;
    for s in 0..states as u64 {
        let u = make_initial_guess(problem, &InitialGuess::Random { seed: seed + s, magnitude }).unwrap();
        let x = problem.constraints().gather(&u.values);
        let k = problem.hessian(&u).unwrap();
        let n = x.len();
        let mut analytic = Vec::with_capacity(n * n);
        let mut fd = Vec::with_capacity(n * n);
        for c in 0..n {
            let mut xp = x.clone();
            xp[c] += h;
            let mut xm = x.clone();
            xm[c] -= h;
            let rp = problem.residual(&problem.expand(&xp)).unwrap();
            let rm = problem.residual(&problem.expand(&xm)).unwrap();
            let mut e = vec![0.0; n];
            e[c] = 1.0;
            analytic.extend(k.mul_vec(&e));
            fd.extend(rp.iter().zip(&rm).map(|(a, b)| (a - b) / (2.0 * h)));
        }
        worst = worst.max(rel_err(&analytic, &fd));
    }
    worst
}
