use gradelast::continuation::{make_initial_guess, InitialGuess};
use gradelast::discretization::{BoundaryConditions, Model, Problem, SymmetricOperator};
use gradelast::material::{MaterialParams1D, MaterialParams3D};
use gradelast::solvers::*;
use gradelast::spline::{FieldCoefficients, SplineSpace};
use nalgebra::{DMatrix, DVector, SymmetricEigen};

const D: f64 = 1.0 / 1024.0;

fn problem_1d(elements: usize, l: f64, d: f64) -> Problem {
    Problem::new(
        SplineSpace::new(1, 4, elements, 1).unwrap(),
        Model::OneD(MaterialParams1D::new(l).unwrap()),
        BoundaryConditions::OneD { d },
    )
    .unwrap()
}

fn problem_3d(elements: usize, b5: f64, l: f64) -> Problem {
    Problem::new(
        SplineSpace::new(3, 2, elements, 3).unwrap(),
        Model::ThreeD(MaterialParams3D::from_b5(b5, 0.25, l).unwrap()),
        BoundaryConditions::ThreeD { t2: 0.01, t3: 0.01 },
    )
    .unwrap()
}

fn dense_eigs(op: &SymmetricOperator) -> Vec<f64> {
    let n = op.dim();
    let m = DMatrix::from_row_slice(n, n, &op.to_dense());
    let mut v: Vec<f64> = SymmetricEigen::new(m).eigenvalues.iter().copied().collect();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    v
}

fn check_against_dense(op: &SymmetricOperator, k: usize) {
    let exact = dense_eigs(op);
    let res = smallest_eigs(op, &EigenSettings { k, ..EigenSettings::default() }).unwrap();
    assert_eq!(res.values.len(), k);
    assert_eq!(res.negative_count, exact.iter().filter(|v| **v < 0.0).count());
    for (a, b) in res.values.iter().zip(&exact) {
        assert!((a - b).abs() <= 1e-8 * b.abs().max(1.0), "{a} vs dense {b}");
        assert_eq!(*a > 0.0, *b > 0.0);
    }
}

#[test]
fn eigenvalues_match_dense_oracle_1d() {
    // small l: the gradient term cannot stabilize the double well at u ≡ 0
    let p = problem_1d(64, 0.01, D);
    let u = make_initial_guess(&p, &InitialGuess::Homogeneous).unwrap();
    let k = p.hessian(&u).unwrap();
    assert!(dense_eigs(&k)[0] < 0.0);
    check_against_dense(&k, 5);
    for seed in 0..5 {
        let u = make_initial_guess(&p, &InitialGuess::Random { seed, magnitude: 0.05 }).unwrap();
        check_against_dense(&p.hessian(&u).unwrap(), 4);
    }
}

#[test]
fn eigenvalues_match_dense_oracle_3d() {
    let p = problem_3d(3, 180.0, 0.1);
    assert!(p.constraints().free_count() <= 2000);
    for seed in 0..3 {
        let u = make_initial_guess(&p, &InitialGuess::Random { seed, magnitude: 0.02 }).unwrap();
        check_against_dense(&p.hessian(&u).unwrap(), 5);
    }
}

#[test]
fn shift_moves_every_eigenvalue() {
    let p = problem_1d(32, 0.05, D);
    let k = p.hessian(&make_initial_guess(&p, &InitialGuess::Homogeneous).unwrap()).unwrap();
    let s = EigenSettings { k: 4, ..EigenSettings::default() };
    let a = smallest_eigs(&k, &s).unwrap();
    let b = smallest_eigs(&k.shifted(0.75), &s).unwrap();
    for (x, y) in a.values.iter().zip(&b.values) {
        assert!((y - x - 0.75).abs() < 1e-8, "{x} {y}");
    }
}

#[test]
fn large_length_scale_is_positive_definite_at_rest() {
    let p = problem_1d(32, 10.0, D);
    let k = p.hessian(&make_initial_guess(&p, &InitialGuess::Homogeneous).unwrap()).unwrap();
    let r = smallest_eigs(&k, &EigenSettings { k: 1, ..EigenSettings::default() }).unwrap();
    assert!(r.values[0] > 0.0);
    assert_eq!(r.negative_count, 0);
}

#[test]
fn minres_matches_dense_solve_on_indefinite_hessian() {
    let p = problem_1d(24, 0.02, D);
    let u = make_initial_guess(&p, &InitialGuess::Random { seed: 7, magnitude: 0.1 }).unwrap();
    let k = p.hessian(&u).unwrap();
    assert!(dense_eigs(&k)[0] < 0.0);
    let b: Vec<f64> = (0..k.dim()).map(|i| ((i * 7) as f64).sin()).collect();
    let x = linear_solve(&k, &b, 1e-12).unwrap();
    let n = k.dim();
    let exact = DMatrix::from_row_slice(n, n, &k.to_dense()).lu().solve(&DVector::from_vec(b.clone())).unwrap();
    let scale = exact.amax();
    for (a, e) in x.iter().zip(exact.iter()) {
        assert!((a - e).abs() <= 1e-7 * scale, "{a} vs {e}");
    }
}

#[test]
fn newton_at_rest_needs_no_iterations() {
    let p = problem_1d(16, 0.2, 0.0);
    let (_, r) = newton_solve(&p, &FieldCoefficients::zeros(p.space()), &NewtonSettings::one_d()).unwrap();
    assert!(r.converged());
    assert_eq!(r.iterations, 0);
    assert_eq!(r.residual_norm, 0.0);
}

/// Stationary energy of the quadratic part `∫ −2w² + l²w_x²` with `w = u_x`,
/// `w(0) = w(1) = 0`, `∫w = d`: `w = C(cos(k/2) − cos(k(X − ½)))`, `k = √2/l`.
/// The neglected quartic term is `O(d⁴)`.
fn linearized_energy(l: f64, d: f64) -> f64 {
    let k = 2f64.sqrt() / l;
    let c = d / ((k / 2.0).cos() - (2.0 / k) * (k / 2.0).sin());
    let n = 200_000;
    let h = 1.0 / n as f64;
    // composite Simpson
    (0..=n)
        .map(|i| {
            let x = i as f64 * h;
            let w = c * ((k / 2.0).cos() - (k * (x - 0.5)).cos());
            let wx = c * k * (k * (x - 0.5)).sin();
            let f = -2.0 * w * w + l * l * wx * wx;
            let wt = if i == 0 || i == n { 1.0 } else if i % 2 == 1 { 4.0 } else { 2.0 };
            wt * f
        })
        .sum::<f64>()
        * h
        / 3.0
}

#[test]
fn newton_reproduces_smooth_single_well_profile() {
    let p = problem_1d(256, 0.5, D);
    let u0 = make_initial_guess(&p, &InitialGuess::Homogeneous).unwrap();
    let (u, r) = newton_solve(&p, &u0, &NewtonSettings::one_d()).unwrap();
    assert!(r.converged(), "{r:?}");
    assert!(r.residual_norm <= 1e-13);
    let oracle = linearized_energy(0.5, D);
    assert!((r.energy - oracle).abs() < 1e-10, "{} vs {oracle}", r.energy);
    let k = p.hessian(&u).unwrap();
    assert!(smallest_eigs(&k, &EigenSettings::default()).unwrap().values[0] > 0.0);
}

#[test]
fn newton_is_deterministic() {
    let p = problem_1d(64, 0.1, D);
    let u0 = make_initial_guess(&p, &InitialGuess::Random { seed: 3, magnitude: 0.05 }).unwrap();
    let (a, ra) = newton_solve(&p, &u0, &NewtonSettings::one_d()).unwrap();
    let (b, rb) = newton_solve(&p, &u0, &NewtonSettings::one_d()).unwrap();
    assert_eq!(ra, rb);
    assert!(a.values.iter().zip(&b.values).all(|(x, y)| x.to_bits() == y.to_bits()));
}

#[test]
fn line_search_respects_sufficient_decrease() {
    let p = problem_1d(64, 0.05, D);
    let u0 = make_initial_guess(&p, &InitialGuess::Random { seed: 11, magnitude: 0.05 }).unwrap();
    let s = NewtonSettings::one_d();
    let (_, r) = newton_solve(&p, &u0, &s).unwrap();
    // ½‖r‖² never increases between accepted iterates, converged or not
    for w in r.residual_history.windows(2) {
        assert!(w[1] <= w[0], "{:?}", r.residual_history);
    }
    let rejected = usize::from(r.status == NewtonStatus::LineSearchStagnation);
    assert_eq!(r.step_lengths.len() + rejected, r.iterations, "{r:?}");
    assert!(r.step_lengths.iter().all(|s| *s > 0.0 && *s <= 1.0));
}

#[test]
fn three_d_smoke_solve_at_high_modulus() {
    let p = problem_3d(8, 500.0, 0.54);
    let u0 = make_initial_guess(&p, &InitialGuess::Homogeneous).unwrap();
    let (u, r) = newton_solve(&p, &u0, &NewtonSettings::default()).unwrap();
    assert!(r.converged() && r.residual_norm <= 1e-12, "{r:?}");
    let tight = NewtonSettings { residual_abs_tol: 1e-13, ..NewtonSettings::default() };
    let (_, r2) = newton_solve(&p, &u, &tight).unwrap();
    assert!(r2.converged(), "{r2:?}");
    assert!((r2.energy - r.energy).abs() < 1e-10);
}
