use gradelast::continuation::{make_initial_guess, InitialGuess};
use gradelast::discretization::{apply_constraints, BoundaryConditions, Model, Problem};
use gradelast::material::{MaterialParams1D, MaterialParams3D};
use gradelast::spline::{knot_vector, FieldCoefficients, SplineSpace};

fn one_d(elements: usize, l: f64, d: f64) -> Problem {
    Problem::new(
        SplineSpace::new(1, 4, elements, 1).unwrap(),
        Model::OneD(MaterialParams1D::new(l).unwrap()),
        BoundaryConditions::OneD { d },
    )
    .unwrap()
}

fn three_d(elements: usize, t: f64) -> Problem {
    Problem::new(
        SplineSpace::new(3, 2, elements, 3).unwrap(),
        Model::ThreeD(MaterialParams3D::from_b5(180.0, 0.25, 0.1).unwrap()),
        BoundaryConditions::ThreeD { t2: t, t3: t },
    )
    .unwrap()
}

#[test]
fn rest_state_has_zero_energy_and_residual() {
    let p = one_d(16, 0.3, 0.0);
    let u = FieldCoefficients::zeros(p.space());
    assert_eq!(p.total_energy(&u).unwrap(), 0.0);
    assert!(p.residual(&u).unwrap().iter().all(|r| *r == 0.0));

    let p = three_d(2, 0.01);
    let u = FieldCoefficients::zeros(p.space());
    assert_eq!(p.total_energy(&u).unwrap(), 0.0);
    let p = three_d(2, 0.0);
    assert!(p.residual(&u).unwrap().iter().all(|r| *r == 0.0));
}

/// Coefficients of `X²` from its polar form evaluated at the interior knots
/// of each basis function.
fn quadratic_coefficients(degree: usize, elements: usize) -> Vec<f64> {
    let t = knot_vector(degree, elements);
    let n = elements + degree;
    (0..n)
        .map(|i| {
            let x = &t[i + 1..i + 1 + degree];
            let mut s = 0.0;
            for a in 0..degree {
                for b in a + 1..degree {
                    s += x[a] * x[b];
                }
            }
            2.0 * s / (degree * (degree - 1)) as f64
        })
        .collect()
}

#[test]
fn quadrature_is_exact_for_polynomial_fields() {
    for (elements, l) in [(1, 0.0), (5, 0.3), (32, 0.05)] {
        let p = one_d(elements, l, 0.0);
        let u = FieldCoefficients::from_values(p.space(), quadratic_coefficients(4, elements)).unwrap();
        for x in [0.0, 0.3, 0.77, 1.0] {
            assert!((u.evaluate(&[x]).unwrap().value[0] - x * x).abs() < 1e-14);
        }
        let exact = 16.0 / 5.0 - 8.0 / 3.0 + 4.0 * l * l;
        let e = p.total_energy(&u).unwrap();
        assert!((e - exact).abs() < 1e-12, "{e} vs {exact}");
    }
}

#[test]
fn constraint_counts() {
    let c = apply_constraints(&SplineSpace::new(1, 4, 1024, 1).unwrap(), &BoundaryConditions::OneD { d: 1.0 }).unwrap();
    assert_eq!((c.constrained_count(), c.free_count()), (4, 1024));
    let c = apply_constraints(
        &SplineSpace::new(3, 2, 8, 3).unwrap(),
        &BoundaryConditions::ThreeD { t2: 0.01, t3: 0.01 },
    )
    .unwrap();
    assert_eq!((c.constrained_count(), c.free_count()), (800, 2200));
}

#[test]
fn end_displacement_is_interpolated() {
    let d = 2f64.powi(-10);
    let p = one_d(64, 0.1, d);
    let u = make_initial_guess(&p, &InitialGuess::Random { seed: 9, magnitude: 0.1 }).unwrap();
    let end = u.evaluate(&[1.0]).unwrap();
    assert!((end.value[0] - d).abs() < 1e-15);
    assert!(end.grad[0][0].abs() < 1e-12);
    assert_eq!(u.evaluate(&[0.0]).unwrap().value[0], 0.0);
    assert_eq!(p.constraints().violation(&u.values), 0.0);
}

#[test]
fn hessians_are_exactly_symmetric() {
    let p = three_d(2, 0.01);
    let u = make_initial_guess(&p, &InitialGuess::Random { seed: 1, magnitude: 0.05 }).unwrap();
    assert_eq!(p.hessian(&u).unwrap().asymmetry(), 0.0);
    let p = one_d(16, 0.1, 0.001);
    let u = make_initial_guess(&p, &InitialGuess::Random { seed: 1, magnitude: 0.05 }).unwrap();
    assert_eq!(p.hessian(&u).unwrap().asymmetry(), 0.0);
}

#[test]
fn traction_does_work_on_the_loaded_face() {
    // a rigid translation u = (0, a, a) only changes the energy by −T·u·area
    let p = three_d(2, 0.01);
    let a = 1e-3;
    let mut values = vec![0.0; p.space().dof_count()];
    for (i, v) in values.iter_mut().enumerate() {
        if i % 3 != 0 {
            *v = a;
        }
    }
    let u = FieldCoefficients::from_values(p.space(), values).unwrap();
    let e = p.total_energy(&u).unwrap();
    assert!((e + 2.0 * 0.01 * a).abs() < 1e-15, "{e}");
}

#[test]
fn assembly_is_bit_reproducible_across_thread_counts() {
    let p = three_d(3, 0.01);
    let u = make_initial_guess(&p, &InitialGuess::Random { seed: 4, magnitude: 0.05 }).unwrap();
    let run = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| (p.total_energy(&u).unwrap(), p.residual(&u).unwrap(), p.hessian(&u).unwrap().to_dense()))
    };
    let (e1, r1, k1) = run(1);
    let (e4, r4, k4) = run(4);
    assert_eq!(e1.to_bits(), e4.to_bits());
    assert!(r1.iter().zip(&r4).all(|(a, b)| a.to_bits() == b.to_bits()));
    assert!(k1.iter().zip(&k4).all(|(a, b)| a.to_bits() == b.to_bits()));
}
