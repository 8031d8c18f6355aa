use super::{Model, Problem, SymmetricOperator};
use crate::material::{kin3_grad_index, kin3_hess_index, response_1d, response_3d, PointResponse, KIN3};
use crate::dd::Dd;
use crate::spline::SplineSpace;
use rayon::prelude::*;

/// Elements evaluated in parallel per batch; results are scattered in
/// element order so sums do not depend on the thread count.
const BATCH: usize = 128;

#[derive(Clone, Copy, PartialEq, Eq)]
enum Mode {
    Energy,
    Residual,
    Hessian,
}

struct ElementOutput {
    dofs: Vec<usize>,
    energy: f64,
    residual: Vec<f64>,
    /// Row-major, upper triangle filled.
    hessian: Vec<f64>,
}

/// Gradient and the six distinct second derivatives of one basis function.
#[derive(Clone, Copy, Default)]
struct Derivs {
    grad: [f64; 3],
    hess: [f64; 6],
}

fn local_nodes(space: &SplineSpace, element: usize) -> Vec<usize> {
    let p = space.degree();
    let em = space.element_multi_index(element);
    if space.dim() == 1 {
        return (em[0]..=em[0] + p).collect();
    }
    let mut nodes = Vec::with_capacity((p + 1).pow(3));
    for c in 0..=p {
        for b in 0..=p {
            for a in 0..=p {
                nodes.push(space.node_index([em[0] + a, em[1] + b, em[2] + c]));
            }
        }
    }
    nodes
}

/// Quadrature weight and basis derivatives at every Gauss point of an element.
fn quadrature_points(problem: &Problem, element: usize) -> Vec<(f64, Vec<Derivs>)> {
    let space = problem.space();
    let t = problem.tables();
    let em = space.element_multi_index(element);
    let nq = t.weights.len();
    if space.dim() == 1 {
        return (0..nq)
            .map(|q| {
                let d = t.values[em[0]][q]
                    .iter()
                    .map(|v| Derivs { grad: [v[1], 0.0, 0.0], hess: [v[2], 0.0, 0.0, 0.0, 0.0, 0.0] })
                    .collect();
                (t.weights[q], d)
            })
            .collect();
    }
    let mut out = Vec::with_capacity(nq * nq * nq);
    for q3 in 0..nq {
        for q2 in 0..nq {
            for q1 in 0..nq {
                let (vx, vy, vz) = (&t.values[em[0]][q1], &t.values[em[1]][q2], &t.values[em[2]][q3]);
                let mut d = Vec::with_capacity(vx.len().pow(3));
                for z in vz {
                    for y in vy {
                        for x in vx {
                            d.push(Derivs {
                                grad: [x[1] * y[0] * z[0], x[0] * y[1] * z[0], x[0] * y[0] * z[1]],
                                hess: [
                                    x[2] * y[0] * z[0],
                                    x[0] * y[2] * z[0],
                                    x[0] * y[0] * z[2],
                                    x[0] * y[1] * z[1],
                                    x[1] * y[0] * z[1],
                                    x[1] * y[1] * z[0],
                                ],
                            });
                        }
                    }
                }
                out.push((t.weights[q1] * t.weights[q2] * t.weights[q3], d));
            }
        }
    }
    out
}

/// Integrates the energy density over one element through the kinematic
/// vector `z`, which is linear in the coefficients. `rows(c, d)` gives the
/// entries of `∂z/∂(coefficient)` for component `c`.
fn integrate<const N: usize, const R: usize>(
    local: &[f64],
    comps: usize,
    points: &[(f64, Vec<Derivs>)],
    rows: impl Fn(usize, &Derivs) -> [(usize, f64); R],
    response: impl Fn(&[f64; N], bool) -> PointResponse<N>,
    mode: Mode,
) -> (f64, Vec<f64>, Vec<f64>) {
    let m = local.len();
    let mut energy = 0.0;
    let mut res = if mode == Mode::Energy { Vec::new() } else { vec![0.0; m] };
    let mut hes = if mode == Mode::Hessian { vec![0.0; m * m] } else { Vec::new() };
    let mut dz: Vec<[(usize, f64); R]> = Vec::with_capacity(m);
    let mut t = vec![0.0; N];
    for (w, derivs) in points {
        dz.clear();
        for d in derivs {
            for c in 0..comps {
                dz.push(rows(c, d));
            }
        }
        let mut z = [0.0; N];
        for (a, r) in dz.iter().enumerate() {
            let ca = local[a];
            if ca != 0.0 {
                for &(alpha, v) in r {
                    z[alpha] += ca * v;
                }
            }
        }
        let resp = response(&z, mode == Mode::Hessian);
        energy += w * resp.energy;
        if mode == Mode::Energy {
            continue;
        }
        for (a, r) in dz.iter().enumerate() {
            res[a] += w * r.iter().map(|&(alpha, v)| resp.grad[alpha] * v).sum::<f64>();
        }
        if let Some(dd) = resp.hess {
            for b in 0..m {
                t.iter_mut().for_each(|x| *x = 0.0);
                for &(beta, v) in &dz[b] {
                    for (alpha, x) in t.iter_mut().enumerate() {
                        *x += dd[alpha][beta] * v;
                    }
                }
                for a in 0..=b {
                    let s: f64 = dz[a].iter().map(|&(alpha, v)| v * t[alpha]).sum();
                    hes[a * m + b] += w * s;
                }
            }
        }
    }
    (energy, res, hes)
}

fn rows_1d(_c: usize, d: &Derivs) -> [(usize, f64); 2] {
    [(0, d.grad[0]), (1, d.hess[0])]
}

fn rows_3d(c: usize, d: &Derivs) -> [(usize, f64); 9] {
    let mut r = [(0, 0.0); 9];
    for j in 0..3 {
        r[j] = (kin3_grad_index(c, j), d.grad[j]);
    }
    for s in 0..6 {
        r[3 + s] = (kin3_hess_index(c, s), d.hess[s]);
    }
    r
}

fn element(problem: &Problem, full: &[f64], e: usize, mode: Mode) -> ElementOutput {
    let space = problem.space();
    let comps = space.components();
    let nodes = local_nodes(space, e);
    let dofs: Vec<usize> =
        nodes.iter().flat_map(|&n| (0..comps).map(move |c| space.dof_index(n, c))).collect();
    let local: Vec<f64> = dofs.iter().map(|&d| full[d]).collect();
    let points = quadrature_points(problem, e);
    let (energy, residual, hessian) = match problem.model() {
        Model::OneD(p) => integrate::<2, 2>(&local, comps, &points, rows_1d, |z, h| response_1d(z, p, h), mode),
        Model::ThreeD(p) => {
            integrate::<KIN3, 9>(&local, comps, &points, rows_3d, |z, h| response_3d(z, p, h), mode)
        }
    };
    ElementOutput { dofs, energy, residual, hessian }
}

fn for_each_element(problem: &Problem, full: &[f64], mode: Mode, mut sink: impl FnMut(ElementOutput)) {
    let n = problem.space().element_count();
    let mut start = 0;
    while start < n {
        let end = (start + BATCH).min(n);
        let batch: Vec<ElementOutput> =
            (start..end).into_par_iter().map(|e| element(problem, full, e, mode)).collect();
        batch.into_iter().for_each(&mut sink);
        start = end;
    }
}

pub(super) fn energy(problem: &Problem, full: &[f64]) -> f64 {
    let mut total = 0.0;
    for_each_element(problem, full, Mode::Energy, |o| total += o.energy);
    total
}

pub(super) fn residual(problem: &Problem, full: &[f64]) -> Vec<f64> {
    let cm = problem.constraints();
    let mut r = vec![0.0; cm.free_count()];
    for_each_element(problem, full, Mode::Residual, |o| {
        for (&d, &v) in o.dofs.iter().zip(&o.residual) {
            if let Some(k) = cm.free_index(d) {
                r[k] += v;
            }
        }
    });
    r
}

pub(super) fn hessian(problem: &Problem, full: &[f64]) -> SymmetricOperator {
    let cm = problem.constraints();
    let mut k = problem.pattern().clone();
    for_each_element(problem, full, Mode::Hessian, |o| {
        let m = o.dofs.len();
        let free: Vec<Option<usize>> = o.dofs.iter().map(|&d| cm.free_index(d)).collect();
        for b in 0..m {
            let Some(fb) = free[b] else { continue };
            for a in 0..=b {
                let Some(fa) = free[a] else { continue };
                let v = o.hessian[a * m + b];
                let pos = k.position(fa, fb).expect("entry in sparsity pattern");
                k.add_at(pos, v);
                if fa != fb {
                    let pos = k.position(fb, fa).expect("entry in sparsity pattern");
                    k.add_at(pos, v);
                }
            }
        }
    });
    k
}

/// Sparsity pattern of the Hessian restricted to the free dofs: two dofs
/// couple when their basis functions share an element.
pub(super) fn pattern(problem: &Problem) -> SymmetricOperator {
    let space = problem.space();
    let cm = problem.constraints();
    let p = space.degree();
    let n = space.basis_per_direction();
    let comps = space.components();
    let dim = space.dim();
    let range = |i: usize| i.saturating_sub(p)..=(i + p).min(n - 1);
    let mut row_ptr = Vec::with_capacity(cm.free_count() + 1);
    let mut cols = Vec::new();
    row_ptr.push(0);
    for &dof in cm.free_dofs() {
        let node = dof / comps;
        let idx = [node % n, (node / n) % n, node / (n * n)];
        let (r2, r3) = if dim == 1 { (0..=0, 0..=0) } else { (range(idx[1]), range(idx[2])) };
        for j3 in r3 {
            for j2 in r2.clone() {
                for j1 in range(idx[0]) {
                    let other = if dim == 1 { j1 } else { space.node_index([j1, j2, j3]) };
                    for c in 0..comps {
                        if let Some(f) = cm.free_index(space.dof_index(other, c)) {
                            cols.push(f);
                        }
                    }
                }
            }
        }
        row_ptr.push(cols.len());
    }
    SymmetricOperator::from_pattern(cm.free_count(), row_ptr, cols)
}

/// One-dimensional energy and residual with coefficients and all sums in
/// double-double arithmetic. Coefficient rounding alone puts a floor of
/// `‖K‖·ulp(c)` on the residual of a double-only state.
pub(super) fn extended_1d(problem: &Problem, values: &[f64], low: &[f64], with_residual: bool) -> (f64, Vec<f64>) {
    let Model::OneD(params) = problem.model() else {
        unreachable!("extended path is one-dimensional")
    };
    let l2 = params.l * params.l;
    let space = problem.space();
    let t = problem.tables();
    let cm = problem.constraints();
    let p = space.degree();
    let coef = |i: usize| Dd::new(values[i], low.get(i).copied().unwrap_or(0.0));
    let mut energy = Dd::ZERO;
    let mut r = vec![Dd::ZERO; if with_residual { cm.free_count() } else { 0 }];
    let mut local = vec![Dd::ZERO; p + 1];
    for e in 0..space.elements_per_direction() {
        for (q, &w) in t.weights.iter().enumerate() {
            let nv = &t.values[e][q];
            let (mut ux, mut uxx) = (Dd::ZERO, Dd::ZERO);
            for (a, v) in nv.iter().enumerate() {
                let c = coef(e + a);
                ux = ux + c.mul_f64(v[1]);
                uxx = uxx + c.mul_f64(v[2]);
            }
            let ux2 = ux * ux;
            let psi = ux2 * ux2 - ux2.mul_f64(2.0) + (uxx * uxx).mul_f64(l2);
            energy = energy + psi.mul_f64(w);
            if with_residual {
                let stress = (ux2 * ux).mul_f64(4.0) - ux.mul_f64(4.0);
                let hyper = uxx.mul_f64(2.0 * l2);
                for (a, v) in nv.iter().enumerate() {
                    local[a] = (stress.mul_f64(v[1]) + hyper.mul_f64(v[2])).mul_f64(w);
                }
                for (a, c) in local.iter().enumerate() {
                    if let Some(k) = cm.free_index(e + a) {
                        r[k] = r[k] + *c;
                    }
                }
            }
        }
    }
    (energy.to_f64(), r.into_iter().map(Dd::to_f64).collect())
}
