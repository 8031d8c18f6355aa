//! Tensor-product B-spline spaces on the unit interval and the unit cube.
//!
//! Every space uses open (clamped) uniform knot vectors and the identity
//! geometry map, so parametric and physical coordinates coincide. Degrees of
//! freedom are numbered node-major with the component index running fastest:
//! `dof = node * components + c`, where `node = (i3 * n + i2) * n + i1` and
//! `i1` runs along `X1`.

mod basis1d;
mod quadrature;

pub use basis1d::{knot_vector, Basis1D};
pub use quadrature::gauss_legendre;

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// A tensor-product spline discretization.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplineSpace {
    dim: usize,
    degree: usize,
    elements: usize,
    components: usize,
}

impl SplineSpace {
    /// Builds a space of the given degree with `elements` uniform elements
    /// per direction. Continuity is C^(degree-1) everywhere.
    pub fn new(dim: usize, degree: usize, elements: usize, components: usize) -> Result<Self> {
        if dim != 1 && dim != 3 {
            return Err(Error::InvalidSpace(format!("dimension must be 1 or 3, got {dim}")));
        }
        if degree < 2 {
            return Err(Error::InvalidSpace(format!(
                "degree {degree} cannot provide C1 continuity (need degree >= 2)"
            )));
        }
        if elements == 0 {
            return Err(Error::InvalidSpace("at least one element per direction is required".into()));
        }
        if components == 0 {
            return Err(Error::InvalidSpace("at least one field component is required".into()));
        }
        Ok(Self { dim, degree, elements, components })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn continuity(&self) -> usize {
        self.degree - 1
    }

    pub fn elements_per_direction(&self) -> usize {
        self.elements
    }

    pub fn components(&self) -> usize {
        self.components
    }

    /// Univariate basis count, `elements + degree`.
    pub fn basis_per_direction(&self) -> usize {
        self.elements + self.degree
    }

    pub fn scalar_basis_count(&self) -> usize {
        self.basis_per_direction().pow(self.dim as u32)
    }

    pub fn dof_count(&self) -> usize {
        self.scalar_basis_count() * self.components
    }

    pub fn element_count(&self) -> usize {
        self.elements.pow(self.dim as u32)
    }

    pub fn basis_1d(&self) -> Basis1D {
        Basis1D::new(self.degree, self.elements)
    }

    /// Linear node index from a per-direction multi-index.
    pub fn node_index(&self, idx: [usize; 3]) -> usize {
        let n = self.basis_per_direction();
        match self.dim {
            1 => idx[0],
            _ => (idx[2] * n + idx[1]) * n + idx[0],
        }
    }

    pub fn dof_index(&self, node: usize, component: usize) -> usize {
        node * self.components + component
    }

    /// Per-direction element indices from a linear element index.
    pub fn element_multi_index(&self, element: usize) -> [usize; 3] {
        let n = self.elements;
        match self.dim {
            1 => [element, 0, 0],
            _ => [element % n, (element / n) % n, element / (n * n)],
        }
    }

    /// Space with twice as many elements per direction.
    pub fn refined(&self) -> Self {
        Self { elements: 2 * self.elements, ..self.clone() }
    }

    /// Locates the element containing `x` in one direction and the local
    /// coordinate within it. The right end point belongs to the last element.
    pub fn locate(&self, x: f64) -> Result<(usize, f64)> {
        if !(0.0..=1.0).contains(&x) {
            return Err(Error::OutOfRange(format!("coordinate {x} outside [0, 1]")));
        }
        let n = self.elements;
        let e = ((x * n as f64).floor() as usize).min(n - 1);
        Ok((e, x * n as f64 - e as f64))
    }
}

/// Control coefficients of a discrete displacement field.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FieldCoefficients {
    pub space: SplineSpace,
    pub values: Vec<f64>,
    /// Low-order parts when coefficients are carried as unevaluated sums
    /// `values + low` (double-double); empty otherwise.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub low: Vec<f64>,
}

impl FieldCoefficients {
    pub fn zeros(space: &SplineSpace) -> Self {
        Self { space: space.clone(), values: vec![0.0; space.dof_count()], low: Vec::new() }
    }

    pub fn from_values(space: &SplineSpace, values: Vec<f64>) -> Result<Self> {
        if values.len() != space.dof_count() {
            return Err(Error::LengthMismatch { expected: space.dof_count(), found: values.len() });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("field coefficients"));
        }
        Ok(Self { space: space.clone(), values, low: Vec::new() })
    }

    /// Low-order part of coefficient `i` (zero when not carried).
    pub fn low_at(&self, i: usize) -> f64 {
        self.low.get(i).copied().unwrap_or(0.0)
    }

    /// Value, gradient and Hessian of every component at a point of the
    /// closed unit domain.
    pub fn evaluate(&self, point: &[f64]) -> Result<PointValues> {
        let space = &self.space;
        if point.len() != space.dim() {
            return Err(Error::OutOfRange(format!(
                "point has {} coordinates, space is {}-dimensional",
                point.len(),
                space.dim()
            )));
        }
        let mut element = [0usize; 3];
        let mut local = [0.0; 3];
        for d in 0..space.dim() {
            let (e, xi) = space.locate(point[d])?;
            element[d] = e;
            local[d] = xi;
        }
        let table = eval_basis(space, space_linear_element(space, element), &local[..space.dim()], 2)?;
        Ok(table.contract(&self.values, space.components()))
    }
}

fn space_linear_element(space: &SplineSpace, e: [usize; 3]) -> usize {
    let n = space.elements_per_direction();
    match space.dim() {
        1 => e[0],
        _ => (e[2] * n + e[1]) * n + e[0],
    }
}

/// Field value and derivatives at one point, per component.
#[derive(Clone, Debug, PartialEq)]
pub struct PointValues {
    pub value: Vec<f64>,
    /// `grad[c][J] = u_{c,J}`
    pub grad: Vec<[f64; 3]>,
    /// `hess[c][J][K] = u_{c,JK}`
    pub hess: Vec<[[f64; 3]; 3]>,
}

/// Nonzero basis functions and their derivatives at one evaluation point.
#[derive(Clone, Debug)]
pub struct BasisTable {
    pub dim: usize,
    /// Linear scalar-basis (node) indices.
    pub indices: Vec<usize>,
    pub values: Vec<f64>,
    pub grads: Vec<[f64; 3]>,
    pub hessians: Vec<[[f64; 3]; 3]>,
}

impl BasisTable {
    pub fn contract(&self, coeffs: &[f64], components: usize) -> PointValues {
        let mut out = PointValues {
            value: vec![0.0; components],
            grad: vec![[0.0; 3]; components],
            hess: vec![[[0.0; 3]; 3]; components],
        };
        for (a, &node) in self.indices.iter().enumerate() {
            for c in 0..components {
                let u = coeffs[node * components + c];
                out.value[c] += u * self.values[a];
                for j in 0..3 {
                    out.grad[c][j] += u * self.grads[a][j];
                    for k in 0..3 {
                        out.hess[c][j][k] += u * self.hessians[a][j][k];
                    }
                }
            }
        }
        out
    }
}

/// Evaluates the `(degree+1)^dim` nonzero basis functions of an element at a
/// local coordinate in `[0, 1]^dim`, with up to `max_deriv` (≤ 2) derivatives
/// taken with respect to the physical coordinates.
pub fn eval_basis(space: &SplineSpace, element: usize, local: &[f64], max_deriv: usize) -> Result<BasisTable> {
    if element >= space.element_count() {
        return Err(Error::OutOfRange(format!(
            "element {element} out of range (space has {})",
            space.element_count()
        )));
    }
    if local.len() != space.dim() {
        return Err(Error::OutOfRange(format!("expected {} local coordinates", space.dim())));
    }
    if let Some(x) = local.iter().find(|x| !(0.0..=1.0).contains(*x)) {
        return Err(Error::OutOfRange(format!("local coordinate {x} outside [0, 1]")));
    }
    if max_deriv > 2 {
        return Err(Error::OutOfRange(format!("derivative order {max_deriv} > 2 not supported")));
    }
    let basis = space.basis_1d();
    let p = space.degree();
    let e = space.element_multi_index(element);
    let dirs: Vec<Vec<[f64; 3]>> = (0..space.dim()).map(|d| basis.eval_local(e[d], local[d])).collect();
    let keep = |v: f64, order: usize| if order <= max_deriv { v } else { 0.0 };

    let mut table = BasisTable {
        dim: space.dim(),
        indices: Vec::new(),
        values: Vec::new(),
        grads: Vec::new(),
        hessians: Vec::new(),
    };
    if space.dim() == 1 {
        for (a, d) in dirs[0].iter().enumerate() {
            table.indices.push(e[0] + a);
            table.values.push(d[0]);
            table.grads.push([keep(d[1], 1), 0.0, 0.0]);
            table.hessians.push([[keep(d[2], 2), 0.0, 0.0], [0.0; 3], [0.0; 3]]);
        }
        return Ok(table);
    }
    for c in 0..=p {
        for b in 0..=p {
            for a in 0..=p {
                let (x, y, z) = (dirs[0][a], dirs[1][b], dirs[2][c]);
                table.indices.push(space.node_index([e[0] + a, e[1] + b, e[2] + c]));
                table.values.push(x[0] * y[0] * z[0]);
                table.grads.push([
                    keep(x[1] * y[0] * z[0], 1),
                    keep(x[0] * y[1] * z[0], 1),
                    keep(x[0] * y[0] * z[1], 1),
                ]);
                let h01 = keep(x[1] * y[1] * z[0], 2);
                let h02 = keep(x[1] * y[0] * z[1], 2);
                let h12 = keep(x[0] * y[1] * z[1], 2);
                table.hessians.push([
                    [keep(x[2] * y[0] * z[0], 2), h01, h02],
                    [h01, keep(x[0] * y[2] * z[0], 2), h12],
                    [h02, h12, keep(x[0] * y[0] * z[2], 2)],
                ]);
            }
        }
    }
    Ok(table)
}

/// Transfers a field to the space with doubled element count by inserting the
/// midpoint of every knot span. The transfer is exact.
pub fn refine_uniform(coeffs: &FieldCoefficients) -> (SplineSpace, FieldCoefficients) {
    let fine = coeffs.space.refined();
    let values = refine_vector(&coeffs.space, &coeffs.values);
    let low = if coeffs.low.is_empty() { Vec::new() } else { refine_vector(&coeffs.space, &coeffs.low) };
    (fine.clone(), FieldCoefficients { space: fine, values, low })
}

fn refine_vector(coarse: &SplineSpace, values: &[f64]) -> Vec<f64> {
    let fine = coarse.refined();
    let p = coarse.degree();
    let n_el = coarse.elements_per_direction();
    let knots = knot_vector(p, n_el);
    let inserts: Vec<f64> = (0..n_el).map(|e| (e as f64 + 0.5) / n_el as f64).collect();
    let nc = coarse.basis_per_direction();
    let nf = fine.basis_per_direction();
    let comps = coarse.components();

    if coarse.dim() == 1 {
        let mut out = vec![0.0; fine.dof_count()];
        for c in 0..comps {
            let line: Vec<f64> = (0..nc).map(|i| values[i * comps + c]).collect();
            let refined = basis1d::insert_knots(&knots, p, &line, &inserts);
            for (i, v) in refined.into_iter().enumerate() {
                out[i * comps + c] = v;
            }
        }
        return out;
    }

    // Refine one direction at a time: (nc,nc,nc) -> (nf,nc,nc) -> (nf,nf,nc) -> (nf,nf,nf).
    let mut shape = [nc, nc, nc];
    let mut data: Vec<f64> = values.to_vec();
    for axis in 0..3 {
        let mut new_shape = shape;
        new_shape[axis] = nf;
        let mut next = vec![0.0; new_shape[0] * new_shape[1] * new_shape[2] * comps];
        let at = |s: [usize; 3], i: [usize; 3], c: usize| ((i[2] * s[1] + i[1]) * s[0] + i[0]) * comps + c;
        let (o1, o2) = match axis {
            0 => (1, 2),
            1 => (0, 2),
            _ => (0, 1),
        };
        for j in 0..shape[o1] {
            for k in 0..shape[o2] {
                for c in 0..comps {
                    let mut idx = [0usize; 3];
                    idx[o1] = j;
                    idx[o2] = k;
                    let line: Vec<f64> = (0..shape[axis])
                        .map(|i| {
                            idx[axis] = i;
                            data[at(shape, idx, c)]
                        })
                        .collect();
                    let refined = basis1d::insert_knots(&knots, p, &line, &inserts);
                    for (i, v) in refined.into_iter().enumerate() {
                        idx[axis] = i;
                        next[at(new_shape, idx, c)] = v;
                    }
                }
            }
        }
        data = next;
        shape = new_shape;
    }
    data
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn basis_counts() {
        let s = SplineSpace::new(1, 4, 1024, 1).unwrap();
        assert_eq!(s.basis_per_direction(), 1028);
        let s = SplineSpace::new(3, 2, 8, 3).unwrap();
        assert_eq!(s.basis_per_direction(), 10);
        assert_eq!(s.scalar_basis_count(), 1000);
        assert_eq!(s.dof_count(), 3000);
    }

    #[test]
    fn rejects_low_degree_and_empty_mesh() {
        assert!(SplineSpace::new(1, 1, 8, 1).is_err());
        assert!(SplineSpace::new(1, 2, 0, 1).is_err());
        assert!(SplineSpace::new(2, 2, 4, 1).is_err());
    }

    #[test]
    fn eval_rejects_bad_inputs() {
        let s = SplineSpace::new(3, 2, 2, 3).unwrap();
        assert!(eval_basis(&s, 8, &[0.5, 0.5, 0.5], 2).is_err());
        assert!(eval_basis(&s, 0, &[0.5, 1.5, 0.5], 2).is_err());
        assert!(eval_basis(&s, 0, &[0.5], 2).is_err());
    }

    #[test]
    fn nonzero_count_is_degree_plus_one_to_the_dim() {
        let s = SplineSpace::new(3, 2, 3, 3).unwrap();
        let t = eval_basis(&s, 13, &[0.2, 0.7, 0.4], 2).unwrap();
        assert_eq!(t.indices.len(), 27);
        let sum: f64 = t.values.iter().sum();
        assert!((sum - 1.0).abs() < 1e-12);
    }

    #[test]
    fn max_deriv_truncates() {
        let s = SplineSpace::new(1, 3, 4, 1).unwrap();
        let t = eval_basis(&s, 1, &[0.3], 0).unwrap();
        assert!(t.grads.iter().all(|g| g[0] == 0.0));
        assert!(t.hessians.iter().all(|h| h[0][0] == 0.0));
    }

    #[test]
    fn refine_zero_field() {
        let s = SplineSpace::new(3, 2, 2, 3).unwrap();
        let (fine, f) = refine_uniform(&FieldCoefficients::zeros(&s));
        assert_eq!(fine.elements_per_direction(), 4);
        assert!(f.values.iter().all(|&v| v == 0.0));
        assert_eq!(f.values.len(), fine.dof_count());
    }

    #[test]
    fn locate_maps_right_end_into_last_element() {
        let s = SplineSpace::new(1, 2, 4, 1).unwrap();
        assert_eq!(s.locate(1.0).unwrap(), (3, 1.0));
        assert_eq!(s.locate(0.0).unwrap(), (0, 0.0));
        assert!(s.locate(1.0001).is_err());
    }
}
