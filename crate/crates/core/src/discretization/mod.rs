//! Discrete total energy, residual and Hessian with strongly enforced
//! Dirichlet and higher-order Dirichlet conditions.

mod assembly;
mod operator;

pub use operator::SymmetricOperator;

use crate::error::{Error, Result};
use crate::material::{MaterialParams1D, MaterialParams3D};
use crate::spline::{gauss_legendre, FieldCoefficients, SplineSpace};
use serde::{Deserialize, Serialize};
use std::sync::{Arc, OnceLock};

/// Constitutive model together with its parameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Model {
    OneD(MaterialParams1D),
    ThreeD(MaterialParams3D),
}

impl Model {
    pub fn dim(&self) -> usize {
        match self {
            Model::OneD(_) => 1,
            Model::ThreeD(_) => 3,
        }
    }

    pub fn l(&self) -> f64 {
        match self {
            Model::OneD(p) => p.l,
            Model::ThreeD(p) => p.l,
        }
    }

    /// `B5` of the 3D model, `None` in 1D.
    pub fn b5(&self) -> Option<f64> {
        match self {
            Model::OneD(_) => None,
            Model::ThreeD(p) => Some(p.b5),
        }
    }

    pub fn with_l(&self, l: f64) -> Result<Self> {
        Ok(match self {
            Model::OneD(_) => Model::OneD(MaterialParams1D::new(l)?),
            Model::ThreeD(p) => Model::ThreeD(p.with_l(l)?),
        })
    }

    pub fn with_b5(&self, b5: f64) -> Result<Self> {
        match self {
            Model::OneD(_) => Err(Error::InvalidParameter("B5 is not a parameter of the 1D model".into())),
            Model::ThreeD(p) => Ok(Model::ThreeD(p.with_b5(b5)?)),
        }
    }
}

/// Boundary data. In 1D: `u(0) = u'(0) = 0`, `u(1) = d`, `u'(1) = 0`.
/// In 3D: `u_i = u_{i,1} = 0` on `X1 = 0`, `u_1 = u_{1,1} = 0` on `X1 = 1`,
/// and dead tractions `(T2, T3)` on `X1 = 1`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum BoundaryConditions {
    OneD { d: f64 },
    ThreeD { t2: f64, t3: f64 },
}

impl BoundaryConditions {
    pub fn dim(&self) -> usize {
        match self {
            BoundaryConditions::OneD { .. } => 1,
            BoundaryConditions::ThreeD { .. } => 3,
        }
    }
}

/// Partition of the degrees of freedom into prescribed and free ones.
#[derive(Clone, Debug, PartialEq)]
pub struct ConstraintMap {
    prescribed: Vec<Option<f64>>,
    free: Vec<usize>,
    free_of: Vec<Option<usize>>,
}

impl ConstraintMap {
    fn from_prescribed(prescribed: Vec<Option<f64>>) -> Self {
        let free: Vec<usize> = (0..prescribed.len()).filter(|&i| prescribed[i].is_none()).collect();
        let mut free_of = vec![None; prescribed.len()];
        for (k, &i) in free.iter().enumerate() {
            free_of[i] = Some(k);
        }
        Self { prescribed, free, free_of }
    }

    pub fn dof_count(&self) -> usize {
        self.prescribed.len()
    }

    pub fn free_count(&self) -> usize {
        self.free.len()
    }

    pub fn constrained_count(&self) -> usize {
        self.dof_count() - self.free_count()
    }

    pub fn free_dofs(&self) -> &[usize] {
        &self.free
    }

    pub fn free_index(&self, dof: usize) -> Option<usize> {
        self.free_of[dof]
    }

    pub fn prescribed_value(&self, dof: usize) -> Option<f64> {
        self.prescribed[dof]
    }

    pub fn gather(&self, full: &[f64]) -> Vec<f64> {
        self.free.iter().map(|&i| full[i]).collect()
    }

    pub fn scatter(&self, free_values: &[f64], full: &mut [f64]) {
        for (&i, &v) in self.free.iter().zip(free_values) {
            full[i] = v;
        }
    }

    /// Overwrites every constrained entry with its prescribed value.
    pub fn impose(&self, full: &mut [f64]) {
        for (v, p) in full.iter_mut().zip(&self.prescribed) {
            if let Some(x) = p {
                *v = *x;
            }
        }
    }

    /// Largest deviation of a coefficient vector from the prescribed values.
    pub fn violation(&self, full: &[f64]) -> f64 {
        full.iter()
            .zip(&self.prescribed)
            .filter_map(|(v, p)| p.map(|x| (v - x).abs()))
            .fold(0.0, f64::max)
    }
}

/// Constraint map of the boundary conditions on a clamped spline space.
///
/// With open knots the end value is the outermost coefficient and the end
/// normal derivative is proportional to the difference of the two outermost
/// coefficient layers, so both conditions fix the two outer layers.
pub fn apply_constraints(space: &SplineSpace, bcs: &BoundaryConditions) -> Result<ConstraintMap> {
    if space.degree() < 2 {
        return Err(Error::InvalidSpace("value and slope constraints need degree >= 2".into()));
    }
    if space.dim() != bcs.dim() {
        return Err(Error::InvalidParameter(format!(
            "{}D boundary conditions on a {}D space",
            bcs.dim(),
            space.dim()
        )));
    }
    let n = space.basis_per_direction();
    let comps = space.components();
    let mut prescribed = vec![None; space.dof_count()];
    match *bcs {
        BoundaryConditions::OneD { d } => {
            if comps != 1 {
                return Err(Error::InvalidSpace("1D problems have one component".into()));
            }
            prescribed[0] = Some(0.0);
            prescribed[1] = Some(0.0);
            prescribed[n - 2] = Some(d);
            prescribed[n - 1] = Some(d);
        }
        BoundaryConditions::ThreeD { .. } => {
            if comps != 3 {
                return Err(Error::InvalidSpace("3D problems have three components".into()));
            }
            for i3 in 0..n {
                for i2 in 0..n {
                    for i1 in [0, 1] {
                        let node = space.node_index([i1, i2, i3]);
                        for c in 0..3 {
                            prescribed[space.dof_index(node, c)] = Some(0.0);
                        }
                    }
                    for i1 in [n - 2, n - 1] {
                        let node = space.node_index([i1, i2, i3]);
                        prescribed[space.dof_index(node, 0)] = Some(0.0);
                    }
                }
            }
        }
    }
    Ok(ConstraintMap::from_prescribed(prescribed))
}

/// Per-direction basis tables at the Gauss points of every element.
#[derive(Debug)]
pub(crate) struct QuadTables {
    /// `weights[q]`, already scaled by the element size.
    pub weights: Vec<f64>,
    /// `values[e][q][a] = (N, N', N'')` of local function `a` of element `e`.
    pub values: Vec<Vec<Vec<[f64; 3]>>>,
    /// Integral over `[0, 1]` of each univariate basis function.
    pub integrals: Vec<f64>,
}

impl QuadTables {
    fn new(space: &SplineSpace) -> Self {
        let basis = space.basis_1d();
        let n_el = space.elements_per_direction();
        let (pts, wts) = gauss_legendre(space.degree() + 1);
        let h = 1.0 / n_el as f64;
        let values = (0..n_el)
            .map(|e| pts.iter().map(|&x| basis.eval_local(e, x)).collect())
            .collect();
        Self { weights: wts.iter().map(|w| w * h).collect(), values, integrals: basis.integrals() }
    }
}

/// A discretized boundary value problem at fixed parameters.
#[derive(Clone, Debug)]
pub struct Problem {
    space: SplineSpace,
    model: Model,
    bcs: BoundaryConditions,
    constraints: Arc<ConstraintMap>,
    tables: Arc<QuadTables>,
    pattern: Arc<OnceLock<SymmetricOperator>>,
}

impl Problem {
    pub fn new(space: SplineSpace, model: Model, bcs: BoundaryConditions) -> Result<Self> {
        if model.dim() != space.dim() {
            return Err(Error::InvalidParameter(format!(
                "{}D material on a {}D space",
                model.dim(),
                space.dim()
            )));
        }
        let constraints = apply_constraints(&space, &bcs)?;
        let tables = QuadTables::new(&space);
        Ok(Self {
            space,
            model,
            bcs,
            constraints: Arc::new(constraints),
            tables: Arc::new(tables),
            pattern: Arc::new(OnceLock::new()),
        })
    }

    /// Same discretization with different material parameters.
    pub fn with_model(&self, model: Model) -> Result<Self> {
        if model.dim() != self.model.dim() {
            return Err(Error::InvalidParameter("cannot change the model dimension".into()));
        }
        Ok(Self { model, ..self.clone() })
    }

    pub fn space(&self) -> &SplineSpace {
        &self.space
    }

    pub fn model(&self) -> &Model {
        &self.model
    }

    pub fn bcs(&self) -> &BoundaryConditions {
        &self.bcs
    }

    pub fn constraints(&self) -> &ConstraintMap {
        &self.constraints
    }

    fn check_len(&self, u: &FieldCoefficients) -> Result<()> {
        if u.values.len() != self.space.dof_count() || u.space != self.space {
            return Err(Error::LengthMismatch { expected: self.space.dof_count(), found: u.values.len() });
        }
        Ok(())
    }

    /// Total energy: bulk integral of the energy density minus the work of
    /// the dead surface traction (3D).
    pub fn total_energy(&self, u: &FieldCoefficients) -> Result<f64> {
        self.check_len(u)?;
        let e = if self.extended_precision() {
            assembly::extended_1d(self, &u.values, &u.low, false).0
        } else {
            assembly::energy(self, &u.values) - self.traction_work(&u.values)
        };
        if !e.is_finite() {
            return Err(Error::NonFinite("total energy"));
        }
        Ok(e)
    }

    /// Gradient of the total energy with respect to the free coefficients.
    pub fn residual(&self, u: &FieldCoefficients) -> Result<Vec<f64>> {
        self.check_len(u)?;
        let r = if self.extended_precision() {
            assembly::extended_1d(self, &u.values, &u.low, true).1
        } else {
            let mut r = assembly::residual(self, &u.values);
            self.subtract_traction(&mut r);
            r
        };
        if r.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("residual"));
        }
        Ok(r)
    }

    /// Hessian of the total energy on the free coefficients.
    pub fn hessian(&self, u: &FieldCoefficients) -> Result<SymmetricOperator> {
        self.check_len(u)?;
        let k = assembly::hessian(self, &u.values);
        if (0..k.dim()).any(|i| k.row(i).1.iter().any(|v| !v.is_finite())) {
            return Err(Error::NonFinite("hessian"));
        }
        Ok(k)
    }

    /// Whether energy and residual are evaluated in double-double arithmetic
    /// with coefficients carried as `values + low` (the 1D model).
    pub fn extended_precision(&self) -> bool {
        self.model.dim() == 1
    }

    /// Coefficients with the free part taken from `free` and constrained
    /// entries set to their prescribed values.
    pub fn expand(&self, free: &[f64]) -> FieldCoefficients {
        let mut values = vec![0.0; self.space.dof_count()];
        self.constraints.impose(&mut values);
        self.constraints.scatter(free, &mut values);
        FieldCoefficients { space: self.space.clone(), values, low: Vec::new() }
    }

    /// As [`Problem::expand`], with low-order parts `free_low` on the free
    /// entries (constrained entries are exact doubles).
    pub fn expand_extended(&self, free: &[f64], free_low: &[f64]) -> FieldCoefficients {
        let mut u = self.expand(free);
        let mut low = vec![0.0; self.space.dof_count()];
        self.constraints.scatter(free_low, &mut low);
        u.low = low;
        u
    }

    pub(crate) fn tables(&self) -> &QuadTables {
        &self.tables
    }

    pub(crate) fn pattern(&self) -> &SymmetricOperator {
        self.pattern.get_or_init(|| assembly::pattern(self))
    }

    /// Traction load per face node: `(node, component, weight)`.
    fn traction_loads(&self) -> Vec<(usize, f64)> {
        let BoundaryConditions::ThreeD { t2, t3 } = self.bcs else {
            return Vec::new();
        };
        let n = self.space.basis_per_direction();
        let integ = &self.tables.integrals;
        let mut loads = Vec::with_capacity(2 * n * n);
        for i3 in 0..n {
            for i2 in 0..n {
                let node = self.space.node_index([n - 1, i2, i3]);
                let area = integ[i2] * integ[i3];
                loads.push((self.space.dof_index(node, 1), t2 * area));
                loads.push((self.space.dof_index(node, 2), t3 * area));
            }
        }
        loads
    }

    fn traction_work(&self, full: &[f64]) -> f64 {
        self.traction_loads().iter().map(|&(dof, w)| full[dof] * w).sum()
    }

    fn subtract_traction(&self, r: &mut [f64]) {
        for (dof, w) in self.traction_loads() {
            if let Some(k) = self.constraints.free_index(dof) {
                r[k] -= w;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constraint_counts() {
        let s = SplineSpace::new(1, 4, 1024, 1).unwrap();
        let c = apply_constraints(&s, &BoundaryConditions::OneD { d: 1.0 / 1024.0 }).unwrap();
        assert_eq!(c.constrained_count(), 4);
        assert_eq!(c.free_count(), 1024);

        let s = SplineSpace::new(3, 2, 8, 3).unwrap();
        let c = apply_constraints(&s, &BoundaryConditions::ThreeD { t2: 0.01, t3: 0.01 }).unwrap();
        assert_eq!(c.constrained_count(), 800);
        assert_eq!(c.free_count(), 2200);
    }

    #[test]
    fn mismatched_dimensions_rejected() {
        let s = SplineSpace::new(1, 2, 4, 1).unwrap();
        assert!(apply_constraints(&s, &BoundaryConditions::ThreeD { t2: 0.0, t3: 0.0 }).is_err());
        let s3 = SplineSpace::new(3, 2, 2, 3).unwrap();
        let m = Model::OneD(MaterialParams1D::new(0.1).unwrap());
        assert!(Problem::new(s3, m, BoundaryConditions::ThreeD { t2: 0.0, t3: 0.0 }).is_err());
    }

    #[test]
    fn prescribed_end_displacement_is_reproduced() {
        let d = 2f64.powi(-10);
        let s = SplineSpace::new(1, 4, 1024, 1).unwrap();
        let p = Problem::new(s.clone(), Model::OneD(MaterialParams1D::new(0.3).unwrap()), BoundaryConditions::OneD { d })
            .unwrap();
        let u = p.expand(&vec![0.0; p.constraints().free_count()]);
        let end = u.evaluate(&[1.0]).unwrap();
        assert!((end.value[0] - d).abs() < 1e-15);
        assert!(end.grad[0][0].abs() < 1e-12);
        let start = u.evaluate(&[0.0]).unwrap();
        assert_eq!(start.value[0], 0.0);
        assert_eq!(start.grad[0][0], 0.0);
    }
}
