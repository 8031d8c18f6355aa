//! Free energy densities of the one- and three-dimensional models, their
//! stresses and tangents, and martensitic variant classification.
//!
//! In three dimensions the energy depends on the deformation gradient `F` and
//! on its referential gradient `G_{iJK} = F_{iJ,K}`. Derivatives with respect
//! to `G` are reported for symmetric perturbations (`G_{iJK} = G_{iKJ}`),
//! i.e. `B_{iJK}` is the part of `∂Ψ/∂G_{iJK}` symmetric in `J, K`.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

pub type Mat3 = [[f64; 3]; 3];
pub type Tensor3 = [[[f64; 3]; 3]; 3];

const SQRT2: f64 = std::f64::consts::SQRT_2;

/// Threshold on the deviatoric energy below which a variant is present.
pub const VARIANT_THRESHOLD: f64 = -0.5;

/// Index pairs `(J, K)` of the six independent second derivatives.
pub const SYM_PAIRS: [(usize, usize); 6] = [(0, 0), (1, 1), (2, 2), (1, 2), (0, 2), (0, 1)];

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MaterialParams1D {
    pub l: f64,
}

impl MaterialParams1D {
    pub fn new(l: f64) -> Result<Self> {
        if !(l >= 0.0 && l.is_finite()) {
            return Err(Error::InvalidParameter(format!("length scale l = {l} must be finite and >= 0")));
        }
        Ok(Self { l })
    }
}

/// Coefficients of the three-well energy.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MaterialParams3D {
    pub b1: f64,
    pub b2: f64,
    pub b3: f64,
    pub b4: f64,
    pub b5: f64,
    pub r: f64,
    pub l: f64,
}

impl MaterialParams3D {
    /// Default coefficient set for shear modulus `b5`, well radius `r` and
    /// length scale `l`: `B1 = 3.25 B5`, `B2 = -1.5/r²`, `B3 = 1/r³`,
    /// `B4 = 1.5/r⁴`. With these the three wells have unit depth.
    pub fn from_b5(b5: f64, r: f64, l: f64) -> Result<Self> {
        if !(r > 0.0 && r.is_finite()) {
            return Err(Error::InvalidParameter(format!("well radius r = {r} must be positive")));
        }
        if !(l >= 0.0 && l.is_finite()) {
            return Err(Error::InvalidParameter(format!("length scale l = {l} must be finite and >= 0")));
        }
        if !b5.is_finite() {
            return Err(Error::InvalidParameter("B5 must be finite".into()));
        }
        Ok(Self {
            b1: 3.25 * b5,
            b2: -1.5 / (r * r),
            b3: 1.0 / (r * r * r),
            b4: 1.5 / (r * r * r * r),
            b5,
            r,
            l,
        })
    }

    pub fn with_l(&self, l: f64) -> Result<Self> {
        Self::from_b5(self.b5, self.r, l)
    }

    pub fn with_b5(&self, b5: f64) -> Result<Self> {
        Self::from_b5(b5, self.r, self.l)
    }
}

// ---------------------------------------------------------------------------
// kinematics

/// Green–Lagrange strain `½(FᵀF − I)`.
pub fn green_lagrange(f: &Mat3) -> Mat3 {
    if det3(f) <= 0.0 {
        log::warn!("deformation gradient with non-positive determinant {:e}", det3(f));
    }
    let mut e = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            let mut s = 0.0;
            for k in 0..3 {
                s += f[k][i] * f[k][j];
            }
            e[i][j] = 0.5 * (s - if i == j { 1.0 } else { 0.0 });
        }
    }
    e
}

pub fn det3(m: &Mat3) -> f64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

/// Constant tensors `c_a = ∂e_a/∂E` (symmetric), so that `e_a = c_a : E`.
fn strain_maps() -> [Mat3; 6] {
    let s3 = 3f64.sqrt();
    let s6 = 6f64.sqrt();
    [
        [[1.0 / s3, 0.0, 0.0], [0.0, 1.0 / s3, 0.0], [0.0, 0.0, 1.0 / s3]],
        [[1.0 / SQRT2, 0.0, 0.0], [0.0, -1.0 / SQRT2, 0.0], [0.0, 0.0, 0.0]],
        [[1.0 / s6, 0.0, 0.0], [0.0, 1.0 / s6, 0.0], [0.0, 0.0, -2.0 / s6]],
        [[0.0, 0.0, 0.0], [0.0, 0.0, 0.5], [0.0, 0.5, 0.0]],
        [[0.0, 0.0, 0.5], [0.0, 0.0, 0.0], [0.5, 0.0, 0.0]],
        [[0.0, 0.5, 0.0], [0.5, 0.0, 0.0], [0.0, 0.0, 0.0]],
    ]
}

/// Reparameterized strains `e1..e6` of a symmetric strain tensor.
pub fn reparam_strains(e: &Mat3) -> [f64; 6] {
    let s3 = 3f64.sqrt();
    let s6 = 6f64.sqrt();
    [
        (e[0][0] + e[1][1] + e[2][2]) / s3,
        (e[0][0] - e[1][1]) / SQRT2,
        (e[0][0] + e[1][1] - 2.0 * e[2][2]) / s6,
        e[1][2],
        e[0][2],
        e[0][1],
    ]
}

/// Deformation gradient, its referential gradient, and derived strains.
#[derive(Clone, Debug, PartialEq)]
pub struct PointState3D {
    pub f: Mat3,
    /// `grad_f[i][J][K] = F_{iJ,K}`
    pub grad_f: Tensor3,
    pub strain: Mat3,
    pub e: [f64; 6],
    /// `grad_e23[0] = ∇e2`, `grad_e23[1] = ∇e3`
    pub grad_e23: [[f64; 3]; 2],
}

impl PointState3D {
    pub fn new(f: Mat3, grad_f: Tensor3) -> Self {
        let strain = green_lagrange(&f);
        let e = reparam_strains(&strain);
        let maps = strain_maps();
        let mut grad_e23 = [[0.0; 3]; 2];
        for (slot, a) in [1usize, 2].into_iter().enumerate() {
            let q = mat_mul(&f, &maps[a]);
            grad_e23[slot] = strain_gradient(&q, &grad_f);
        }
        Self { f, grad_f, strain, e, grad_e23 }
    }

    /// State from the displacement gradient `u_{i,J}` and second gradient
    /// `u_{i,JK}`.
    pub fn from_displacement(grad_u: &Mat3, hess_u: &Tensor3) -> Self {
        let mut f = *grad_u;
        for (i, row) in f.iter_mut().enumerate() {
            row[i] += 1.0;
        }
        Self::new(f, *hess_u)
    }
}

fn mat_mul(a: &Mat3, b: &Mat3) -> Mat3 {
    let mut c = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            c[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j] + a[i][2] * b[2][j];
        }
    }
    c
}

/// `g_K = Σ_{kJ} q_{kJ} G_{kJK}` with `q = F c_a`; this is `e_{a,K}`.
fn strain_gradient(q: &Mat3, g: &Tensor3) -> [f64; 3] {
    let mut out = [0.0; 3];
    for (k_dir, o) in out.iter_mut().enumerate() {
        let mut s = 0.0;
        for k in 0..3 {
            for j in 0..3 {
                s += q[k][j] * g[k][j][k_dir];
            }
        }
        *o = s;
    }
    out
}

// ---------------------------------------------------------------------------
// one-dimensional model

pub fn psi_1d(u_x: f64, u_xx: f64, p: &MaterialParams1D) -> f64 {
    let s = u_x * u_x;
    (s * s - 2.0 * s) + p.l * p.l * u_xx * u_xx
}

/// `(P, B) = (∂Ψ/∂u_x, ∂Ψ/∂u_xx)`.
pub fn stress_1d(u_x: f64, u_xx: f64, p: &MaterialParams1D) -> (f64, f64) {
    (4.0 * u_x * u_x * u_x - 4.0 * u_x, 2.0 * p.l * p.l * u_xx)
}

pub fn hess_1d(u_x: f64, _u_xx: f64, p: &MaterialParams1D) -> [[f64; 2]; 2] {
    [[12.0 * u_x * u_x - 4.0, 0.0], [0.0, 2.0 * p.l * p.l]]
}

// ---------------------------------------------------------------------------
// three-dimensional model

/// Deviatoric part of the energy, a function of `(e2, e3)` only.
pub fn psi_dev(e2: f64, e3: f64, p: &MaterialParams3D) -> f64 {
    let rho2 = e2 * e2 + e3 * e3;
    p.b2 * rho2 + p.b3 * e3 * (e3 * e3 - 3.0 * e2 * e2) + p.b4 * rho2 * rho2
}

fn local_energy(e: &[f64; 6], p: &MaterialParams3D) -> f64 {
    p.b1 * e[0] * e[0] + psi_dev(e[1], e[2], p) + p.b5 * (e[3] * e[3] + e[4] * e[4] + e[5] * e[5])
}

/// First derivatives `∂W/∂e_a`.
fn local_gradient(e: &[f64; 6], p: &MaterialParams3D) -> [f64; 6] {
    let (e2, e3) = (e[1], e[2]);
    let rho2 = e2 * e2 + e3 * e3;
    [
        2.0 * p.b1 * e[0],
        2.0 * p.b2 * e2 - 6.0 * p.b3 * e3 * e2 + 4.0 * p.b4 * rho2 * e2,
        2.0 * p.b2 * e3 + 3.0 * p.b3 * (e3 * e3 - e2 * e2) + 4.0 * p.b4 * rho2 * e3,
        2.0 * p.b5 * e[3],
        2.0 * p.b5 * e[4],
        2.0 * p.b5 * e[5],
    ]
}

/// Second derivatives `∂²W/∂e_a∂e_b`.
fn local_hessian(e: &[f64; 6], p: &MaterialParams3D) -> [[f64; 6]; 6] {
    let (e2, e3) = (e[1], e[2]);
    let mut h = [[0.0; 6]; 6];
    h[0][0] = 2.0 * p.b1;
    h[1][1] = 2.0 * p.b2 - 6.0 * p.b3 * e3 + 4.0 * p.b4 * (3.0 * e2 * e2 + e3 * e3);
    h[2][2] = 2.0 * p.b2 + 6.0 * p.b3 * e3 + 4.0 * p.b4 * (e2 * e2 + 3.0 * e3 * e3);
    h[1][2] = -6.0 * p.b3 * e2 + 8.0 * p.b4 * e2 * e3;
    h[2][1] = h[1][2];
    for a in 3..6 {
        h[a][a] = 2.0 * p.b5;
    }
    h
}

/// Energy and derivatives with respect to the 36 unconstrained coordinates
/// `(F_{iJ}, G_{iJK})`, indexed `3i+J` and `9+9i+3J+K`.
struct FullDerivatives {
    psi: f64,
    grad: [f64; 36],
    hess: Option<Box<[[f64; 36]; 36]>>,
}

fn fidx(i: usize, j: usize) -> usize {
    3 * i + j
}

fn gidx(i: usize, j: usize, k: usize) -> usize {
    9 + 9 * i + 3 * j + k
}

fn full_derivatives(f: &Mat3, g: &Tensor3, p: &MaterialParams3D, with_hessian: bool) -> FullDerivatives {
    let maps = strain_maps();
    let strain = green_lagrange(f);
    let e = reparam_strains(&strain);
    let dw = local_gradient(&e, p);
    let l2 = p.l * p.l;

    let q: [Mat3; 6] = std::array::from_fn(|a| mat_mul(f, &maps[a]));
    // gradient terms for e2, e3 only
    let grad_terms = [1usize, 2];
    let gvals: [[f64; 3]; 2] = std::array::from_fn(|s| strain_gradient(&q[grad_terms[s]], g));
    // m[s][K][i][J] = Σ_M G_{iMK} c_a[M][J]
    let mut m = [[[[0.0; 3]; 3]; 3]; 2];
    for (s, &a) in grad_terms.iter().enumerate() {
        for kd in 0..3 {
            for i in 0..3 {
                for j in 0..3 {
                    m[s][kd][i][j] = (0..3).map(|mm| g[i][mm][kd] * maps[a][mm][j]).sum();
                }
            }
        }
    }

    let mut psi = local_energy(&e, p);
    for gv in &gvals {
        psi += l2 * (gv[0] * gv[0] + gv[1] * gv[1] + gv[2] * gv[2]);
    }

    let mut stress_s = [[0.0; 3]; 3];
    for a in 0..6 {
        for i in 0..3 {
            for j in 0..3 {
                stress_s[i][j] += dw[a] * maps[a][i][j];
            }
        }
    }
    let fs = mat_mul(f, &stress_s);
    let mut grad = [0.0; 36];
    for i in 0..3 {
        for j in 0..3 {
            let mut v = fs[i][j];
            for s in 0..2 {
                for kd in 0..3 {
                    v += 2.0 * l2 * gvals[s][kd] * m[s][kd][i][j];
                }
            }
            grad[fidx(i, j)] = v;
            for kd in 0..3 {
                let mut b = 0.0;
                for (s, &a) in grad_terms.iter().enumerate() {
                    b += 2.0 * l2 * gvals[s][kd] * q[a][i][j];
                }
                grad[gidx(i, j, kd)] = b;
            }
        }
    }

    let hess = with_hessian.then(|| {
        let hw = local_hessian(&e, p);
        let mut h = Box::new([[0.0; 36]; 36]);
        // F-F block
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    for l in 0..3 {
                        let mut v = if i == k { stress_s[j][l] } else { 0.0 };
                        for a in 0..6 {
                            for b in 0..6 {
                                if hw[a][b] != 0.0 {
                                    v += hw[a][b] * q[a][i][j] * q[b][k][l];
                                }
                            }
                        }
                        for s in 0..2 {
                            for kd in 0..3 {
                                v += 2.0 * l2 * m[s][kd][i][j] * m[s][kd][k][l];
                            }
                        }
                        h[fidx(i, j)][fidx(k, l)] = v;
                    }
                }
            }
        }
        // F-G and G-G blocks
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    for mm in 0..3 {
                        for ld in 0..3 {
                            let mut v = 0.0;
                            for (s, &a) in grad_terms.iter().enumerate() {
                                v += m[s][ld][i][j] * q[a][k][mm];
                                if i == k {
                                    v += gvals[s][ld] * maps[a][j][mm];
                                }
                            }
                            let v = 2.0 * l2 * v;
                            h[fidx(i, j)][gidx(k, mm, ld)] = v;
                            h[gidx(k, mm, ld)][fidx(i, j)] = v;
                        }
                    }
                }
            }
        }
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    for mm in 0..3 {
                        let mut v = 0.0;
                        for &a in &grad_terms {
                            v += q[a][i][j] * q[a][k][mm];
                        }
                        let v = 2.0 * l2 * v;
                        for kd in 0..3 {
                            h[gidx(i, j, kd)][gidx(k, mm, kd)] = v;
                        }
                    }
                }
            }
        }
        for a in 0..36 {
            for b in a + 1..36 {
                let v = 0.5 * (h[a][b] + h[b][a]);
                h[a][b] = v;
                h[b][a] = v;
            }
        }
        h
    });

    FullDerivatives { psi, grad, hess }
}

/// Three-dimensional energy density including the strain-gradient term.
pub fn psi_3d(state: &PointState3D, p: &MaterialParams3D) -> f64 {
    let mut psi = local_energy(&state.e, p);
    for ge in &state.grad_e23 {
        psi += p.l * p.l * (ge[0] * ge[0] + ge[1] * ge[1] + ge[2] * ge[2]);
    }
    psi
}

/// First Piola–Kirchhoff stress `P_{iJ}` and higher-order stress `B_{iJK}`.
pub fn stresses_3d(state: &PointState3D, p: &MaterialParams3D) -> (Mat3, Tensor3) {
    let d = full_derivatives(&state.f, &state.grad_f, p, false);
    let mut stress = [[0.0; 3]; 3];
    let mut higher = [[[0.0; 3]; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            stress[i][j] = d.grad[fidx(i, j)];
            for k in 0..3 {
                higher[i][j][k] = 0.5 * (d.grad[gidx(i, j, k)] + d.grad[gidx(i, k, j)]);
            }
        }
    }
    (stress, higher)
}

/// Second derivatives of the energy density.
///
/// Index layout: `pp[i][I][j][J]`, `pb[i][I][j][J][K]`,
/// `bb[i][I][L][j][J][K]`. Entries involving `G` indices are symmetrized in
/// each `(J, K)` pair.
#[derive(Clone, Debug)]
pub struct TangentBlocks3D {
    pub pp: [[[[f64; 3]; 3]; 3]; 3],
    pub pb: Box<[[[[[f64; 3]; 3]; 3]; 3]; 3]>,
    pub bb: Box<[[[[[[f64; 3]; 3]; 3]; 3]; 3]; 3]>,
}

pub fn tangent_blocks_3d(state: &PointState3D, p: &MaterialParams3D) -> TangentBlocks3D {
    let d = full_derivatives(&state.f, &state.grad_f, p, true);
    let h = d.hess.expect("hessian requested");
    let mut out = TangentBlocks3D {
        pp: [[[[0.0; 3]; 3]; 3]; 3],
        pb: Box::new([[[[[0.0; 3]; 3]; 3]; 3]; 3]),
        bb: Box::new([[[[[[0.0; 3]; 3]; 3]; 3]; 3]; 3]),
    };
    for i in 0..3 {
        for ii in 0..3 {
            for j in 0..3 {
                for jj in 0..3 {
                    out.pp[i][ii][j][jj] = h[fidx(i, ii)][fidx(j, jj)];
                    for k in 0..3 {
                        out.pb[i][ii][j][jj][k] =
                            0.5 * (h[fidx(i, ii)][gidx(j, jj, k)] + h[fidx(i, ii)][gidx(j, k, jj)]);
                    }
                }
            }
        }
    }
    for i in 0..3 {
        for ii in 0..3 {
            for ll in 0..3 {
                for j in 0..3 {
                    for jj in 0..3 {
                        for k in 0..3 {
                            out.bb[i][ii][ll][j][jj][k] = 0.25
                                * (h[gidx(i, ii, ll)][gidx(j, jj, k)]
                                    + h[gidx(i, ll, ii)][gidx(j, jj, k)]
                                    + h[gidx(i, ii, ll)][gidx(j, k, jj)]
                                    + h[gidx(i, ll, ii)][gidx(j, k, jj)]);
                        }
                    }
                }
            }
        }
    }
    out
}

// ---------------------------------------------------------------------------
// compact point response used by assembly

/// Number of kinematic coordinates of the 3D model: `u_{i,J}` (9) followed by
/// the independent `u_{i,JK}` (18), ordered by [`SYM_PAIRS`].
pub const KIN3: usize = 27;

pub fn kin3_grad_index(i: usize, j: usize) -> usize {
    3 * i + j
}

pub fn kin3_hess_index(i: usize, s: usize) -> usize {
    9 + 6 * i + s
}

/// Energy with first (and optionally second) derivatives with respect to a
/// vector of kinematic coordinates.
#[derive(Clone, Debug)]
pub struct PointResponse<const N: usize> {
    pub energy: f64,
    pub grad: [f64; N],
    pub hess: Option<Box<[[f64; N]; N]>>,
}

pub fn response_1d(z: &[f64; 2], p: &MaterialParams1D, with_hessian: bool) -> PointResponse<2> {
    let (s, b) = stress_1d(z[0], z[1], p);
    PointResponse {
        energy: psi_1d(z[0], z[1], p),
        grad: [s, b],
        hess: with_hessian.then(|| Box::new(hess_1d(z[0], z[1], p))),
    }
}

/// Response of the 3D model at kinematic coordinates `z` (see [`KIN3`]).
pub fn response_3d(z: &[f64; KIN3], p: &MaterialParams3D, with_hessian: bool) -> PointResponse<KIN3> {
    let mut f = [[0.0; 3]; 3];
    let mut g = [[[0.0; 3]; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            f[i][j] = z[kin3_grad_index(i, j)] + if i == j { 1.0 } else { 0.0 };
        }
        for (s, &(j, k)) in SYM_PAIRS.iter().enumerate() {
            g[i][j][k] = z[kin3_hess_index(i, s)];
            g[i][k][j] = z[kin3_hess_index(i, s)];
        }
    }
    let d = full_derivatives(&f, &g, p, with_hessian);
    // map from compact coordinate to the full coordinates it drives
    let full_of = |c: usize| -> ([usize; 2], usize) {
        if c < 9 {
            ([c, 0], 1)
        } else {
            let i = (c - 9) / 6;
            let (j, k) = SYM_PAIRS[(c - 9) % 6];
            if j == k {
                ([gidx(i, j, k), 0], 1)
            } else {
                ([gidx(i, j, k), gidx(i, k, j)], 2)
            }
        }
    };
    let mut grad = [0.0; KIN3];
    for (c, gv) in grad.iter_mut().enumerate() {
        let (idx, n) = full_of(c);
        *gv = idx[..n].iter().map(|&a| d.grad[a]).sum();
    }
    let hess = d.hess.map(|h| {
        let mut out = Box::new([[0.0; KIN3]; KIN3]);
        for a in 0..KIN3 {
            let (ia, na) = full_of(a);
            for b in a..KIN3 {
                let (ib, nb) = full_of(b);
                let mut v = 0.0;
                for &x in &ia[..na] {
                    for &y in &ib[..nb] {
                        v += h[x][y];
                    }
                }
                out[a][b] = v;
                out[b][a] = v;
            }
        }
        out
    });
    PointResponse { energy: d.psi, grad, hess }
}

// ---------------------------------------------------------------------------
// variants

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Variant {
    None,
    V1,
    V2,
    V3,
}

impl Variant {
    /// Integer label used in exports: 0 for none, 1..3 for the variants.
    pub fn label(self) -> u8 {
        match self {
            Variant::None => 0,
            Variant::V1 => 1,
            Variant::V2 => 2,
            Variant::V3 => 3,
        }
    }
}

/// Variant present at a strain state. A variant is present where the
/// deviatoric energy is below −0.5; which one is decided by the polar angle
/// of `(e3, e2)`: wells sit at 60° (V1), 180° (V3) and 300° (V2).
pub fn classify_variant(e2: f64, e3: f64, p: &MaterialParams3D) -> Variant {
    if !(psi_dev(e2, e3, p) < VARIANT_THRESHOLD) {
        return Variant::None;
    }
    let mut theta = e2.atan2(e3).to_degrees();
    if theta < 0.0 {
        theta += 360.0;
    }
    if theta < 120.0 {
        Variant::V1
    } else if theta < 240.0 {
        Variant::V3
    } else {
        Variant::V2
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn defaults() -> MaterialParams3D {
        MaterialParams3D::from_b5(180.0, 0.25, 0.1).unwrap()
    }

    fn identity() -> Mat3 {
        [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]
    }

    fn well_state() -> PointState3D {
        let s6 = 6f64.sqrt();
        let e11 = -s6 / 24.0;
        let e33 = s6 / 12.0;
        let f = [
            [(1.0 + 2.0 * e11).sqrt(), 0.0, 0.0],
            [0.0, (1.0 + 2.0 * e11).sqrt(), 0.0],
            [0.0, 0.0, (1.0 + 2.0 * e33).sqrt()],
        ];
        PointState3D::new(f, [[[0.0; 3]; 3]; 3])
    }

    #[test]
    fn default_coefficients() {
        let p = defaults();
        assert_eq!(p.b1, 585.0);
        assert_eq!(p.b2, -24.0);
        assert_eq!(p.b3, 64.0);
        assert_eq!(p.b4, 384.0);
        assert!(MaterialParams3D::from_b5(180.0, 0.25, -0.1).is_err());
        assert!(MaterialParams1D::new(-1.0).is_err());
    }

    #[test]
    fn green_lagrange_examples() {
        assert_eq!(green_lagrange(&identity()), [[0.0; 3]; 3]);
        let e = green_lagrange(&[[1.1, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]);
        assert!((e[0][0] - 0.105).abs() < 1e-15);
        assert_eq!(e[1][1], 0.0);
        let (c, s) = (0.3f64.cos(), 0.3f64.sin());
        let rot = [[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]];
        let e = green_lagrange(&rot);
        assert!(e.iter().flatten().all(|v| v.abs() < 1e-14));
    }

    #[test]
    fn reparam_examples() {
        assert_eq!(reparam_strains(&[[0.0; 3]; 3]), [0.0; 6]);
        let a = 0.2;
        let e = reparam_strains(&[[a, 0.0, 0.0], [0.0, a, 0.0], [0.0, 0.0, a]]);
        assert!((e[0] - 3f64.sqrt() * a).abs() < 1e-15);
        assert!(e[1..].iter().all(|v| v.abs() < 1e-16));
        let e = reparam_strains(&[[0.0, 0.1, 0.0], [0.1, 0.0, 0.0], [0.0; 3]]);
        assert_eq!(e, [0.0, 0.0, 0.0, 0.0, 0.0, 0.1]);
    }

    #[test]
    fn one_d_examples() {
        let p = MaterialParams1D::new(0.5).unwrap();
        assert_eq!(psi_1d(1.0, 0.0, &p), -1.0);
        assert_eq!(psi_1d(-1.0, 0.0, &p), -1.0);
        assert_eq!(psi_1d(0.0, 0.0, &p), 0.0);
        assert_eq!(psi_1d(0.0, 1.0, &p), 0.25);
        assert_eq!(stress_1d(1.0, 0.0, &p), (0.0, 0.0));
        let (s, b) = stress_1d(0.5, 2.0, &MaterialParams1D::new(0.1).unwrap());
        assert!((s + 1.5).abs() < 1e-15 && (b - 0.04).abs() < 1e-15);
        assert_eq!(hess_1d(0.0, 3.0, &MaterialParams1D::new(0.0).unwrap()), [[-4.0, 0.0], [0.0, 0.0]]);
        assert_eq!(hess_1d(1.0, 0.0, &MaterialParams1D::new(1.0).unwrap()), [[8.0, 0.0], [0.0, 2.0]]);
    }

    #[test]
    fn psi_3d_examples() {
        let p = defaults();
        let zero = PointState3D::new(identity(), [[[0.0; 3]; 3]; 3]);
        assert_eq!(psi_3d(&zero, &p), 0.0);
        let w = well_state();
        assert!(w.e[1].abs() < 1e-15);
        assert!((w.e[2] + 0.25).abs() < 1e-15);
        assert!((psi_3d(&w, &p) + 1.0).abs() < 1e-12);
    }

    #[test]
    fn stresses_vanish_at_reference_and_well() {
        let p = defaults();
        let (s, b) = stresses_3d(&PointState3D::new(identity(), [[[0.0; 3]; 3]; 3]), &p);
        assert!(s.iter().flatten().all(|v| *v == 0.0));
        assert!(b.iter().flatten().flatten().all(|v| *v == 0.0));
        let (s, _) = stresses_3d(&well_state(), &p);
        assert!(s.iter().flatten().all(|v| v.abs() < 1e-10), "{s:?}");
    }

    #[test]
    fn tangent_major_symmetry_exact() {
        let p = defaults();
        let f = [[1.05, 0.02, -0.01], [0.03, 0.97, 0.04], [-0.02, 0.01, 1.02]];
        let mut g = [[[0.0; 3]; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                for k in j..3 {
                    let v = 0.1 * ((i + 2 * j + 3 * k) as f64).sin();
                    g[i][j][k] = v;
                    g[i][k][j] = v;
                }
            }
        }
        let t = tangent_blocks_3d(&PointState3D::new(f, g), &p);
        for i in 0..3 {
            for ii in 0..3 {
                for j in 0..3 {
                    for jj in 0..3 {
                        assert_eq!(t.pp[i][ii][j][jj], t.pp[j][jj][i][ii]);
                    }
                }
            }
        }
    }

    #[test]
    fn variant_examples() {
        let p = defaults();
        assert_eq!(classify_variant(0.0, -0.25, &p), Variant::V3);
        assert_eq!(classify_variant(0.0, 0.0, &p), Variant::None);
        let t = 60f64.to_radians();
        assert_eq!(classify_variant(0.25 * t.sin(), 0.25 * t.cos(), &p), Variant::V1);
        let t = 300f64.to_radians();
        assert_eq!(classify_variant(0.25 * t.sin(), 0.25 * t.cos(), &p), Variant::V2);
        assert_eq!(Variant::V2.label(), 2);
    }

    #[test]
    fn compact_response_matches_full_energy() {
        let p = defaults();
        let mut z = [0.0; KIN3];
        for (a, v) in z.iter_mut().enumerate() {
            *v = 0.03 * ((a * 7 % 11) as f64 - 5.0) / 5.0;
        }
        let r = response_3d(&z, &p, false);
        let mut hu = [[0.0; 3]; 3];
        let mut gu = [[[0.0; 3]; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                hu[i][j] = z[kin3_grad_index(i, j)];
            }
            for (s, &(j, k)) in SYM_PAIRS.iter().enumerate() {
                gu[i][j][k] = z[kin3_hess_index(i, s)];
                gu[i][k][j] = z[kin3_hess_index(i, s)];
            }
        }
        let st = PointState3D::from_displacement(&hu, &gu);
        assert!((r.energy - psi_3d(&st, &p)).abs() < 1e-13);
    }
}
