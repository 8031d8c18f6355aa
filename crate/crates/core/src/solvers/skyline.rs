use crate::discretization::SymmetricOperator;
use crate::error::{Error, Result};

/// `L D Lᵀ` factorization in variable-band (envelope) storage, without
/// pivoting. The number of negative pivots equals the number of negative
/// eigenvalues of the factored matrix.
#[derive(Clone, Debug)]
pub struct EnvelopeLdl {
    n: usize,
    first: Vec<usize>,
    /// Row `i` holds `L[i][first[i]..i]`.
    offsets: Vec<usize>,
    lower: Vec<f64>,
    diag: Vec<f64>,
}

impl EnvelopeLdl {
    pub fn factor(op: &SymmetricOperator) -> Result<Self> {
        let n = op.dim();
        let first = op.row_starts();
        let mut offsets = Vec::with_capacity(n + 1);
        offsets.push(0);
        for i in 0..n {
            offsets.push(offsets[i] + (i - first[i]));
        }
        let mut lower = vec![0.0; offsets[n]];
        let mut diag = vec![0.0; n];
        let scale = op.diagonal().iter().fold(0.0f64, |m, d| m.max(d.abs())).max(f64::MIN_POSITIVE);

        for i in 0..n {
            let fi = first[i];
            let (cols, vals) = op.row(i);
            let (done, rest) = lower.split_at_mut(offsets[i]);
            let row = &mut rest[..i - fi];
            let mut aii = 0.0;
            for (&j, &v) in cols.iter().zip(vals) {
                if j < i {
                    row[j - fi] = v;
                } else if j == i {
                    aii = v;
                }
            }
            // row[j] <- g_ij = a_ij − Σ_k g_ik L_jk
            for j in fi..i {
                let fj = first[j];
                let k0 = fi.max(fj);
                if k0 < j {
                    let lj = &done[offsets[j] + (k0 - fj)..offsets[j] + (j - fj)];
                    let gi = &row[k0 - fi..j - fi];
                    let s: f64 = gi.iter().zip(lj).map(|(a, b)| a * b).sum();
                    row[j - fi] -= s;
                }
            }
            let mut d = aii;
            for j in fi..i {
                let g = row[j - fi];
                let l = g / diag[j];
                d -= g * l;
                row[j - fi] = l;
            }
            if !d.is_finite() || d.abs() <= 1e-14 * scale {
                return Err(Error::Eigen(format!("near-zero pivot {d:e} in row {i}")));
            }
            diag[i] = d;
        }
        Ok(Self { n, first, offsets, lower, diag })
    }

    pub fn negative_pivots(&self) -> usize {
        self.diag.iter().filter(|d| **d < 0.0).count()
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        for i in 0..self.n {
            let fi = self.first[i];
            let l = &self.lower[self.offsets[i]..self.offsets[i + 1]];
            let s: f64 = l.iter().zip(&x[fi..i]).map(|(a, b)| a * b).sum();
            x[i] -= s;
        }
        for (xi, d) in x.iter_mut().zip(&self.diag) {
            *xi /= d;
        }
        for i in (0..self.n).rev() {
            let fi = self.first[i];
            let xi = x[i];
            let l = &self.lower[self.offsets[i]..self.offsets[i + 1]];
            for (xj, lij) in x[fi..i].iter_mut().zip(l) {
                *xj -= lij * xi;
            }
        }
        x
    }
}
