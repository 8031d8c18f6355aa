use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::skyline::EnvelopeLdl;
use super::{axpy, dot, norm};
use crate::discretization::SymmetricOperator;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EigenSettings {
    /// Number of algebraically smallest eigenvalues.
    pub k: usize,
    /// Bound on `‖K x − λ x‖` for every returned pair.
    pub abs_tol: f64,
    /// Largest Krylov basis per pass.
    pub max_subspace: usize,
    /// Deflated restarts allowed after the first pass.
    pub max_restarts: usize,
    pub seed: u64,
}

impl Default for EigenSettings {
    fn default() -> Self {
        Self { k: 5, abs_tol: 1e-6, max_subspace: 300, max_restarts: 6, seed: 0 }
    }
}

impl EigenSettings {
    pub fn validate(&self) -> Result<()> {
        if self.k == 0 || !(self.abs_tol > 0.0) || self.max_subspace == 0 {
            return Err(Error::InvalidParameter(format!("invalid eigen settings {self:?}")));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EigenResult {
    /// Ascending.
    pub values: Vec<f64>,
    /// `‖K x − λ x‖` of each returned pair.
    pub residuals: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
    /// Number of negative eigenvalues of the whole operator.
    pub negative_count: usize,
}

/// Inertia-checked factorization of `K − σI`, nudging `σ` off eigenvalues.
fn factor_near(op: &SymmetricOperator, sigma: f64, scale: f64) -> Result<(f64, EnvelopeLdl)> {
    let mut last = None;
    for nudge in [0.0, -1e-10, 1e-10, -1e-8, 1e-8, -1e-6] {
        let s = sigma + nudge * scale;
        match EnvelopeLdl::factor(&op.shifted(-s)) {
            Ok(f) => return Ok((s, f)),
            Err(e) => last = Some(e),
        }
    }
    Err(last.unwrap_or_else(|| Error::Eigen("factorization failed".into())))
}

fn orthogonalize(w: &mut [f64], basis: &[Vec<f64>]) {
    for _ in 0..2 {
        for q in basis {
            let c = dot(q, w);
            axpy(-c, q, w);
        }
    }
}

struct Pair {
    value: f64,
    vector: Vec<f64>,
    residual: f64,
}

fn residual_norm(op: &SymmetricOperator, x: &[f64], lambda: f64) -> f64 {
    let kx = op.mul_vec(x);
    kx.iter().zip(x).map(|(a, b)| (a - lambda * b).powi(2)).sum::<f64>().sqrt()
}

/// One shift-invert Lanczos pass on the complement of `found`. Returns the
/// converged pairs among those wanted: every eigenvalue below `sigma` and
/// the `above` nearest ones above it.
#[allow(clippy::too_many_arguments)]
fn lanczos_pass(
    op: &SymmetricOperator,
    fac: &EnvelopeLdl,
    sigma: f64,
    below: usize,
    above: usize,
    found: &[Vec<f64>],
    settings: &EigenSettings,
    seed: u64,
) -> Vec<Pair> {
    let n = op.dim();
    let avail = n - found.len();
    let max_m = settings.max_subspace.min(avail).max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut q: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    orthogonalize(&mut q, found);
    let qn = norm(&q);
    q.iter_mut().for_each(|v| *v /= qn);

    let mut basis: Vec<Vec<f64>> = vec![q];
    let mut alpha: Vec<f64> = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    let wanted = below + above;
    let mut converged = Vec::new();

    loop {
        let j = basis.len() - 1;
        let mut w = fac.solve(&basis[j]);
        let a = dot(&basis[j], &w);
        axpy(-a, &basis[j], &mut w);
        if j > 0 {
            axpy(-beta[j - 1], &basis[j - 1], &mut w);
        }
        orthogonalize(&mut w, found);
        orthogonalize(&mut w, &basis);
        alpha.push(a);
        let b = norm(&w);
        let m = basis.len();
        let exhausted = m >= max_m || b <= 1e-14 * a.abs().max(1e-300);
        if m >= wanted && (m % 5 == 0 || exhausted) {
            let mut t = DMatrix::<f64>::zeros(m, m);
            for i in 0..m {
                t[(i, i)] = alpha[i];
                if i + 1 < m {
                    t[(i, i + 1)] = beta[i];
                    t[(i + 1, i)] = beta[i];
                }
            }
            let eig = SymmetricEigen::new(t);
            let mut order: Vec<usize> = (0..m).collect();
            order.sort_by(|&x, &y| eig.eigenvalues[x].total_cmp(&eig.eigenvalues[y]));
            // negative θ: eigenvalues below σ; largest positive θ: nearest above
            let neg: Vec<usize> = order.iter().copied().filter(|&i| eig.eigenvalues[i] < 0.0).collect();
            let pos: Vec<usize> =
                order.iter().rev().copied().filter(|&i| eig.eigenvalues[i] > 0.0).take(above).collect();
            let mut pairs = Vec::new();
            for &i in neg.iter().take(below).chain(pos.iter()) {
                let theta = eig.eigenvalues[i];
                let mut y = vec![0.0; n];
                for (r, qr) in basis.iter().enumerate() {
                    axpy(eig.eigenvectors[(r, i)], qr, &mut y);
                }
                let yn = norm(&y);
                y.iter_mut().for_each(|v| *v /= yn);
                let value = sigma + 1.0 / theta;
                let residual = residual_norm(op, &y, value);
                pairs.push(Pair { value, vector: y, residual });
            }
            let ok = pairs.iter().filter(|p| p.residual <= settings.abs_tol).count();
            let enough = neg.len() >= below && pos.len() >= above && ok == pairs.len();
            if enough || exhausted {
                converged = pairs.into_iter().filter(|p| p.residual <= settings.abs_tol).collect();
                break;
            }
        }
        if exhausted {
            break;
        }
        beta.push(b);
        w.iter_mut().for_each(|v| *v /= b);
        basis.push(w);
    }
    converged
}

/// The `k` algebraically smallest eigenvalues of a symmetric operator by
/// shift-invert Lanczos about zero, with full reorthogonalization and an
/// inertia count certifying that none were skipped.
pub fn smallest_eigs(op: &SymmetricOperator, settings: &EigenSettings) -> Result<EigenResult> {
    settings.validate()?;
    let n = op.dim();
    if n == 0 {
        return Err(Error::Eigen("empty operator".into()));
    }
    let k = settings.k.min(n);
    let scale = op.diagonal().iter().fold(0.0f64, |m, d| m.max(d.abs())).max(1.0);
    let (sigma, fac) = factor_near(op, 0.0, scale)?;
    let nu = fac.negative_pivots();
    let negative_count = if sigma == 0.0 { nu } else { EnvelopeLdl::factor(op)?.negative_pivots() };

    let mut found: Vec<Pair> = Vec::new();
    for pass in 0..=settings.max_restarts {
        let below = nu.saturating_sub(found.iter().filter(|p| p.value < sigma).count());
        let found_above = found.iter().filter(|p| p.value >= sigma).count();
        let above = k.saturating_sub(nu).saturating_sub(found_above).max(if below == 0 { 1 } else { 0 });
        let vecs: Vec<Vec<f64>> = found.iter().map(|p| p.vector.clone()).collect();
        if vecs.len() >= n {
            break;
        }
        let fresh = lanczos_pass(op, &fac, sigma, below, above, &vecs, settings, settings.seed + pass as u64);
        found.extend(fresh);
        found.sort_by(|a, b| a.value.total_cmp(&b.value));

        if found.len() < k || found.iter().filter(|p| p.value < sigma).count() < nu {
            continue;
        }
        // certify: exactly as many eigenvalues below μ as found below μ
        let lk = found[k - 1].value;
        let mu = match found.get(k) {
            Some(next) if next.value > lk => 0.5 * (lk + next.value),
            _ => lk + 10.0 * settings.abs_tol.max(1e-12 * lk.abs()),
        };
        let (mu, fmu) = factor_near(op, mu, scale)?;
        let count = fmu.negative_pivots();
        let below_mu = found.iter().filter(|p| p.value < mu).count();
        if count == below_mu {
            found.truncate(k);
            return Ok(finish(op, found, negative_count));
        }
        log::debug!("eigen pass {pass}: {count} eigenvalues below {mu:e}, {below_mu} found; restarting");
    }
    Err(Error::Eigen(format!(
        "{} of {k} eigenpairs converged to {:e} (residuals {:?})",
        found.len().min(k),
        settings.abs_tol,
        found.iter().map(|p| p.residual).collect::<Vec<_>>()
    )))
}

/// Rayleigh-Ritz clean-up over the converged vectors.
fn finish(op: &SymmetricOperator, pairs: Vec<Pair>, negative_count: usize) -> EigenResult {
    let m = pairs.len();
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(m);
    for p in &pairs {
        let mut v = p.vector.clone();
        orthogonalize(&mut v, &basis);
        let vn = norm(&v);
        v.iter_mut().for_each(|x| *x /= vn);
        basis.push(v);
    }
    let kb: Vec<Vec<f64>> = basis.iter().map(|v| op.mul_vec(v)).collect();
    let h = DMatrix::from_fn(m, m, |i, j| 0.5 * (dot(&basis[i], &kb[j]) + dot(&basis[j], &kb[i])));
    let eig = SymmetricEigen::new(h);
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let mut out = EigenResult { values: vec![], residuals: vec![], vectors: vec![], negative_count };
    for i in order {
        let mut x = vec![0.0; op.dim()];
        for (r, b) in basis.iter().enumerate() {
            axpy(eig.eigenvectors[(r, i)], b, &mut x);
        }
        let lambda = eig.eigenvalues[i];
        out.residuals.push(residual_norm(op, &x, lambda));
        out.values.push(lambda);
        out.vectors.push(x);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_example() {
        let a = SymmetricOperator::diagonal_matrix(&[5.0, -2.0, 7.0, 0.1]);
        let r = smallest_eigs(&a, &EigenSettings { k: 2, ..Default::default() }).unwrap();
        assert!((r.values[0] + 2.0).abs() < 1e-6);
        assert!((r.values[1] - 0.1).abs() < 1e-6);
        assert_eq!(r.negative_count, 1);
    }

    #[test]
    fn repeated_eigenvalues_are_all_found() {
        let d: Vec<f64> = (0..60).map(|i| if i % 20 == 3 { -1.0 } else { 1.0 + i as f64 }).collect();
        let a = SymmetricOperator::diagonal_matrix(&d);
        let r = smallest_eigs(&a, &EigenSettings { k: 4, ..Default::default() }).unwrap();
        assert_eq!(r.negative_count, 3);
        for v in &r.values[..3] {
            assert!((v + 1.0).abs() < 1e-6, "{:?}", r.values);
        }
        assert!((r.values[3] - 1.0).abs() < 1e-6);
    }
}
