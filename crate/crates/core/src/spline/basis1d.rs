/// Open uniform knot vector on `[0, 1]` with `elements` spans.
pub fn knot_vector(degree: usize, elements: usize) -> Vec<f64> {
    let mut knots = Vec::with_capacity(elements + 2 * degree + 1);
    knots.extend(std::iter::repeat(0.0).take(degree + 1));
    knots.extend((1..elements).map(|i| i as f64 / elements as f64));
    knots.extend(std::iter::repeat(1.0).take(degree + 1));
    knots
}

/// Univariate clamped uniform B-spline basis.
#[derive(Clone, Debug)]
pub struct Basis1D {
    degree: usize,
    elements: usize,
    knots: Vec<f64>,
}

impl Basis1D {
    pub fn new(degree: usize, elements: usize) -> Self {
        Self { degree, elements, knots: knot_vector(degree, elements) }
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    /// Values and first/second derivatives of the `degree + 1` functions that
    /// are nonzero on `element`, at local coordinate `xi ∈ [0, 1]`. Entry `a`
    /// belongs to global basis function `element + a`.
    pub fn eval_local(&self, element: usize, xi: f64) -> Vec<[f64; 3]> {
        let x = (element as f64 + xi) / self.elements as f64;
        self.ders(element + self.degree, x)
    }

    /// Cox–de Boor recurrence with derivatives (Piegl & Tiller, A2.3) on the
    /// knot span `span`.
    fn ders(&self, span: usize, x: f64) -> Vec<[f64; 3]> {
        let p = self.degree;
        let u = &self.knots;
        let mut ndu = vec![vec![0.0; p + 1]; p + 1];
        let mut left = vec![0.0; p + 1];
        let mut right = vec![0.0; p + 1];
        ndu[0][0] = 1.0;
        for j in 1..=p {
            left[j] = x - u[span + 1 - j];
            right[j] = u[span + j] - x;
            let mut saved = 0.0;
            for r in 0..j {
                ndu[j][r] = right[r + 1] + left[j - r];
                let temp = ndu[r][j - 1] / ndu[j][r];
                ndu[r][j] = saved + right[r + 1] * temp;
                saved = left[j - r] * temp;
            }
            ndu[j][j] = saved;
        }

        let nd = 2.min(p);
        let mut ders = vec![[0.0; 3]; p + 1];
        for (j, d) in ders.iter_mut().enumerate() {
            d[0] = ndu[j][p];
        }
        let mut a = [vec![0.0; p + 1], vec![0.0; p + 1]];
        for r in 0..=p {
            let (mut s1, mut s2) = (0usize, 1usize);
            a[0][0] = 1.0;
            for k in 1..=nd {
                let mut d = 0.0;
                let rk = r as isize - k as isize;
                let pk = p - k;
                if r >= k {
                    a[s2][0] = a[s1][0] / ndu[pk + 1][rk as usize];
                    d = a[s2][0] * ndu[rk as usize][pk];
                }
                let j1 = if rk >= -1 { 1 } else { (-rk) as usize };
                let j2 = if r <= pk + 1 { k - 1 } else { p - r };
                for j in j1..=j2 {
                    let idx = (rk + j as isize) as usize;
                    a[s2][j] = (a[s1][j] - a[s1][j - 1]) / ndu[pk + 1][idx];
                    d += a[s2][j] * ndu[idx][pk];
                }
                if r <= pk {
                    a[s2][k] = -a[s1][k - 1] / ndu[pk + 1][r];
                    d += a[s2][k] * ndu[r][pk];
                }
                ders[r][k] = d;
                std::mem::swap(&mut s1, &mut s2);
            }
        }
        let mut factor = p as f64;
        for k in 1..=nd {
            for d in ders.iter_mut() {
                d[k] *= factor;
            }
            factor *= (p - k) as f64;
        }
        ders
    }

    /// Integral over `[0, 1]` of every basis function.
    pub fn integrals(&self) -> Vec<f64> {
        let p = self.degree;
        (0..self.elements + p)
            .map(|i| (self.knots[i + p + 1] - self.knots[i]) / (p + 1) as f64)
            .collect()
    }
}

/// Boehm knot insertion of every knot in `inserts` (sorted, each strictly
/// inside a span) into the coefficient sequence of a spline of `degree`
/// defined on `knots`.
pub(crate) fn insert_knots(knots: &[f64], degree: usize, coeffs: &[f64], inserts: &[f64]) -> Vec<f64> {
    let p = degree;
    let mut t = knots.to_vec();
    let mut c = coeffs.to_vec();
    for &x in inserts {
        // span k with t[k] <= x < t[k+1]
        let k = t.partition_point(|&v| v <= x) - 1;
        let mut next = Vec::with_capacity(c.len() + 1);
        next.extend_from_slice(&c[..=k - p]);
        for i in (k - p + 1)..=k {
            let alpha = (x - t[i]) / (t[i + p] - t[i]);
            next.push(alpha * c[i] + (1.0 - alpha) * c[i - 1]);
        }
        next.extend_from_slice(&c[k..]);
        t.insert(k + 1, x);
        c = next;
    }
    c
}
