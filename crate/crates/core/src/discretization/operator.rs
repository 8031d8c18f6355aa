use rayon::prelude::*;

/// Symmetric sparse matrix in compressed-row form, both triangles stored.
#[derive(Clone, Debug, PartialEq)]
pub struct SymmetricOperator {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    values: Vec<f64>,
}

impl SymmetricOperator {
    /// Operator with the given sparsity pattern and all values zero. Column
    /// indices in each row must be sorted.
    pub fn from_pattern(n: usize, row_ptr: Vec<usize>, cols: Vec<usize>) -> Self {
        let nnz = cols.len();
        Self { n, row_ptr, cols, values: vec![0.0; nnz] }
    }

    /// Dense row-major input; entries that are exactly zero are dropped
    /// except on the diagonal.
    pub fn from_dense(n: usize, dense: &[f64]) -> Self {
        let mut row_ptr = vec![0];
        let mut cols = Vec::new();
        let mut values = Vec::new();
        for i in 0..n {
            for j in 0..n {
                let v = dense[i * n + j];
                if v != 0.0 || i == j {
                    cols.push(j);
                    values.push(v);
                }
            }
            row_ptr.push(cols.len());
        }
        Self { n, row_ptr, cols, values }
    }

    pub fn diagonal_matrix(diag: &[f64]) -> Self {
        let n = diag.len();
        Self { n, row_ptr: (0..=n).collect(), cols: (0..n).collect(), values: diag.to_vec() }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        (&self.cols[r.clone()], &self.values[r])
    }

    pub(crate) fn position(&self, i: usize, j: usize) -> Option<usize> {
        let start = self.row_ptr[i];
        self.cols[start..self.row_ptr[i + 1]].binary_search(&j).ok().map(|p| start + p)
    }

    pub(crate) fn add_at(&mut self, pos: usize, v: f64) {
        self.values[pos] += v;
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.position(i, j).map_or(0.0, |p| self.values[p])
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    /// `y = A x`, rows computed independently.
    pub fn apply(&self, x: &[f64], y: &mut [f64]) {
        y.par_iter_mut().enumerate().with_min_len(256).for_each(|(i, yi)| {
            let (c, v) = self.row(i);
            *yi = c.iter().zip(v).map(|(&j, &a)| a * x[j]).sum();
        });
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.apply(x, &mut y);
        y
    }

    /// `A + shift·I`.
    pub fn shifted(&self, shift: f64) -> Self {
        let mut out = self.clone();
        for i in 0..self.n {
            let p = out.position(i, i).expect("diagonal entry present in pattern");
            out.values[p] += shift;
        }
        out
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.n * self.n];
        for i in 0..self.n {
            let (c, v) = self.row(i);
            for (&j, &a) in c.iter().zip(v) {
                d[i * self.n + j] = a;
            }
        }
        d
    }

    /// Largest `|A_ij − A_ji|` over stored entries.
    pub fn asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.n {
            let (c, v) = self.row(i);
            for (&j, &a) in c.iter().zip(v) {
                worst = worst.max((a - self.get(j, i)).abs());
            }
        }
        worst
    }

    /// First stored column of every row (the lower envelope).
    pub(crate) fn row_starts(&self) -> Vec<usize> {
        (0..self.n).map(|i| self.row(i).0.first().copied().unwrap_or(i).min(i)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dense_roundtrip_and_apply() {
        let d = vec![2.0, -1.0, 0.0, -1.0, 2.0, -1.0, 0.0, -1.0, 2.0];
        let a = SymmetricOperator::from_dense(3, &d);
        assert_eq!(a.nnz(), 7);
        assert_eq!(a.to_dense(), d);
        assert_eq!(a.mul_vec(&[1.0, 1.0, 1.0]), vec![1.0, 0.0, 1.0]);
        assert_eq!(a.asymmetry(), 0.0);
        assert_eq!(a.shifted(1.0).diagonal(), vec![3.0; 3]);
    }
}
