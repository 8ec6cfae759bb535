//! Compressed sparse row matrix.

use alloc::vec;
use alloc::vec::Vec;

/// Sparse matrix in CSR form. Column indices are strictly increasing within
/// each row and entries that sum to exactly zero are dropped at build time.
#[derive(Debug, Clone)]
pub struct CsrMatrix {
    pub n_rows: usize,
    pub n_cols: usize,
    pub row_ptr: Vec<usize>,
    pub col_idx: Vec<usize>,
    pub values: Vec<f64>,
}

impl CsrMatrix {
    /// Build from unordered (row, col, value) triplets; duplicates are summed.
    pub fn from_triplets(
        n_rows: usize,
        n_cols: usize,
        triplets: &mut Vec<(usize, usize, f64)>,
    ) -> Self {
        triplets.sort_unstable_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut row_ptr = vec![0usize; n_rows + 1];
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        let mut it = triplets.iter().peekable();
        for row in 0..n_rows {
            while let Some(&&(r, c, _)) = it.peek() {
                if r != row {
                    break;
                }
                let mut sum = 0.0;
                while let Some(&&(r2, c2, v2)) = it.peek() {
                    if r2 == row && c2 == c {
                        sum += v2;
                        it.next();
                    } else {
                        break;
                    }
                }
                if sum != 0.0 {
                    col_idx.push(c);
                    values.push(sum);
                }
            }
            row_ptr[row + 1] = col_idx.len();
        }
        CsrMatrix {
            n_rows,
            n_cols,
            row_ptr,
            col_idx,
            values,
        }
    }

    pub fn identity(n: usize) -> Self {
        CsrMatrix {
            n_rows: n,
            n_cols: n,
            row_ptr: (0..=n).collect(),
            col_idx: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    pub fn from_dense(n_rows: usize, n_cols: usize, data: &[f64]) -> Self {
        let mut trips = Vec::new();
        for i in 0..n_rows {
            for j in 0..n_cols {
                let v = data[i * n_cols + j];
                if v != 0.0 {
                    trips.push((i, j, v));
                }
            }
        }
        Self::from_triplets(n_rows, n_cols, &mut trips)
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.n_rows * self.n_cols];
        for i in 0..self.n_rows {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                d[i * self.n_cols + self.col_idx[k]] = self.values[k];
            }
        }
        d
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let lo = self.row_ptr[i];
        let hi = self.row_ptr[i + 1];
        match self.col_idx[lo..hi].binary_search(&j) {
            Ok(k) => self.values[lo + k],
            Err(_) => 0.0,
        }
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.n_cols);
        let mut y = vec![0.0; self.n_rows];
        for i in 0..self.n_rows {
            let mut s = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                s += self.values[k] * x[self.col_idx[k]];
            }
            y[i] = s;
        }
        y
    }

    pub fn matvec_transpose(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.n_rows);
        let mut y = vec![0.0; self.n_cols];
        for i in 0..self.n_rows {
            let xi = x[i];
            if xi == 0.0 {
                continue;
            }
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                y[self.col_idx[k]] += self.values[k] * xi;
            }
        }
        y
    }

    /// x' A y.
    pub fn bilinear(&self, x: &[f64], y: &[f64]) -> f64 {
        let ay = self.matvec(y);
        x.iter().zip(ay.iter()).map(|(a, b)| a * b).sum()
    }

    pub fn transpose(&self) -> CsrMatrix {
        let mut trips: Vec<(usize, usize, f64)> = Vec::with_capacity(self.nnz());
        for i in 0..self.n_rows {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                trips.push((self.col_idx[k], i, self.values[k]));
            }
        }
        CsrMatrix::from_triplets(self.n_cols, self.n_rows, &mut trips)
    }

    /// `self + c * other` (matching shapes).
    pub fn add_scaled(&self, other: &CsrMatrix, c: f64) -> CsrMatrix {
        debug_assert_eq!(self.n_rows, other.n_rows);
        debug_assert_eq!(self.n_cols, other.n_cols);
        let mut trips: Vec<(usize, usize, f64)> =
            Vec::with_capacity(self.nnz() + other.nnz());
        for i in 0..self.n_rows {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                trips.push((i, self.col_idx[k], self.values[k]));
            }
            for k in other.row_ptr[i]..other.row_ptr[i + 1] {
                trips.push((i, other.col_idx[k], c * other.values[k]));
            }
        }
        CsrMatrix::from_triplets(self.n_rows, self.n_cols, &mut trips)
    }

    pub fn scaled(&self, c: f64) -> CsrMatrix {
        let mut out = self.clone();
        for v in &mut out.values {
            *v *= c;
        }
        out
    }

    /// Maximum absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        let mut best = 0.0f64;
        for i in 0..self.n_rows {
            let s: f64 = self.values[self.row_ptr[i]..self.row_ptr[i + 1]]
                .iter()
                .map(|v| libm::fabs(*v))
                .sum();
            best = best.max(s);
        }
        best
    }

    /// Largest entrywise asymmetry |A - A'|; zero for symmetric matrices.
    pub fn asymmetry(&self) -> f64 {
        let t = self.transpose();
        let mut best = 0.0f64;
        for i in 0..self.n_rows {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                let j = self.col_idx[k];
                best = best.max(libm::fabs(self.values[k] - t.get(i, j)));
            }
            for k in t.row_ptr[i]..t.row_ptr[i + 1] {
                let j = t.col_idx[k];
                best = best.max(libm::fabs(t.values[k] - self.get(i, j)));
            }
        }
        best
    }
}

/// Relative residual `||Ax - b||_inf / (||A||_inf ||x||_inf + ||b||_inf)`.
pub(crate) fn relative_residual(a: &CsrMatrix, x: &[f64], b: &[f64]) -> f64 {
    let ax = a.matvec(x);
    let mut r = 0.0f64;
    for i in 0..b.len() {
        r = r.max(libm::fabs(ax[i] - b[i]));
    }
    let xn = x.iter().fold(0.0f64, |m, v| m.max(libm::fabs(*v)));
    let bn = b.iter().fold(0.0f64, |m, v| m.max(libm::fabs(*v)));
    let scale = a.norm_inf() * xn + bn;
    if scale == 0.0 {
        r
    } else {
        r / scale
    }
}
