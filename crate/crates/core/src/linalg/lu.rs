//! Direct LU factorization with partial pivoting.
//!
//! Small systems use a dense in-place factorization; larger ones a
//! left-looking sparse LU (column-by-column, with a depth-first reach for the
//! sparse triangular solves) on a reverse Cuthill-McKee preordering.

use alloc::vec;
use alloc::vec::Vec;

use super::rcm::reverse_cuthill_mckee;
use super::CsrMatrix;
use crate::{Error, Result};

/// Below this dimension a dense factorization is used.
const DENSE_THRESHOLD: usize = 500;
/// A pivot smaller than this times the column magnitude is treated as zero.
const PIVOT_TOL: f64 = 1e-14;

#[derive(Debug, Clone, Copy)]
pub struct FactorStats {
    pub n: usize,
    pub nnz_matrix: usize,
    pub nnz_factors: usize,
    pub dense: bool,
}

pub struct LuFactorization {
    kind: Kind,
    pub stats: FactorStats,
}

enum Kind {
    Dense {
        n: usize,
        /// Row-major LU factors, L unit-diagonal below, U on and above.
        lu: Vec<f64>,
        /// Row swap at each elimination step.
        swaps: Vec<usize>,
    },
    Sparse {
        n: usize,
        /// RCM permutation, `sigma[new] = old`.
        sigma: Vec<usize>,
        /// L columns: (row in permuted indexing, multiplier); unit diagonal.
        l_cols: Vec<Vec<(usize, f64)>>,
        /// U columns: (pivot step, value), strictly above the diagonal.
        u_cols: Vec<Vec<(usize, f64)>>,
        u_diag: Vec<f64>,
        /// Pivot row (permuted indexing) chosen at each step.
        pivot_rows: Vec<usize>,
    },
}

/// Factorize a square sparse matrix, `PA = LU` with partial pivoting.
pub fn factorize(a: &CsrMatrix) -> Result<LuFactorization> {
    if a.n_rows != a.n_cols {
        return Err(Error::Validation(alloc::format!(
            "factorize needs a square matrix, got {}x{}",
            a.n_rows,
            a.n_cols
        )));
    }
    if a.n_rows < DENSE_THRESHOLD {
        factorize_dense(a)
    } else {
        factorize_sparse(a)
    }
}

impl LuFactorization {
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        match &self.kind {
            Kind::Dense { n, lu, swaps } => {
                let n = *n;
                let mut x = b.to_vec();
                for k in 0..n {
                    x.swap(k, swaps[k]);
                    let xk = x[k];
                    if xk != 0.0 {
                        for i in k + 1..n {
                            x[i] -= lu[i * n + k] * xk;
                        }
                    }
                }
                for k in (0..n).rev() {
                    let mut s = x[k];
                    for j in k + 1..n {
                        s -= lu[k * n + j] * x[j];
                    }
                    x[k] = s / lu[k * n + k];
                }
                x
            }
            Kind::Sparse {
                n,
                sigma,
                l_cols,
                u_cols,
                u_diag,
                pivot_rows,
            } => {
                let n = *n;
                let mut w = vec![0.0; n];
                for i in 0..n {
                    w[i] = b[sigma[i]];
                }
                // forward: y = L^{-1} P w
                let mut y = vec![0.0; n];
                for k in 0..n {
                    let yk = w[pivot_rows[k]];
                    y[k] = yk;
                    if yk != 0.0 {
                        for &(r, lv) in &l_cols[k] {
                            w[r] -= lv * yk;
                        }
                    }
                }
                // backward: U z = y, column oriented
                for j in (0..n).rev() {
                    let zj = y[j] / u_diag[j];
                    y[j] = zj;
                    if zj != 0.0 {
                        for &(i, uv) in &u_cols[j] {
                            y[i] -= uv * zj;
                        }
                    }
                }
                let mut x = vec![0.0; n];
                for j in 0..n {
                    x[sigma[j]] = y[j];
                }
                x
            }
        }
    }
}

fn factorize_dense(a: &CsrMatrix) -> Result<LuFactorization> {
    let n = a.n_rows;
    let mut lu = a.to_dense();
    let mut swaps = vec![0usize; n];
    let scale = a.norm_inf();
    for k in 0..n {
        let mut piv = k;
        let mut best = libm::fabs(lu[k * n + k]);
        for i in k + 1..n {
            let v = libm::fabs(lu[i * n + k]);
            if v > best {
                best = v;
                piv = i;
            }
        }
        if best <= PIVOT_TOL * scale {
            return Err(Error::SingularMatrix { pivot_row: k });
        }
        swaps[k] = piv;
        if piv != k {
            for j in 0..n {
                lu.swap(k * n + j, piv * n + j);
            }
        }
        let pivot = lu[k * n + k];
        for i in k + 1..n {
            let m = lu[i * n + k] / pivot;
            lu[i * n + k] = m;
            if m != 0.0 {
                for j in k + 1..n {
                    lu[i * n + j] -= m * lu[k * n + j];
                }
            }
        }
    }
    Ok(LuFactorization {
        stats: FactorStats {
            n,
            nnz_matrix: a.nnz(),
            nnz_factors: n * n,
            dense: true,
        },
        kind: Kind::Dense { n, lu, swaps },
    })
}

fn factorize_sparse(a: &CsrMatrix) -> Result<LuFactorization> {
    let n = a.n_rows;
    let sigma = reverse_cuthill_mckee(a);
    let mut inv_sigma = vec![0usize; n];
    for (new, &old) in sigma.iter().enumerate() {
        inv_sigma[old] = new;
    }
    // Columns of B = A[sigma, sigma], rows in permuted indexing.
    let mut b_cols: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for i in 0..n {
        for k in a.row_ptr[i]..a.row_ptr[i + 1] {
            let j = a.col_idx[k];
            b_cols[inv_sigma[j]].push((inv_sigma[i], a.values[k]));
        }
    }
    let scale = a.norm_inf();

    let mut l_cols: Vec<Vec<(usize, f64)>> = Vec::with_capacity(n);
    let mut u_cols: Vec<Vec<(usize, f64)>> = Vec::with_capacity(n);
    let mut u_diag = vec![0.0; n];
    let mut pivot_rows = vec![0usize; n];
    // step assigned to each permuted row, usize::MAX while non-pivotal
    let mut pinv = vec![usize::MAX; n];

    let mut x = vec![0.0f64; n];
    let mut visited = vec![false; n];
    let mut topo: Vec<usize> = Vec::with_capacity(64);
    let mut dfs_stack: Vec<(usize, usize)> = Vec::with_capacity(64);
    let mut nnz_factors = n;

    for j in 0..n {
        // symbolic: reach of the column pattern through the pivotal L columns
        topo.clear();
        for &(r, _) in &b_cols[j] {
            if !visited[r] {
                dfs_stack.push((r, 0));
                visited[r] = true;
                while let Some(&(node, child)) = dfs_stack.last() {
                    let step = pinv[node];
                    let nchild = if step == usize::MAX { 0 } else { l_cols[step].len() };
                    if child < nchild {
                        dfs_stack.last_mut().unwrap().1 += 1;
                        let next = l_cols[step][child].0;
                        if !visited[next] {
                            visited[next] = true;
                            dfs_stack.push((next, 0));
                        }
                    } else {
                        topo.push(node);
                        dfs_stack.pop();
                    }
                }
            }
        }
        // numeric scatter and elimination in topological order
        for &(r, v) in &b_cols[j] {
            x[r] += v;
        }
        for idx in (0..topo.len()).rev() {
            let i = topo[idx];
            let step = pinv[i];
            if step != usize::MAX {
                let xi = x[i];
                if xi != 0.0 {
                    for &(r, lv) in &l_cols[step] {
                        x[r] -= lv * xi;
                    }
                }
            }
        }
        // partial pivot among non-pivotal rows
        let mut piv = usize::MAX;
        let mut best = 0.0f64;
        for &i in &topo {
            if pinv[i] == usize::MAX {
                let v = libm::fabs(x[i]);
                if v > best || (v == best && piv == usize::MAX) {
                    best = v;
                    piv = i;
                }
            }
        }
        if piv == usize::MAX || best <= PIVOT_TOL * scale {
            // clean workspace before bailing out
            for &i in &topo {
                x[i] = 0.0;
                visited[i] = false;
            }
            return Err(Error::SingularMatrix {
                pivot_row: sigma[j],
            });
        }
        let pivot = x[piv];
        let mut ucol = Vec::new();
        let mut lcol = Vec::new();
        for &i in &topo {
            let v = x[i];
            if pinv[i] != usize::MAX {
                if v != 0.0 {
                    ucol.push((pinv[i], v));
                }
            } else if i != piv && v != 0.0 {
                lcol.push((i, v / pivot));
            }
            x[i] = 0.0;
            visited[i] = false;
        }
        nnz_factors += ucol.len() + lcol.len();
        u_diag[j] = pivot;
        pivot_rows[j] = piv;
        pinv[piv] = j;
        u_cols.push(ucol);
        l_cols.push(lcol);
    }

    Ok(LuFactorization {
        stats: FactorStats {
            n,
            nnz_matrix: a.nnz(),
            nnz_factors,
            dense: false,
        },
        kind: Kind::Sparse {
            n,
            sigma,
            l_cols,
            u_cols,
            u_diag,
            pivot_rows,
        },
    })
}

/// Relative residual of a computed solution, see [`CsrMatrix`].
pub fn solve_residual(a: &CsrMatrix, x: &[f64], b: &[f64]) -> f64 {
    super::csr::relative_residual(a, x, b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec::Vec;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn identity_solve() {
        let a = CsrMatrix::identity(5);
        let f = factorize(&a).unwrap();
        let b = [1.0, 2.0, 3.0, 4.0, 5.0];
        assert_eq!(f.solve(&b), b.to_vec());
    }

    #[test]
    fn antidiagonal_requires_pivoting() {
        let mut t = vec![(0usize, 1usize, 1.0), (1usize, 0usize, 1.0)];
        let a = CsrMatrix::from_triplets(2, 2, &mut t);
        let f = factorize(&a).unwrap();
        let x = f.solve(&[1.0, 2.0]);
        assert_eq!(x, vec![2.0, 1.0]);
    }

    #[test]
    fn singular_matrix_reports_pivot_row() {
        let mut t = vec![(0usize, 0usize, 1.0), (1, 0, 2.0), (0, 1, 3.0), (1, 1, 6.0)];
        let a = CsrMatrix::from_triplets(2, 2, &mut t);
        match factorize(&a) {
            Err(Error::SingularMatrix { .. }) => {}
            other => panic!("expected singular matrix error, got {:?}", other.is_ok()),
        }
    }

    /// Thomas-algorithm oracle for the 1D Dirichlet Laplacian.
    fn thomas(diag: f64, off: f64, b: &[f64]) -> Vec<f64> {
        let n = b.len();
        let mut c = vec![0.0; n];
        let mut d = vec![0.0; n];
        c[0] = off / diag;
        d[0] = b[0] / diag;
        for i in 1..n {
            let m = diag - off * c[i - 1];
            c[i] = off / m;
            d[i] = (b[i] - off * d[i - 1]) / m;
        }
        let mut x = vec![0.0; n];
        x[n - 1] = d[n - 1];
        for i in (0..n - 1).rev() {
            x[i] = d[i] - c[i] * x[i + 1];
        }
        x
    }

    #[test]
    fn laplacian_matches_thomas_oracle() {
        let n = 10;
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 2.0));
            if i > 0 {
                t.push((i, i - 1, -1.0));
            }
            if i + 1 < n {
                t.push((i, i + 1, -1.0));
            }
        }
        let a = CsrMatrix::from_triplets(n, n, &mut t);
        let b: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        let f = factorize(&a).unwrap();
        let x = f.solve(&b);
        let oracle = thomas(2.0, -1.0, &b);
        for (xi, oi) in x.iter().zip(oracle.iter()) {
            assert!((xi - oi).abs() < 1e-12, "{xi} vs {oi}");
        }
    }

    fn random_sparse(n: usize, rng: &mut ChaCha8Rng) -> CsrMatrix {
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 4.0 + rng.gen::<f64>()));
            for _ in 0..4 {
                let j = rng.gen_range(0..n);
                t.push((i, j, rng.gen::<f64>() - 0.5));
            }
        }
        CsrMatrix::from_triplets(n, n, &mut t)
    }

    #[test]
    fn sparse_path_roundtrip() {
        // force the sparse path by exceeding the dense threshold
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 600;
        let a = random_sparse(n, &mut rng);
        let x_true: Vec<f64> = (0..n).map(|_| rng.gen::<f64>() - 0.5).collect();
        let b = a.matvec(&x_true);
        let f = factorize(&a).unwrap();
        assert!(!f.stats.dense);
        let x = f.solve(&b);
        let rel = solve_residual(&a, &x, &b);
        assert!(rel < 1e-12, "residual {rel}");
        let err: f64 = x
            .iter()
            .zip(x_true.iter())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(err < 1e-10, "recovery error {err}");
    }

    #[test]
    fn dense_and_sparse_paths_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 80;
        let a = random_sparse(n, &mut rng);
        let b: Vec<f64> = (0..n).map(|_| rng.gen::<f64>() - 0.5).collect();
        let xd = factorize_dense(&a).unwrap().solve(&b);
        let xs = factorize_sparse(&a).unwrap().solve(&b);
        for (d, s) in xd.iter().zip(xs.iter()) {
            assert!((d - s).abs() < 1e-10);
        }
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(16))]
        #[test]
        fn roundtrip_random_systems(seed in 0u64..1000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let n = 40 + (seed as usize % 60);
            let a = random_sparse(n, &mut rng);
            let x_true: Vec<f64> = (0..n).map(|_| rng.gen::<f64>() - 0.5).collect();
            let b = a.matvec(&x_true);
            let f = factorize(&a).unwrap();
            let x = f.solve(&b);
            let rel: f64 = x.iter().zip(x_true.iter()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
                / x_true.iter().map(|v| v.abs()).fold(0.0, f64::max);
            proptest::prop_assert!(rel < 1e-10);
        }
    }
}
