//! Smallest generalized eigenvalue of the pencil `B x = mu A x`.

use alloc::vec;
use alloc::vec::Vec;

use rand_core::{RngCore, SeedableRng};

use super::lu::factorize;
use super::CsrMatrix;
use crate::{Error, Result};

const EIG_TOL: f64 = 1e-8;
const MAX_ITERS: usize = 300;

/// Smallest `mu` with `B x = mu A x`, for `A` symmetric positive definite and
/// `B` symmetric positive semidefinite. Shifted inverse power iteration with
/// Rayleigh-quotient refinement; the returned vector is `A`-normalized and the
/// eigen-residual satisfies `||B x - mu A x|| <= 1e-8 ||A x||`.
pub fn smallest_gen_eig(a: &CsrMatrix, b: &CsrMatrix) -> Result<(f64, Vec<f64>)> {
    if a.n_rows != a.n_cols || b.n_rows != b.n_cols || a.n_rows != b.n_rows {
        return Err(Error::Validation(alloc::format!(
            "eigen probe needs matching square matrices, got {}x{} and {}x{}",
            a.n_rows,
            a.n_cols,
            b.n_rows,
            b.n_cols
        )));
    }
    let n = a.n_rows;
    let norm_a = a.norm_inf().max(f64::MIN_POSITIVE);
    let norm_b = b.norm_inf();
    if norm_b == 0.0 {
        // B = 0: every vector is an eigenvector for mu = 0.
        let mut x = vec![0.0; n];
        x[0] = 1.0;
        let nrm = libm::sqrt(a.bilinear(&x, &x));
        for v in &mut x {
            *v /= nrm;
        }
        return Ok((0.0, x));
    }

    // Factor B + shift*A, growing the shift if B itself is singular.
    let mut shift = 0.0;
    let mut fac = factorize(b);
    let mut tries = 0;
    while fac.is_err() {
        shift = if shift == 0.0 {
            1e-12 * norm_b / norm_a
        } else {
            shift * 1e4
        };
        fac = factorize(&b.add_scaled(a, shift));
        tries += 1;
        if tries > 6 {
            return Err(Error::NumericalFailure {
                what: "eigen probe shift selection",
                residual: f64::INFINITY,
            });
        }
    }
    let mut fac = fac.unwrap();

    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0x5eed);
    let mut x: Vec<f64> = (0..n)
        .map(|_| (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64) - 0.5)
        .collect();
    normalize_a(a, &mut x);

    let mut mu = a.bilinear(&x, &b.matvec(&x));
    let mut last_rel = f64::INFINITY;
    for iter in 0..MAX_ITERS {
        let ax = a.matvec(&x);
        let mut y = fac.solve(&ax);
        normalize_a(a, &mut y);
        let by = b.matvec(&y);
        mu = y.iter().zip(by.iter()).map(|(p, q)| p * q).sum();
        let ay = a.matvec(&y);
        let mut res = 0.0f64;
        let mut ay_norm = 0.0f64;
        for i in 0..n {
            let r = by[i] - mu * ay[i];
            res += r * r;
            ay_norm += ay[i] * ay[i];
        }
        let rel = libm::sqrt(res) / libm::sqrt(ay_norm).max(f64::MIN_POSITIVE);
        x = y;
        if rel <= EIG_TOL {
            return Ok((mu, x));
        }
        // Rayleigh shift once the plain iteration has a rough estimate.
        if iter >= 10 && rel < 1e-2 && rel > 0.5 * last_rel {
            let target = mu * (1.0 - 1e-9) - 1e-12 * norm_b / norm_a;
            if let Ok(f2) = factorize(&b.add_scaled(a, -target)) {
                fac = f2;
            }
        }
        last_rel = rel;
    }
    Err(Error::NumericalFailure {
        what: "generalized eigenvalue iteration",
        residual: last_rel,
    })
}

fn normalize_a(a: &CsrMatrix, x: &mut [f64]) {
    let nrm = libm::sqrt(a.bilinear(x, x));
    if nrm > 0.0 {
        for v in x.iter_mut() {
            *v /= nrm;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn diag(vals: &[f64]) -> CsrMatrix {
        let mut t: Vec<(usize, usize, f64)> =
            vals.iter().enumerate().map(|(i, &v)| (i, i, v)).collect();
        CsrMatrix::from_triplets(vals.len(), vals.len(), &mut t)
    }

    #[test]
    fn diagonal_pencils() {
        let (mu, _) = smallest_gen_eig(&CsrMatrix::identity(3), &diag(&[3.0, 1.0, 2.0])).unwrap();
        assert!((mu - 1.0).abs() < 1e-8);
        let (mu, _) = smallest_gen_eig(&diag(&[2.0, 2.0]), &diag(&[2.0, 8.0])).unwrap();
        assert!((mu - 1.0).abs() < 1e-8);
    }

    /// Dense generalized eigen oracle: Cholesky of A, then Jacobi rotations.
    fn dense_gen_eig_min(a: &CsrMatrix, b: &CsrMatrix) -> f64 {
        let n = a.n_rows;
        let ad = a.to_dense();
        let bd = b.to_dense();
        // Cholesky A = L L^T
        let mut l = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..=i {
                let mut s = ad[i * n + j];
                for k in 0..j {
                    s -= l[i * n + k] * l[j * n + k];
                }
                if i == j {
                    l[i * n + i] = s.sqrt();
                } else {
                    l[i * n + j] = s / l[j * n + j];
                }
            }
        }
        // C = L^{-1} B L^{-T}
        let mut c = bd;
        // forward solve on columns: L X = B
        for col in 0..n {
            for i in 0..n {
                let mut s = c[i * n + col];
                for k in 0..i {
                    s -= l[i * n + k] * c[k * n + col];
                }
                c[i * n + col] = s / l[i * n + i];
            }
        }
        // now rows: C L^{-T}, i.e. solve L Y^T = C^T
        for row in 0..n {
            for i in 0..n {
                let mut s = c[row * n + i];
                for k in 0..i {
                    s -= l[i * n + k] * c[row * n + k];
                }
                c[row * n + i] = s / l[i * n + i];
            }
        }
        // Jacobi eigenvalue iteration on symmetric C
        for _sweep in 0..60 {
            let mut off = 0.0f64;
            for p in 0..n {
                for q in p + 1..n {
                    off = off.max(c[p * n + q].abs());
                }
            }
            if off < 1e-13 {
                break;
            }
            for p in 0..n {
                for q in p + 1..n {
                    let apq = c[p * n + q];
                    if apq.abs() < 1e-300 {
                        continue;
                    }
                    let theta = (c[q * n + q] - c[p * n + p]) / (2.0 * apq);
                    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                    let cos = 1.0 / (t * t + 1.0).sqrt();
                    let sin = t * cos;
                    for k in 0..n {
                        let ckp = c[k * n + p];
                        let ckq = c[k * n + q];
                        c[k * n + p] = cos * ckp - sin * ckq;
                        c[k * n + q] = sin * ckp + cos * ckq;
                    }
                    for k in 0..n {
                        let cpk = c[p * n + k];
                        let cqk = c[q * n + k];
                        c[p * n + k] = cos * cpk - sin * cqk;
                        c[q * n + k] = sin * cpk + cos * cqk;
                    }
                }
            }
        }
        (0..n).map(|i| c[i * n + i]).fold(f64::INFINITY, f64::min)
    }

    #[test]
    fn random_pencil_matches_dense_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let n = 20;
        // A = M^T M + n I (SPD), B = G^T G (SPSD)
        let mut m = vec![0.0; n * n];
        let mut g = vec![0.0; n * n];
        for v in m.iter_mut() {
            *v = rng.gen::<f64>() - 0.5;
        }
        for v in g.iter_mut() {
            *v = rng.gen::<f64>() - 0.5;
        }
        let mut ad = vec![0.0; n * n];
        let mut bd = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                let mut sa = if i == j { n as f64 } else { 0.0 };
                let mut sb = 0.0;
                for k in 0..n {
                    sa += m[k * n + i] * m[k * n + j];
                    sb += g[k * n + i] * g[k * n + j];
                }
                ad[i * n + j] = sa;
                bd[i * n + j] = sb;
            }
        }
        let a = CsrMatrix::from_dense(n, n, &ad);
        let b = CsrMatrix::from_dense(n, n, &bd);
        let oracle = dense_gen_eig_min(&a, &b);
        let (mu, x) = smallest_gen_eig(&a, &b).unwrap();
        assert!(
            (mu - oracle).abs() <= 1e-8 * (1.0 + oracle.abs()),
            "probe {mu} vs oracle {oracle}"
        );
        // residual contract
        let bx = b.matvec(&x);
        let ax = a.matvec(&x);
        let res: f64 = bx
            .iter()
            .zip(ax.iter())
            .map(|(p, q)| (p - mu * q) * (p - mu * q))
            .sum::<f64>()
            .sqrt();
        let ax_norm: f64 = ax.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!(res <= 1e-8 * ax_norm);
    }

    #[test]
    fn singular_b_gives_zero() {
        // B has a null vector -> smallest generalized eigenvalue 0
        let a = CsrMatrix::identity(3);
        let b = diag(&[0.0, 2.0, 5.0]);
        let (mu, _) = smallest_gen_eig(&a, &b).unwrap();
        assert!(mu.abs() < 1e-10, "mu = {mu}");
    }
}
