//! Real symmetric tridiagonal eigensolver (implicit QL with Wilkinson shifts).

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Iteration cap per eigenvalue.
const MAX_SWEEPS: usize = 60;

/// Eigenvalues (ascending) and orthonormal eigenvectors (columns) of the
/// symmetric tridiagonal matrix with `diagonal` and `off_diagonal`.
pub fn tridiagonal_eigen(diagonal: &[f64], off_diagonal: &[f64]) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let n = diagonal.len();
    if n == 0 || off_diagonal.len() + 1 != n {
        return Err(Error::arg("tridiagonal shape mismatch"));
    }
    let mut d = diagonal.to_vec();
    let mut e = off_diagonal.to_vec();
    e.push(0.0);
    let mut z = DMatrix::<f64>::identity(n, n);

    for l in 0..n {
        let mut sweeps = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            sweeps += 1;
            if sweeps > MAX_SWEEPS {
                let residual = e[l..m].iter().map(|x| x.abs()).fold(0.0, f64::max);
                return Err(Error::NoConvergence {
                    iterations: sweeps,
                    residual,
                });
            }

            // Wilkinson shift from the leading 2x2 block.
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut underflow = false;

            let mut i = m;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                for k in 0..n {
                    let zf = z[(k, i + 1)];
                    z[(k, i + 1)] = s * z[(k, i)] + c * zf;
                    z[(k, i)] = c * z[(k, i)] - s * zf;
                }
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| d[a].total_cmp(&d[b]));
    let values = order.iter().map(|&i| d[i]).collect();
    let vectors = DMatrix::from_fn(n, n, |r, c| z[(r, order[c])]);
    Ok((values, vectors))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn dense(d: &[f64], e: &[f64]) -> DMatrix<f64> {
        let n = d.len();
        DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                d[i]
            } else if j == i + 1 {
                e[i]
            } else if i == j + 1 {
                e[j]
            } else {
                0.0
            }
        })
    }

    #[test]
    fn three_site_glauber_fock_spectrum() {
        let (vals, _) = tridiagonal_eigen(&[0.0; 3], &[1.0, 2f64.sqrt()]).unwrap();
        let r3 = 3f64.sqrt();
        assert_abs_diff_eq!(vals[0], -r3, epsilon = 1e-14);
        assert_abs_diff_eq!(vals[1], 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(vals[2], r3, epsilon = 1e-14);
    }

    #[test]
    fn one_by_one() {
        let (vals, vecs) = tridiagonal_eigen(&[2.5], &[]).unwrap();
        assert_eq!(vals, vec![2.5]);
        assert_eq!(vecs[(0, 0)], 1.0);
    }

    #[test]
    fn reconstructs_and_is_orthonormal() {
        let d = [0.3, -1.2, 4.0, 0.0, 2.2, 2.2, -0.7];
        let e = [0.5, 1e-9, 2.0, 0.0, 0.3, 1.1];
        let (vals, v) = tridiagonal_eigen(&d, &e).unwrap();
        assert!(vals.windows(2).all(|w| w[0] <= w[1]));
        let a = dense(&d, &e);
        let lam = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vals));
        let back = &v * lam * v.transpose();
        assert!((back - a).abs().max() < 1e-13);
        let gram = v.transpose() * &v;
        assert!((gram - DMatrix::identity(7, 7)).abs().max() < 1e-13);
    }

    #[test]
    fn shape_mismatch_rejected() {
        assert!(tridiagonal_eigen(&[1.0, 2.0], &[]).is_err());
        assert!(tridiagonal_eigen(&[], &[]).is_err());
    }
}
