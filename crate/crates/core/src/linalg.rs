//! Dense linear algebra for small `n × n` systems.
//!
//! Matrices are flat row-major slices. The LU routines are generic over
//! [`Scalar`] so that dual numbers differentiate exactly through the
//! inverse; pivot selection compares real parts only.

use crate::scalar::Scalar;

/// LU factorization with partial pivoting, in place.
///
/// Returns the determinant. `None` signals an exactly singular pivot.
fn lu_factor<S: Scalar>(a: &mut [S], n: usize, perm: &mut [usize]) -> Option<S> {
    debug_assert_eq!(a.len(), n * n);
    for (i, p) in perm.iter_mut().enumerate() {
        *p = i;
    }
    let mut det = S::one();
    for col in 0..n {
        let mut pivot_row = col;
        let mut pivot_mag = a[col * n + col].value().abs();
        for row in col + 1..n {
            let mag = a[row * n + col].value().abs();
            if mag > pivot_mag {
                pivot_mag = mag;
                pivot_row = row;
            }
        }
        if pivot_mag == 0.0 {
            return None;
        }
        if pivot_row != col {
            for k in 0..n {
                a.swap(col * n + k, pivot_row * n + k);
            }
            perm.swap(col, pivot_row);
            det = -det;
        }
        let pivot = a[col * n + col];
        det = det * pivot;
        for row in col + 1..n {
            let factor = a[row * n + col] / pivot;
            a[row * n + col] = factor;
            for k in col + 1..n {
                let sub = factor * a[col * n + k];
                a[row * n + k] = a[row * n + k] - sub;
            }
        }
    }
    Some(det)
}

/// Inverse and determinant via LU with partial pivoting.
pub fn invert<S: Scalar>(a: &[S], n: usize) -> Option<(Vec<S>, S)> {
    let mut lu = a.to_vec();
    let mut perm = vec![0usize; n];
    let det = lu_factor(&mut lu, n, &mut perm)?;
    let mut inv = vec![S::zero(); n * n];
    let mut col = vec![S::zero(); n];
    for j in 0..n {
        // Solve A x = e_j using the permuted factorization.
        for (i, c) in col.iter_mut().enumerate() {
            *c = if perm[i] == j { S::one() } else { S::zero() };
        }
        for i in 1..n {
            let mut sum = col[i];
            for k in 0..i {
                sum = sum - lu[i * n + k] * col[k];
            }
            col[i] = sum;
        }
        for i in (0..n).rev() {
            let mut sum = col[i];
            for k in i + 1..n {
                sum = sum - lu[i * n + k] * col[k];
            }
            col[i] = sum / lu[i * n + i];
        }
        for i in 0..n {
            inv[i * n + j] = col[i];
        }
    }
    Some((inv, det))
}

/// Determinant alone.
pub fn determinant<S: Scalar>(a: &[S], n: usize) -> S {
    let mut lu = a.to_vec();
    let mut perm = vec![0usize; n];
    lu_factor(&mut lu, n, &mut perm).unwrap_or_else(S::zero)
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations.
///
/// Good enough for signature classification of small metric tensors;
/// returns eigenvalues in ascending order.
pub fn symmetric_eigenvalues(a: &[f64], n: usize) -> Vec<f64> {
    debug_assert_eq!(a.len(), n * n);
    let mut m = a.to_vec();
    let scale: f64 = m
        .iter()
        .fold(0.0_f64, |acc, v| acc.max(v.abs()))
        .max(f64::MIN_POSITIVE);
    for _sweep in 0..100 {
        let mut off = 0.0;
        for p in 0..n {
            for q in p + 1..n {
                off = f64::max(off, m[p * n + q].abs());
            }
        }
        if off <= 1e-14 * scale {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[p * n + q];
                if apq.abs() <= 1e-300 {
                    continue;
                }
                let app = m[p * n + p];
                let aqq = m[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = if theta >= 0.0 {
                    1.0 / (theta + (1.0 + theta * theta).sqrt())
                } else {
                    -1.0 / (-theta + (1.0 + theta * theta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = m[k * n + p];
                    let akq = m[k * n + q];
                    m[k * n + p] = c * akp - s * akq;
                    m[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = m[p * n + k];
                    let aqk = m[q * n + k];
                    m[p * n + k] = c * apk - s * aqk;
                    m[q * n + k] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut eigs: Vec<f64> = (0..n).map(|i| m[i * n + i]).collect();
    eigs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    eigs
}

/// `out[i] = Σ_j a[i][j] v[j]`.
pub fn mat_vec<S: Scalar>(a: &[S], v: &[S], n: usize) -> Vec<S> {
    let mut out = vec![S::zero(); n];
    for i in 0..n {
        let mut acc = S::zero();
        for j in 0..n {
            acc = acc + a[i * n + j] * v[j];
        }
        out[i] = acc;
    }
    out
}
