// SPDX-License-Identifier: Apache-2.0

//! Small dense helpers. Everything here works on `n <= ~10` so plain
//! `Vec`s and the cyclic Jacobi method are the right tools.

use crate::scalar::Scalar;

#[inline]
pub fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x * y)
}

#[inline]
pub fn dist2<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| {
        let t = x - y;
        acc + t * t
    })
}

#[inline]
pub fn dist<T: Scalar>(a: &[T], b: &[T]) -> T {
    dist2(a, b).sqrt()
}

#[inline]
pub fn norm<T: Scalar>(a: &[T]) -> T {
    dot(a, a).sqrt()
}

pub fn sub<T: Scalar>(a: &[T], b: &[T]) -> Vec<T> {
    a.iter().zip(b).map(|(&x, &y)| x - y).collect()
}

/// Orthonormalises `vectors` in place (modified Gram-Schmidt) and returns
/// false if they are numerically dependent.
pub fn gram_schmidt<T: Scalar>(vectors: &mut [Vec<T>]) -> bool {
    let tiny = T::epsilon() * T::lit(1e3);
    for i in 0..vectors.len() {
        for j in 0..i {
            let (head, tail) = vectors.split_at_mut(i);
            let proj = dot(&tail[0], &head[j]);
            for (x, &y) in tail[0].iter_mut().zip(&head[j]) {
                *x -= proj * y;
            }
        }
        let nrm = norm(&vectors[i]);
        if nrm <= tiny {
            return false;
        }
        for x in vectors[i].iter_mut() {
            *x /= nrm;
        }
    }
    true
}

/// Completes an orthonormal family to an orthonormal basis of R^n and
/// returns only the added vectors.
pub fn orthogonal_complement<T: Scalar>(frame: &[Vec<T>], n: usize) -> Vec<Vec<T>> {
    let mut basis: Vec<Vec<T>> = frame.to_vec();
    let mut out = Vec::with_capacity(n - frame.len());
    for axis in 0..n {
        if basis.len() == n {
            break;
        }
        let mut v = vec![T::zero(); n];
        v[axis] = T::one();
        for b in &basis {
            let c = dot(&v, b);
            for (x, &y) in v.iter_mut().zip(b) {
                *x -= c * y;
            }
        }
        // second pass for stability
        for b in &basis {
            let c = dot(&v, b);
            for (x, &y) in v.iter_mut().zip(b) {
                *x -= c * y;
            }
        }
        let nrm = norm(&v);
        if nrm > T::lit(1e-3) {
            for x in v.iter_mut() {
                *x /= nrm;
            }
            basis.push(v.clone());
            out.push(v);
        }
    }
    out
}

/// Symmetric eigen-decomposition by cyclic Jacobi rotations.
///
/// `a` is row-major `n x n`. Returns eigenvalues in ascending order and the
/// matching unit eigenvectors.
pub fn symmetric_eigen<T: Scalar>(a: &[T], n: usize) -> (Vec<T>, Vec<Vec<T>>) {
    let mut m = a.to_vec();
    let mut v = vec![T::zero(); n * n];
    for i in 0..n {
        v[i * n + i] = T::one();
    }
    let two = T::lit(2.0);
    for _sweep in 0..100 {
        let mut off = T::zero();
        let mut diag = T::zero();
        for i in 0..n {
            diag += m[i * n + i] * m[i * n + i];
            for j in (i + 1)..n {
                off += m[i * n + j] * m[i * n + j];
            }
        }
        if off <= T::epsilon() * T::epsilon() * diag || off == T::zero() {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[p * n + q];
                if apq == T::zero() {
                    continue;
                }
                let app = m[p * n + p];
                let aqq = m[q * n + q];
                let theta = (aqq - app) / (two * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
                let c = T::one() / (t * t + T::one()).sqrt();
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
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        m[i * n + i]
            .partial_cmp(&m[j * n + j])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(i.cmp(&j))
    });
    let values = order.iter().map(|&i| m[i * n + i]).collect();
    let vectors = order
        .iter()
        .map(|&i| (0..n).map(|k| v[k * n + i]).collect())
        .collect();
    (values, vectors)
}
