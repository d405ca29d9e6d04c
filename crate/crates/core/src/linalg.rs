//! Small dense linear-algebra helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::scalar::{lit, Real};

/// Eigen-decomposition of a symmetric matrix with eigenvalues ascending.
///
/// Each eigenvector's sign is fixed so that its largest-magnitude component
/// is positive (first such index wins on ties).
pub fn eigh<T: Real>(a: &DMatrix<T>) -> (DVector<T>, DMatrix<T>) {
    let sym = (a + a.transpose()) * lit::<T>(0.5);
    let SymmetricEigen {
        eigenvalues,
        eigenvectors,
    } = SymmetricEigen::new(sym);
    let n = eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        eigenvalues[i]
            .partial_cmp(&eigenvalues[j])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let values = DVector::from_fn(n, |k, _| eigenvalues[order[k]]);
    let mut vectors = DMatrix::from_fn(n, n, |r, k| eigenvectors[(r, order[k])]);
    for k in 0..n {
        fix_sign(&mut vectors, k);
    }
    (values, vectors)
}

/// Flips column `k` so its largest-magnitude entry is positive.
pub fn fix_sign<T: Real>(m: &mut DMatrix<T>, k: usize) {
    let col = m.column(k);
    let mut best = 0;
    let mut best_abs = T::zero();
    // strict comparison with a relative margin keeps the choice stable
    // when two entries are equal up to rounding
    for (r, v) in col.iter().enumerate() {
        if v.abs() > best_abs * (T::one() + lit(1e-10)) {
            best_abs = v.abs();
            best = r;
        }
    }
    if m[(best, k)] < T::zero() {
        m.column_mut(k).neg_mut();
    }
}

/// Symmetric orthogonalizer `S^{-1/2}`.
pub fn inverse_sqrt<T: Real>(s: &DMatrix<T>) -> Result<DMatrix<T>> {
    let (vals, vecs) = eigh(s);
    if vals.iter().any(|&v| v <= lit(1e-12)) {
        return Err(Error::Invalid(format!(
            "overlap matrix not positive definite (smallest eigenvalue {:e})",
            vals[0]
        )));
    }
    let d = DMatrix::from_diagonal(&vals.map(|v| T::one() / v.sqrt()));
    Ok(&vecs * d * vecs.transpose())
}

/// Symmetric square root of a positive semidefinite matrix.
pub fn sqrt_psd<T: Real>(s: &DMatrix<T>) -> DMatrix<T> {
    let (vals, vecs) = eigh(s);
    let d = DMatrix::from_diagonal(&vals.map(|v| v.max(T::zero()).sqrt()));
    &vecs * d * vecs.transpose()
}

/// Solves `F C = S C e` given the orthogonalizer `X = S^{-1/2}`.
///
/// Returns ascending orbital energies and `S`-orthonormal coefficient
/// columns.
pub fn solve_roothaan<T: Real>(f: &DMatrix<T>, x: &DMatrix<T>) -> (DVector<T>, DMatrix<T>) {
    let fp = x.transpose() * f * x;
    let (eps, cp) = eigh(&fp);
    let mut c = x * cp;
    for k in 0..c.ncols() {
        fix_sign(&mut c, k);
    }
    (eps, c)
}

/// `Tr(A B)` without forming the product.
pub fn trace_product<T: Real>(a: &DMatrix<T>, b: &DMatrix<T>) -> T {
    let mut acc = T::zero();
    for i in 0..a.nrows() {
        for k in 0..a.ncols() {
            acc += a[(i, k)] * b[(k, i)];
        }
    }
    acc
}

pub fn max_abs<T: Real>(m: &DMatrix<T>) -> T {
    m.iter().fold(T::zero(), |acc, v| acc.max(v.abs()))
}
