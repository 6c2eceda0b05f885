//! Small dense linear-algebra helpers: a cyclic Jacobi eigensolver for
//! symmetric matrices and distances to affine sets.
//!
//! Every Gramian and quadratic form in this crate is symmetric and small
//! (rarely larger than 6x6), so a plain cyclic Jacobi iteration is accurate
//! and has no tuning knobs beyond the off-diagonal tolerance.

use nalgebra::{DMatrix, DVector};

/// Off-diagonal magnitude at which the Jacobi sweep stops.
pub const JACOBI_TOL: f64 = 1e-10;

const JACOBI_MAX_SWEEPS: usize = 64;

/// Eigenvalues and eigenvectors of a symmetric matrix.
#[derive(Debug, Clone)]
pub struct SymmetricEigen {
    /// Eigenvalues sorted ascending.
    pub values: Vec<f64>,
    /// Unit eigenvectors, column `k` pairing with `values[k]`.
    pub vectors: DMatrix<f64>,
}

impl SymmetricEigen {
    pub fn lambda_min(&self) -> f64 {
        self.values[0]
    }

    pub fn lambda_max(&self) -> f64 {
        *self.values.last().expect("empty spectrum")
    }

    /// Unit eigenvector attaining the smallest eigenvalue.
    pub fn min_vector(&self) -> DVector<f64> {
        self.vectors.column(0).into_owned()
    }
}

/// Cyclic Jacobi eigendecomposition of a symmetric matrix.
///
/// Sweeps rotate away every off-diagonal entry in turn until all are below
/// [`JACOBI_TOL`] relative to the matrix scale. Panics on non-square input;
/// asymmetry beyond `1e-9` of the scale is a caller bug and also panics.
pub fn symmetric_eigen(m: &DMatrix<f64>) -> SymmetricEigen {
    let n = m.nrows();
    assert_eq!(n, m.ncols(), "symmetric_eigen: matrix must be square");
    let scale = m.amax().max(1.0);
    for i in 0..n {
        for j in (i + 1)..n {
            assert!(
                (m[(i, j)] - m[(j, i)]).abs() <= 1e-9 * scale,
                "symmetric_eigen: matrix is not symmetric at ({i},{j})"
            );
        }
    }

    let mut a = m.clone();
    // Work on the symmetrised part so roundoff asymmetry cannot drift.
    for i in 0..n {
        for j in (i + 1)..n {
            let v = 0.5 * (a[(i, j)] + a[(j, i)]);
            a[(i, j)] = v;
            a[(j, i)] = v;
        }
    }
    let mut v = DMatrix::<f64>::identity(n, n);

    for _sweep in 0..JACOBI_MAX_SWEEPS {
        let mut off = 0.0f64;
        for i in 0..n {
            for j in (i + 1)..n {
                off = off.max(a[(i, j)].abs());
            }
        }
        if off <= JACOBI_TOL * scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                if apq.abs() <= f64::EPSILON * scale {
                    continue;
                }
                let app = a[(p, p)];
                let aqq = a[(q, q)];
                let tau = (aqq - app) / (2.0 * apq);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].partial_cmp(&a[(j, j)]).unwrap());
    let values: Vec<f64> = order.iter().map(|&i| a[(i, i)]).collect();
    let mut vectors = DMatrix::<f64>::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &v.column(src));
    }
    SymmetricEigen { values, vectors }
}

/// Smallest eigenvalue of a symmetric matrix.
pub fn lambda_min(m: &DMatrix<f64>) -> f64 {
    symmetric_eigen(m).lambda_min()
}

/// Largest eigenvalue of a symmetric matrix.
pub fn lambda_max(m: &DMatrix<f64>) -> f64 {
    symmetric_eigen(m).lambda_max()
}

/// Spectral norm (largest singular value) of a general matrix, via the
/// symmetric eigenproblem on `MᵀM`.
pub fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    let gram = m.transpose() * m;
    lambda_max(&gram).max(0.0).sqrt()
}

/// An affine subspace `{ point + span(basis) }` used as the reference set for
/// distances `|phi|_A`. The default set is the origin.
#[derive(Debug, Clone, Default)]
pub struct AffineSet {
    point: DVector<f64>,
    /// Orthonormal basis of the subspace directions (possibly empty).
    basis: Vec<DVector<f64>>,
}

impl AffineSet {
    /// The singleton `{0}` in dimension `dim`.
    pub fn origin(dim: usize) -> Self {
        AffineSet { point: DVector::zeros(dim), basis: Vec::new() }
    }

    /// Affine set through `point` spanned by `directions`. Directions are
    /// orthonormalised; near-zero ones are dropped.
    pub fn new(point: DVector<f64>, directions: &[DVector<f64>]) -> Self {
        let mut basis: Vec<DVector<f64>> = Vec::new();
        for d in directions {
            let mut v = d.clone();
            for b in &basis {
                let proj = b.dot(&v);
                v -= b * proj;
            }
            let norm = v.norm();
            if norm > 1e-12 {
                basis.push(v / norm);
            }
        }
        AffineSet { point, basis }
    }

    /// Euclidean distance from a flattened sample value to the set.
    pub fn distance(&self, value: &DVector<f64>) -> f64 {
        assert_eq!(value.len(), self.point.len(), "AffineSet dimension mismatch");
        let mut r = value - &self.point;
        for b in &self.basis {
            let proj = b.dot(&r);
            r -= b * proj;
        }
        r.norm()
    }
}
