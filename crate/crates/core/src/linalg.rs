//! Dense symmetric positive-definite factorization and solves.
//!
//! The matrices here are small (cis-locus SNP counts), so a plain
//! lower-triangular Cholesky without blocking or pivoting is adequate.

use ndarray::Array2;

/// Lower-triangular Cholesky factor of a symmetric positive-definite matrix.
pub(crate) struct CholeskyFactor {
    l: Array2<f64>,
}

/// Factor a symmetric matrix as `L Lᵀ`. Returns `None` when a pivot is not
/// strictly positive, i.e. the matrix is not numerically positive definite.
pub(crate) fn cholesky(a: &Array2<f64>) -> Option<CholeskyFactor> {
    let n = a.nrows();
    debug_assert_eq!(n, a.ncols());
    let mut l = Array2::<f64>::zeros((n, n));
    for i in 0..n {
        for j in 0..=i {
            let mut s = a[[i, j]];
            for k in 0..j {
                s -= l[[i, k]] * l[[j, k]];
            }
            if i == j {
                if s <= 0.0 || !s.is_finite() {
                    return None;
                }
                l[[i, i]] = s.sqrt();
            } else {
                l[[i, j]] = s / l[[j, j]];
            }
        }
    }
    Some(CholeskyFactor { l })
}

impl CholeskyFactor {
    /// Solve `A x = rhs` by forward then backward substitution.
    pub(crate) fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let n = self.l.nrows();
        debug_assert_eq!(rhs.len(), n);
        let mut y = vec![0.0; n];
        for i in 0..n {
            let mut s = rhs[i];
            for k in 0..i {
                s -= self.l[[i, k]] * y[k];
            }
            y[i] = s / self.l[[i, i]];
        }
        let mut x = vec![0.0; n];
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in i + 1..n {
                s -= self.l[[k, i]] * x[k];
            }
            x[i] = s / self.l[[i, i]];
        }
        x
    }
}

/// Quadratic form `wᵀ A w` for symmetric `A`.
pub(crate) fn quadratic_form(a: &Array2<f64>, w: &[f64]) -> f64 {
    let n = a.nrows();
    debug_assert_eq!(w.len(), n);
    let mut total = 0.0;
    for i in 0..n {
        let mut row = 0.0;
        for j in 0..n {
            row += a[[i, j]] * w[j];
        }
        total += w[i] * row;
    }
    total
}
