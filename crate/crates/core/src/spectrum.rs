//! Dense Hermitian eigendecomposition for desk-scale operators.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::sparse_access::SparseAccessOracle;

/// Largest dimension handed to the dense eigensolver.
pub const DENSE_CEILING: usize = 4096;

/// Eigenvectors as matrix columns, matching `Spectrum::values` order.
#[derive(Debug, Clone)]
pub enum Eigenvectors {
    Real(DMatrix<f64>),
    Complex(DMatrix<Complex64>),
}

impl Eigenvectors {
    /// `|<e_row | v_col>|²`, the weight of basis vector `row` in eigenvector `col`.
    pub fn weight(&self, row: usize, col: usize) -> f64 {
        match self {
            Eigenvectors::Real(m) => m[(row, col)] * m[(row, col)],
            Eigenvectors::Complex(m) => m[(row, col)].norm_sqr(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Spectrum {
    /// Eigenvalues in ascending order.
    pub values: Vec<f64>,
    pub vectors: Option<Eigenvectors>,
}

impl Spectrum {
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn max(&self) -> f64 {
        self.values.last().copied().unwrap_or(0.0)
    }

    /// Smallest eigenvalue strictly above `zero_tol`.
    pub fn min_above(&self, zero_tol: f64) -> Option<f64> {
        self.values.iter().copied().find(|&v| v > zero_tol)
    }

    pub fn count_below(&self, zero_tol: f64) -> usize {
        self.values.iter().filter(|&&v| v < zero_tol).count()
    }

    /// Eigenvalues with `a ≤ λ ≤ b`.
    pub fn count_in(&self, a: f64, b: f64) -> usize {
        self.values.iter().filter(|&&v| a <= v && v <= b).count()
    }
}

fn check_ceiling(dim: usize) -> Result<()> {
    if dim > DENSE_CEILING {
        Err(Error::DenseTooLarge {
            dim,
            max: DENSE_CEILING,
        })
    } else {
        Ok(())
    }
}

/// Materialize an oracle as a dense complex matrix.
pub fn to_dense<A: SparseAccessOracle + ?Sized>(a: &A) -> Result<DMatrix<Complex64>> {
    check_ceiling(a.dim())?;
    let mut m = DMatrix::zeros(a.dim(), a.dim());
    for j in 0..a.dim() {
        for (i, v) in a.column(j)? {
            m[(i, j)] = v;
        }
    }
    Ok(m)
}

/// Eigendecomposition of a Hermitian oracle. Takes the real symmetric path
/// when every entry is real.
pub fn eigh<A: SparseAccessOracle + ?Sized>(a: &A, want_vectors: bool) -> Result<Spectrum> {
    let dense = to_dense(a)?;
    Ok(eigh_dense(dense, want_vectors))
}

pub fn eigh_dense(dense: DMatrix<Complex64>, want_vectors: bool) -> Spectrum {
    let n = dense.nrows();
    if n == 0 {
        return Spectrum {
            values: Vec::new(),
            vectors: want_vectors.then(|| Eigenvectors::Real(DMatrix::zeros(0, 0))),
        };
    }
    if dense.iter().all(|v| v.im == 0.0) {
        let real = dense.map(|v| v.re);
        if want_vectors {
            let eig = SymmetricEigen::new(real);
            let order = ascending(eig.eigenvalues.as_slice());
            let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
            let vectors = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
            Spectrum {
                values,
                vectors: Some(Eigenvectors::Real(vectors)),
            }
        } else {
            let mut values: Vec<f64> = real.symmetric_eigenvalues().iter().copied().collect();
            values.sort_by(f64::total_cmp);
            Spectrum {
                values,
                vectors: None,
            }
        }
    } else if want_vectors {
        let eig = SymmetricEigen::new(dense);
        let order = ascending(eig.eigenvalues.as_slice());
        let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
        let vectors = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
        Spectrum {
            values,
            vectors: Some(Eigenvectors::Complex(vectors)),
        }
    } else {
        let mut values: Vec<f64> = dense.symmetric_eigenvalues().iter().copied().collect();
        values.sort_by(f64::total_cmp);
        Spectrum {
            values,
            vectors: None,
        }
    }
}

fn ascending(values: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    idx
}
