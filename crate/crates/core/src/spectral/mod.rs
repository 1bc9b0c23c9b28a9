//! Eigenvalue counting by factorization inertia and low-lying eigenpairs.

pub mod banded;
pub mod bunch_kaufman;
mod count;
mod eigen;

pub use count::{dense_count, eigen_count, CountResult, Counter, TIE_TOL};
pub use eigen::{
    dense_eigenvalues, eigenvalues_in, lowest_eigenpairs, lowest_eigenvalues, Method,
    SpectrumSlice, DENSE_CAP,
};
pub(crate) use eigen::eigenvalues_in_with;
