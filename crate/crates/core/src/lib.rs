//! Numerical laboratory for the integrated density of states (IDS) of random
//! acoustic operators `-div(rho grad)` with Anderson-type coefficients.
//!
//! The crate is organised bottom-up:
//!
//! * [`field`] samples, periodizes and averages coefficient fields,
//! * [`discretize`] assembles finite-difference stiffness matrices,
//! * [`spectral`] counts eigenvalues by inertia and computes low eigenpairs,
//! * [`ids`] estimates IDS curves (finite volume, Floquet, homogenized) and
//!   smoothed densities of states,
//! * [`lab`] runs the sandwich, periodic-approximation and large-deviation
//!   experiments.

pub mod discretize;
pub mod error;
pub mod field;
pub mod ids;
pub mod lab;
pub mod parallel;
pub mod scalar;
pub mod selftest;
pub mod spectral;

pub use discretize::{assemble, quadratic_form, BoundaryCondition, FaceAverage, StiffnessMatrix};
pub use error::{IdsError, Result};
pub use field::{
    mean_field, periodize, reciprocal_field, sample_field, CoefficientSpec, Disorder, FieldKind,
    FieldOnGrid, Realization,
};
pub use ids::{
    finite_volume_ids, floquet_ids, homogenized_ids, smoothed_dos, IdsCurve, TestFunction,
    ThetaGrid,
};
pub use spectral::{eigen_count, lowest_eigenpairs, SpectrumSlice};
