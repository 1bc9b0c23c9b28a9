//! Integrated density of states: finite-volume Monte Carlo, Floquet
//! quadrature, the homogenized comparison operator, and smoothed DOS.

mod curve;
mod dos;
mod finite_volume;
mod floquet;

pub use curve::{geometric_grid, IdsCurve, IdsMeta};
pub use dos::{smoothed_dos, DosEstimate, DosSource, TestFunction};
pub use finite_volume::{
    finite_volume_ids, finite_volume_ids_with, finite_volume_samples, reduce_samples,
};
pub use floquet::{
    floquet_ids, floquet_ids_adaptive, floquet_values, periodized_ids, homogenized_ids, homogenized_ids_with,
    MeanKind, ThetaGrid, ThetaRule, ADAPTIVE_CAP, ADAPTIVE_TOL,
};
