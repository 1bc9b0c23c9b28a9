//! Anderson-type random coefficient fields: law, sampling, periodization,
//! averaging and export.

mod disorder;
mod grid;
pub mod io;
mod sample;
mod spec;

pub use disorder::Disorder;
pub use grid::{FieldKind, FieldOnGrid};
pub use sample::{
    draw_realization, harmonic_mean_field, mean_field, periodize, reciprocal_field, sample_field,
    Realization,
};
pub use spec::{named_profile, CoefficientSpec, DisorderDef, ProfileDef, SpecFile, DEFAULT_POINT_CAP};
