//! Discrete space-time fields, fluxes, their derivatives and norms.

mod flux;
mod io;
mod norms;
mod space_time;

pub use flux::{cell_divergence, flux_divergence, FluxField};
pub use io::{format_field, parse_field, read_field, write_field, FieldFile, TabulatedField};
pub use norms::{convection_identity, error_norms, l2_inner, l2_norm, norms, slice_error, NormBundle, NormKind};
pub use space_time::{gradient, interpolate_field, interpolate_h10, time_derivative, Level, SpaceTimeField};
