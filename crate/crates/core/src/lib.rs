//! Tunnelling-time analysis for piecewise-constant one-dimensional barriers.
//!
//! Stationary scattering is solved by transfer matrices; packet observables
//! are spectral superpositions of the exact stationary states.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod diff;
pub mod double_barrier;
pub mod emguide;
pub mod error;
pub mod flux_times;
pub mod potential;
pub mod quadrature;
pub mod scattering;
pub mod stationary_times;
pub mod units;
pub mod wavepacket;

pub use error::{Error, Result};
pub use potential::{PiecewisePotential, RegionMarkers, Segment};
pub use quadrature::{integrate, Grid1D};
pub use scattering::{solve, ScatteringSolution};
pub use units::UnitSystem;
