//! Spatio-temporal underwater noise maps from AIS vessel trajectories.
//!
//! The pipeline reconstructs trips from AIS reports ([`ingest`]), enriches
//! them with activity and source levels ([`enrich`]), propagates their noise
//! over a grid of listening cells ([`engine`]) using the sonar-equation
//! kernel in [`acoustics`], and summarises the resulting fields
//! ([`analytics`]).

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod acoustics;
pub mod analytics;
pub mod engine;
pub mod enrich;
pub mod error;
pub mod export;
pub mod geometry;
pub mod grid;
pub mod ingest;
pub mod synthetic;
pub mod temporal;

pub use error::{Error, Result};
pub use acoustics::{FrequencyParams, FrequencyTable, SoundContext};
pub use analytics::{BivariateClass, CellStats, DatePeriod, Scheme, TripFilter};
pub use engine::{brute_force_field, compute_noise_field, Diagnostics, NoiseField, TimeWindow};
pub use enrich::{Activity, EnrichedTrip};
pub use geometry::{LonLat, Point, Projection};
pub use grid::{AmbientSurfaces, CellId, Grid, GridSpec, MonthKey};
pub use ingest::{AisRecord, Mmsi, Trip, VesselProfile};
pub use temporal::{Instant, Interpolation, TemporalValue};
