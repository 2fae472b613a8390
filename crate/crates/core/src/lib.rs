//! Rainy-highway LiDAR point-cloud synthesis with wheel-spray noise.
//!
//! The crate is organized around the simulation pipeline:
//!
//! * [`scene`] holds the world model (weather, road, kinematic traffic).
//! * [`spray`] emits, integrates and annihilates droplet clusters shed by
//!   rear tires.
//! * [`lidar`] casts a rotating 64-beam sensor against ground, vehicle boxes
//!   and droplet clusters.
//! * [`intensity`] fills the fourth point feature.
//! * [`raster`] and [`dataset`] define the on-disk formats and the
//!   frame-by-frame generation loop.

// `!(x >= 0.0)` is used on purpose so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dataset;
pub mod error;
pub mod geom;
pub mod intensity;
pub mod lidar;
pub mod raster;
pub mod rng;
pub mod scene;
pub mod semantics;
pub mod spray;

pub use error::{ConfigError, Error, Result};
pub use semantics::SemanticClass;

/// Version string recorded in dataset manifests.
pub const GENERATOR_VERSION: &str = concat!("rainspray ", env!("CARGO_PKG_VERSION"));
