//! Synthetic structured-illumination image forge: parametric tissue scenes,
//! sinusoidal projector patterns, a Monte Carlo renderer, pixel-encoded ground
//! truth, parameter sweeps, paired datasets and error metrics.
//!
//! Everything numeric is generic over [`Real`]; the aliases below fix `f64`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dataset;
pub mod error;
pub mod groundtruth;
pub mod illumination;
pub mod math;
pub mod metrics;
pub mod real;
pub mod rng;
pub mod scene;
pub mod sweep;
pub mod transport;

pub use error::{Error, Result};
pub use image;
pub use real::Real;

pub type Scene = scene::SceneTemplate<f64>;
pub type Material = scene::Material<f64>;
pub type Pattern = illumination::SinusoidalPattern<f64>;
pub type Settings = transport::RenderSettings<f64>;
pub type Image = transport::Render<f64>;
