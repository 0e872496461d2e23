//! Numerical laboratory for the life span of `u_t = Δu + |u|^{p−1}u`.
//!
//! Everything is generic over [`scalar::Real`] (`f32` or `f64`); the aliases
//! below fix the scalar to `f64`.

pub mod bounds;
pub mod datum;
pub mod density;
pub mod error;
pub mod kernel;
pub mod report;
pub mod scalar;
pub mod simulate;

pub use error::{Error, Result};

pub type Datum = datum::InitialDatum<f64>;
pub type DatumShape = datum::Shape<f64>;
pub type Quadrature = kernel::Quadrature<f64>;
pub type DensityRequest = density::DensityRequest<f64>;
pub type DensityReport = density::DensityReport<f64>;
pub type ProblemSpec = bounds::ProblemSpec<f64>;
pub type LifespanBounds = bounds::LifespanBounds<f64>;
pub type BoundsOptions = bounds::BoundsOptions<f64>;
pub type BlowupEstimate = simulate::BlowupEstimate<f64>;
pub type Snapshot = simulate::Snapshot<f64>;
