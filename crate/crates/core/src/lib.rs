//! Numerical laboratory for the invertibility of square random matrices
//! with subgaussian entries.
//!
//! The crate samples matrices and measures their extreme singular values,
//! partitions the unit sphere into peaked and spread directions, classifies
//! spread directions by their Δ-profile, computes small-ball probabilities
//! exactly or by Monte Carlo next to several analytic upper bounds, checks
//! covering-number formulas against explicit nets, and runs all of it as
//! reproducible, seeded experiments.
//!
//! Linear algebra and profile classification are generic over [`Scalar`]
//! (`f32` or `f64`); the aliases below fix the double-precision versions
//! used by the experiments.

pub mod calibration;
pub mod distributions;
pub mod error;
pub mod experiments;
pub mod matrices;
pub mod nets;
pub mod quadrature;
pub mod rng;
pub mod scalar;
pub mod small_ball;
pub mod sphere_profile;
pub mod stats;

pub use distributions::{DiscreteLaw, EntryDistribution};
pub use error::{Error, Result};
pub use rng::{derive_stream, RngStream};
pub use scalar::Scalar;

pub type Matrix = matrices::SquareMatrix<f64>;
pub type Matrix32 = matrices::SquareMatrix<f32>;
pub type MatrixSample = matrices::MatrixSample<f64>;
pub type SpectralSummary = matrices::SpectralSummary<f64>;
pub type PartitionParams = sphere_profile::PartitionParams<f64>;
pub type ProfileContext = sphere_profile::ProfileContext<f64>;
pub type DeltaProfile = sphere_profile::DeltaProfile<f64>;
pub type ProfileClassification = sphere_profile::ProfileClassification<f64>;
