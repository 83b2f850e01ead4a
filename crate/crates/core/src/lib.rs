//! Joint typicality decoding for noisy compressive sampling.
//!
//! Estimates an L-sparse vector x from N noisy linear measurements
//! y = A x + n by projecting y onto all C(M, L) column subspaces of the
//! Gaussian measurement matrix A and selecting a delta-jointly-typical
//! support. Ships with the genie-aided least-squares estimator, the exact
//! Cramer-Rao bound of the genie-aided model, closed-form error bounds,
//! and a reproducible Monte Carlo experiment harness behind a CLI.

pub mod bounds;
pub mod decoder;
pub mod error;
pub mod harness;
pub mod linalg;
pub mod model;
pub mod scalar;
pub mod subspace;

pub use error::{Error, Result};
pub use scalar::Real;

/// Concrete f64 aliases; the harness and CLI run at f64.
pub type Mat64 = linalg::Mat<f64>;
pub type MeasurementMatrix64 = model::MeasurementMatrix<f64>;
pub type SparseSignal64 = model::SparseSignal<f64>;
pub type ProblemInstance64 = model::ProblemInstance<f64>;
pub type DecoderConfig64 = decoder::DecoderConfig<f64>;
pub type DecodeResult64 = decoder::DecodeResult<f64>;
pub type EigSummary64 = subspace::EigSummary<f64>;
pub type RegimeParams64 = bounds::RegimeParams<f64>;
pub type RegimeReport64 = bounds::RegimeReport<f64>;

/// Single-precision aliases for the scalar-generic core.
pub type Mat32 = linalg::Mat<f32>;
pub type MeasurementMatrix32 = model::MeasurementMatrix<f32>;
pub type SparseSignal32 = model::SparseSignal<f32>;
