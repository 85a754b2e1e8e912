//! Seeded Monte Carlo simulation of a classical phase-set model of
//! balanced-homodyne Bell tests on down-converted pulse pairs.
//!
//! Each pulse pair carries a hidden phase class `α ∈ {0, π}` shared by both
//! arms. Each arm mixes its beam with a local oscillator and digitizes the
//! sign of the photodetector voltage difference `∝ 2·E·E_L·sin(θ − α)`.
//! The crate provides the closed-form optics, the source and detector
//! models, coincidence estimators and the CHSH statistic, figure-style
//! reductions, and filtered back-projection tomography.
//!
//! Everything is generic over [`Real`] (`f32` or `f64`); the `*64` aliases
//! below fix the scalar to `f64`.

pub mod analysis;
pub mod apparatus;
pub mod belltest;
pub mod detector;
pub mod error;
pub mod scalar;
pub mod source;
pub mod stream;
pub mod tomography;
pub mod wavefield;

pub use error::{Error, Result};
pub use scalar::Real;
pub use stream::{Executor, Stream};

pub type FieldPair64 = wavefield::FieldPair<f64>;
pub type HomodyneReading64 = wavefield::HomodyneReading<f64>;
pub type PulsePair64 = source::PulsePair<f64>;
pub type SourceConfig64 = source::SourceConfig<f64>;
pub type Source64 = source::Source<f64>;
pub type ArmSettings64 = detector::ArmSettings<f64>;
pub type ArmOutcome64 = detector::ArmOutcome<f64>;
pub type Apparatus64 = apparatus::Apparatus<f64>;
pub type ChshSettings64 = belltest::ChshSettings<f64>;
pub type ChshRun64 = belltest::ChshRun<f64>;
pub type Histogram64 = analysis::Histogram<f64>;
pub type CurvePoint64 = analysis::CurvePoint<f64>;
pub type QuadratureSample64 = tomography::QuadratureSample<f64>;
pub type WignerGrid64 = tomography::WignerGrid<f64>;
pub type GridSpec64 = tomography::GridSpec<f64>;

pub type FieldPair32 = wavefield::FieldPair<f32>;
pub type Apparatus32 = apparatus::Apparatus<f32>;
