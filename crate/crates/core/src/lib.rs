//! Synthetic motion-blurred bursts, pairwise blur ranking, and Fourier
//! burst accumulation that stops once adding frames makes the result worse.
//!
//! Numeric code is generic over [`Real`] (`f32` or `f64`). The aliases below
//! fix the scalar to `f64`, which is what the command-line tool uses.

pub mod compare;
pub mod error;
pub mod eval;
pub mod fba;
pub mod imaging;
pub mod kernel;
pub mod num;
pub mod ranking;
pub mod scene;

pub use error::{Error, Result};
pub use num::Real;

pub type ImageF = imaging::Image<f64>;
pub type SpectrumF = imaging::Spectrum<f64>;
pub type MagnitudeMapF = imaging::MagnitudeMap<f64>;
pub type PsfF = kernel::Psf<f64>;
pub type TrajectoryF = kernel::Trajectory<f64>;
pub type TrajectoryParamsF = kernel::TrajectoryParams<f64>;
pub type KernelDescriptorsF = kernel::KernelDescriptors<f64>;
pub type SynthConfigF = kernel::SynthConfig<f64>;
pub type PairProbF = ranking::PairProb<f64>;
pub type RankResultF = ranking::RankResult<f64>;
pub type SpectralAccumulatorF = fba::SpectralAccumulator<f64>;
pub type SelectionResultF = fba::SelectionResult<f64>;
pub type FbaParamsF = fba::FbaParams<f64>;
pub type FrameF = compare::Frame<f64>;
