//! Ultrasound B-mode image simulation by low-frequency phase substitution.
//!
//! A real ultrasound image keeps its Fourier magnitude while the phase of
//! its low-frequency band is taken from an arbitrary binary mask, so the
//! mask's geometry shows up as a lesion in realistic speckle. Around that
//! method the crate provides:
//!
//! * [`fft`]: 2D transforms with a DC-centered spectrum layout,
//! * [`phase_sim`]: the elliptical low-frequency mask and the simulator,
//! * [`dataset`]: resampling, seeded pairing and dataset emission,
//! * [`speckle`]: a convolutional scatterer/PSF speckle baseline,
//! * [`metrics`]: the Dice similarity coefficient,
//! * [`bench`]: latency measurement of both simulators.

pub mod bench;
pub mod dataset;
pub mod error;
pub mod fft;
pub mod io;
pub mod metrics;
pub mod phase_sim;
pub mod speckle;

pub use error::{Error, Result};
pub use fft::{PolarSpectrum, RealImage, Spectrum};
pub use phase_sim::{AlphaParam, PhaseMask, DEFAULT_ALPHA};
