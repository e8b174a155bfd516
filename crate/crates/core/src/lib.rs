//! Simulation and analysis toolkit for a three-grating Talbot-Lau
//! interferometer with heavy molecules.
//!
//! The crate is organised bottom-up:
//!
//! - [`physics`]: constants, particle species, geometry and the de Broglie /
//!   Talbot relations.
//! - [`grating`]: complex grating transmission including the van der Waals
//!   phase, and its Fourier coefficients.
//! - [`quantum`]: Talbot coefficients, incoherent three-grating fringe
//!   synthesis, gravity phase, velocity averaging and a brute-force Fresnel
//!   integral used for validation.
//! - [`classical`]: straight-ray moiré model with an optional van der Waals
//!   kick at the second grating.
//! - [`beamline`]: velocity distributions and the gravitational velocity
//!   selector.
//! - [`scanlab`]: synthetic Poisson detector scans and fringe extraction.
//!
//! All quantities are SI internally.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod beamline;
pub mod classical;
pub mod error;
pub mod grating;
pub mod physics;
pub mod quantum;
pub mod scanlab;

pub use error::{Error, Result};
pub use grating::{FourierSpectrum, GratingSpec, SampledTransmission};
pub use physics::{Geometry, Interferometer, Numerics, PhysConstants, Species};
pub use quantum::{FringeSpectrum, TalbotCoefficients, VisibilityCurve};
