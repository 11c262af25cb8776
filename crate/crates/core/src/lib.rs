//! Near-field beam-focusing analysis for extremely large uniform linear
//! arrays driven by B-bit discrete phase shifters.
//!
//! The crate is organised bottom-up:
//!
//! - [`geometry`]: array configuration, field boundaries, distances,
//!   steering vectors and line-of-sight channels.
//! - [`quantization`]: nearest-neighbour phase quantization, Fourier
//!   coefficients of the effective quantizer and MRT beamformers.
//! - [`beampattern`]: direct and Fourier-series evaluation of the beam
//!   pattern over observation grids, plus the special functions used by the
//!   lobe analytics ([`beampattern::special`]).
//! - [`lobes`]: closed-form lobe metrics, numeric half-power oracles,
//!   far-field lobes and the array-of-subarrays partition.
//! - [`multiuser`]: hybrid beamforming, sum-rate, energy efficiency and the
//!   seeded Monte Carlo driver.

pub mod beampattern;
pub mod error;
pub mod geometry;
pub mod lobes;
pub mod multiuser;
pub mod quantization;

pub use error::{Error, Result};
pub use geometry::{ArrayConfig, ChannelVector, DistanceModel, FieldBoundaries, PolarLocation};
pub use quantization::{DiscreteBeamformer, PhaseShifter};

pub use num_complex::Complex64;
