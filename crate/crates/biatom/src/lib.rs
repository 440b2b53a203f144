//! Scattering of one- and two-photon pulses off two interacting two-level
//! systems coupled to a 1-D waveguide.
//!
//! The `linear` module carries the exact single-photon spectral solution
//! (standing-wave and traveling-wave transfer functions, the beamsplitter /
//! cavity composition, transmission landscapes and operating points). The
//! `kernels` and `twophoton` modules build the Markov-approximation two-photon
//! channel wavefunctions and probabilities for standing-wave, copropagating
//! and counterpropagating inputs. The `oracle` module is an independent
//! brute-force integrator of the coupled amplitude equations used to validate
//! the closed forms, and `sweep`/`optimize`/`validate` hold the machinery
//! behind the command-line tool.

pub mod error;
pub mod grid;
pub mod kernels;
pub mod linear;
pub mod optimize;
pub mod oracle;
pub mod params;
pub mod pulse;
pub mod spectrum;
pub mod sweep;
pub mod twophoton;
pub mod validate;

pub use error::{Error, Result};
pub use grid::TimeGrid;
pub use params::{DecayRates, SystemParams};
pub use pulse::{make_pulse, PulseEnvelope, PulseShape};
pub use spectrum::{from_spectrum, to_spectrum, SpectralAmplitude};
pub use twophoton::{
    channel_probabilities, scattering_channels, ChannelReport, ChannelTag, Geometry, PartFilter,
    TwoPhotonWavefunction,
};
