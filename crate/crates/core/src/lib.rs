//! Simulation and DSP library for frequency-comb-based wideband coherent
//! transmission with pilot-aided joint carrier recovery.
//!
//! The crate is organized along the signal path:
//!
//! - [`sigkit`]: constellations, framing with pilot bursts, RRC shaping.
//! - [`combsrc`]: Tx/LO comb phase trajectories.
//! - [`linkchan`]: multiplexing, noise loading, split-step fiber spans,
//!   amplification and coherent detection.
//! - [`rxdsp`]: CD compensation, frame synchronization, 2x2 equalization.
//! - [`cpr`]: frequency-offset tracking, carrier-phase estimation and the
//!   joint recovery schemes.
//! - [`metrics`]: GMI/NGMI, FEC overhead and net-rate accounting.
//! - [`sim`]: experiment configuration, sweeps, CSV and SVG output.

pub mod combsrc;
pub mod cpr;
pub mod error;
pub mod fft;
pub mod linkchan;
pub mod metrics;
pub mod par;
pub mod rng;
pub mod rxdsp;
pub mod sigkit;
pub mod sim;

pub use error::{Error, Result};
pub use fft::C64;
