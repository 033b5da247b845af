//! Simulation laboratory for the atom-optics kicked rotor under pulse-train
//! noise.
//!
//! * [`params`]: laboratory to scaled-unit conversion.
//! * [`noise`]: reproducible amplitude, timing and spontaneous-emission noise.
//! * [`qkr`]: quasimomentum-resolved quantum ensemble simulation.
//! * [`epsmap`]: the epsilon-classical map near resonance and the classical standard map.
//! * [`theory`]: diffusion-rate and resonance-height formulas.
//! * [`scan`]: the scan harness behind the `aokr` binary.

pub mod epsmap;
pub mod error;
pub mod noise;
pub mod params;
pub mod qkr;
pub mod scan;
pub mod stats;
pub mod theory;

pub use error::{Error, Result};
pub use noise::{NoiseConfig, NoiseRealization};
pub use params::{LabParams, ScaledParams};
