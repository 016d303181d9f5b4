//! Simulator and analysis pipeline for time-bin interferometric
//! single-photon imaging through a scattering surface.
//!
//! The physical chain is: pulsed source → Converter interferometer
//! ([`optics`]) → rotating diffuse surface ([`scatter`]) → Analyzer
//! interferometer → 8×8 detector array ([`sensor`]), which emits a binary
//! time-tag stream ([`tagstream`]). [`analysis`] turns post-selected counts
//! into visibilities and correlation images, [`qkd`] runs phase-encoded
//! BB84 over the same channel, and [`experiment`] wires these into the
//! reproducible drivers used by the command-line tool.

// `!(x > 0.0)` style checks are meant to reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod config;
pub mod error;
pub mod experiment;
pub mod grid;
pub mod optics;
pub mod qkd;
pub mod rng;
pub mod scatter;
pub mod sensor;
pub mod tagstream;

pub use config::ExperimentConfig;
pub use error::{Error, Result};
pub use grid::{CountGrid, Mask, PixelGrid};
pub use optics::{ModeOverlap, PeakProbabilities, Port, TimeBinState, UmiConfig};
pub use scatter::SurfaceConfig;
pub use sensor::{
    AcquisitionPlan, Background, IlluminationMap, OpticalChannel, PhaseProgram, PhaseSegment,
    RampTarget, SensorConfig,
};
pub use tagstream::{TagRecord, TagStream};
