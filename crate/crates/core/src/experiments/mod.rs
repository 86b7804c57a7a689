//! Preset experiments, sequence execution and trace analysis.

mod analysis;
mod config;
mod executor;
mod field_map;
pub mod fit;
mod noise;
mod presets;
mod trace;

use thiserror::Error;

use crate::engine::EngineError;
use crate::kinetics::KineticsError;
use crate::seqlang::SeqError;

pub use analysis::{analyse, FitReport};
pub use config::{
    ConfigError, CwSection, DecoherenceSection, DriveSection, EchoReference, EnsembleSection,
    ExperimentConfig, FieldSection, KineticsSection, NoiseSection, ReadoutSection, SensingSection,
    SitesSection, SweepRange, ZfsSection,
};
pub use executor::Simulator;
pub use field_map::{cw_contrast, cw_spectrum, field_map, lorentzian};
pub use noise::add_noise;
pub use presets::{run_preset, run_sequence, Axis, Preset};
pub use trace::{Column, Trace};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Sequence(#[from] SeqError),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Kinetics(#[from] KineticsError),
    #[error("unknown preset '{0}'")]
    UnknownPreset(String),
    #[error("tone '{tone}': {reason}")]
    ToneMismatch { tone: String, reason: String },
}
