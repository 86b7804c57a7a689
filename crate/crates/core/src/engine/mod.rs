//! Coherent control of the triplet density matrix combined with the
//! incoherent singlet/triplet kinetics.

mod ensemble;
mod evolution;
mod labframe;
mod pulse;
mod readout;
mod state;

use thiserror::Error;

use crate::kinetics::KineticsError;
use crate::spin::Transition;

pub use ensemble::{ensemble_average, GaussHermite, DEFAULT_QUADRATURE_ORDER};
pub use evolution::{free_evolution, DecoherenceParams, FreePropagator, RotatingFrame};
pub use labframe::{lab_frame_propagate, MIN_STEPS_PER_PERIOD};
pub use pulse::{
    apply_pulse, apply_unitary, check_hard_pulse, pair_unitary, pi_duration_ns, pulse_unitary,
    MicrowavePulse,
};
pub use readout::{differential_signal, laser, readout};
pub use state::HybridState;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EngineError {
    #[error("invalid pulse: {0}")]
    InvalidPulse(String),
    #[error("invalid decoherence parameters: {0}")]
    InvalidDecoherence(String),
    #[error("transition {0} is degenerate; a selective pulse is undefined")]
    DegeneratePair(Transition),
    #[error("tone on {0} conflicts with the other tones' rotating frame")]
    FrameConflict(Transition),
    #[error("{0} steps per carrier period is too coarse (need at least 20)")]
    StepSize(usize),
    #[error("reference PL must be positive, got {0}")]
    ZeroReference(f64),
    #[error(transparent)]
    Kinetics(#[from] KineticsError),
}

/// A drive amplitude calibration, `Ω = κ·√P`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriveCalibration {
    /// MHz per square root of the power unit.
    pub kappa: f64,
}

impl DriveCalibration {
    pub fn new(kappa: f64) -> Result<Self, EngineError> {
        if kappa.is_finite() && kappa > 0.0 {
            Ok(Self { kappa })
        } else {
            Err(EngineError::InvalidPulse(format!(
                "kappa must be positive, got {kappa}"
            )))
        }
    }

    pub fn rabi(&self, power: f64) -> f64 {
        self.kappa * power.max(0.0).sqrt()
    }
}
