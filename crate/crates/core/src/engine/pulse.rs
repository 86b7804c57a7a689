use std::f64::consts::PI;

use nalgebra::Matrix2;

use super::{EngineError, HybridState};
use crate::spin::{Operator, Transition, TransitionFrequencies, C64};

/// Rectangular microwave pulse in the rotating frame of its tone.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MicrowavePulse {
    pub transition: Transition,
    /// Rabi frequency Ω (MHz).
    pub rabi: f64,
    pub duration_ns: f64,
    /// Drive phase (rad).
    pub phase: f64,
    /// Δ in the pair subspace (MHz).
    pub detuning: f64,
}

impl MicrowavePulse {
    pub fn resonant(transition: Transition, rabi: f64, duration_ns: f64) -> Self {
        Self {
            transition,
            rabi,
            duration_ns,
            phase: 0.0,
            detuning: 0.0,
        }
    }

    /// Resonant π pulse, `t = 1/(2Ω)`.
    pub fn pi(transition: Transition, rabi: f64) -> Self {
        Self::resonant(transition, rabi, pi_duration_ns(rabi))
    }

    pub fn validate(&self) -> Result<(), EngineError> {
        if !(self.rabi.is_finite() && self.rabi >= 0.0) {
            return Err(EngineError::InvalidPulse(format!(
                "Rabi frequency {}",
                self.rabi
            )));
        }
        if !(self.duration_ns.is_finite() && self.duration_ns >= 0.0) {
            return Err(EngineError::InvalidPulse(format!(
                "duration {} ns",
                self.duration_ns
            )));
        }
        if !(self.phase.is_finite() && self.detuning.is_finite()) {
            return Err(EngineError::InvalidPulse(
                "non-finite phase or detuning".into(),
            ));
        }
        Ok(())
    }

    pub fn effective_rabi(&self) -> f64 {
        self.rabi.hypot(self.detuning)
    }
}

pub fn pi_duration_ns(rabi: f64) -> f64 {
    500.0 / rabi
}

/// `exp(−i·2π·H_eff·t)` in the `(a, b)` pair basis, closed form.
pub fn pair_unitary(p: &MicrowavePulse) -> Matrix2<C64> {
    let w = p.effective_rabi();
    let t_us = p.duration_ns * 1e-3;
    if w == 0.0 || t_us == 0.0 {
        return Matrix2::identity();
    }
    let (nx, ny, nz) = (
        p.rabi * p.phase.cos() / w,
        p.rabi * p.phase.sin() / w,
        p.detuning / w,
    );
    let (s, c) = (PI * w * t_us).sin_cos();
    let mis = C64::new(0.0, -s);
    Matrix2::new(
        C64::new(c, 0.0) + mis * nz,
        mis * C64::new(nx, -ny),
        mis * C64::new(nx, ny),
        C64::new(c, 0.0) - mis * nz,
    )
}

/// Pair unitary embedded in the triplet space; the spectator is untouched.
pub fn pulse_unitary(p: &MicrowavePulse) -> Operator {
    let u2 = pair_unitary(p);
    let (a, b) = p.transition.levels();
    let (ia, ib) = (a.index(), b.index());
    let mut u = Operator::identity();
    u[(ia, ia)] = u2[(0, 0)];
    u[(ia, ib)] = u2[(0, 1)];
    u[(ib, ia)] = u2[(1, 0)];
    u[(ib, ib)] = u2[(1, 1)];
    u
}

pub fn apply_unitary(s: &HybridState, u: &Operator) -> HybridState {
    HybridState {
        s0: s.s0,
        s1: s.s1,
        rho: u * s.rho * u.adjoint(),
    }
}

pub fn apply_pulse(s: &HybridState, p: &MicrowavePulse) -> Result<HybridState, EngineError> {
    p.validate()?;
    Ok(apply_unitary(s, &pulse_unitary(p)))
}

/// Checks the selective hard-pulse regime for a drive on `transition`.
/// Returns `Ok(false)` (and logs a warning) when Ω exceeds a tenth of the
/// frequency gap to the nearest other transition.
pub fn check_hard_pulse(
    transition: Transition,
    rabi: f64,
    freqs: &TransitionFrequencies,
) -> Result<bool, EngineError> {
    let f = freqs.get(transition);
    if f < 1e-6 {
        return Err(EngineError::DegeneratePair(transition));
    }
    let gap = Transition::ALL
        .iter()
        .filter(|t| **t != transition)
        .map(|t| (freqs.get(*t) - f).abs())
        .fold(f64::INFINITY, f64::min);
    if rabi > 0.1 * gap {
        log::warn!(
            "Rabi frequency {rabi} MHz on {transition} exceeds 0.1x the {gap:.3} MHz gap to the nearest transition; hard-pulse model is unreliable"
        );
        return Ok(false);
    }
    Ok(true)
}
