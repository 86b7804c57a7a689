//! Volume-normalised magnetometry sensitivity of a spin ensemble,
//!
//! `η^V = α·(ħ·e)/(g·µB) · 1/(C·√(ρ·n)) · √t_o / T`
//!
//! with `e` Euler's number, `α = 1` (DC, `T = T2*`) or `π/2` (AC, `T = T2`).

use std::f64::consts::{E, FRAC_PI_2};
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::constants::{
    ANGSTROM3_PER_UM3, BOHR_MAGNETON, G_ELECTRON, HBAR, NT_PER_T, UM32_PER_M32,
};
use crate::experiments::SensingSection;

const UM3_PER_M3: f64 = 1e18;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SensitivityError {
    #[error("{name} must be positive and finite, got {value}")]
    NotPositive { name: &'static str, value: f64 },
    #[error("{name} must not exceed 1, got {value}")]
    AboveOne { name: &'static str, value: f64 },
    #[error("unknown sensing mode '{0}' (expected dc or ac)")]
    UnknownMode(String),
    #[error("unknown sweep axis '{0}'")]
    UnknownAxis(String),
    #[error("unknown profile '{0}'")]
    UnknownProfile(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SensingMode {
    Dc,
    Ac,
}

impl SensingMode {
    pub fn alpha(self) -> f64 {
        match self {
            SensingMode::Dc => 1.0,
            SensingMode::Ac => FRAC_PI_2,
        }
    }
}

impl FromStr for SensingMode {
    type Err = SensitivityError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "dc" => Ok(SensingMode::Dc),
            "ac" => Ok(SensingMode::Ac),
            _ => Err(SensitivityError::UnknownMode(s.to_string())),
        }
    }
}

impl fmt::Display for SensingMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SensingMode::Dc => "dc",
            SensingMode::Ac => "ac",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensingParams {
    pub mode: SensingMode,
    pub contrast: f64,
    /// Dopant concentration (mol/mol).
    pub concentration: f64,
    pub photons_per_readout: f64,
    /// s
    pub overhead: f64,
    /// Coherence time matching the mode (s).
    pub coherence: f64,
    pub z_cell: f64,
    /// Å³
    pub v_cell: f64,
}

impl SensingParams {
    pub fn validate(&self) -> Result<(), SensitivityError> {
        let fields = [
            ("contrast", self.contrast),
            ("concentration", self.concentration),
            ("photons_per_readout", self.photons_per_readout),
            ("overhead", self.overhead),
            ("coherence time", self.coherence),
            ("z_cell", self.z_cell),
            ("v_cell", self.v_cell),
        ];
        for (name, value) in fields {
            if !(value.is_finite() && value > 0.0) {
                return Err(SensitivityError::NotPositive { name, value });
            }
        }
        for (name, value) in [
            ("contrast", self.contrast),
            ("concentration", self.concentration),
        ] {
            if value > 1.0 {
                return Err(SensitivityError::AboveOne { name, value });
            }
        }
        Ok(())
    }

    pub fn from_section(s: &SensingSection, mode: SensingMode) -> Result<Self, SensitivityError> {
        let p = Self {
            mode,
            contrast: s.contrast,
            concentration: s.concentration,
            photons_per_readout: s.photons_per_readout,
            overhead: s.overhead,
            coherence: match mode {
                SensingMode::Dc => s.t2_star,
                SensingMode::Ac => s.t2,
            },
            z_cell: s.z_cell,
            v_cell: s.v_cell,
        };
        p.validate()?;
        // the other mode's coherence time must be valid as well
        let other = match mode {
            SensingMode::Dc => s.t2,
            SensingMode::Ac => s.t2_star,
        };
        if !(other.is_finite() && other > 0.0) {
            return Err(SensitivityError::NotPositive {
                name: "coherence time",
                value: other,
            });
        }
        Ok(p)
    }

    pub fn with(mut self, axis: SweepAxis, value: f64) -> Self {
        match axis {
            SweepAxis::Contrast => self.contrast = value,
            SweepAxis::Concentration => self.concentration = value,
            SweepAxis::Photons => self.photons_per_readout = value,
            SweepAxis::Overhead => self.overhead = value,
            SweepAxis::Coherence => self.coherence = value,
        }
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensitivityResult {
    /// T·µm^{3/2}·Hz^{−1/2}
    pub eta_v: f64,
    /// spins/µm³
    pub spin_density: f64,
}

impl SensitivityResult {
    /// nT·µm^{3/2}·Hz^{−1/2}
    pub fn eta_v_nt(&self) -> f64 {
        self.eta_v * NT_PER_T
    }
}

/// Spins per µm³ for a dopant fraction `c`, `z` molecules per cell and a
/// cell volume in Å³.
pub fn spin_density(c: f64, z_cell: f64, v_cell_a3: f64) -> f64 {
    z_cell * c / v_cell_a3 * ANGSTROM3_PER_UM3
}

pub fn eta_v(p: &SensingParams) -> Result<SensitivityResult, SensitivityError> {
    p.validate()?;
    let rho_um3 = spin_density(p.concentration, p.z_cell, p.v_cell);
    let rho_m3 = rho_um3 * UM3_PER_M3;
    let prefactor = p.mode.alpha() * HBAR * E / (G_ELECTRON * BOHR_MAGNETON);
    let eta_si = prefactor / (p.contrast * (rho_m3 * p.photons_per_readout).sqrt())
        * p.overhead.sqrt()
        / p.coherence;
    Ok(SensitivityResult {
        eta_v: eta_si * UM32_PER_M32,
        spin_density: rho_um3,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    Contrast,
    Concentration,
    Photons,
    Overhead,
    Coherence,
}

impl FromStr for SweepAxis {
    type Err = SensitivityError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "contrast" | "C" => Ok(SweepAxis::Contrast),
            "concentration" | "c_S" => Ok(SweepAxis::Concentration),
            "photons" | "n_avg" => Ok(SweepAxis::Photons),
            "overhead" | "t_overhead" => Ok(SweepAxis::Overhead),
            "coherence" | "T" => Ok(SweepAxis::Coherence),
            _ => Err(SensitivityError::UnknownAxis(s.to_string())),
        }
    }
}

pub fn sweep_eta(
    p: &SensingParams,
    axis: SweepAxis,
    values: &[f64],
) -> Result<Vec<(f64, SensitivityResult)>, SensitivityError> {
    values
        .iter()
        .map(|v| Ok((*v, eta_v(&p.with(axis, *v))?)))
        .collect()
}

pub const PROFILE_NAMES: [&str; 3] = ["paper-film", "paper-crystal", "paper-projected"];

/// Shipped parameter sets: thin film, crystal and a projected optimised
/// material. The short names `film`, `crystal` and `projected` also work.
pub fn profile_section(name: &str) -> Result<SensingSection, SensitivityError> {
    let (contrast, concentration, photons, overhead, t2_star, t2) = match name {
        "paper-film" | "film" => (0.05, 1e-3, 1e-3, 350e-6, 120e-9, 750e-9),
        "paper-crystal" | "crystal" => (0.10, 1e-4, 1e-3, 350e-6, 390e-9, 1.17e-6),
        "paper-projected" | "projected" => (0.3, 1e-4, 1e-2, 10e-6, 1e-6, 4e-6),
        _ => return Err(SensitivityError::UnknownProfile(name.to_string())),
    };
    Ok(SensingSection {
        contrast,
        concentration,
        photons_per_readout: photons,
        overhead,
        t2_star,
        t2,
        z_cell: 2.0,
        v_cell: 617.0,
    })
}

pub fn profile(name: &str, mode: SensingMode) -> Result<SensingParams, SensitivityError> {
    SensingParams::from_section(&profile_section(name)?, mode)
}
