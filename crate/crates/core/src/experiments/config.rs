use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::{DecoherenceParams, DriveCalibration, DEFAULT_QUADRATURE_ORDER};
use crate::kinetics::{
    KineticRates, DEFAULT_BRANCHING, DEFAULT_ISC_YIELD, DEFAULT_LIFETIMES_US, DEFAULT_PUMP_RATE,
    DEFAULT_S1_DECAY_RATE,
};
use crate::spin::{MagneticField, MolecularOrientation, ZfsParameters};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("config syntax: {0}")]
    Syntax(String),
    #[error("invalid config: {0}")]
    Invalid(String),
}

fn invalid<T>(msg: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError::Invalid(msg.into()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ZfsSection {
    pub d: f64,
    pub e: f64,
}

impl Default for ZfsSection {
    fn default() -> Self {
        let p = ZfsParameters::pentacene();
        Self { d: p.d, e: p.e }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct KineticsSection {
    /// Pump rate during pulsed-experiment laser pulses (µs⁻¹).
    pub pump_rate: f64,
    pub s1_decay_rate: f64,
    pub isc_yield: f64,
    /// `(Tx, Ty, Tz)`.
    pub branching: [f64; 3],
    /// Depopulation lifetimes of `(Tx, Ty, Tz)` in µs.
    pub lifetimes: [f64; 3],
}

impl Default for KineticsSection {
    fn default() -> Self {
        Self {
            pump_rate: DEFAULT_PUMP_RATE,
            s1_decay_rate: DEFAULT_S1_DECAY_RATE,
            isc_yield: DEFAULT_ISC_YIELD,
            branching: DEFAULT_BRANCHING,
            lifetimes: DEFAULT_LIFETIMES_US,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DecoherenceSection {
    pub t2_xy: f64,
    pub t2_yz: f64,
    pub t2_xz: f64,
    /// Inhomogeneous detuning spread (MHz), T2* = 1/(√2·π·σ).
    pub sigma_inh: f64,
}

impl Default for DecoherenceSection {
    fn default() -> Self {
        Self {
            t2_xy: 1.17,
            t2_yz: 1.56,
            t2_xz: 1.17,
            sigma_inh: 0.577_142,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DriveSection {
    /// Ω = κ·√P (MHz per √power unit).
    pub kappa: f64,
    /// Rabi frequency of the single-transition experiments (MHz).
    pub rabi: f64,
    /// Rabi frequency for the chevron; defaults to `rabi` when absent.
    pub chevron_rabi: Option<f64>,
    /// Stronger drive used for pulsed ODMR spectra.
    pub podmr_rabi: f64,
    /// Rabi frequency of the `Tx ↔ Ty` transfer pulses in multi-level runs.
    pub transfer_rabi: f64,
    /// Tone offset from resonance in Ramsey runs (MHz).
    pub ramsey_detuning: f64,
}

impl Default for DriveSection {
    fn default() -> Self {
        Self {
            kappa: 5.0,
            rabi: 5.0,
            chevron_rabi: None,
            podmr_rabi: 10.0,
            transfer_rabi: 5.0,
            ramsey_detuning: 5.0,
        }
    }
}

/// How echo presets normalise their signal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum EchoReference {
    /// `(PL(φ=180°) − PL(φ=0°))/PL_ref` over the phase of the last π/2 pulse.
    #[default]
    PhaseCycled,
    /// Plain microwave-free reference.
    Dark,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ReadoutSection {
    /// Initialisation laser (µs).
    pub laser: f64,
    /// Dark delay before read-out (µs).
    pub delay: f64,
    /// Read-out window (µs).
    pub read: f64,
    pub echo_reference: EchoReference,
}

impl Default for ReadoutSection {
    fn default() -> Self {
        Self {
            laser: 10.0,
            delay: 50.0,
            read: 10.0,
            echo_reference: EchoReference::PhaseCycled,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FieldSection {
    /// Lab-frame direction (normalised on use).
    pub direction: [f64; 3],
    /// Static field magnitude (mT).
    pub magnitude: f64,
}

impl Default for FieldSection {
    fn default() -> Self {
        Self {
            direction: [1.0, 1.0, 1.0],
            magnitude: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SitesSection {
    /// Rotation of the second site about lab Z (degrees).
    pub herringbone_deg: f64,
    pub two_sites: bool,
}

impl Default for SitesSection {
    fn default() -> Self {
        Self {
            herringbone_deg: 60.0,
            two_sites: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CwSection {
    /// Pump rate under continuous illumination (µs⁻¹).
    pub pump_rate: f64,
    /// Peak microwave mixing rate on resonance (µs⁻¹).
    pub mixing_rate: f64,
    /// Lorentzian FWHM of each resonance (MHz).
    pub linewidth: f64,
}

impl Default for CwSection {
    fn default() -> Self {
        Self {
            pump_rate: 5.5e-4,
            mixing_rate: 0.01,
            linewidth: 20.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EnsembleSection {
    pub order: usize,
}

impl Default for EnsembleSection {
    fn default() -> Self {
        Self {
            order: DEFAULT_QUADRATURE_ORDER,
        }
    }
}

/// Override for a preset's sweep axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepRange {
    pub start: f64,
    pub stop: f64,
    pub steps: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseSection {
    /// Poisson-like noise level; σᵢ = level·√(|yᵢ|·max|y|).
    pub level: f64,
}

/// Inputs of the sensitivity estimate, all in SI except where noted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SensingSection {
    pub contrast: f64,
    /// Dopant concentration (mol/mol).
    pub concentration: f64,
    pub photons_per_readout: f64,
    /// Overhead time per measurement (s).
    pub overhead: f64,
    /// T2* (s), used for DC sensing.
    pub t2_star: f64,
    /// T2 (s), used for AC sensing.
    pub t2: f64,
    #[serde(default = "default_z_cell")]
    pub z_cell: f64,
    /// Unit-cell volume (Å³).
    #[serde(default = "default_v_cell")]
    pub v_cell: f64,
}

fn default_z_cell() -> f64 {
    2.0
}

fn default_v_cell() -> f64 {
    617.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub zfs: ZfsSection,
    pub kinetics: KineticsSection,
    pub decoherence: DecoherenceSection,
    pub drive: DriveSection,
    pub readout: ReadoutSection,
    pub field: FieldSection,
    pub sites: SitesSection,
    pub cw: CwSection,
    pub ensemble: EnsembleSection,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepRange>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sweep2: Option<SweepRange>,
    pub noise: NoiseSection,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sensing: Option<SensingSection>,
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        let cfg: Self = toml::from_str(text).map_err(|e| ConfigError::Syntax(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml_str(&text)
    }

    pub fn zfs(&self) -> ZfsParameters {
        ZfsParameters::new(self.zfs.d, self.zfs.e)
    }

    /// Rates for pulsed experiments.
    pub fn rates(&self) -> KineticRates {
        let k = &self.kinetics;
        KineticRates::from_lifetimes(
            k.pump_rate,
            k.s1_decay_rate,
            k.isc_yield,
            k.branching,
            k.lifetimes,
        )
    }

    /// Rates under continuous illumination.
    pub fn cw_rates(&self) -> KineticRates {
        self.rates().with_pump(self.cw.pump_rate)
    }

    pub fn decoherence(&self) -> DecoherenceParams {
        let d = &self.decoherence;
        DecoherenceParams::new(d.t2_xy, d.t2_yz, d.t2_xz, d.sigma_inh)
    }

    pub fn drive(&self) -> DriveCalibration {
        DriveCalibration {
            kappa: self.drive.kappa,
        }
    }

    pub fn chevron_rabi(&self) -> f64 {
        self.drive.chevron_rabi.unwrap_or(self.drive.rabi)
    }

    pub fn field(&self) -> Result<MagneticField, ConfigError> {
        MagneticField::along(self.field.direction, self.field.magnitude)
            .map_err(|e| ConfigError::Invalid(format!("field: {e}")))
    }

    pub fn sites(&self) -> Vec<MolecularOrientation> {
        let mut s = vec![MolecularOrientation::identity()];
        if self.sites.two_sites {
            s.push(MolecularOrientation::about_z(
                self.sites.herringbone_deg.to_radians(),
            ));
        }
        s
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.zfs.d.is_finite() && self.zfs.e.is_finite()) {
            return invalid("zfs parameters must be finite");
        }
        if !self.zfs().is_conventional() {
            log::warn!("|E| > |D|/3: unconventional zero-field splitting parameters");
        }
        if self
            .kinetics
            .lifetimes
            .iter()
            .any(|t| !(t.is_finite() && *t > 0.0))
        {
            return invalid(format!(
                "lifetimes must be positive, got {:?}",
                self.kinetics.lifetimes
            ));
        }
        let rates = self.rates();
        rates
            .validate()
            .map_err(|e| ConfigError::Invalid(format!("kinetics: {e}")))?;
        self.cw_rates()
            .validate()
            .map_err(|e| ConfigError::Invalid(format!("cw: {e}")))?;
        let d = self.decoherence();
        d.validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        d.check_positivity(&rates)
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        DriveCalibration::new(self.drive.kappa).map_err(|e| ConfigError::Invalid(e.to_string()))?;
        let rabis = [
            ("rabi", self.drive.rabi),
            ("chevron_rabi", self.chevron_rabi()),
            ("podmr_rabi", self.drive.podmr_rabi),
            ("transfer_rabi", self.drive.transfer_rabi),
        ];
        for (name, v) in rabis {
            if !(v.is_finite() && v > 0.0) {
                return invalid(format!("drive.{name} must be positive, got {v}"));
            }
        }
        if !(self.drive.ramsey_detuning.is_finite() && self.drive.ramsey_detuning > 0.0) {
            return invalid("drive.ramsey_detuning must be positive");
        }
        let r = &self.readout;
        for (name, v) in [("laser", r.laser), ("delay", r.delay), ("read", r.read)] {
            if !(v.is_finite() && v >= 0.0) {
                return invalid(format!("readout.{name} must be non-negative, got {v}"));
            }
        }
        if r.read <= 0.0 {
            return invalid("readout.read must be positive");
        }
        self.field()?;
        if !self.sites.herringbone_deg.is_finite() {
            return invalid("sites.herringbone_deg must be finite");
        }
        if !(self.cw.mixing_rate.is_finite() && self.cw.mixing_rate >= 0.0) {
            return invalid("cw.mixing_rate must be non-negative");
        }
        if !(self.cw.linewidth.is_finite() && self.cw.linewidth > 0.0) {
            return invalid("cw.linewidth must be positive");
        }
        if !(1..=200).contains(&self.ensemble.order) {
            return invalid(format!(
                "ensemble.order must lie in 1..=200, got {}",
                self.ensemble.order
            ));
        }
        for s in [&self.sweep, &self.sweep2].into_iter().flatten() {
            if !(s.start.is_finite() && s.stop.is_finite()) || s.steps < 2 {
                return invalid("sweep ranges need finite bounds and at least 2 steps");
            }
        }
        if !(self.noise.level.is_finite() && self.noise.level >= 0.0) {
            return invalid("noise.level must be non-negative");
        }
        if let Some(s) = &self.sensing {
            crate::sensitivity::SensingParams::from_section(s, crate::sensitivity::SensingMode::Dc)
                .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        }
        Ok(())
    }
}
