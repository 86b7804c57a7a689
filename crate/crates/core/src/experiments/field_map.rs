use rayon::prelude::*;

use super::{ExperimentConfig, ExperimentError};
use crate::kinetics::{
    pl_rate, project_rates, rate_matrix, steady_state, KineticRates, MicrowaveMixing,
};
use crate::spin::{eigensystem, site_hamiltonian, Eigensystem, MagneticField, Transition};

/// Unit-height Lorentzian with full width `fwhm`.
pub fn lorentzian(f: f64, f0: f64, fwhm: f64) -> f64 {
    let h = 0.5 * fwhm;
    h * h / ((f - f0).powi(2) + h * h)
}

fn site_pl(
    e: &Eigensystem,
    rates: &KineticRates,
    mixing: &[MicrowaveMixing],
) -> Result<f64, ExperimentError> {
    let projected = project_rates(e, rates);
    let n = steady_state(&rate_matrix(&projected, mixing)?)?;
    Ok(pl_rate(&n, &projected))
}

struct CwField {
    eigen: Vec<Eigensystem>,
    rates: KineticRates,
    off: f64,
    mixing_rate: f64,
    linewidth: f64,
}

impl CwField {
    fn new(cfg: &ExperimentConfig, b: &MagneticField) -> Result<Self, ExperimentError> {
        let zfs = cfg.zfs();
        let eigen: Vec<Eigensystem> = cfg
            .sites()
            .iter()
            .map(|s| eigensystem(&site_hamiltonian(&zfs, s, b)))
            .collect();
        let rates = cfg.cw_rates();
        let mut off = 0.0;
        for e in &eigen {
            off += site_pl(e, &rates, &[])?;
        }
        Ok(Self {
            eigen,
            rates,
            off,
            mixing_rate: cfg.cw.mixing_rate,
            linewidth: cfg.cw.linewidth,
        })
    }

    fn contrast(&self, f: f64) -> Result<f64, ExperimentError> {
        let mut on = 0.0;
        for e in &self.eigen {
            let freqs = e.transition_frequencies();
            let mixing: Vec<MicrowaveMixing> = Transition::ALL
                .iter()
                .map(|t| MicrowaveMixing {
                    transition: *t,
                    rate: self.mixing_rate * lorentzian(f, freqs.get(*t), self.linewidth),
                })
                .collect();
            on += site_pl(e, &self.rates, &mixing)?;
        }
        Ok((on - self.off) / self.off)
    }
}

/// cw contrast, summed over sites, at probe frequency `f` (MHz).
pub fn cw_contrast(
    cfg: &ExperimentConfig,
    b: &MagneticField,
    f: f64,
) -> Result<f64, ExperimentError> {
    CwField::new(cfg, b)?.contrast(f)
}

pub fn cw_spectrum(
    cfg: &ExperimentConfig,
    b: &MagneticField,
    freqs: &[f64],
) -> Result<Vec<f64>, ExperimentError> {
    let field = CwField::new(cfg, b)?;
    freqs.par_iter().map(|f| field.contrast(*f)).collect()
}

/// Contrast over field magnitudes (mT, along the configured direction) and
/// probe frequencies, row-major with the field outermost.
pub fn field_map(
    cfg: &ExperimentConfig,
    magnitudes: &[f64],
    freqs: &[f64],
) -> Result<Vec<f64>, ExperimentError> {
    let fields = magnitudes
        .iter()
        .map(|m| {
            let b = MagneticField::along(cfg.field.direction, *m)
                .map_err(|e| super::ConfigError::Invalid(format!("field: {e}")))?;
            CwField::new(cfg, &b)
        })
        .collect::<Result<Vec<_>, ExperimentError>>()?;
    let points: Vec<(usize, f64)> = (0..fields.len())
        .flat_map(|i| freqs.iter().map(move |f| (i, *f)))
        .collect();
    points
        .par_iter()
        .map(|(i, f)| fields[*i].contrast(*f))
        .collect()
}
