use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::fit::{
    fit_damped_cosine, fit_exponential, fit_gaussian_cosine, peak_location, FitResult,
};
use super::{ExperimentConfig, Preset, Trace};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub label: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fit: Option<FitResult>,
    pub derived: BTreeMap<String, f64>,
}

impl FitReport {
    pub fn converged(&self) -> bool {
        self.fit.as_ref().is_none_or(|f| f.converged)
    }

    pub fn value(&self, key: &str) -> Option<f64> {
        self.derived.get(key).copied()
    }
}

/// First point whose magnitude reaches the trace maximum (to rounding).
fn extremum(x: &[f64], y: &[f64]) -> (f64, f64) {
    let peak = y.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let k = y
        .iter()
        .position(|v| v.abs() >= peak * (1.0 - 1e-9))
        .unwrap_or(0);
    (
        x.get(k).copied().unwrap_or(f64::NAN),
        y.get(k).copied().unwrap_or(f64::NAN),
    )
}

fn ns_to_us(x: &[f64]) -> Vec<f64> {
    x.iter().map(|v| v * 1e-3).collect()
}

fn oscillation(label: String, x_us: &[f64], y: &[f64]) -> FitReport {
    let fit = fit_damped_cosine(x_us, y);
    let mut derived = BTreeMap::new();
    if fit.converged {
        derived.insert("frequency_MHz".into(), fit.params[2].abs());
        derived.insert("amplitude".into(), fit.params[0].abs());
    }
    FitReport {
        label,
        fit: Some(fit),
        derived,
    }
}

fn ramsey(label: String, x_us: &[f64], y: &[f64], t2: f64) -> FitReport {
    let fit = fit_gaussian_cosine(x_us, y, t2);
    let mut derived = BTreeMap::new();
    if fit.converged {
        derived.insert("frequency_MHz".into(), fit.params[2].abs());
        derived.insert("t2_star_us".into(), fit.params[1]);
    }
    FitReport {
        label,
        fit: Some(fit),
        derived,
    }
}

/// Standard fits of a preset trace. Sequences run from files get none.
pub fn analyse(trace: &Trace, cfg: &ExperimentConfig) -> Vec<FitReport> {
    let Ok(preset) = trace.preset.parse::<Preset>() else {
        return Vec::new();
    };
    let y = &trace.contrast;
    match preset {
        Preset::Rabi | Preset::MultilevelRabi | Preset::SingletoneRabi => {
            let x = trace.column(0);
            let mut r = oscillation(preset.name().into(), &ns_to_us(&x), y);
            let (xe, ye) = extremum(&x, y);
            r.derived.insert("extremum_duration_ns".into(), xe);
            r.derived.insert("extremum_contrast".into(), ye);
            vec![r]
        }
        Preset::Chevron => trace
            .levels(1)
            .into_iter()
            .map(|d| {
                let (x, y) = trace.slice(1, d);
                let mut r = oscillation(format!("detuning={d}"), &ns_to_us(&x), &y);
                r.derived.insert("detuning_MHz".into(), d);
                r
            })
            .collect(),
        Preset::Power => trace
            .levels(0)
            .into_iter()
            .map(|p| {
                let (x, y) = trace.slice(0, p);
                let mut r = oscillation(format!("power={p}"), &ns_to_us(&x), &y);
                r.derived.insert("power".into(), p);
                r
            })
            .collect(),
        Preset::Ramsey => vec![ramsey(
            preset.name().into(),
            &trace.column(0),
            y,
            cfg.decoherence.t2_xz,
        )],
        Preset::RamseyDetuning => trace
            .levels(0)
            .into_iter()
            .map(|d| {
                let (x, y) = trace.slice(0, d);
                let mut r = ramsey(format!("detuning={d}"), &x, &y, cfg.decoherence.t2_xz);
                r.derived.insert("detuning_MHz".into(), d);
                r
            })
            .collect(),
        Preset::Hahn | Preset::MultilevelHahn => {
            let fit = fit_exponential(&trace.column(0), y);
            let mut derived = BTreeMap::new();
            if fit.converged {
                derived.insert("t2_us".into(), fit.params[1]);
            }
            vec![FitReport {
                label: preset.name().into(),
                fit: Some(fit),
                derived,
            }]
        }
        Preset::PulsedOdmr | Preset::Cw => {
            let x = trace.column(0);
            let mut derived = BTreeMap::new();
            if let Some(p) = peak_location(&x, y) {
                derived.insert("peak_MHz".into(), p);
            }
            let (xe, ye) = extremum(&x, y);
            derived.insert("extremum_MHz".into(), xe);
            derived.insert("extremum_contrast".into(), ye);
            vec![FitReport {
                label: preset.name().into(),
                fit: None,
                derived,
            }]
        }
        Preset::FieldMap => Vec::new(),
    }
}
