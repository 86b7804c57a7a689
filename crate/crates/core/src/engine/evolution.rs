use std::f64::consts::{PI, SQRT_2, TAU};

use super::{EngineError, HybridState};
use crate::kinetics::{propagator, rate_matrix, KineticRates, LevelPopulations, RateMatrix};
use crate::spin::{Sublevel, Transition, C64};

/// Homogeneous coherence times per transition plus a static Gaussian
/// detuning spread.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecoherenceParams {
    /// T2 (µs) indexed by [`Transition::index`].
    pub t2: [f64; 3],
    /// Standard deviation of the inhomogeneous detuning (MHz).
    pub sigma_inh: f64,
}

impl DecoherenceParams {
    pub fn new(t2_xy: f64, t2_yz: f64, t2_xz: f64, sigma_inh: f64) -> Self {
        Self {
            t2: [t2_xy, t2_yz, t2_xz],
            sigma_inh,
        }
    }

    pub fn t2(&self, t: Transition) -> f64 {
        self.t2[t.index()]
    }

    /// T2* = 1/(√2·π·σ).
    pub fn t2_star(&self) -> f64 {
        1.0 / (SQRT_2 * PI * self.sigma_inh)
    }

    pub fn sigma_for_t2_star(t2_star_us: f64) -> f64 {
        1.0 / (SQRT_2 * PI * t2_star_us)
    }

    pub fn validate(&self) -> Result<(), EngineError> {
        for (t, v) in Transition::ALL.iter().map(|t| (*t, self.t2(*t))) {
            if v.is_nan() || v <= 0.0 {
                return Err(EngineError::InvalidDecoherence(format!(
                    "T2 for {t} must be positive, got {v}"
                )));
            }
        }
        if !(self.sigma_inh.is_finite() && self.sigma_inh >= 0.0) {
            return Err(EngineError::InvalidDecoherence(format!(
                "sigma_inh must be non-negative, got {}",
                self.sigma_inh
            )));
        }
        Ok(())
    }

    /// Decay rate of the coherence on `t` (µs⁻¹), clamped to be no slower
    /// than the mean population decay of its two levels.
    pub fn coherence_rate(&self, t: Transition, r: &KineticRates) -> f64 {
        let (a, b) = t.levels();
        let lifetime_limit = 0.5 * (r.depopulation[a.index()] + r.depopulation[b.index()]);
        (1.0 / self.t2(t)).max(lifetime_limit)
    }

    /// Pure-dephasing rates must form a squared Euclidean distance on the
    /// three levels for the dephasing map to stay completely positive.
    pub fn check_positivity(&self, r: &KineticRates) -> Result<(), EngineError> {
        let g: Vec<f64> = Transition::ALL
            .iter()
            .map(|t| {
                let (a, b) = t.levels();
                let pure = self.coherence_rate(*t, r)
                    - 0.5 * (r.depopulation[a.index()] + r.depopulation[b.index()]);
                pure.max(0.0).sqrt()
            })
            .collect();
        let tol = 1e-12 * g.iter().copied().fold(1.0, f64::max);
        for i in 0..3 {
            let (x, y, z) = (g[i], g[(i + 1) % 3], g[(i + 2) % 3]);
            if x > y + z + tol {
                return Err(EngineError::InvalidDecoherence(format!(
                    "dephasing rate on {} is inconsistent with the other two transitions",
                    Transition::ALL[i]
                )));
            }
        }
        Ok(())
    }
}

/// Residual level energies (MHz) in the frame rotating with the applied
/// tones. Coherence `ρ_ab` precesses at `offset_a − offset_b`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RotatingFrame {
    pub offsets: [f64; 3],
}

impl RotatingFrame {
    pub fn resonant() -> Self {
        Self::default()
    }

    /// Frame in which every listed tone is static. `energies` are the
    /// labelled level energies. The tones must not over-constrain the frame.
    pub fn from_tones(
        energies: [f64; 3],
        tones: &[(Transition, f64)],
    ) -> Result<Self, EngineError> {
        let mut nu: [Option<f64>; 3] = [None; 3];
        let scale = energies.iter().fold(1.0f64, |m, e| m.max(e.abs()));
        // a spanning forest has at most two edges, so two sweeps settle it
        for root in 0..3 {
            if nu[root].is_some() || !tones.iter().any(|(t, _)| involves(*t, root)) {
                continue;
            }
            nu[root] = Some(energies[root]);
            for _ in 0..3 {
                for (t, f) in tones {
                    let (a, b) = t.levels();
                    let (ia, ib) = (a.index(), b.index());
                    let s = (energies[ia] - energies[ib]).signum();
                    match (nu[ia], nu[ib]) {
                        (Some(va), None) => nu[ib] = Some(va - s * f),
                        (None, Some(vb)) => nu[ia] = Some(vb + s * f),
                        (Some(va), Some(vb)) => {
                            if ((va - vb) - s * f).abs() > 1e-9 * scale {
                                return Err(EngineError::FrameConflict(*t));
                            }
                        }
                        (None, None) => {}
                    }
                }
            }
        }
        let mut offsets = [0.0; 3];
        for i in 0..3 {
            offsets[i] = nu[i].map_or(0.0, |v| energies[i] - v);
        }
        Ok(Self { offsets })
    }

    /// Δ of transition `t` in this frame, in the orientation of
    /// [`Transition::levels`].
    pub fn detuning(&self, t: Transition) -> f64 {
        let (a, b) = t.levels();
        self.offsets[a.index()] - self.offsets[b.index()]
    }
}

fn involves(t: Transition, level: usize) -> bool {
    let (a, b) = t.levels();
    a.index() == level || b.index() == level
}

/// Precomputed dark evolution over a fixed interval; only the
/// inhomogeneous detuning varies between applications.
#[derive(Debug, Clone)]
pub struct FreePropagator {
    t_us: f64,
    populations: RateMatrix,
    decay: [f64; 3],
    offsets: [f64; 3],
}

impl FreePropagator {
    pub fn new(
        t_us: f64,
        d: &DecoherenceParams,
        r: &KineticRates,
        frame: &RotatingFrame,
    ) -> Result<Self, EngineError> {
        let dark = rate_matrix(&r.with_pump(0.0), &[])?;
        let populations = propagator(&dark, t_us)?;
        let decay = Transition::ALL.map(|t| (-d.coherence_rate(t, r) * t_us).exp());
        Ok(Self {
            t_us,
            populations,
            decay,
            offsets: frame.offsets,
        })
    }

    /// Applies the evolution with the Tz-like level shifted by `−delta` (MHz).
    pub fn apply(&self, s: &HybridState, delta: f64) -> HybridState {
        let n = LevelPopulations::from_vector(&(self.populations * s.populations().to_vector()));
        let mut out = HybridState::from_populations(&n);
        let mut off = self.offsets;
        off[Sublevel::Tz.index()] -= delta;
        for t in Transition::ALL {
            let (a, b) = t.levels();
            let (ia, ib) = (a.index(), b.index());
            let phase = -TAU * (off[ia] - off[ib]) * self.t_us;
            let c = s.rho[(ia, ib)] * C64::from_polar(self.decay[t.index()], phase);
            out.rho[(ia, ib)] = c;
            out.rho[(ib, ia)] = c.conj();
        }
        out
    }
}

pub fn free_evolution(
    s: &HybridState,
    t_us: f64,
    d: &DecoherenceParams,
    r: &KineticRates,
    frame: &RotatingFrame,
    delta: f64,
) -> Result<HybridState, EngineError> {
    Ok(FreePropagator::new(t_us, d, r, frame)?.apply(s, delta))
}
