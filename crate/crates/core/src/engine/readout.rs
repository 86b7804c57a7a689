use super::{EngineError, HybridState};
use crate::kinetics::{
    integrated_propagator, pl_rate, propagator, rate_matrix, KineticRates, LevelPopulations,
};

/// Laser illumination: coherences are lost and populations evolve with the
/// pump on.
pub fn laser(s: &HybridState, r: &KineticRates, t_us: f64) -> Result<HybridState, EngineError> {
    let g = rate_matrix(r, &[])?;
    let p = propagator(&g, t_us)?;
    Ok(HybridState::from_populations(
        &LevelPopulations::from_vector(&(p * s.populations().to_vector())),
    ))
}

/// Integrated PL over a read window of `t_read` µs that starts `t_delay`
/// µs after the state is handed over.
pub fn readout(
    s: &HybridState,
    r: &KineticRates,
    t_delay: f64,
    t_read: f64,
) -> Result<f64, EngineError> {
    let dark = rate_matrix(&r.with_pump(0.0), &[])?;
    let n = propagator(&dark, t_delay)? * s.populations().to_vector();
    let lit = rate_matrix(r, &[])?;
    let (_, integral) = integrated_propagator(&lit, t_read)?;
    Ok(pl_rate(&LevelPopulations::from_vector(&(integral * n)), r))
}

/// `(seq − ref)/ref`.
pub fn differential_signal(seq_pl: f64, ref_pl: f64) -> Result<f64, EngineError> {
    if !(ref_pl > 0.0 && ref_pl.is_finite()) {
        return Err(EngineError::ZeroReference(ref_pl));
    }
    Ok((seq_pl - ref_pl) / ref_pl)
}
