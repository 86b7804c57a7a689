use std::f64::consts::TAU;

use super::{EngineError, HybridState};
use crate::spin::{eigensystem, Operator, SpinHamiltonian, Transition, C64};

pub const MIN_STEPS_PER_PERIOD: usize = 20;

/// Integrates the full three-level evolution under a linearly polarised
/// drive `Ω·cos(2π·f_c·t)` coupling the pair of `transition`, without the
/// rotating-wave approximation. Fourth-order Magnus steps on two Gauss
/// points, in the interaction picture of the static Hamiltonian; the
/// returned state is in that picture too, so populations compare directly
/// with the hard-pulse model.
pub fn lab_frame_propagate(
    s: &HybridState,
    transition: Transition,
    carrier: f64,
    rabi: f64,
    duration_ns: f64,
    h: &SpinHamiltonian,
    steps_per_period: usize,
) -> Result<HybridState, EngineError> {
    if steps_per_period < MIN_STEPS_PER_PERIOD {
        return Err(EngineError::StepSize(steps_per_period));
    }
    if !(carrier.is_finite() && carrier > 0.0) {
        return Err(EngineError::InvalidPulse(format!("carrier {carrier} MHz")));
    }
    if !(rabi.is_finite() && rabi >= 0.0 && duration_ns.is_finite() && duration_ns >= 0.0) {
        return Err(EngineError::InvalidPulse(format!(
            "Ω = {rabi} MHz, t = {duration_ns} ns"
        )));
    }
    let t_us = duration_ns * 1e-3;
    if rabi == 0.0 || t_us == 0.0 {
        return Ok(*s);
    }
    let e = eigensystem(h);
    let (a, b) = transition.levels();
    let (ia, ib) = (a.index(), b.index());
    let w_ab = e.energy(a) - e.energy(b);

    // A(t) = −i·2π·H_I(t)
    let generator = |t: f64| -> Operator {
        let amp = rabi * (TAU * carrier * t).cos();
        let c = C64::from_polar(amp, TAU * w_ab * t);
        let mut m = Operator::zeros();
        m[(ia, ib)] = c * C64::new(0.0, -TAU);
        m[(ib, ia)] = c.conj() * C64::new(0.0, -TAU);
        m
    };

    let n = (t_us * carrier * steps_per_period as f64).ceil().max(1.0) as usize;
    let step = t_us / n as f64;
    let g = 3f64.sqrt() / 6.0;
    let mut u = Operator::identity();
    for k in 0..n {
        let t0 = k as f64 * step;
        let a1 = generator(t0 + (0.5 - g) * step);
        let a2 = generator(t0 + (0.5 + g) * step);
        let comm = a2 * a1 - a1 * a2;
        let omega = (a1 + a2) * C64::new(0.5 * step, 0.0)
            + comm * C64::new(3f64.sqrt() / 12.0 * step * step, 0.0);
        u = omega.exp() * u;
    }
    Ok(HybridState {
        s0: s.s0,
        s1: s.s1,
        rho: u * s.rho * u.adjoint(),
    })
}
