use rayon::prelude::*;

use super::{ExperimentConfig, ExperimentError};
use crate::engine::{
    apply_pulse, check_hard_pulse, differential_signal, DecoherenceParams, DriveCalibration,
    FreePropagator, GaussHermite, HybridState, MicrowavePulse, RotatingFrame,
};
use crate::kinetics::{
    integrated_propagator, pl_rate, project_rates, propagator, rate_matrix, KineticRates,
    LevelPopulations, RateMatrix,
};
use crate::seqlang::{
    expand_sweeps, Drive, Pos, SeqError, SeqErrorKind, SequenceAst, StatementKind, Value,
};
use crate::spin::{
    eigensystem, site_hamiltonian, Eigensystem, MagneticField, MolecularOrientation, Sublevel,
    Transition, ZfsParameters, C64,
};

/// Everything needed to turn a concrete sequence into a PL contrast.
#[derive(Debug, Clone)]
pub struct Simulator {
    pub zfs: ZfsParameters,
    pub rates: KineticRates,
    pub decoherence: DecoherenceParams,
    pub drive: DriveCalibration,
    pub field: MagneticField,
    pub sites: Vec<MolecularOrientation>,
    rule: GaussHermite,
    eigen: Vec<Eigensystem>,
}

enum Op {
    Laser(RateMatrix),
    Pulse(MicrowavePulse),
    Free(FreePropagator),
    Read {
        exp: RateMatrix,
        integral: RateMatrix,
    },
}

struct Program {
    ops: Vec<Op>,
    rates: KineticRates,
}

fn lit(v: &Value, pos: Pos) -> Result<f64, SeqError> {
    match v {
        Value::Lit(x) => Ok(*x),
        Value::Sym(s) => Err(SeqError {
            pos,
            kind: SeqErrorKind::UndeclaredSymbol(s.clone()),
        }),
    }
}

impl Simulator {
    pub fn new(cfg: &ExperimentConfig) -> Result<Self, ExperimentError> {
        cfg.validate()?;
        Ok(Self::from_parts(
            cfg.zfs(),
            cfg.rates(),
            cfg.decoherence(),
            cfg.drive(),
            cfg.field()?,
            cfg.sites(),
            cfg.ensemble.order,
        ))
    }

    pub fn from_parts(
        zfs: ZfsParameters,
        rates: KineticRates,
        decoherence: DecoherenceParams,
        drive: DriveCalibration,
        field: MagneticField,
        sites: Vec<MolecularOrientation>,
        quadrature_order: usize,
    ) -> Self {
        let eigen = sites
            .iter()
            .map(|s| eigensystem(&site_hamiltonian(&zfs, s, &field)))
            .collect();
        Self {
            zfs,
            rates,
            decoherence,
            drive,
            field,
            sites,
            rule: GaussHermite::new(quadrature_order),
            eigen,
        }
    }

    /// Labelled eigensystem of each site at the configured field.
    pub fn eigensystems(&self) -> &[Eigensystem] {
        &self.eigen
    }

    fn compile(
        &self,
        seq: &SequenceAst,
        site: usize,
        check: bool,
    ) -> Result<Program, ExperimentError> {
        let e = &self.eigen[site];
        let rates = project_rates(e, &self.rates);
        let freqs = e.transition_frequencies();

        // tones actually played, resolved to (pair, frequency, Rabi)
        let mut tones = Vec::new();
        for t in &seq.tones {
            let used = seq
                .statements
                .iter()
                .any(|s| matches!(&s.kind, StatementKind::Mw { tone, .. } if *tone == t.name));
            if !used {
                continue;
            }
            let f = lit(&t.frequency, t.pos)?;
            let (nearest, _) = freqs.nearest(f);
            let pair = match t.pair {
                Some(p) if p != nearest => {
                    return Err(ExperimentError::ToneMismatch {
                        tone: t.name.clone(),
                        reason: format!(
                            "{f} MHz is closest to {nearest} ({:.3} MHz), not the declared {p} ({:.3} MHz)",
                            freqs.get(nearest),
                            freqs.get(p)
                        ),
                    })
                }
                Some(p) => p,
                None => nearest,
            };
            let rabi = match &t.drive {
                Drive::Rabi(v) => lit(v, t.pos)?,
                Drive::Power(v) => self.drive.rabi(lit(v, t.pos)?),
            };
            if check {
                check_hard_pulse(pair, rabi, &freqs)?;
            }
            tones.push((t.name.as_str(), pair, f, rabi));
        }
        let energies = Sublevel::ALL.map(|l| e.energy(l));
        let frame_tones: Vec<(Transition, f64)> =
            tones.iter().map(|(_, p, f, _)| (*p, *f)).collect();
        let frame = RotatingFrame::from_tones(energies, &frame_tones)?;

        let mut ops = Vec::with_capacity(seq.statements.len());
        for s in &seq.statements {
            let op = match &s.kind {
                StatementKind::Laser(d) => {
                    Op::Laser(propagator(&rate_matrix(&rates, &[])?, lit(d, s.pos)?)?)
                }
                StatementKind::Wait(d) => Op::Free(FreePropagator::new(
                    lit(d, s.pos)?,
                    &self.decoherence,
                    &rates,
                    &frame,
                )?),
                StatementKind::Read(d) => {
                    let (exp, integral) =
                        integrated_propagator(&rate_matrix(&rates, &[])?, lit(d, s.pos)?)?;
                    Op::Read { exp, integral }
                }
                StatementKind::Mw {
                    tone,
                    duration,
                    phase,
                    detuning,
                } => {
                    let (_, pair, _, rabi) = tones
                        .iter()
                        .find(|t| t.0 == tone)
                        .copied()
                        .ok_or_else(|| SeqError {
                            pos: s.pos,
                            kind: SeqErrorKind::UnknownTone(tone.clone()),
                        })?;
                    Op::Pulse(MicrowavePulse {
                        transition: pair,
                        rabi,
                        duration_ns: lit(duration, s.pos)?,
                        phase: lit(phase, s.pos)?.to_radians(),
                        detuning: frame.detuning(pair) + lit(detuning, s.pos)?,
                    })
                }
            };
            ops.push(op);
        }
        Ok(Program { ops, rates })
    }

    fn run_program(&self, prog: &Program) -> Result<f64, ExperimentError> {
        let ops = &prog.ops;
        let last_pulse = ops.iter().rposition(|o| matches!(o, Op::Pulse(_)));
        // inhomogeneous detuning matters only for free evolution that a later pulse can convert to population
        let fan_out =
            last_pulse.and_then(|lp| ops[..lp].iter().position(|o| matches!(o, Op::Free(_))));
        let sigma = self.decoherence.sigma_inh;

        let mut ensemble: Vec<(f64, f64, HybridState)> = vec![(0.0, 1.0, HybridState::ground())];
        let mut pl = 0.0;
        for (i, op) in ops.iter().enumerate() {
            if Some(i) == fan_out {
                let s = ensemble[0].2;
                ensemble = self
                    .rule
                    .normal_samples(sigma)
                    .into_iter()
                    .map(|(d, w)| (d, w, s))
                    .collect();
            }
            for (delta, w, s) in ensemble.iter_mut() {
                *s = match op {
                    Op::Laser(p) => with_populations(p * s.populations().to_vector()),
                    Op::Pulse(p) => apply_pulse(s, p)?,
                    Op::Free(f) => f.apply(s, *delta),
                    Op::Read { exp, integral } => {
                        let v = s.populations().to_vector();
                        pl += *w
                            * pl_rate(&LevelPopulations::from_vector(&(integral * v)), &prog.rates);
                        with_populations(exp * v)
                    }
                };
            }
            if Some(i) == last_pulse && ensemble.len() > 1 {
                ensemble = vec![(0.0, 1.0, weighted_mean(&ensemble))];
            }
        }
        Ok(pl)
    }

    /// Summed read-out PL of all sites for a concrete sequence.
    pub fn pl(&self, seq: &SequenceAst) -> Result<f64, ExperimentError> {
        self.pl_checked(seq, false)
    }

    fn pl_checked(&self, seq: &SequenceAst, check: bool) -> Result<f64, ExperimentError> {
        let mut total = 0.0;
        for site in 0..self.sites.len() {
            let prog = self.compile(seq, site, check)?;
            total += self.run_program(&prog)?;
        }
        Ok(total)
    }

    /// Differential contrast against the microwave-free reference.
    pub fn contrast(&self, seq: &SequenceAst) -> Result<f64, ExperimentError> {
        self.contrast_checked(seq, false)
    }

    fn contrast_checked(&self, seq: &SequenceAst, check: bool) -> Result<f64, ExperimentError> {
        let on = self.pl_checked(seq, check)?;
        let off = self.pl(&seq.without_microwaves())?;
        Ok(differential_signal(on, off)?)
    }

    /// Phase-cycled contrast `(PL_a − PL_b)/PL_ref` of two sequences with
    /// identical sweeps, referenced to the microwave-free version of `a`.
    pub fn run_cycled(
        &self,
        a: &SequenceAst,
        b: &SequenceAst,
    ) -> Result<Vec<(Vec<f64>, f64)>, ExperimentError> {
        let pa = expand_sweeps(a)?;
        let pb = expand_sweeps(b)?;
        pa.par_iter()
            .zip(pb.par_iter())
            .enumerate()
            .map(|(i, (x, y))| {
                let on_a = self.pl_checked(&x.sequence, i == 0)?;
                let on_b = self.pl(&y.sequence)?;
                let off = self.pl(&x.sequence.without_microwaves())?;
                Ok((
                    x.coords.clone(),
                    differential_signal(on_a, off)? - differential_signal(on_b, off)?,
                ))
            })
            .collect()
    }

    /// Expands the sweeps and evaluates every point, in sweep order.
    pub fn run(&self, ast: &SequenceAst) -> Result<Vec<(Vec<f64>, f64)>, ExperimentError> {
        let points = expand_sweeps(ast)?;
        points
            .par_iter()
            .enumerate()
            .map(|(i, p)| {
                Ok((
                    p.coords.clone(),
                    self.contrast_checked(&p.sequence, i == 0)?,
                ))
            })
            .collect()
    }
}

fn with_populations(v: crate::kinetics::PopVector) -> HybridState {
    HybridState::from_populations(&LevelPopulations::from_vector(&v))
}

fn weighted_mean(ensemble: &[(f64, f64, HybridState)]) -> HybridState {
    let mut out = ensemble[0].2;
    out.s0 = 0.0;
    out.s1 = 0.0;
    out.rho.fill(C64::from(0.0));
    for (_, w, s) in ensemble {
        out.s0 += w * s.s0;
        out.s1 += w * s.s1;
        out.rho += s.rho * C64::from(*w);
    }
    out
}
