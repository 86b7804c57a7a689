use std::fmt;
use std::str::FromStr;

use super::{
    add_noise, cw_spectrum, field_map, Column, EchoReference, ExperimentConfig, ExperimentError,
    Simulator, SweepRange, Trace,
};
use crate::seqlang::{parse, SequenceAst, StatementKind, Value};
use crate::spin::Transition;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Preset {
    Cw,
    FieldMap,
    Rabi,
    Chevron,
    Power,
    Ramsey,
    RamseyDetuning,
    Hahn,
    PulsedOdmr,
    MultilevelRabi,
    SingletoneRabi,
    MultilevelHahn,
}

/// How a sweep symbol maps onto an output column: `value·scale + offset`.
#[derive(Debug, Clone, PartialEq)]
pub struct Axis {
    pub column: Column,
    pub scale: f64,
    pub offset: f64,
}

impl Axis {
    pub fn new(name: &str, unit: &str) -> Self {
        Self {
            column: Column::new(name, unit),
            scale: 1.0,
            offset: 0.0,
        }
    }
}

impl Preset {
    pub const ALL: [Preset; 12] = [
        Preset::Cw,
        Preset::FieldMap,
        Preset::Rabi,
        Preset::Chevron,
        Preset::Power,
        Preset::Ramsey,
        Preset::RamseyDetuning,
        Preset::Hahn,
        Preset::PulsedOdmr,
        Preset::MultilevelRabi,
        Preset::SingletoneRabi,
        Preset::MultilevelHahn,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Preset::Cw => "cw",
            Preset::FieldMap => "field-map",
            Preset::Rabi => "rabi",
            Preset::Chevron => "chevron",
            Preset::Power => "power",
            Preset::Ramsey => "ramsey",
            Preset::RamseyDetuning => "ramsey-detuning",
            Preset::Hahn => "hahn",
            Preset::PulsedOdmr => "pulsed-odmr",
            Preset::MultilevelRabi => "multilevel-rabi",
            Preset::SingletoneRabi => "singletone-rabi",
            Preset::MultilevelHahn => "multilevel-hahn",
        }
    }

    /// Presets expressed as pulse sequences (everything except the cw ones).
    pub fn is_pulsed(self) -> bool {
        !matches!(self, Preset::Cw | Preset::FieldMap)
    }

    /// Sequence text for the configuration, `None` for cw presets.
    pub fn sequence_text(self, cfg: &ExperimentConfig) -> Result<Option<String>, ExperimentError> {
        if !self.is_pulsed() {
            return Ok(None);
        }
        let sim = Simulator::new(cfg)?;
        let freqs = sim.eigensystems()[0].transition_frequencies();
        let f = |t: Transition| (freqs.get(t) * 1e6).round() / 1e6;
        let (fxy, fyz, fxz) = (f(Transition::XY), f(Transition::YZ), f(Transition::XZ));
        let d = &cfg.drive;
        let omega = d.rabi;
        let half = 250.0 / omega;
        let pi = 500.0 / omega;
        let pi_transfer = 500.0 / d.transfer_rabi;
        let r = &cfg.readout;
        let head = format!("laser {}\n", r.laser);
        let tail = format!("wait {}\nread {}\n", r.delay, r.read);
        let sweep = |sym: &str, o: &Option<SweepRange>, start: f64, stop: f64, steps: usize| {
            let (a, b, n) = o
                .as_ref()
                .map_or((start, stop, steps), |s| (s.start, s.stop, s.steps));
            format!("sweep ${sym} from {a} to {b} steps {n}\n")
        };
        let t2_star = cfg.decoherence().t2_star();
        let ramsey_stop = (3.0 * t2_star.min(10.0) * 100.0).round() / 100.0;
        let ramsey_steps = ((ramsey_stop / 0.01).round() as usize + 1).max(41);
        let tone_xz = |drive: String| format!("tone XZ freq {fxz} {drive} pair XZ\n");
        let tones_ml = format!(
            "tone XY freq {fxy} rabi {} pair XY\ntone YZ freq {fyz} rabi {omega} pair YZ\n",
            d.transfer_rabi
        );
        let (s1, s2) = (&cfg.sweep, &cfg.sweep2);
        let text = match self {
            Preset::Rabi => format!(
                "{}{}{head}mw XZ $t\n{tail}",
                tone_xz(format!("rabi {omega}")),
                sweep("t", s1, 0.0, 1000.0, 101)
            ),
            Preset::Chevron => format!(
                "{}{}{}{head}mw XZ $t detuning $d\n{tail}",
                tone_xz(format!("rabi {}", cfg.chevron_rabi())),
                sweep("t", s1, 0.0, 400.0, 81),
                sweep("d", s2, -10.0, 10.0, 21)
            ),
            Preset::Power => format!(
                "{}{}{}{head}mw XZ $t\n{tail}",
                tone_xz("power $p".into()),
                sweep("p", s1, 0.25, 4.0, 16),
                sweep("t", s2, 0.0, 1000.0, 101)
            ),
            Preset::Ramsey => format!(
                "tone XZ freq {} rabi {omega} pair XZ\n{}{head}mw XZ {half}\nwait $tau\nmw XZ {half}\n{tail}",
                fxz + d.ramsey_detuning,
                sweep("tau", s1, 0.0, ramsey_stop, ramsey_steps)
            ),
            Preset::RamseyDetuning => format!(
                "tone XZ freq $f rabi {omega} pair XZ\n{}{}{head}mw XZ {half}\nwait $tau\nmw XZ {half}\n{tail}",
                sweep("f", s1, fxz + 1.0, fxz + 20.0, 20),
                sweep("tau", s2, 0.0, ramsey_stop, ramsey_steps)
            ),
            Preset::Hahn => format!(
                "{}{}{head}mw XZ {half}\nwait $tau\nmw XZ {pi}\nwait $tau\nmw XZ {half} phase 180\n{tail}",
                tone_xz(format!("rabi {omega}")),
                sweep("tau", s1, 0.0, hahn_stop(cfg.decoherence.t2_xz), 61)
            ),
            Preset::PulsedOdmr => format!(
                "tone XZ freq $f rabi {} pair XZ\n{}{head}mw XZ {}\n{tail}",
                d.podmr_rabi,
                sweep("f", s1, fxz - 30.0, fxz + 30.0, 121),
                500.0 / d.podmr_rabi
            ),
            Preset::MultilevelRabi => format!(
                "{tones_ml}{}{head}mw XY {pi_transfer}\nmw YZ $t\nmw XY {pi_transfer}\n{tail}",
                sweep("t", s1, 0.0, 1000.0, 101)
            ),
            Preset::SingletoneRabi => format!(
                "tone YZ freq {fyz} rabi {omega} pair YZ\n{}{head}mw YZ $t\n{tail}",
                sweep("t", s1, 0.0, 1000.0, 101)
            ),
            Preset::MultilevelHahn => format!(
                "{tones_ml}{}{head}mw XY {pi_transfer}\nmw YZ {half}\nwait $tau\nmw YZ {pi}\nwait $tau\nmw YZ {half} phase 180\nmw XY {pi_transfer}\n{tail}",
                sweep("tau", s1, 0.0, hahn_stop(cfg.decoherence.t2_yz), 61)
            ),
            Preset::Cw | Preset::FieldMap => unreachable!("cw presets have no sequence"),
        };
        Ok(Some(text))
    }

    pub fn sequence(self, cfg: &ExperimentConfig) -> Result<Option<SequenceAst>, ExperimentError> {
        match self.sequence_text(cfg)? {
            Some(t) => Ok(Some(parse(&t)?)),
            None => Ok(None),
        }
    }

    /// Output columns, one per sweep in declaration order.
    pub fn axes(self, cfg: &ExperimentConfig) -> Result<Vec<Axis>, ExperimentError> {
        let duration = || Axis::new("duration", "ns");
        let tau = || Axis::new("tau", "us");
        Ok(match self {
            Preset::Cw => vec![Axis::new("frequency", "MHz")],
            Preset::FieldMap => vec![Axis::new("field", "mT"), Axis::new("frequency", "MHz")],
            Preset::Rabi | Preset::MultilevelRabi | Preset::SingletoneRabi => vec![duration()],
            Preset::Chevron => vec![duration(), Axis::new("detuning", "MHz")],
            Preset::Power => vec![Axis::new("power", ""), duration()],
            Preset::Ramsey => vec![tau()],
            Preset::RamseyDetuning => {
                let sim = Simulator::new(cfg)?;
                let fxz = sim.eigensystems()[0]
                    .transition_frequencies()
                    .get(Transition::XZ);
                let fxz = (fxz * 1e6).round() / 1e6;
                vec![
                    Axis {
                        column: Column::new("detuning", "MHz"),
                        scale: 1.0,
                        offset: -fxz,
                    },
                    tau(),
                ]
            }
            // echo decay is reported against the total free evolution 2τ
            Preset::Hahn | Preset::MultilevelHahn => vec![Axis {
                column: Column::new("free_evolution", "us"),
                scale: 2.0,
                offset: 0.0,
            }],
            Preset::PulsedOdmr => vec![Axis::new("frequency", "MHz")],
        })
    }
}

fn hahn_stop(t2: f64) -> f64 {
    // 2τ spans three coherence times
    (1.5 * t2 * 100.0).round() / 100.0
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preset {
    type Err = ExperimentError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| ExperimentError::UnknownPreset(s.to_string()))
    }
}

fn linspace(r: &Option<SweepRange>, start: f64, stop: f64, steps: usize) -> Vec<f64> {
    let (a, b, n) = r
        .as_ref()
        .map_or((start, stop, steps), |s| (s.start, s.stop, s.steps));
    (0..n)
        .map(|i| {
            if i + 1 == n {
                b
            } else {
                a + (b - a) * i as f64 / (n - 1) as f64
            }
        })
        .collect()
}

/// Executes a sequence with explicit output axes; noise, if configured, is
/// drawn from `seed`.
pub fn run_sequence(
    cfg: &ExperimentConfig,
    name: &str,
    ast: &SequenceAst,
    axes: &[Axis],
    seed: u64,
) -> Result<Trace, ExperimentError> {
    let sim = Simulator::new(cfg)?;
    let points = sim.run(ast)?;
    finish(cfg, name, points, axes, seed)
}

fn finish(
    cfg: &ExperimentConfig,
    name: &str,
    points: Vec<(Vec<f64>, f64)>,
    axes: &[Axis],
    seed: u64,
) -> Result<Trace, ExperimentError> {
    let (coords, mut contrast): (Vec<Vec<f64>>, Vec<f64>) = points
        .into_iter()
        .map(|(c, y)| {
            let scaled = c
                .iter()
                .zip(axes)
                .map(|(v, a)| v * a.scale + a.offset)
                .collect::<Vec<f64>>();
            (scaled, y)
        })
        .unzip();
    add_noise(&mut contrast, cfg.noise.level, seed);
    Ok(Trace {
        preset: name.to_string(),
        columns: axes.iter().map(|a| a.column.clone()).collect(),
        coords,
        contrast,
        seed,
    })
}

/// The echo with its last phase-shifted pulse returned to phase 0.
fn final_phase_zero(ast: &SequenceAst) -> SequenceAst {
    let mut out = ast.clone();
    if let Some(StatementKind::Mw { phase, .. }) = out
        .statements
        .iter_mut()
        .rev()
        .map(|s| &mut s.kind)
        .find(|k| matches!(k, StatementKind::Mw { phase, .. } if phase.literal() != Some(0.0)))
    {
        *phase = Value::Lit(0.0);
    }
    out
}

pub fn run_preset(
    cfg: &ExperimentConfig,
    preset: Preset,
    seed: u64,
) -> Result<Trace, ExperimentError> {
    let axes = preset.axes(cfg)?;
    let columns: Vec<Column> = axes.iter().map(|a| a.column.clone()).collect();
    match preset {
        Preset::Cw => {
            let freqs = linspace(&cfg.sweep, 50.0, 1550.0, 751);
            let mut contrast = cw_spectrum(cfg, &cfg.field()?, &freqs)?;
            add_noise(&mut contrast, cfg.noise.level, seed);
            Ok(Trace {
                preset: preset.name().into(),
                columns,
                coords: freqs.into_iter().map(|f| vec![f]).collect(),
                contrast,
                seed,
            })
        }
        Preset::FieldMap => {
            let fields = linspace(&cfg.sweep, 0.0, 20.0, 21);
            let freqs = linspace(&cfg.sweep2, 50.0, 1550.0, 301);
            let mut contrast = field_map(cfg, &fields, &freqs)?;
            add_noise(&mut contrast, cfg.noise.level, seed);
            let coords = fields
                .iter()
                .flat_map(|b| freqs.iter().map(move |f| vec![*b, *f]))
                .collect();
            Ok(Trace {
                preset: preset.name().into(),
                columns,
                coords,
                contrast,
                seed,
            })
        }
        Preset::Hahn | Preset::MultilevelHahn
            if cfg.readout.echo_reference == EchoReference::PhaseCycled =>
        {
            let ast = preset.sequence(cfg)?.expect("pulsed preset");
            let points = Simulator::new(cfg)?.run_cycled(&ast, &final_phase_zero(&ast))?;
            finish(cfg, preset.name(), points, &axes, seed)
        }
        _ => {
            let ast = preset.sequence(cfg)?.expect("pulsed preset");
            run_sequence(cfg, preset.name(), &ast, &axes, seed)
        }
    }
}
