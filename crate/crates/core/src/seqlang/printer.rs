use std::fmt::Write;

use super::{Drive, SequenceAst, StatementKind, Value};

fn value(v: &Value) -> String {
    match v {
        Value::Lit(x) => format!("{x}"),
        Value::Sym(s) => format!("${s}"),
    }
}

fn is_zero(v: &Value) -> bool {
    matches!(v, Value::Lit(x) if *x == 0.0)
}

/// Canonical text: tones, then sweeps, then statements, one per line.
pub fn print(ast: &SequenceAst) -> String {
    let mut out = String::new();
    for t in &ast.tones {
        let drive = match &t.drive {
            Drive::Rabi(v) => format!("rabi {}", value(v)),
            Drive::Power(v) => format!("power {}", value(v)),
        };
        let _ = write!(out, "tone {} freq {} {drive}", t.name, value(&t.frequency));
        if let Some(p) = t.pair {
            let _ = write!(out, " pair {p}");
        }
        out.push('\n');
    }
    for s in &ast.sweeps {
        let _ = writeln!(
            out,
            "sweep ${} from {} to {} steps {}",
            s.symbol, s.start, s.stop, s.steps
        );
    }
    for s in &ast.statements {
        match &s.kind {
            StatementKind::Laser(d) => {
                let _ = writeln!(out, "laser {}", value(d));
            }
            StatementKind::Wait(d) => {
                let _ = writeln!(out, "wait {}", value(d));
            }
            StatementKind::Read(d) => {
                let _ = writeln!(out, "read {}", value(d));
            }
            StatementKind::Mw {
                tone,
                duration,
                phase,
                detuning,
            } => {
                let _ = write!(out, "mw {tone} {}", value(duration));
                if !is_zero(phase) {
                    let _ = write!(out, " phase {}", value(phase));
                }
                if !is_zero(detuning) {
                    let _ = write!(out, " detuning {}", value(detuning));
                }
                out.push('\n');
            }
        }
    }
    out
}
