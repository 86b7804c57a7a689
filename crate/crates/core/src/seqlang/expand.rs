use std::collections::HashMap;

use super::{
    Drive, SeqError, SeqErrorKind, SequenceAst, Statement, StatementKind, ToneDecl, Value,
};

/// One concrete instance of a swept sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    /// Sweep values in declaration order.
    pub coords: Vec<f64>,
    pub sequence: SequenceAst,
}

fn resolve(v: &Value, env: &HashMap<&str, f64>) -> Value {
    match v {
        Value::Lit(x) => Value::Lit(*x),
        Value::Sym(s) => Value::Lit(env.get(s.as_str()).copied().unwrap_or(f64::NAN)),
    }
}

fn instantiate(ast: &SequenceAst, env: &HashMap<&str, f64>) -> Result<SequenceAst, SeqError> {
    let duration = |v: &Value, s: &Statement| -> Result<Value, SeqError> {
        let r = resolve(v, env);
        match r {
            Value::Lit(x) if x < 0.0 => {
                Err(SeqError::new(s.pos, SeqErrorKind::NegativeDuration(x)))
            }
            _ => Ok(r),
        }
    };
    let mut tones = Vec::with_capacity(ast.tones.len());
    for t in &ast.tones {
        let frequency = resolve(&t.frequency, env);
        if let Value::Lit(f) = frequency {
            if f <= 0.0 {
                return Err(SeqError::new(t.pos, SeqErrorKind::NonPositiveFrequency(f)));
            }
        }
        let drive = match &t.drive {
            Drive::Rabi(v) => Drive::Rabi(resolve(v, env)),
            Drive::Power(v) => Drive::Power(resolve(v, env)),
        };
        if let Drive::Rabi(Value::Lit(x)) | Drive::Power(Value::Lit(x)) = drive {
            if x < 0.0 {
                return Err(SeqError::new(t.pos, SeqErrorKind::NegativeDrive(x)));
            }
        }
        tones.push(ToneDecl {
            name: t.name.clone(),
            frequency,
            drive,
            pair: t.pair,
            pos: t.pos,
        });
    }
    let mut statements = Vec::with_capacity(ast.statements.len());
    for s in &ast.statements {
        let kind = match &s.kind {
            StatementKind::Laser(d) => StatementKind::Laser(duration(d, s)?),
            StatementKind::Wait(d) => StatementKind::Wait(duration(d, s)?),
            StatementKind::Read(d) => StatementKind::Read(duration(d, s)?),
            StatementKind::Mw {
                tone,
                duration: d,
                phase,
                detuning,
            } => StatementKind::Mw {
                tone: tone.clone(),
                duration: duration(d, s)?,
                phase: resolve(phase, env),
                detuning: resolve(detuning, env),
            },
        };
        statements.push(Statement { kind, pos: s.pos });
    }
    Ok(SequenceAst {
        tones,
        statements,
        sweeps: Vec::new(),
    })
}

/// Cartesian expansion of the sweeps, row-major with the first-declared
/// sweep outermost.
pub fn expand_sweeps(ast: &SequenceAst) -> Result<Vec<SweepPoint>, SeqError> {
    let axes: Vec<Vec<f64>> = ast.sweeps.iter().map(|s| s.values()).collect();
    let total = ast.cardinality();
    let mut out = Vec::with_capacity(total);
    for flat in 0..total {
        let mut rem = flat;
        let mut coords = vec![0.0; axes.len()];
        for (k, axis) in axes.iter().enumerate().rev() {
            coords[k] = axis[rem % axis.len()];
            rem /= axis.len();
        }
        let env: HashMap<&str, f64> = ast
            .sweeps
            .iter()
            .zip(&coords)
            .map(|(s, v)| (s.symbol.as_str(), *v))
            .collect();
        // symbols unknown to the sweeps would resolve to NaN
        if let Some(missing) = unresolved(ast, &env) {
            return Err(SeqError::new(
                missing.1,
                SeqErrorKind::UndeclaredSymbol(missing.0),
            ));
        }
        out.push(SweepPoint {
            sequence: instantiate(ast, &env)?,
            coords,
        });
    }
    Ok(out)
}

fn unresolved(ast: &SequenceAst, env: &HashMap<&str, f64>) -> Option<(String, super::Pos)> {
    let check = |v: &Value, pos: super::Pos| match v {
        Value::Sym(s) if !env.contains_key(s.as_str()) => Some((s.clone(), pos)),
        _ => None,
    };
    for t in &ast.tones {
        let drive = match &t.drive {
            Drive::Rabi(v) | Drive::Power(v) => v,
        };
        if let Some(m) = check(&t.frequency, t.pos).or_else(|| check(drive, t.pos)) {
            return Some(m);
        }
    }
    for s in &ast.statements {
        let found = match &s.kind {
            StatementKind::Laser(d) | StatementKind::Wait(d) | StatementKind::Read(d) => {
                check(d, s.pos)
            }
            StatementKind::Mw {
                duration,
                phase,
                detuning,
                ..
            } => check(duration, s.pos)
                .or_else(|| check(phase, s.pos))
                .or_else(|| check(detuning, s.pos)),
        };
        if found.is_some() {
            return found;
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seqlang::parse;

    #[test]
    fn single_sweep_expands_in_order() {
        let ast = parse(
            "tone A freq 1449 rabi 5\nsweep $t from 0 to 1000 steps 51\nlaser 10\nmw A $t\nread 10",
        )
        .unwrap();
        let pts = expand_sweeps(&ast).unwrap();
        assert_eq!(pts.len(), 51);
        assert_eq!(pts[0].coords, vec![0.0]);
        assert_eq!(pts[50].coords, vec![1000.0]);
        assert_eq!(pts[1].coords, vec![20.0]);
        match &pts[1].sequence.statements[1].kind {
            StatementKind::Mw { duration, .. } => assert_eq!(*duration, Value::Lit(20.0)),
            other => panic!("unexpected {other:?}"),
        }
        assert!(pts[1].sequence.sweeps.is_empty());
    }

    #[test]
    fn two_sweeps_are_row_major() {
        let ast = parse(
            "tone A freq 1449 rabi 5\nsweep $d from -10 to 10 steps 11\nsweep $t from 0 to 400 steps 21\nlaser 10\nmw A $t detuning $d\nread 10",
        )
        .unwrap();
        let pts = expand_sweeps(&ast).unwrap();
        assert_eq!(pts.len(), 231);
        assert_eq!(pts[0].coords, vec![-10.0, 0.0]);
        assert_eq!(pts[1].coords, vec![-10.0, 20.0]);
        assert_eq!(pts[21].coords, vec![-8.0, 0.0]);
        assert_eq!(pts[230].coords, vec![10.0, 400.0]);
    }

    #[test]
    fn no_sweep_is_singleton() {
        let ast = parse("laser 10\nread 10").unwrap();
        let pts = expand_sweeps(&ast).unwrap();
        assert_eq!(pts.len(), 1);
        assert_eq!(pts[0].sequence, ast);
        assert!(pts[0].coords.is_empty());
    }

    #[test]
    fn swept_negative_duration_is_reported() {
        let ast = parse("sweep $w from -5 to 5 steps 3\nlaser 10\nwait $w\nread 10").unwrap();
        let e = expand_sweeps(&ast).unwrap_err();
        assert_eq!(e.kind, SeqErrorKind::NegativeDuration(-5.0));
        assert_eq!(e.pos.line, 3);
    }

    #[test]
    fn hand_built_ast_with_dangling_symbol() {
        let mut ast = parse("laser 10\nread 10").unwrap();
        ast.statements[0].kind = StatementKind::Laser(Value::Sym("nope".into()));
        let e = expand_sweeps(&ast).unwrap_err();
        assert_eq!(e.kind, SeqErrorKind::UndeclaredSymbol("nope".into()));
    }
}
