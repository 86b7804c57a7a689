use super::{
    Drive, Pos, SeqError, SeqErrorKind, SequenceAst, Statement, StatementKind, SweepDecl, ToneDecl,
    Value, MAX_SWEEPS,
};
use crate::spin::Transition;

#[derive(Debug, Clone)]
struct Token<'a> {
    text: &'a str,
    pos: Pos,
}

fn tokenize(line: &str, line_no: usize) -> Vec<Token<'_>> {
    let code = match line.find('#') {
        Some(i) => &line[..i],
        None => line,
    };
    let mut out = Vec::new();
    let mut start: Option<(usize, usize)> = None;
    for (col, (byte, ch)) in code.char_indices().enumerate() {
        if ch.is_whitespace() {
            if let Some((b, c)) = start.take() {
                out.push(Token {
                    text: &code[b..byte],
                    pos: Pos::new(line_no, c + 1),
                });
            }
        } else if start.is_none() {
            start = Some((byte, col));
        }
    }
    if let Some((b, c)) = start {
        out.push(Token {
            text: &code[b..],
            pos: Pos::new(line_no, c + 1),
        });
    }
    out
}

fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
}

struct Cursor<'a> {
    tokens: Vec<Token<'a>>,
    next: usize,
    end: Pos,
}

impl<'a> Cursor<'a> {
    fn new(tokens: Vec<Token<'a>>, line: &str, line_no: usize) -> Self {
        let end = Pos::new(line_no, line.chars().count() + 1);
        Self {
            tokens,
            next: 0,
            end,
        }
    }

    fn take(&mut self, expected: &'static str) -> Result<Token<'a>, SeqError> {
        let t = self
            .tokens
            .get(self.next)
            .cloned()
            .ok_or_else(|| SeqError::new(self.end, SeqErrorKind::UnexpectedEnd(expected)))?;
        self.next += 1;
        Ok(t)
    }

    fn peek(&self) -> Option<&Token<'a>> {
        self.tokens.get(self.next)
    }

    fn keyword(&mut self, kw: &'static str) -> Result<(), SeqError> {
        let t = self.take(kw)?;
        if t.text == kw {
            Ok(())
        } else {
            Err(unexpected(&t, kw))
        }
    }

    fn identifier(&mut self, expected: &'static str) -> Result<Token<'a>, SeqError> {
        let t = self.take(expected)?;
        if is_identifier(t.text) {
            Ok(t)
        } else {
            Err(unexpected(&t, expected))
        }
    }

    fn number(&mut self, expected: &'static str) -> Result<(f64, Pos), SeqError> {
        let t = self.take(expected)?;
        Ok((parse_number(&t)?, t.pos))
    }

    fn finish(&self) -> Result<(), SeqError> {
        match self.peek() {
            None => Ok(()),
            Some(t) => Err(unexpected(t, "end of line")),
        }
    }
}

fn unexpected(t: &Token<'_>, expected: &'static str) -> SeqError {
    SeqError::new(
        t.pos,
        SeqErrorKind::Unexpected {
            expected,
            found: t.text.to_string(),
        },
    )
}

fn parse_number(t: &Token<'_>) -> Result<f64, SeqError> {
    let looks_numeric = t
        .text
        .chars()
        .all(|c| c.is_ascii_digit() || matches!(c, '+' | '-' | '.' | 'e' | 'E'));
    match t.text.parse::<f64>() {
        Ok(v) if looks_numeric && v.is_finite() => Ok(v),
        _ => Err(SeqError::new(
            t.pos,
            SeqErrorKind::InvalidNumber(t.text.to_string()),
        )),
    }
}

/// Record of where each symbol is referenced, for the semantic pass.
type Uses = Vec<(String, Pos)>;

fn value(
    cur: &mut Cursor<'_>,
    uses: &mut Uses,
    expected: &'static str,
) -> Result<(Value, Pos), SeqError> {
    let t = cur.take(expected)?;
    if let Some(name) = t.text.strip_prefix('$') {
        if !is_identifier(name) {
            return Err(unexpected(&t, "symbol name"));
        }
        uses.push((name.to_string(), t.pos));
        return Ok((Value::Sym(name.to_string()), t.pos));
    }
    Ok((Value::Lit(parse_number(&t)?), t.pos))
}

fn duration(cur: &mut Cursor<'_>, uses: &mut Uses) -> Result<Value, SeqError> {
    let (v, pos) = value(cur, uses, "duration")?;
    if let Value::Lit(x) = v {
        if x < 0.0 {
            return Err(SeqError::new(pos, SeqErrorKind::NegativeDuration(x)));
        }
    }
    Ok(v)
}

fn parse_tone(cur: &mut Cursor<'_>, uses: &mut Uses, pos: Pos) -> Result<ToneDecl, SeqError> {
    let name = cur.identifier("tone name")?.text.to_string();
    let mut frequency = None;
    let mut drive = None;
    let mut pair = None;
    while let Some(t) = cur.peek().cloned() {
        cur.next += 1;
        match t.text {
            "freq" if frequency.is_none() => {
                let (v, p) = value(cur, uses, "frequency")?;
                if let Value::Lit(x) = v {
                    if x <= 0.0 {
                        return Err(SeqError::new(p, SeqErrorKind::NonPositiveFrequency(x)));
                    }
                }
                frequency = Some(v);
            }
            "rabi" | "power" if drive.is_none() => {
                let (v, p) = value(cur, uses, "drive strength")?;
                if let Value::Lit(x) = v {
                    if x < 0.0 {
                        return Err(SeqError::new(p, SeqErrorKind::NegativeDrive(x)));
                    }
                }
                drive = Some(if t.text == "rabi" {
                    Drive::Rabi(v)
                } else {
                    Drive::Power(v)
                });
            }
            "pair" if pair.is_none() => {
                let p = cur.take("transition")?;
                pair = Some(p.text.parse::<Transition>().map_err(|_| {
                    SeqError::new(p.pos, SeqErrorKind::UnknownPair(p.text.to_string()))
                })?);
            }
            _ => return Err(unexpected(&t, "freq, rabi, power or pair")),
        }
    }
    let frequency =
        frequency.ok_or_else(|| SeqError::new(cur.end, SeqErrorKind::UnexpectedEnd("freq")))?;
    let drive = drive
        .ok_or_else(|| SeqError::new(cur.end, SeqErrorKind::UnexpectedEnd("rabi or power")))?;
    Ok(ToneDecl {
        name,
        frequency,
        drive,
        pair,
        pos,
    })
}

fn parse_mw(cur: &mut Cursor<'_>, uses: &mut Uses) -> Result<StatementKind, SeqError> {
    let tone = cur.identifier("tone name")?.text.to_string();
    let duration = duration(cur, uses)?;
    let mut phase = None;
    let mut detuning = None;
    while let Some(t) = cur.peek().cloned() {
        cur.next += 1;
        match t.text {
            "phase" if phase.is_none() => phase = Some(value(cur, uses, "phase")?.0),
            "detuning" if detuning.is_none() => detuning = Some(value(cur, uses, "detuning")?.0),
            _ => return Err(unexpected(&t, "phase or detuning")),
        }
    }
    Ok(StatementKind::Mw {
        tone,
        duration,
        phase: phase.unwrap_or(Value::Lit(0.0)),
        detuning: detuning.unwrap_or(Value::Lit(0.0)),
    })
}

fn parse_sweep(cur: &mut Cursor<'_>, pos: Pos) -> Result<SweepDecl, SeqError> {
    let t = cur.take("sweep symbol")?;
    let symbol = match t.text.strip_prefix('$') {
        Some(s) if is_identifier(s) => s.to_string(),
        _ => return Err(unexpected(&t, "sweep symbol")),
    };
    cur.keyword("from")?;
    let (start, _) = cur.number("start value")?;
    cur.keyword("to")?;
    let (stop, _) = cur.number("stop value")?;
    cur.keyword("steps")?;
    let s = cur.take("step count")?;
    let steps = match s.text.parse::<usize>() {
        Ok(n) if n >= 2 => n,
        _ => {
            return Err(SeqError::new(
                s.pos,
                SeqErrorKind::BadSteps(s.text.to_string()),
            ))
        }
    };
    cur.finish()?;
    Ok(SweepDecl {
        symbol,
        start,
        stop,
        steps,
        pos,
    })
}

/// Parses and validates a sequence. Never panics; every error carries a
/// source position.
pub fn parse(text: &str) -> Result<SequenceAst, SeqError> {
    let mut ast = SequenceAst::default();
    let mut uses: Uses = Vec::new();
    let mut mw_refs: Vec<(String, Pos)> = Vec::new();

    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        let tokens = tokenize(line, line_no);
        if tokens.is_empty() {
            continue;
        }
        let mut cur = Cursor::new(tokens, line, line_no);
        let head = cur.take("statement")?;
        let pos = head.pos;
        let stmt = |kind| Statement { kind, pos };
        match head.text {
            "tone" => ast.tones.push(parse_tone(&mut cur, &mut uses, pos)?),
            "sweep" => ast.sweeps.push(parse_sweep(&mut cur, pos)?),
            "laser" | "wait" | "read" => {
                let d = duration(&mut cur, &mut uses)?;
                cur.finish()?;
                ast.statements.push(stmt(match head.text {
                    "laser" => StatementKind::Laser(d),
                    "wait" => StatementKind::Wait(d),
                    _ => StatementKind::Read(d),
                }));
            }
            "mw" => {
                let tone_pos = cur.peek().map_or(cur.end, |t| t.pos);
                let kind = parse_mw(&mut cur, &mut uses)?;
                if let StatementKind::Mw { tone, .. } = &kind {
                    mw_refs.push((tone.clone(), tone_pos));
                }
                ast.statements.push(stmt(kind));
            }
            other => {
                return Err(SeqError::new(
                    pos,
                    SeqErrorKind::UnknownStatement(other.to_string()),
                ));
            }
        }
    }

    for (i, t) in ast.tones.iter().enumerate() {
        if ast.tones[..i].iter().any(|u| u.name == t.name) {
            return Err(SeqError::new(
                t.pos,
                SeqErrorKind::DuplicateTone(t.name.clone()),
            ));
        }
    }
    for (name, pos) in &mw_refs {
        if ast.tone(name).is_none() {
            return Err(SeqError::new(*pos, SeqErrorKind::UnknownTone(name.clone())));
        }
    }
    for (i, s) in ast.sweeps.iter().enumerate() {
        if i >= MAX_SWEEPS {
            return Err(SeqError::new(s.pos, SeqErrorKind::TooManySweeps));
        }
        if ast.sweeps[..i].iter().any(|u| u.symbol == s.symbol) {
            return Err(SeqError::new(
                s.pos,
                SeqErrorKind::DuplicateSweep(s.symbol.clone()),
            ));
        }
    }
    for (name, pos) in &uses {
        if !ast.sweeps.iter().any(|s| &s.symbol == name) {
            return Err(SeqError::new(
                *pos,
                SeqErrorKind::UndeclaredSymbol(name.clone()),
            ));
        }
    }
    for s in &ast.sweeps {
        if !uses.iter().any(|(n, _)| n == &s.symbol) {
            return Err(SeqError::new(
                s.pos,
                SeqErrorKind::UnusedSweep(s.symbol.clone()),
            ));
        }
    }

    match (ast.statements.first(), ast.statements.last()) {
        (None, _) | (_, None) => return Err(SeqError::new(Pos::new(1, 1), SeqErrorKind::Empty)),
        (Some(first), Some(last)) => {
            if !matches!(first.kind, StatementKind::Laser(_)) {
                return Err(SeqError::new(first.pos, SeqErrorKind::MissingLaser));
            }
            if !matches!(last.kind, StatementKind::Read(_)) {
                return Err(SeqError::new(last.pos, SeqErrorKind::MissingRead));
            }
        }
    }
    Ok(ast)
}
