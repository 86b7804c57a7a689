//! A line-oriented pulse-sequence language.
//!
//! ```text
//! # comment
//! tone XZ freq 1449 rabi 5 pair XZ
//! sweep $t from 0 to 1000 steps 51
//! laser 10
//! mw XZ $t phase 90 detuning 0
//! wait 50
//! read 10
//! ```
//!
//! `laser`, `wait` and `read` durations are in µs, `mw` durations in ns,
//! frequencies and detunings in MHz, phases in degrees. A tone's drive is
//! either `rabi <MHz>` or `power <P>`, the latter mapped through the drive
//! calibration. Any number after a keyword may be replaced by a `$symbol`
//! declared in a `sweep` line; at most two sweeps, the first declared is the
//! outer loop. A sequence starts with `laser` and ends with `read`.

mod expand;
mod parser;
mod printer;

use std::fmt;

use thiserror::Error;

use crate::spin::Transition;

pub use expand::{expand_sweeps, SweepPoint};
pub use parser::parse;
pub use printer::print;

pub const MAX_SWEEPS: usize = 2;

/// Source position (1-based). Positions are not part of structural equality.
#[derive(Debug, Clone, Copy, Default, Eq)]
pub struct Pos {
    pub line: usize,
    pub col: usize,
}

impl Pos {
    pub fn new(line: usize, col: usize) -> Self {
        Self { line, col }
    }
}

impl PartialEq for Pos {
    fn eq(&self, _: &Self) -> bool {
        true
    }
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}:{}", self.line, self.col)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Lit(f64),
    Sym(String),
}

impl Value {
    pub fn literal(&self) -> Option<f64> {
        match self {
            Value::Lit(v) => Some(*v),
            Value::Sym(_) => None,
        }
    }

    pub fn symbol(&self) -> Option<&str> {
        match self {
            Value::Lit(_) => None,
            Value::Sym(s) => Some(s),
        }
    }
}

impl From<f64> for Value {
    fn from(v: f64) -> Self {
        Value::Lit(v)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Drive {
    Rabi(Value),
    Power(Value),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ToneDecl {
    pub name: String,
    pub frequency: Value,
    pub drive: Drive,
    pub pair: Option<Transition>,
    pub pos: Pos,
}

#[derive(Debug, Clone, PartialEq)]
pub enum StatementKind {
    Laser(Value),
    Mw {
        tone: String,
        duration: Value,
        phase: Value,
        detuning: Value,
    },
    Wait(Value),
    Read(Value),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Statement {
    pub kind: StatementKind,
    pub pos: Pos,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepDecl {
    pub symbol: String,
    pub start: f64,
    pub stop: f64,
    pub steps: usize,
    pub pos: Pos,
}

impl SweepDecl {
    pub fn values(&self) -> Vec<f64> {
        let n = self.steps;
        (0..n)
            .map(|i| {
                if i + 1 == n {
                    self.stop
                } else {
                    self.start + (self.stop - self.start) * i as f64 / (n - 1) as f64
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SequenceAst {
    pub tones: Vec<ToneDecl>,
    pub statements: Vec<Statement>,
    pub sweeps: Vec<SweepDecl>,
}

impl SequenceAst {
    pub fn tone(&self, name: &str) -> Option<&ToneDecl> {
        self.tones.iter().find(|t| t.name == name)
    }

    pub fn has_microwaves(&self) -> bool {
        self.statements
            .iter()
            .any(|s| matches!(s.kind, StatementKind::Mw { .. }))
    }

    /// The same timing with every microwave pulse removed.
    pub fn without_microwaves(&self) -> SequenceAst {
        SequenceAst {
            tones: self.tones.clone(),
            statements: self
                .statements
                .iter()
                .filter(|s| !matches!(s.kind, StatementKind::Mw { .. }))
                .cloned()
                .collect(),
            sweeps: self.sweeps.clone(),
        }
    }

    /// Number of concrete sequences the sweeps expand to.
    pub fn cardinality(&self) -> usize {
        self.sweeps.iter().map(|s| s.steps).product()
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SeqErrorKind {
    #[error("unexpected end of line, expected {0}")]
    UnexpectedEnd(&'static str),
    #[error("expected {expected}, found '{found}'")]
    Unexpected {
        expected: &'static str,
        found: String,
    },
    #[error("unknown statement '{0}'")]
    UnknownStatement(String),
    #[error("invalid number '{0}'")]
    InvalidNumber(String),
    #[error("unknown tone '{0}'")]
    UnknownTone(String),
    #[error("tone '{0}' declared twice")]
    DuplicateTone(String),
    #[error("unknown transition '{0}'")]
    UnknownPair(String),
    #[error("negative duration {0}")]
    NegativeDuration(f64),
    #[error("tone frequency must be positive, got {0}")]
    NonPositiveFrequency(f64),
    #[error("drive must be non-negative, got {0}")]
    NegativeDrive(f64),
    #[error("symbol '${0}' is not declared by any sweep")]
    UndeclaredSymbol(String),
    #[error("sweep '${0}' is not used by any parameter")]
    UnusedSweep(String),
    #[error("sweep '${0}' declared twice")]
    DuplicateSweep(String),
    #[error("at most {MAX_SWEEPS} sweeps are allowed")]
    TooManySweeps,
    #[error("sweep needs at least 2 steps, got '{0}'")]
    BadSteps(String),
    #[error("sequence is empty")]
    Empty,
    #[error("sequence must start with a laser statement")]
    MissingLaser,
    #[error("sequence must end with a read statement")]
    MissingRead,
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("{pos}: {kind}")]
pub struct SeqError {
    pub pos: Pos,
    pub kind: SeqErrorKind,
}

impl SeqError {
    pub(crate) fn new(pos: Pos, kind: SeqErrorKind) -> Self {
        Self { pos, kind }
    }
}
