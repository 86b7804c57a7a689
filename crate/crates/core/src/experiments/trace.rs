use std::fmt::Write;

use serde::{Deserialize, Serialize};

/// A swept coordinate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Column {
    pub name: String,
    pub unit: String,
}

impl Column {
    pub fn new(name: &str, unit: &str) -> Self {
        Self {
            name: name.into(),
            unit: unit.into(),
        }
    }

    pub fn header(&self) -> String {
        if self.unit.is_empty() {
            self.name.clone()
        } else {
            format!("{}_{}", self.name, self.unit)
        }
    }
}

/// Contrast against one or two swept coordinates. Points are stored
/// row-major with the first column outermost.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trace {
    pub preset: String,
    pub columns: Vec<Column>,
    pub coords: Vec<Vec<f64>>,
    pub contrast: Vec<f64>,
    pub seed: u64,
}

impl Trace {
    pub fn len(&self) -> usize {
        self.contrast.len()
    }

    pub fn is_empty(&self) -> bool {
        self.contrast.is_empty()
    }

    pub fn column(&self, k: usize) -> Vec<f64> {
        self.coords.iter().map(|c| c[k]).collect()
    }

    /// Distinct values of column `k` in order of first appearance.
    pub fn levels(&self, k: usize) -> Vec<f64> {
        let mut out: Vec<f64> = Vec::new();
        for c in &self.coords {
            if !out.contains(&c[k]) {
                out.push(c[k]);
            }
        }
        out
    }

    /// Points where column `k` equals `value`, as `(other coordinate, contrast)`.
    pub fn slice(&self, k: usize, value: f64) -> (Vec<f64>, Vec<f64>) {
        let other = 1 - k;
        self.coords
            .iter()
            .zip(&self.contrast)
            .filter(|(c, _)| c[k] == value)
            .map(|(c, y)| (c[other], *y))
            .unzip()
    }

    pub fn is_consistent(&self) -> bool {
        self.coords.len() == self.contrast.len()
            && self.coords.iter().all(|c| c.len() == self.columns.len())
            && self.contrast.iter().all(|v| v.is_finite())
            && self.coords.iter().flatten().all(|v| v.is_finite())
    }

    /// CSV with a header row; numbers in shortest round-trip scientific form.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for c in &self.columns {
            let _ = write!(out, "{},", c.header());
        }
        out.push_str("contrast\n");
        for (c, y) in self.coords.iter().zip(&self.contrast) {
            for v in c {
                let _ = write!(out, "{v:e},");
            }
            let _ = writeln!(out, "{y:e}");
        }
        out
    }
}
