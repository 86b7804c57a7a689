use nalgebra::Matrix3;

use crate::kinetics::LevelPopulations;
use crate::spin::{Operator, Sublevel, C64};

/// Singlet populations plus the triplet density matrix in the labelled
/// sublevel basis (index order of [`Sublevel::index`]).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HybridState {
    pub s0: f64,
    pub s1: f64,
    pub rho: Operator,
}

impl HybridState {
    pub fn ground() -> Self {
        Self::from_populations(&LevelPopulations::ground())
    }

    pub fn from_populations(n: &LevelPopulations) -> Self {
        let mut rho = Matrix3::zeros();
        for i in 0..3 {
            rho[(i, i)] = C64::new(n.triplet[i], 0.0);
        }
        Self {
            s0: n.s0,
            s1: n.s1,
            rho,
        }
    }

    pub fn populations(&self) -> LevelPopulations {
        LevelPopulations {
            s0: self.s0,
            s1: self.s1,
            triplet: [
                self.rho[(0, 0)].re,
                self.rho[(1, 1)].re,
                self.rho[(2, 2)].re,
            ],
        }
    }

    pub fn population(&self, level: Sublevel) -> f64 {
        self.rho[(level.index(), level.index())].re
    }

    pub fn coherence(&self, a: Sublevel, b: Sublevel) -> C64 {
        self.rho[(a.index(), b.index())]
    }

    /// Projective dephasing in the sublevel basis.
    pub fn drop_coherences(&self) -> Self {
        Self::from_populations(&self.populations())
    }

    pub fn total(&self) -> f64 {
        self.s0 + self.s1 + self.rho.trace().re
    }

    pub fn hermiticity_error(&self) -> f64 {
        (self.rho - self.rho.adjoint()).camax()
    }

    /// Smallest eigenvalue of the triplet block.
    pub fn min_eigenvalue(&self) -> f64 {
        let h = (self.rho + self.rho.adjoint()) * C64::new(0.5, 0.0);
        h.symmetric_eigenvalues()
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }
}
