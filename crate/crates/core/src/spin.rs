//! Spin-1 operator algebra and the triplet spin Hamiltonian.
//!
//! All Hamiltonians are stored as `H/h` in MHz in the `{|+1⟩, |0⟩, |−1⟩}`
//! basis. Zero-field sublevels are identified by overlap with the analytic
//! zero-field eigenvectors, never by energy ordering (the ordering of `Tx`
//! and `Ty` flips with the sign of `E`).

use std::f64::consts::{FRAC_1_SQRT_2, TAU};
use std::fmt;

use nalgebra::{Matrix3, Vector3};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::constants::GYROMAGNETIC_MHZ_PER_MT;

pub type C64 = Complex64;
/// A 3×3 complex operator on the triplet manifold.
pub type Operator = Matrix3<C64>;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

/// Overlap-score gap below which the zero-field labelling is reported as
/// ambiguous.
pub const LABEL_AMBIGUITY_GAP: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpinError {
    #[error("magnetic field component is not finite: {0:?}")]
    NonFiniteField([f64; 3]),
    #[error("unknown sublevel '{0}'")]
    UnknownSublevel(String),
    #[error("unknown transition '{0}'")]
    UnknownTransition(String),
}

/// Zero-field triplet sublevel, labelled by molecular axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Sublevel {
    Tx,
    Ty,
    Tz,
}

impl Sublevel {
    pub const ALL: [Sublevel; 3] = [Sublevel::Tx, Sublevel::Ty, Sublevel::Tz];

    pub fn index(self) -> usize {
        match self {
            Sublevel::Tx => 0,
            Sublevel::Ty => 1,
            Sublevel::Tz => 2,
        }
    }

    pub fn from_index(i: usize) -> Sublevel {
        Self::ALL[i]
    }

    /// Analytic zero-field eigenvector in the `{|+1⟩, |0⟩, |−1⟩}` basis.
    ///
    /// `Tx = (|−1⟩ − |+1⟩)/√2`, `Ty = i(|−1⟩ + |+1⟩)/√2`, `Tz = |0⟩`.
    pub fn zero_field_state(self) -> Vector3<C64> {
        let s = FRAC_1_SQRT_2;
        match self {
            Sublevel::Tx => Vector3::new(C64::new(-s, 0.0), ZERO, C64::new(s, 0.0)),
            Sublevel::Ty => Vector3::new(C64::new(0.0, s), ZERO, C64::new(0.0, s)),
            Sublevel::Tz => Vector3::new(ZERO, ONE, ZERO),
        }
    }
}

impl fmt::Display for Sublevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Sublevel::Tx => "Tx",
            Sublevel::Ty => "Ty",
            Sublevel::Tz => "Tz",
        };
        f.write_str(s)
    }
}

/// An unordered pair of triplet sublevels.
///
/// The canonical orientation `(a, b)` is `XY = (Tx, Ty)`, `YZ = (Ty, Tz)`,
/// `XZ = (Tx, Tz)`; detunings and pulse phases refer to this orientation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Transition {
    XY,
    YZ,
    XZ,
}

impl Transition {
    pub const ALL: [Transition; 3] = [Transition::XY, Transition::YZ, Transition::XZ];

    pub fn index(self) -> usize {
        match self {
            Transition::XY => 0,
            Transition::YZ => 1,
            Transition::XZ => 2,
        }
    }

    pub fn levels(self) -> (Sublevel, Sublevel) {
        match self {
            Transition::XY => (Sublevel::Tx, Sublevel::Ty),
            Transition::YZ => (Sublevel::Ty, Sublevel::Tz),
            Transition::XZ => (Sublevel::Tx, Sublevel::Tz),
        }
    }

    /// The level not involved in this transition.
    pub fn spectator(self) -> Sublevel {
        match self {
            Transition::XY => Sublevel::Tz,
            Transition::YZ => Sublevel::Tx,
            Transition::XZ => Sublevel::Ty,
        }
    }

    pub fn between(a: Sublevel, b: Sublevel) -> Option<Transition> {
        use Sublevel::*;
        match (a, b) {
            (Tx, Ty) | (Ty, Tx) => Some(Transition::XY),
            (Ty, Tz) | (Tz, Ty) => Some(Transition::YZ),
            (Tx, Tz) | (Tz, Tx) => Some(Transition::XZ),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Transition::XY => "XY",
            Transition::YZ => "YZ",
            Transition::XZ => "XZ",
        }
    }
}

impl fmt::Display for Transition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Transition {
    type Err = SpinError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "XY" | "YX" => Ok(Transition::XY),
            "YZ" | "ZY" => Ok(Transition::YZ),
            "XZ" | "ZX" => Ok(Transition::XZ),
            _ => Err(SpinError::UnknownTransition(s.to_string())),
        }
    }
}

/// Zero-field splitting parameters in MHz.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ZfsParameters {
    pub d: f64,
    pub e: f64,
}

impl ZfsParameters {
    pub fn new(d: f64, e: f64) -> Self {
        Self { d, e }
    }

    /// Pentacene in p-terphenyl.
    pub fn pentacene() -> Self {
        Self {
            d: 1396.0,
            e: -53.0,
        }
    }

    /// `|E| ≤ |D|/3`.
    pub fn is_conventional(&self) -> bool {
        self.e.abs() <= self.d.abs() / 3.0 + 1e-12
    }

    /// Analytic zero-field energies of `(Tx, Ty, Tz)` in MHz.
    pub fn zero_field_energies(&self) -> [f64; 3] {
        [
            self.d / 3.0 - self.e,
            self.d / 3.0 + self.e,
            -2.0 * self.d / 3.0,
        ]
    }
}

impl Default for ZfsParameters {
    fn default() -> Self {
        Self::pentacene()
    }
}

/// The spin-1 matrices `Sx, Sy, Sz` (ħ = 1).
#[derive(Debug, Clone, PartialEq)]
pub struct SpinOperatorSet {
    pub x: Operator,
    pub y: Operator,
    pub z: Operator,
}

pub fn spin1_operators() -> SpinOperatorSet {
    let s = C64::new(FRAC_1_SQRT_2, 0.0);
    let is = C64::new(0.0, FRAC_1_SQRT_2);
    #[rustfmt::skip]
    let x = Matrix3::new(
        ZERO, s, ZERO,
        s, ZERO, s,
        ZERO, s, ZERO,
    );
    #[rustfmt::skip]
    let y = Matrix3::new(
        ZERO, -is, ZERO,
        is, ZERO, -is,
        ZERO, is, ZERO,
    );
    let z = Matrix3::from_diagonal(&Vector3::new(ONE, ZERO, -ONE));
    SpinOperatorSet { x, y, z }
}

/// Euler angles (Z-Y-Z, radians) of the molecular frame relative to the lab frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MolecularOrientation {
    alpha: f64,
    beta: f64,
    gamma: f64,
}

fn wrap_angle(a: f64) -> f64 {
    let w = a.rem_euclid(TAU);
    // rem_euclid can round up to exactly TAU for tiny negative inputs
    if w >= TAU {
        0.0
    } else {
        w
    }
}

impl MolecularOrientation {
    pub fn new(alpha: f64, beta: f64, gamma: f64) -> Self {
        Self {
            alpha: wrap_angle(alpha),
            beta: wrap_angle(beta),
            gamma: wrap_angle(gamma),
        }
    }

    pub fn identity() -> Self {
        Self::new(0.0, 0.0, 0.0)
    }

    /// Rotation about the lab Z axis, e.g. the herringbone angle between
    /// the two inequivalent lattice sites.
    pub fn about_z(angle: f64) -> Self {
        Self::new(angle, 0.0, 0.0)
    }

    pub fn angles(&self) -> (f64, f64, f64) {
        (self.alpha, self.beta, self.gamma)
    }

    /// `R = Rz(α)·Ry(β)·Rz(γ)`; its columns are the molecular axes in lab coordinates.
    pub fn rotation_matrix(&self) -> Matrix3<f64> {
        let rz = |a: f64| {
            let (s, c) = a.sin_cos();
            Matrix3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0)
        };
        let (sb, cb) = self.beta.sin_cos();
        let ry = Matrix3::new(cb, 0.0, sb, 0.0, 1.0, 0.0, -sb, 0.0, cb);
        rz(self.alpha) * ry * rz(self.gamma)
    }
}

impl Default for MolecularOrientation {
    fn default() -> Self {
        Self::identity()
    }
}

/// Static magnetic field in mT.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 3]", into = "[f64; 3]")]
pub struct MagneticField(Vector3<f64>);

impl MagneticField {
    pub fn new(x: f64, y: f64, z: f64) -> Result<Self, SpinError> {
        if !(x.is_finite() && y.is_finite() && z.is_finite()) {
            return Err(SpinError::NonFiniteField([x, y, z]));
        }
        Ok(Self(Vector3::new(x, y, z)))
    }

    pub fn zero() -> Self {
        Self(Vector3::zeros())
    }

    /// Field of `magnitude` mT along `direction` (normalised internally).
    pub fn along(direction: [f64; 3], magnitude: f64) -> Result<Self, SpinError> {
        let d = Vector3::from(direction);
        let n = d.norm();
        if !(n.is_finite() && n > 0.0 && magnitude.is_finite()) {
            return Err(SpinError::NonFiniteField(direction));
        }
        let v = d * (magnitude / n);
        Self::new(v.x, v.y, v.z)
    }

    pub fn vector(&self) -> &Vector3<f64> {
        &self.0
    }

    pub fn magnitude(&self) -> f64 {
        self.0.norm()
    }

    pub fn components(&self) -> [f64; 3] {
        [self.0.x, self.0.y, self.0.z]
    }
}

impl TryFrom<[f64; 3]> for MagneticField {
    type Error = SpinError;

    fn try_from(v: [f64; 3]) -> Result<Self, Self::Error> {
        Self::new(v[0], v[1], v[2])
    }
}

impl From<MagneticField> for [f64; 3] {
    fn from(b: MagneticField) -> Self {
        b.components()
    }
}

/// Express a lab-frame field in the molecular frame of a site.
pub fn rotate_to_molecular_frame(o: &MolecularOrientation, b_lab: &MagneticField) -> MagneticField {
    MagneticField(o.rotation_matrix().transpose() * b_lab.0)
}

/// `H/h` in MHz.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpinHamiltonian(Operator);

impl SpinHamiltonian {
    pub fn from_matrix(m: Operator) -> Self {
        Self(m)
    }

    pub fn zero() -> Self {
        Self(Operator::zeros())
    }

    pub fn matrix(&self) -> &Operator {
        &self.0
    }

    /// Largest entry of `|H − H†|`.
    pub fn hermiticity_error(&self) -> f64 {
        (self.0 - self.0.adjoint())
            .iter()
            .map(|c| c.norm())
            .fold(0.0, f64::max)
    }

    pub fn trace(&self) -> C64 {
        self.0.trace()
    }
}

impl std::ops::Add for SpinHamiltonian {
    type Output = SpinHamiltonian;

    fn add(self, rhs: Self) -> Self::Output {
        Self(self.0 + rhs.0)
    }
}

/// `D(Sz² − 2/3) + E(Sx² − Sy²)`.
pub fn zfs_hamiltonian(p: &ZfsParameters) -> SpinHamiltonian {
    if !p.is_conventional() {
        log::warn!(
            "zero-field splitting outside the conventional range |E| <= |D|/3 (D = {}, E = {})",
            p.d,
            p.e
        );
    }
    let s = spin1_operators();
    let id = Operator::identity();
    let sz2 = s.z * s.z;
    let h = (sz2 - id * C64::from(2.0 / 3.0)) * C64::from(p.d)
        + (s.x * s.x - s.y * s.y) * C64::from(p.e);
    SpinHamiltonian(h)
}

/// Isotropic electron Zeeman term for a field given in the molecular frame.
pub fn zeeman_hamiltonian(b_mol: &MagneticField) -> SpinHamiltonian {
    let s = spin1_operators();
    let b = b_mol.vector() * GYROMAGNETIC_MHZ_PER_MT;
    SpinHamiltonian(s.x * C64::from(b.x) + s.y * C64::from(b.y) + s.z * C64::from(b.z))
}

/// Full Hamiltonian of one lattice site in a lab-frame field.
pub fn site_hamiltonian(
    zfs: &ZfsParameters,
    site: &MolecularOrientation,
    b_lab: &MagneticField,
) -> SpinHamiltonian {
    zfs_hamiltonian(zfs) + zeeman_hamiltonian(&rotate_to_molecular_frame(site, b_lab))
}

/// Diagonalised Hamiltonian with zero-field labels attached.
#[derive(Debug, Clone, PartialEq)]
pub struct Eigensystem {
    /// Ascending energies (MHz).
    pub energies: [f64; 3],
    /// Eigenvectors as columns, in the same order as `energies`.
    pub states: Operator,
    /// `labels[sublevel.index()]` is the eigen-index carrying that label.
    pub labels: [usize; 3],
    /// Set when the labelling (or the eigenbasis itself) is ambiguous.
    pub degenerate: bool,
}

const PERMUTATIONS: [[usize; 3]; 6] = [
    [0, 1, 2],
    [0, 2, 1],
    [1, 0, 2],
    [1, 2, 0],
    [2, 0, 1],
    [2, 1, 0],
];

pub fn eigensystem(h: &SpinHamiltonian) -> Eigensystem {
    // symmetrise away rounding noise before handing to the Hermitian solver
    let m = (h.0 + h.0.adjoint()) * C64::from(0.5);
    let eig = m.symmetric_eigen();

    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let energies = order.map(|i| eig.eigenvalues[i]);
    let mut states = Operator::zeros();
    for (col, &i) in order.iter().enumerate() {
        states.set_column(col, &eig.eigenvectors.column(i));
    }

    // overlap[k][i] = |<T_k|v_i>|^2
    let mut overlap = [[0.0; 3]; 3];
    for k in Sublevel::ALL {
        let t = k.zero_field_state();
        for (i, row) in overlap[k.index()].iter_mut().enumerate() {
            *row = t.dotc(&states.column(i)).norm_sqr();
        }
    }
    let mut scores: Vec<(f64, [usize; 3])> = PERMUTATIONS
        .iter()
        .map(|p| ((0..3).map(|k| overlap[k][p[k]]).sum::<f64>(), *p))
        .collect();
    scores.sort_by(|a, b| b.0.total_cmp(&a.0));
    let labels = scores[0].1;
    let label_gap = scores[0].0 - scores[1].0;

    let scale = energies.iter().map(|e| e.abs()).fold(1.0, f64::max);
    let min_gap = (energies[1] - energies[0]).min(energies[2] - energies[1]);
    let degenerate = label_gap < LABEL_AMBIGUITY_GAP || min_gap < 1e-9 * scale;

    // fix each eigenvector's phase so its overlap with its label state is real positive
    for k in Sublevel::ALL {
        let i = labels[k.index()];
        let ov = k.zero_field_state().dotc(&states.column(i));
        if ov.norm() > 1e-12 {
            let phase = ov.conj() / ov.norm();
            let col = states.column(i) * phase;
            states.set_column(i, &col);
        }
    }

    Eigensystem {
        energies,
        states,
        labels,
        degenerate,
    }
}

impl Eigensystem {
    pub fn energy(&self, level: Sublevel) -> f64 {
        self.energies[self.labels[level.index()]]
    }

    pub fn state(&self, level: Sublevel) -> Vector3<C64> {
        self.states.column(self.labels[level.index()]).into_owned()
    }

    /// `w[i][k] = |⟨e_i|T_k⟩|²` with `i` the eigenstate labelled `Sublevel::from_index(i)`.
    pub fn overlap_weights(&self) -> [[f64; 3]; 3] {
        let mut w = [[0.0; 3]; 3];
        for i in Sublevel::ALL {
            let v = self.state(i);
            for k in Sublevel::ALL {
                w[i.index()][k.index()] = k.zero_field_state().dotc(&v).norm_sqr();
            }
        }
        w
    }

    /// Largest `‖H v − E v‖` over the three eigenpairs.
    pub fn residual(&self, h: &SpinHamiltonian) -> f64 {
        (0..3)
            .map(|i| {
                let v = self.states.column(i);
                (h.0 * v - v * C64::from(self.energies[i])).norm()
            })
            .fold(0.0, f64::max)
    }

    /// Largest deviation of `V†V` from the identity.
    pub fn orthonormality_error(&self) -> f64 {
        (self.states.adjoint() * self.states - Operator::identity())
            .iter()
            .map(|c| c.norm())
            .fold(0.0, f64::max)
    }

    pub fn transition_frequencies(&self) -> TransitionFrequencies {
        transition_frequencies(self)
    }
}

/// Transition frequencies (MHz) between labelled eigenstates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransitionFrequencies([f64; 3]);

impl TransitionFrequencies {
    pub fn get(&self, t: Transition) -> f64 {
        self.0[t.index()]
    }

    /// Symmetric lookup by level pair; zero for identical levels.
    pub fn between(&self, a: Sublevel, b: Sublevel) -> f64 {
        Transition::between(a, b).map_or(0.0, |t| self.get(t))
    }

    pub fn iter(&self) -> impl Iterator<Item = (Transition, f64)> + '_ {
        Transition::ALL.into_iter().map(|t| (t, self.get(t)))
    }

    /// The transition whose frequency is closest to `f`, with the distance.
    pub fn nearest(&self, f: f64) -> (Transition, f64) {
        self.iter()
            .map(|(t, ft)| (t, (ft - f).abs()))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("three transitions")
    }
}

pub fn transition_frequencies(e: &Eigensystem) -> TransitionFrequencies {
    let mut f = [0.0; 3];
    for t in Transition::ALL {
        let (a, b) = t.levels();
        f[t.index()] = (e.energy(a) - e.energy(b)).abs();
    }
    TransitionFrequencies(f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn max_abs(m: &Operator) -> f64 {
        m.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    #[test]
    fn spin_matrices_satisfy_su2() {
        let s = spin1_operators();
        let i = C64::new(0.0, 1.0);
        assert!(max_abs(&(s.x * s.y - s.y * s.x - s.z * i)) < 1e-12);
        assert!(max_abs(&(s.y * s.z - s.z * s.y - s.x * i)) < 1e-12);
        assert!(max_abs(&(s.z * s.x - s.x * s.z - s.y * i)) < 1e-12);
        let casimir = s.x * s.x + s.y * s.y + s.z * s.z;
        assert!(max_abs(&(casimir - Operator::identity() * C64::from(2.0))) < 1e-12);
        for op in [s.x, s.y, s.z] {
            assert!(max_abs(&(op - op.adjoint())) < 1e-15);
        }
        let mut ev: Vec<f64> = s.z.symmetric_eigen().eigenvalues.iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        assert_abs_diff_eq!(ev[0], -1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(ev[1], 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(ev[2], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn zero_parameters_give_zero_matrix() {
        let h = zfs_hamiltonian(&ZfsParameters::new(0.0, 0.0));
        assert_eq!(max_abs(h.matrix()), 0.0);
        let z = zeeman_hamiltonian(&MagneticField::zero());
        assert_eq!(max_abs(z.matrix()), 0.0);
    }

    #[test]
    fn pentacene_zero_field_levels() {
        let h = zfs_hamiltonian(&ZfsParameters::pentacene());
        assert!(h.trace().norm() < 1e-10);
        let e = eigensystem(&h);
        // D/3 - E, D/3 + E, -2D/3
        assert_abs_diff_eq!(e.energies[0], -930.6666666666666, epsilon = 1e-8);
        assert_abs_diff_eq!(e.energies[1], 412.3333333333333, epsilon = 1e-8);
        assert_abs_diff_eq!(e.energies[2], 518.3333333333334, epsilon = 1e-8);
        assert_eq!(e.labels[Sublevel::Tz.index()], 0);
        assert_eq!(e.labels[Sublevel::Ty.index()], 1);
        assert_eq!(e.labels[Sublevel::Tx.index()], 2);
        assert!(!e.degenerate);
        // phase-fixed states coincide with the analytic basis
        for k in Sublevel::ALL {
            assert!((e.state(k) - k.zero_field_state()).norm() < 1e-10);
        }
    }

    #[test]
    fn labels_follow_overlap_when_e_changes_sign() {
        let e = eigensystem(&zfs_hamiltonian(&ZfsParameters::new(1396.0, 53.0)));
        assert_abs_diff_eq!(e.energy(Sublevel::Tx), 1396.0 / 3.0 - 53.0, epsilon = 1e-8);
        assert_abs_diff_eq!(e.energy(Sublevel::Ty), 1396.0 / 3.0 + 53.0, epsilon = 1e-8);
    }

    #[test]
    fn zero_hamiltonian_is_flagged_degenerate() {
        assert!(eigensystem(&SpinHamiltonian::zero()).degenerate);
    }

    #[test]
    fn pentacene_transition_frequencies() {
        let f = eigensystem(&zfs_hamiltonian(&ZfsParameters::pentacene())).transition_frequencies();
        assert_abs_diff_eq!(f.get(Transition::XY), 106.0, epsilon = 1e-8);
        assert_abs_diff_eq!(f.get(Transition::YZ), 1343.0, epsilon = 1e-8);
        assert_abs_diff_eq!(f.get(Transition::XZ), 1449.0, epsilon = 1e-8);
        assert_eq!(
            f.between(Sublevel::Tz, Sublevel::Tx),
            f.between(Sublevel::Tx, Sublevel::Tz)
        );
        assert_eq!(f.between(Sublevel::Tx, Sublevel::Tx), 0.0);
        assert_eq!(f.nearest(1440.0).0, Transition::XZ);
    }

    #[test]
    fn zeeman_along_z() {
        let b = MagneticField::new(0.0, 0.0, 100.0).unwrap();
        let e = eigensystem(&zeeman_hamiltonian(&b));
        let g = 100.0 * GYROMAGNETIC_MHZ_PER_MT;
        assert_abs_diff_eq!(e.energies[0], -g, epsilon = 1e-8);
        assert_abs_diff_eq!(e.energies[1], 0.0, epsilon = 1e-8);
        assert_abs_diff_eq!(e.energies[2], g, epsilon = 1e-8);
        assert!((g - 2799.2).abs() < 0.1);
    }

    #[test]
    fn high_field_outer_transitions() {
        // 10 T along molecular Z: |0> <-> |±1> at D ± sqrt(g²B² + E²) ≈ gB ± D
        let zfs = ZfsParameters::pentacene();
        let b = MagneticField::new(0.0, 0.0, 10_000.0).unwrap();
        let e = eigensystem(&(zfs_hamiltonian(&zfs) + zeeman_hamiltonian(&b)));
        let g = 10_000.0 * GYROMAGNETIC_MHZ_PER_MT;
        let e0 = e.energies[1];
        let upper = e.energies[2] - e0;
        let lower = e0 - e.energies[0];
        assert!(((upper - (g + zfs.d)) / (g + zfs.d)).abs() < 1e-3);
        assert!(((lower - (g - zfs.d)) / (g - zfs.d)).abs() < 1e-3);
    }

    #[test]
    fn non_finite_field_rejected() {
        assert!(MagneticField::new(f64::NAN, 0.0, 0.0).is_err());
        assert!(MagneticField::along([0.0, 0.0, 0.0], 1.0).is_err());
    }

    #[test]
    fn identity_and_double_pi_rotation() {
        let b = MagneticField::new(1.0, -2.0, 3.0).unwrap();
        assert_eq!(
            rotate_to_molecular_frame(&MolecularOrientation::identity(), &b),
            b
        );
        let half = MolecularOrientation::new(0.0, std::f64::consts::PI, 0.0);
        let once = rotate_to_molecular_frame(&half, &b);
        let twice = rotate_to_molecular_frame(&half, &once);
        assert!((twice.vector() - b.vector()).norm() < 1e-12);
    }

    #[test]
    fn angles_are_wrapped() {
        let o = MolecularOrientation::new(-0.5, 7.0, TAU);
        let (a, b, g) = o.angles();
        for x in [a, b, g] {
            assert!((0.0..TAU).contains(&x));
        }
    }

    fn random_hermitian(v: &[f64]) -> SpinHamiltonian {
        let mut m = Operator::zeros();
        let mut it = v.iter();
        for i in 0..3 {
            m[(i, i)] = C64::from(*it.next().unwrap());
            for j in (i + 1)..3 {
                let c = C64::new(*it.next().unwrap(), *it.next().unwrap());
                m[(i, j)] = c;
                m[(j, i)] = c.conj();
            }
        }
        SpinHamiltonian(m)
    }

    proptest! {
        #[test]
        fn zfs_spectrum_matches_analytic(d in -3000.0..3000.0f64, e in -1000.0..1000.0f64) {
            let p = ZfsParameters::new(d, e);
            let h = zfs_hamiltonian(&p);
            prop_assert!(h.hermiticity_error() < 1e-10);
            prop_assert!(h.trace().norm() < 1e-10);
            let es = eigensystem(&h);
            let mut expected = p.zero_field_energies();
            expected.sort_by(f64::total_cmp);
            for (a, b) in es.energies.iter().zip(expected) {
                prop_assert!((a - b).abs() < 1e-8);
            }
        }

        #[test]
        fn eigensolver_contract(v in proptest::collection::vec(-2000.0..2000.0f64, 9)) {
            let h = random_hermitian(&v);
            let e = eigensystem(&h);
            prop_assert!(e.residual(&h) < 1e-8);
            prop_assert!(e.orthonormality_error() < 1e-10);
            prop_assert!(e.energies[0] <= e.energies[1] && e.energies[1] <= e.energies[2]);
        }

        #[test]
        fn zeeman_is_linear_and_hermitian(x in -500.0..500.0f64, y in -500.0..500.0f64, z in -500.0..500.0f64) {
            let b = MagneticField::new(x, y, z).unwrap();
            let b2 = MagneticField::new(2.0 * x, 2.0 * y, 2.0 * z).unwrap();
            let h = zeeman_hamiltonian(&b);
            prop_assert!(h.hermiticity_error() < 1e-10);
            let diff = zeeman_hamiltonian(&b2).matrix() - h.matrix() * C64::from(2.0);
            prop_assert!(max_abs(&diff) < 1e-9);
        }

        #[test]
        fn rotation_preserves_norm(
            a in -10.0..10.0f64, b in -10.0..10.0f64, g in -10.0..10.0f64,
            x in -100.0..100.0f64, y in -100.0..100.0f64, z in -100.0..100.0f64,
        ) {
            let field = MagneticField::new(x, y, z).unwrap();
            let out = rotate_to_molecular_frame(&MolecularOrientation::new(a, b, g), &field);
            let n = field.magnitude();
            prop_assert!((out.magnitude() - n).abs() <= 1e-12 * n.max(1.0));
        }
    }
}
