//! Five-level incoherent photophysics: optical pumping `S0 → S1`,
//! fluorescence, spin-selective intersystem crossing into the triplet and
//! sublevel-selective depopulation back to `S0`.
//!
//! Population vectors are ordered `[S0, S1, T0, T1, T2]` where the triplet
//! indices follow [`Sublevel::index`]; in a magnetic field they refer to the
//! eigenstates carrying that zero-field label.

use nalgebra::{SMatrix, SVector};
use thiserror::Error;

use crate::spin::{
    eigensystem, site_hamiltonian, Eigensystem, MagneticField, MolecularOrientation, Sublevel,
    Transition, ZfsParameters,
};

pub type PopVector = SVector<f64, 5>;
pub type RateMatrix = SMatrix<f64, 5, 5>;

const S0: usize = 0;
const S1: usize = 1;

fn tri(level: usize) -> usize {
    2 + level
}

/// Default sublevel lifetimes (µs) for `(Tx, Ty, Tz)`.
pub const DEFAULT_LIFETIMES_US: [f64; 3] = [35.0, 65.0, 150.0];
/// Default ISC branching into `(Tx, Ty, Tz)`.
pub const DEFAULT_BRANCHING: [f64; 3] = [0.76, 0.16, 0.08];
/// Triplet yield of the S1 decay.
pub const DEFAULT_ISC_YIELD: f64 = 0.63;
/// 10 ns fluorescence lifetime.
pub const DEFAULT_S1_DECAY_RATE: f64 = 100.0;
/// Optical pump rate (µs⁻¹), calibrated against the pulsed Rabi contrast.
pub const DEFAULT_PUMP_RATE: f64 = 0.05;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KineticsError {
    #[error("rate '{name}' must be finite and non-negative, got {value}")]
    NegativeRate { name: &'static str, value: f64 },
    #[error("ISC yield must lie in [0, 1], got {0}")]
    YieldOutOfRange(f64),
    #[error("branching ratios must be non-negative and sum to 1, got {0:?}")]
    BadBranching([f64; 3]),
    #[error("evolution time must be finite and non-negative, got {0}")]
    NegativeTime(f64),
    #[error("propagation produced non-finite populations")]
    NonFinite,
    #[error("steady state is not unique: {0} closed classes in the rate graph")]
    NonUniqueSteadyState(usize),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KineticRates {
    /// `S0 → S1` optical pump rate (µs⁻¹).
    pub pump_rate: f64,
    /// Total `S1` decay rate (µs⁻¹).
    pub s1_decay_rate: f64,
    /// Fraction of `S1` decays that cross into the triplet.
    pub isc_yield: f64,
    /// ISC branching into the three triplet levels.
    pub branching: [f64; 3],
    /// Triplet depopulation rates to `S0` (µs⁻¹).
    pub depopulation: [f64; 3],
}

impl KineticRates {
    pub fn from_lifetimes(
        pump_rate: f64,
        s1_decay_rate: f64,
        isc_yield: f64,
        branching: [f64; 3],
        lifetimes_us: [f64; 3],
    ) -> Self {
        Self {
            pump_rate,
            s1_decay_rate,
            isc_yield,
            branching,
            depopulation: lifetimes_us.map(|t| 1.0 / t),
        }
    }

    pub fn lifetimes(&self) -> [f64; 3] {
        self.depopulation.map(|k| 1.0 / k)
    }

    pub fn with_pump(mut self, pump_rate: f64) -> Self {
        self.pump_rate = pump_rate;
        self
    }

    pub fn validate(&self) -> Result<(), KineticsError> {
        let check = |name: &'static str, value: f64| {
            if value.is_finite() && value >= 0.0 {
                Ok(())
            } else {
                Err(KineticsError::NegativeRate { name, value })
            }
        };
        check("pump_rate", self.pump_rate)?;
        check("s1_decay_rate", self.s1_decay_rate)?;
        for (k, name) in self.depopulation.iter().zip(["k_x", "k_y", "k_z"]) {
            check(name, *k)?;
        }
        if !(0.0..=1.0).contains(&self.isc_yield) {
            return Err(KineticsError::YieldOutOfRange(self.isc_yield));
        }
        let sum: f64 = self.branching.iter().sum();
        if self.branching.iter().any(|p| !(p.is_finite() && *p >= 0.0)) || (sum - 1.0).abs() > 1e-12
        {
            return Err(KineticsError::BadBranching(self.branching));
        }
        Ok(())
    }
}

impl Default for KineticRates {
    fn default() -> Self {
        Self::from_lifetimes(
            DEFAULT_PUMP_RATE,
            DEFAULT_S1_DECAY_RATE,
            DEFAULT_ISC_YIELD,
            DEFAULT_BRANCHING,
            DEFAULT_LIFETIMES_US,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LevelPopulations {
    pub s0: f64,
    pub s1: f64,
    pub triplet: [f64; 3],
}

impl LevelPopulations {
    pub fn ground() -> Self {
        Self {
            s0: 1.0,
            s1: 0.0,
            triplet: [0.0; 3],
        }
    }

    pub fn from_vector(v: &PopVector) -> Self {
        Self {
            s0: v[S0],
            s1: v[S1],
            triplet: [v[tri(0)], v[tri(1)], v[tri(2)]],
        }
    }

    pub fn to_vector(&self) -> PopVector {
        PopVector::from([
            self.s0,
            self.s1,
            self.triplet[0],
            self.triplet[1],
            self.triplet[2],
        ])
    }

    pub fn total(&self) -> f64 {
        self.s0 + self.s1 + self.triplet.iter().sum::<f64>()
    }

    pub fn triplet_total(&self) -> f64 {
        self.triplet.iter().sum()
    }

    pub fn level(&self, l: Sublevel) -> f64 {
        self.triplet[l.index()]
    }

    pub fn min(&self) -> f64 {
        self.to_vector().min()
    }
}

/// Incoherent microwave mixing between the two levels of a transition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MicrowaveMixing {
    pub transition: Transition,
    /// Symmetric mixing rate (µs⁻¹).
    pub rate: f64,
}

/// Population-conserving rate generator, `dn/dt = G·n` (µs⁻¹).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Generator(RateMatrix);

impl Generator {
    pub fn matrix(&self) -> &RateMatrix {
        &self.0
    }

    pub fn column_sums(&self) -> [f64; 5] {
        let mut s = [0.0; 5];
        for (j, sj) in s.iter_mut().enumerate() {
            *sj = self.0.column(j).sum();
        }
        s
    }
}

pub fn rate_matrix(
    r: &KineticRates,
    mixing: &[MicrowaveMixing],
) -> Result<Generator, KineticsError> {
    r.validate()?;
    let mut g = RateMatrix::zeros();
    g[(S0, S0)] = -r.pump_rate;
    g[(S1, S0)] = r.pump_rate;

    g[(S1, S1)] = -r.s1_decay_rate;
    g[(S0, S1)] = (1.0 - r.isc_yield) * r.s1_decay_rate;
    for i in 0..3 {
        g[(tri(i), S1)] = r.isc_yield * r.s1_decay_rate * r.branching[i];
        g[(tri(i), tri(i))] = -r.depopulation[i];
        g[(S0, tri(i))] = r.depopulation[i];
    }
    for m in mixing {
        if !(m.rate.is_finite() && m.rate >= 0.0) {
            return Err(KineticsError::NegativeRate {
                name: "mixing",
                value: m.rate,
            });
        }
        let (a, b) = m.transition.levels();
        let (a, b) = (tri(a.index()), tri(b.index()));
        g[(a, a)] -= m.rate;
        g[(b, b)] -= m.rate;
        g[(a, b)] += m.rate;
        g[(b, a)] += m.rate;
    }
    Ok(Generator(g))
}

fn check_time(t: f64) -> Result<(), KineticsError> {
    if t.is_finite() && t >= 0.0 {
        Ok(())
    } else {
        Err(KineticsError::NegativeTime(t))
    }
}

/// `exp(G·t)`.
pub fn propagator(gen: &Generator, t: f64) -> Result<RateMatrix, KineticsError> {
    check_time(t)?;
    if t == 0.0 {
        return Ok(RateMatrix::identity());
    }
    let p = (gen.0 * t).exp();
    if p.iter().all(|x| x.is_finite()) {
        Ok(p)
    } else {
        Err(KineticsError::NonFinite)
    }
}

/// `(exp(G·t), ∫₀ᵗ exp(G·s) ds)` from one exponential of the augmented
/// block matrix `[[G, 0], [I, 0]]`.
pub fn integrated_propagator(
    gen: &Generator,
    t: f64,
) -> Result<(RateMatrix, RateMatrix), KineticsError> {
    check_time(t)?;
    if t == 0.0 {
        return Ok((RateMatrix::identity(), RateMatrix::zeros()));
    }
    let mut aug = SMatrix::<f64, 10, 10>::zeros();
    aug.fixed_view_mut::<5, 5>(0, 0).copy_from(&(gen.0 * t));
    aug.fixed_view_mut::<5, 5>(5, 0)
        .copy_from(&(RateMatrix::identity() * t));
    let e = aug.exp();
    if !e.iter().all(|x| x.is_finite()) {
        return Err(KineticsError::NonFinite);
    }
    Ok((
        e.fixed_view::<5, 5>(0, 0).into_owned(),
        e.fixed_view::<5, 5>(5, 0).into_owned(),
    ))
}

pub fn evolve(
    n: &LevelPopulations,
    t: f64,
    gen: &Generator,
) -> Result<LevelPopulations, KineticsError> {
    let p = propagator(gen, t)?;
    Ok(LevelPopulations::from_vector(&(p * n.to_vector())))
}

/// Number of closed communicating classes of the rate graph; the null space
/// of `G` has exactly this dimension.
fn closed_classes(g: &RateMatrix) -> usize {
    let mut reach = [[false; 5]; 5];
    for (i, row) in reach.iter_mut().enumerate() {
        row[i] = true;
        for (j, r) in row.iter_mut().enumerate() {
            if i != j && g[(j, i)] > 0.0 {
                *r = true;
            }
        }
    }
    for k in 0..5 {
        for i in 0..5 {
            for j in 0..5 {
                if reach[i][k] && reach[k][j] {
                    reach[i][j] = true;
                }
            }
        }
    }
    // a class is closed when everything reachable from its members reaches back
    let closed: Vec<bool> = (0..5)
        .map(|i| (0..5).all(|j| !reach[i][j] || reach[j][i]))
        .collect();
    let mut seen = [false; 5];
    let mut count = 0;
    for i in 0..5 {
        if closed[i] && !seen[i] {
            count += 1;
            for j in 0..5 {
                if reach[i][j] && reach[j][i] {
                    seen[j] = true;
                }
            }
        }
    }
    count
}

pub fn steady_state(gen: &Generator) -> Result<LevelPopulations, KineticsError> {
    let classes = closed_classes(&gen.0);
    if classes != 1 {
        return Err(KineticsError::NonUniqueSteadyState(classes));
    }
    // rows of G sum to the zero row, so one of them can carry the normalisation
    let mut a = gen.0;
    a.row_mut(0).fill(1.0);
    let mut rhs = PopVector::zeros();
    rhs[0] = 1.0;
    let n = a
        .lu()
        .solve(&rhs)
        .ok_or(KineticsError::NonUniqueSteadyState(classes))?;
    if !n.iter().all(|x| x.is_finite()) {
        return Err(KineticsError::NonFinite);
    }
    Ok(LevelPopulations::from_vector(&n))
}

/// Fluorescence rate `Γf·(1−φ)·n_S1`.
pub fn pl_rate(n: &LevelPopulations, r: &KineticRates) -> f64 {
    r.s1_decay_rate * (1.0 - r.isc_yield) * n.s1
}

/// Re-express ISC branching and depopulation rates in the eigenbasis of a
/// field-dependent Hamiltonian by overlap with the zero-field sublevels.
pub fn project_rates(e: &Eigensystem, r: &KineticRates) -> KineticRates {
    let w = e.overlap_weights();
    let mut out = *r;
    for (i, row) in w.iter().enumerate() {
        out.branching[i] = row.iter().zip(&r.branching).map(|(a, b)| a * b).sum();
        out.depopulation[i] = row.iter().zip(&r.depopulation).map(|(a, b)| a * b).sum();
    }
    out
}

/// Steady-state PL of one site under continuous pumping and microwave mixing.
pub fn cw_pl(
    zfs: &ZfsParameters,
    rates: &KineticRates,
    mixing: &[MicrowaveMixing],
    b_lab: &MagneticField,
    site: &MolecularOrientation,
) -> Result<f64, KineticsError> {
    let e = eigensystem(&site_hamiltonian(zfs, site, b_lab));
    let projected = project_rates(&e, rates);
    let n = steady_state(&rate_matrix(&projected, mixing)?)?;
    Ok(pl_rate(&n, &projected))
}

/// `(PL_on − PL_off)/PL_off` for saturating mixing of rate `w` on one transition.
pub fn cw_odmr_contrast(
    zfs: &ZfsParameters,
    rates: &KineticRates,
    transition: Transition,
    w: f64,
    b_lab: &MagneticField,
    site: &MolecularOrientation,
) -> Result<f64, KineticsError> {
    let off = cw_pl(zfs, rates, &[], b_lab, site)?;
    let on = cw_pl(
        zfs,
        rates,
        &[MicrowaveMixing {
            transition,
            rate: w,
        }],
        b_lab,
        site,
    )?;
    Ok((on - off) / off)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    use crate::spin::{zeeman_hamiltonian, zfs_hamiltonian};

    fn rates_strategy() -> impl Strategy<Value = KineticRates> {
        (
            0.0..1.0f64,
            1.0..200.0f64,
            0.0..1.0f64,
            (0.01..1.0f64, 0.01..1.0f64, 0.01..1.0f64),
            (0.001..0.1f64, 0.001..0.1f64, 0.001..0.1f64),
        )
            .prop_map(|(p, f, phi, (a, b, c), (kx, ky, kz))| {
                let s = a + b + c;
                KineticRates {
                    pump_rate: p,
                    s1_decay_rate: f,
                    isc_yield: phi,
                    branching: [a / s, b / s, 1.0 - a / s - b / s],
                    depopulation: [kx, ky, kz],
                }
            })
    }

    #[test]
    fn negative_rates_are_rejected() {
        let r = KineticRates {
            pump_rate: -1.0,
            ..KineticRates::default()
        };
        assert!(matches!(
            rate_matrix(&r, &[]),
            Err(KineticsError::NegativeRate { .. })
        ));
        let mix = MicrowaveMixing {
            transition: Transition::XZ,
            rate: -0.1,
        };
        assert!(rate_matrix(&KineticRates::default(), &[mix]).is_err());
        let r = KineticRates {
            branching: [0.5, 0.5, 0.5],
            ..KineticRates::default()
        };
        assert!(matches!(r.validate(), Err(KineticsError::BadBranching(_))));
    }

    #[test]
    fn pure_s1_feeds_triplet_by_branching() {
        let r = KineticRates::default().with_pump(0.0);
        let g = rate_matrix(&r, &[]).unwrap();
        let m = g.matrix();
        assert_abs_diff_eq!(m[(S1, S1)], -r.s1_decay_rate);
        for i in 0..3 {
            assert_abs_diff_eq!(
                m[(tri(i), S1)],
                r.isc_yield * r.s1_decay_rate * r.branching[i],
                epsilon = 1e-15
            );
        }
    }

    #[test]
    fn zero_time_is_identity() {
        let n = LevelPopulations {
            s0: 0.2,
            s1: 0.1,
            triplet: [0.3, 0.25, 0.15],
        };
        let g = rate_matrix(&KineticRates::default(), &[]).unwrap();
        assert_eq!(evolve(&n, 0.0, &g).unwrap(), n);
        assert!(matches!(
            evolve(&n, -1.0, &g),
            Err(KineticsError::NegativeTime(_))
        ));
    }

    #[test]
    fn tz_decays_as_single_exponential() {
        let r = KineticRates::default().with_pump(0.0);
        let g = rate_matrix(&r, &[]).unwrap();
        let n0 = LevelPopulations {
            s0: 0.0,
            s1: 0.0,
            triplet: [0.0, 0.0, 1.0],
        };
        for t in [1.0, 37.0, 400.0] {
            let n = evolve(&n0, t, &g).unwrap();
            assert_abs_diff_eq!(
                n.triplet[2],
                (-r.depopulation[2] * t).exp(),
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn steady_state_matches_long_evolution() {
        let g = rate_matrix(&KineticRates::default(), &[]).unwrap();
        let ss = steady_state(&g).unwrap();
        let long = evolve(&LevelPopulations::ground(), 1e5, &g).unwrap();
        assert!((ss.to_vector() - long.to_vector()).amax() < 1e-7);
        assert_abs_diff_eq!(ss.total(), 1.0, epsilon = 1e-12);
        assert!((g.matrix() * ss.to_vector()).amax() < 1e-9);
    }

    #[test]
    fn vanishing_pump_collects_in_ground_state() {
        let g = rate_matrix(&KineticRates::default().with_pump(1e-9), &[]).unwrap();
        assert!(steady_state(&g).unwrap().s0 > 1.0 - 1e-6);
        let g = rate_matrix(&KineticRates::default().with_pump(0.0), &[]).unwrap();
        assert_abs_diff_eq!(steady_state(&g).unwrap().s0, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn disconnected_graph_reports_non_unique() {
        let r = KineticRates {
            pump_rate: 0.0,
            s1_decay_rate: 0.0,
            ..KineticRates::default()
        };
        let g = rate_matrix(&r, &[]).unwrap();
        assert!(matches!(
            steady_state(&g),
            Err(KineticsError::NonUniqueSteadyState(2))
        ));
    }

    #[test]
    fn strong_mixing_equalises_pair() {
        let mix = MicrowaveMixing {
            transition: Transition::XZ,
            rate: 1e6,
        };
        let g = rate_matrix(&KineticRates::default(), &[mix]).unwrap();
        let ss = steady_state(&g).unwrap();
        assert!((ss.triplet[0] - ss.triplet[2]).abs() < 1e-6 * ss.triplet[0]);
    }

    #[test]
    fn pl_is_linear_in_s1() {
        let r = KineticRates::default();
        let mut n = LevelPopulations::ground();
        assert_eq!(pl_rate(&n, &r), 0.0);
        n.s1 = 0.01;
        let a = pl_rate(&n, &r);
        n.s1 = 0.02;
        assert_abs_diff_eq!(pl_rate(&n, &r), 2.0 * a, epsilon = 1e-15);
    }

    #[test]
    fn microwaves_on_xz_reduce_cw_pl() {
        let c = cw_odmr_contrast(
            &ZfsParameters::pentacene(),
            &KineticRates::default(),
            Transition::XZ,
            1.0,
            &MagneticField::zero(),
            &MolecularOrientation::identity(),
        )
        .unwrap();
        assert!(c < 0.0);
    }

    #[test]
    fn cw_contrast_vanishes_without_drive() {
        for t in Transition::ALL {
            let c = cw_odmr_contrast(
                &ZfsParameters::pentacene(),
                &KineticRates::default(),
                t,
                0.0,
                &MagneticField::zero(),
                &MolecularOrientation::identity(),
            )
            .unwrap();
            assert_eq!(c, 0.0);
        }
    }

    #[test]
    fn zero_field_projection_is_identity() {
        let r = KineticRates::default();
        let e = eigensystem(&zfs_hamiltonian(&ZfsParameters::pentacene()));
        let p = project_rates(&e, &r);
        for i in 0..3 {
            assert_abs_diff_eq!(p.branching[i], r.branching[i], epsilon = 1e-12);
            assert_abs_diff_eq!(p.depopulation[i], r.depopulation[i], epsilon = 1e-12);
        }
    }

    #[test]
    fn high_field_projection_along_z() {
        // |±1> = (|Tx> ∓ i|Ty>)/√2 up to phase, |0> = |Tz>
        let r = KineticRates::default();
        let b = MagneticField::new(0.0, 0.0, 10_000.0).unwrap();
        let e =
            eigensystem(&(zfs_hamiltonian(&ZfsParameters::pentacene()) + zeeman_hamiltonian(&b)));
        let p = project_rates(&e, &r);
        let in_plane = (r.branching[0] + r.branching[1]) / 2.0;
        let z = Sublevel::Tz.index();
        assert_abs_diff_eq!(p.branching[z], r.branching[2], epsilon = 1e-6);
        for i in [Sublevel::Tx.index(), Sublevel::Ty.index()] {
            assert_abs_diff_eq!(p.branching[i], in_plane, epsilon = 1e-3);
        }
    }

    proptest! {
        #[test]
        fn generator_conserves_population(r in rates_strategy(), w in 0.0..10.0f64) {
            let g = rate_matrix(&r, &[MicrowaveMixing { transition: Transition::YZ, rate: w }]).unwrap();
            for s in g.column_sums() {
                prop_assert!(s.abs() < 1e-12);
            }
        }

        #[test]
        fn evolution_keeps_probability_vector(r in rates_strategy(), t in 0.0..1e4f64) {
            let g = rate_matrix(&r, &[]).unwrap();
            let n0 = LevelPopulations { s0: 0.5, s1: 0.1, triplet: [0.2, 0.1, 0.1] };
            let n = evolve(&n0, t, &g).unwrap();
            prop_assert!((n.total() - 1.0).abs() < 1e-9);
            prop_assert!(n.min() > -1e-9);
        }

        #[test]
        fn projection_preserves_branching_sum(
            x in -200.0..200.0f64, y in -200.0..200.0f64, z in -200.0..200.0f64,
        ) {
            let r = KineticRates::default();
            let b = MagneticField::new(x, y, z).unwrap();
            let e = eigensystem(&(zfs_hamiltonian(&ZfsParameters::pentacene()) + zeeman_hamiltonian(&b)));
            let p = project_rates(&e, &r);
            prop_assert!((p.branching.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            let kmin = r.depopulation.iter().copied().fold(f64::INFINITY, f64::min);
            let kmax = r.depopulation.iter().copied().fold(0.0, f64::max);
            for k in p.depopulation {
                prop_assert!(k >= kmin - 1e-12 && k <= kmax + 1e-12);
            }
        }
    }
}
