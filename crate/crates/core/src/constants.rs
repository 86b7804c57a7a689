//! Physical constants (CODATA, six significant figures) and unit conversions.
//!
//! Everything in the crate that needs a physical constant reads it from here.

/// Reduced Planck constant, J·s.
pub const HBAR: f64 = 1.05457e-34;

/// Planck constant, J·s.
pub const PLANCK: f64 = 6.62607e-34;

/// Bohr magneton, J/T.
pub const BOHR_MAGNETON: f64 = 9.27401e-24;

/// Free-electron g factor used throughout (isotropic, g = 2).
pub const G_ELECTRON: f64 = 2.0;

/// g·µB/h in MHz per mT (≈ 27.992 MHz/mT).
pub const GYROMAGNETIC_MHZ_PER_MT: f64 = G_ELECTRON * BOHR_MAGNETON / PLANCK * 1e-9;

/// Cubic ångströms per cubic micrometre.
pub const ANGSTROM3_PER_UM3: f64 = 1e12;

/// Tesla to nanotesla.
pub const NT_PER_T: f64 = 1e9;

/// m^{3/2} to µm^{3/2}.
pub const UM32_PER_M32: f64 = 1e9;
