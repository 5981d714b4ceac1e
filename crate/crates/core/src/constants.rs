//! Physical constants (CODATA 2018) and species data.

/// Elementary charge, C.
pub const ELEMENTARY_CHARGE: f64 = 1.602_176_634e-19;

/// Vacuum permittivity, F/m.
pub const EPSILON_0: f64 = 8.854_187_812_8e-12;

/// Atomic mass unit, kg.
pub const ATOMIC_MASS_UNIT: f64 = 1.660_539_066_60e-27;

/// Mass of a ⁹Be⁺ ion, kg (atomic mass minus one electron).
pub const BE9_MASS: f64 = 9.012_183_065 * ATOMIC_MASS_UNIT - 9.109_383_701_5e-31;

/// Coulomb constant e²/(4πε₀), J·m.
pub fn coulomb_e2() -> f64 {
    ELEMENTARY_CHARGE * ELEMENTARY_CHARGE / (4.0 * std::f64::consts::PI * EPSILON_0)
}
