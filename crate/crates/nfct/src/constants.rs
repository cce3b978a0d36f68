//! Physical constants (SI units).

/// Speed of light in vacuum, m/s.
pub const C0: f64 = 299_792_458.0;

/// Vacuum permittivity, F/m (2018 CODATA).
pub const EPSILON_0: f64 = 8.854_187_812_8e-12;
