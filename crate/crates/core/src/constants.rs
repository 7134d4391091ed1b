//! Physical constants (SI, 2018 CODATA).

/// Reduced Planck constant [J s].
pub const HBAR: f64 = 1.054_571_817e-34;
/// Vacuum permittivity [F/m].
pub const EPSILON_0: f64 = 8.854_187_812_8e-12;
/// Elementary charge [C].
pub const ELEMENTARY_CHARGE: f64 = 1.602_176_634e-19;
/// Atomic mass unit [kg].
pub const ATOMIC_MASS: f64 = 1.660_539_066_60e-27;
/// Mass of 171Yb+ [kg].
pub const YB171_MASS: f64 = 170.936_33 * ATOMIC_MASS;
