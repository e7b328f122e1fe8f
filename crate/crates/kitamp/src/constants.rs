//! Physical constants (2019 SI exact values where defined).

/// Planck constant h (J·s), exact by SI definition.
pub const PLANCK: f64 = 6.626_070_15e-34;

/// Reduced Planck constant ħ = h/2π (J·s).
pub const HBAR: f64 = PLANCK / (2.0 * std::f64::consts::PI);

/// Boltzmann constant k_B (J/K), exact by SI definition.
pub const BOLTZMANN: f64 = 1.380_649e-23;
