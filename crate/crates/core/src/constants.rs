//! Physical constants (CODATA 2018, SI).

/// Reduced Planck constant in J s.
pub const HBAR: f64 = 1.054_571_817e-34;

/// Boltzmann constant in J/K (exact in the 2019 SI).
pub const K_B: f64 = 1.380_649e-23;

pub const TAU: f64 = std::f64::consts::TAU;

/// Ordinary frequency in Hz to angular frequency in rad/s.
#[inline]
pub fn angular(hz: f64) -> f64 {
    TAU * hz
}

/// Angular frequency in rad/s to ordinary frequency in Hz.
#[inline]
pub fn ordinary(rad_per_s: f64) -> f64 {
    rad_per_s / TAU
}
