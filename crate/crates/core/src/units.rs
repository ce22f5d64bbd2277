//! SI constants and the unit conversions used at the laboratory boundary.

use std::f64::consts::PI;

/// Reduced Planck constant (J s).
pub const HBAR: f64 = 1.054_571_817e-34;
/// Bohr magneton (J/T).
pub const BOHR_MAGNETON: f64 = 9.274_010_078_3e-24;
/// Atomic mass unit (kg).
pub const ATOMIC_MASS_UNIT: f64 = 1.660_539_066_60e-27;

/// ⁸⁷Rb mass as used for the reference laboratory setup (0.144e-21 g).
pub const RB87_MASS_NOMINAL: f64 = 1.44e-25;
/// ⁸⁷Rb mass from the tabulated atomic mass 86.909 180 531 u.
pub const RB87_MASS_CODATA: f64 = 86.909_180_531 * ATOMIC_MASS_UNIT;

pub const TESLA_PER_METER_PER_GAUSS_PER_CM: f64 = 1e-2;

pub fn hz_to_rad_per_s(hz: f64) -> f64 {
    2.0 * PI * hz
}

pub fn rad_per_s_to_hz(omega: f64) -> f64 {
    omega / (2.0 * PI)
}

pub fn gauss_per_cm_to_tesla_per_m(gradient: f64) -> f64 {
    gradient * TESLA_PER_METER_PER_GAUSS_PER_CM
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn conversions() {
        assert_eq!(gauss_per_cm_to_tesla_per_m(1.0), 0.01);
        assert!((rad_per_s_to_hz(hz_to_rad_per_s(190.0)) - 190.0).abs() < 1e-12);
        assert!((RB87_MASS_CODATA / RB87_MASS_NOMINAL - 1.0).abs() < 3e-3);
    }
}
