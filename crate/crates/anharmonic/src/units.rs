//! Unit conversions between interface values (MHz, µs) and internal angular
//! units (rad/s, s) with ħ = 1.

use std::f64::consts::TAU;

/// Convert a frequency given in MHz (cycles) to angular rad/s.
pub fn mhz(f: f64) -> f64 {
    TAU * 1.0e6 * f
}

/// Convert an angular frequency (rad/s) back to MHz (cycles).
pub fn to_mhz(w: f64) -> f64 {
    w / (TAU * 1.0e6)
}

/// Convert microseconds to seconds.
pub fn us(t: f64) -> f64 {
    t * 1.0e-6
}

/// Convert seconds to microseconds.
pub fn to_us(t: f64) -> f64 {
    t * 1.0e6
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip() {
        assert!((to_mhz(mhz(10.0)) - 10.0).abs() < 1e-12);
        assert!((mhz(250.0) - TAU * 2.5e8).abs() < 1e-3);
        assert!((to_us(us(50.0)) - 50.0).abs() < 1e-12);
    }
}
