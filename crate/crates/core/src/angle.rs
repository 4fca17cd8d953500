//! Angle reduction helpers. Reduced angles live in `[-π, π)`.

use std::f64::consts::{PI, TAU};

/// Representative of `s` in `[-π, π)`.
pub fn wrap(s: f64) -> f64 {
    let mut r = s - TAU * ((s + PI) / TAU).floor();
    if r >= PI {
        r -= TAU;
    }
    if r < -PI {
        r += TAU;
    }
    r
}

/// Representative of `s` in `[0, 2π)`.
pub fn wrap_positive(s: f64) -> f64 {
    let mut r = s - TAU * (s / TAU).floor();
    if r >= TAU {
        r -= TAU;
    }
    if r < 0.0 {
        r += TAU;
    }
    r
}

/// Distance between two angles on the circle, in `[0, π]`.
pub fn circular_distance(a: f64, b: f64) -> f64 {
    wrap(a - b).abs()
}
