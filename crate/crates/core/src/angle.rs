//! Degree/radian helpers shared by the phase-handling modules.

pub fn deg_to_rad(deg: f64) -> f64 {
    deg.to_radians()
}

pub fn rad_to_deg(rad: f64) -> f64 {
    rad.to_degrees()
}

/// Reduce to [0, 360).
pub fn wrap_360(deg: f64) -> f64 {
    let r = deg.rem_euclid(360.0);
    // rem_euclid can round up to exactly 360 for tiny negative inputs
    if r >= 360.0 {
        0.0
    } else {
        r + 0.0
    }
}

/// Signed difference `a - b` reduced to (-180, 180].
pub fn wrap_180(deg: f64) -> f64 {
    let r = wrap_360(deg);
    if r > 180.0 {
        r - 360.0
    } else {
        r
    }
}

/// Shortest distance between two angles on the circle, in [0, 180].
pub fn circular_distance(a: f64, b: f64) -> f64 {
    wrap_180(a - b).abs()
}
