//! The smooth compactly supported profiles used throughout.

/// `exp(k (1 - 1/(1 - s2)))` for `s2 < 1`, zero otherwise.
///
/// `s2` is the squared scaled distance; the peak value 1 is attained at 0.
#[inline]
pub fn bump_sq(s2: f64, sharpness: f64) -> f64 {
    if s2 >= 1.0 {
        0.0
    } else {
        (sharpness * (1.0 - 1.0 / (1.0 - s2))).exp()
    }
}

/// One-dimensional bump on (-1, 1) with sharpness 1.
#[inline]
pub fn bump(s: f64) -> f64 {
    bump_sq(s * s, 1.0)
}

#[inline]
fn edge(s: f64) -> f64 {
    if s <= 0.0 {
        0.0
    } else {
        (-1.0 / s).exp()
    }
}

/// Radial cutoff: 1 on `[0, 1]`, 0 on `[2, inf)`, smooth and monotone between.
///
/// Defined as `e(2 - r) / (e(2 - r) + e(r - 1))` with `e(s) = exp(-1/s)` for
/// `s > 0`, the usual glueing of two one-sided flat functions.
#[inline]
pub fn cutoff(r: f64) -> f64 {
    let r = r.abs();
    if r <= 1.0 {
        1.0
    } else if r >= 2.0 {
        0.0
    } else {
        let a = edge(2.0 - r);
        a / (a + edge(r - 1.0))
    }
}
