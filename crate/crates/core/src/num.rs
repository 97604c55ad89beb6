//! Small float helpers that `core` does not provide.

/// `x^n` by repeated squaring.
pub(crate) fn powi(mut x: f64, mut n: u32) -> f64 {
    let mut acc = 1.0;
    while n > 0 {
        if n & 1 == 1 {
            acc *= x;
        }
        x *= x;
        n >>= 1;
    }
    acc
}

/// `1 - (1 - p)^n` without cancellation for small `n·p`.
pub(crate) fn one_minus_pow_complement(p: f64, n: u32) -> f64 {
    if p >= 1.0 {
        return if n == 0 { 0.0 } else { 1.0 };
    }
    -libm::expm1(n as f64 * libm::log1p(-p))
}

/// Rounds `x` to the nearest integer when it is within float noise of it,
/// otherwise floors. `0.29 * 100.0` is `28.999999999999996`.
pub(crate) fn floor_tolerant(x: f64) -> f64 {
    let nearest = libm::round(x);
    if (x - nearest).abs() <= 1e-9 * nearest.abs().max(1.0) {
        nearest
    } else {
        libm::floor(x)
    }
}
