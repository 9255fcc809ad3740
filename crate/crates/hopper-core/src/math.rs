//! Scalar math shims.
//!
//! `core` has no transcendental float methods, so these route through
//! `libm` to keep the crate `no_std`-clean with identical results under
//! both feature sets.

#[inline(always)]
pub(crate) fn sin(x: f64) -> f64 {
    libm::sin(x)
}

#[inline(always)]
pub(crate) fn cos(x: f64) -> f64 {
    libm::cos(x)
}

#[inline(always)]
pub(crate) fn exp(x: f64) -> f64 {
    libm::exp(x)
}

#[inline(always)]
pub(crate) fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

#[inline(always)]
pub(crate) fn hypot(x: f64, y: f64) -> f64 {
    libm::hypot(x, y)
}

#[inline(always)]
pub(crate) fn powf(x: f64, y: f64) -> f64 {
    libm::pow(x, y)
}

/// Euclidean norm of a fixed-size vector.
#[inline]
pub(crate) fn norm<const N: usize>(v: &[f64; N]) -> f64 {
    let mut acc = 0.0;
    for x in v {
        acc += x * x;
    }
    sqrt(acc)
}
