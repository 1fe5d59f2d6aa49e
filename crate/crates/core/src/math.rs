//! Scalar math routed through `libm` so the crate builds without `std`.

#[inline]
pub(crate) fn ln(x: f64) -> f64 {
    libm::log(x)
}

#[inline]
pub(crate) fn exp(x: f64) -> f64 {
    libm::exp(x)
}

#[inline]
pub(crate) fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

#[inline]
pub(crate) fn lgamma(x: f64) -> f64 {
    libm::lgamma(x)
}

/// `ln(x/y)` for positive `x`, `y`; used by likelihood sums.
#[inline]
pub(crate) fn ln_ratio(x: f64, y: f64) -> f64 {
    libm::log(x / y)
}
