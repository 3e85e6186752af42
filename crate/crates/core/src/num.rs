//! Small numeric helpers shared across modules. Transcendentals come from
//! `libm` so the crate stays `no_std`.

pub(crate) fn fabs(x: f64) -> f64 {
    libm::fabs(x)
}

pub(crate) fn exp(x: f64) -> f64 {
    libm::exp(x)
}

/// Equality up to `eps`, with infinities equal to themselves.
pub(crate) fn approx_eq(a: f64, b: f64, eps: f64) -> bool {
    a == b || fabs(a - b) <= eps
}

/// Product on `[0, inf]` with the convention `0 * inf = 0`.
pub(crate) fn mul_ext(a: f64, b: f64) -> f64 {
    if a == 0.0 || b == 0.0 {
        0.0
    } else {
        a * b
    }
}
