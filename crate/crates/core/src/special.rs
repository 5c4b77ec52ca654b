//! Standard normal density and distribution function.

use core::f64::consts::{FRAC_1_SQRT_2, PI};

/// `½ log(2π)`.
pub const HALF_LN_2PI: f64 = 0.918_938_533_204_672_8;

pub fn normal_pdf(x: f64) -> f64 {
    libm::exp(-0.5 * x * x) / libm::sqrt(2.0 * PI)
}

pub fn normal_log_pdf(x: f64) -> f64 {
    -0.5 * x * x - HALF_LN_2PI
}

/// Φ(x), accurate in both tails.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x * FRAC_1_SQRT_2)
}

/// γ([-a, a]) in one dimension.
pub fn interval_mass(a: f64) -> f64 {
    if a <= 0.0 {
        return 0.0;
    }
    libm::erf(a * FRAC_1_SQRT_2)
}

/// γ([lo, hi]) in one dimension, computed from the nearer tail.
pub fn interval_mass_between(lo: f64, hi: f64) -> f64 {
    if hi <= lo {
        return 0.0;
    }
    if lo >= 0.0 {
        normal_cdf(-lo) - normal_cdf(-hi)
    } else if hi <= 0.0 {
        normal_cdf(hi) - normal_cdf(lo)
    } else {
        1.0 - normal_cdf(lo) - normal_cdf(-hi)
    }
}
