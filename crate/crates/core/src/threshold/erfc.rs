//! Complementary error function `erfc(x) = 2/√π ∫_x^∞ e^{−z²} dz`.
//!
//! Maclaurin series below `|x| = 2`, Lentz evaluation of the Laplace
//! continued fraction above. The continued fraction is carried in scaled form
//! `e^{x²} erfc(x)` so `ln_erfc` never underflows.

use std::f64::consts::PI;

const SERIES_LIMIT: f64 = 2.0;
const FRAC_2_SQRT_PI: f64 = std::f64::consts::FRAC_2_SQRT_PI;

fn erf_series(x: f64) -> f64 {
    let x2 = x * x;
    let mut term = x;
    let mut sum = x;
    let mut n = 0.0;
    loop {
        n += 1.0;
        term *= -x2 / n;
        let contrib = term / (2.0 * n + 1.0);
        sum += contrib;
        if contrib.abs() <= 1e-17 * sum.abs() {
            break;
        }
    }
    FRAC_2_SQRT_PI * sum
}

/// `e^{x²} erfc(x)` for `x ≥ 2`:
/// `1/√π · 1/(x + (1/2)/(x + 1/(x + (3/2)/(x + …))))`.
fn erfc_scaled_cf(x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let mut f = x;
    let mut c = x;
    let mut d = 0.0;
    for k in 1..10_000 {
        let a = 0.5 * k as f64;
        d = x + a * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = x + a / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = c * d;
        f *= delta;
        if (delta - 1.0).abs() <= 1e-16 {
            break;
        }
    }
    1.0 / (PI.sqrt() * f)
}

pub fn erfc(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x.abs() < SERIES_LIMIT {
        1.0 - erf_series(x)
    } else if x > 0.0 {
        if x > 27.3 {
            return 0.0;
        }
        (-x * x).exp() * erfc_scaled_cf(x)
    } else {
        2.0 - erfc(-x)
    }
}

/// `e^{x²} erfc(x)`.
pub fn erfc_scaled(x: f64) -> f64 {
    if x >= SERIES_LIMIT {
        erfc_scaled_cf(x)
    } else {
        (x * x).exp() * erfc(x)
    }
}

/// `ln erfc(x)`, finite for every finite `x`.
pub fn ln_erfc(x: f64) -> f64 {
    if x >= SERIES_LIMIT {
        -x * x + erfc_scaled_cf(x).ln()
    } else {
        erfc(x).ln()
    }
}
