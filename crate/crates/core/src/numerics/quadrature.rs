//! Adaptive Gauss–Kronrod quadrature and a tail integrator for slowly
//! decaying integrands on half-lines.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];

// Gauss weights for the odd-indexed Kronrod nodes 1, 3, 5 and the centre.
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Tolerances and limits for [`integrate`].
#[derive(Debug, Clone, Copy)]
pub struct QuadOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_intervals: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self {
            abs_tol: 0.0,
            rel_tol: 1e-12,
            max_intervals: 2000,
        }
    }
}

impl QuadOptions {
    pub fn rel(rel_tol: f64) -> Self {
        Self {
            rel_tol,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    pub error: f64,
}

struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let centre = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(centre);
    let mut res_k = fc * WGK[7];
    let mut res_g = fc * WG[3];
    let mut res_abs = res_k.abs();
    let mut fv = [(0.0, 0.0); 7];
    for (j, x) in XGK.iter().take(7).enumerate() {
        let dx = half * x;
        let f1 = f(centre - dx);
        let f2 = f(centre + dx);
        fv[j] = (f1, f2);
        res_k += WGK[j] * (f1 + f2);
        res_abs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            res_g += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = res_k * 0.5;
    let mut res_asc = WGK[7] * (fc - mean).abs();
    for (j, (f1, f2)) in fv.iter().enumerate() {
        res_asc += WGK[j] * ((f1 - mean).abs() + (f2 - mean).abs());
    }
    let value = res_k * half;
    let res_abs = res_abs * half.abs();
    let res_asc = res_asc * half.abs();
    let mut err = ((res_k - res_g) * half).abs();
    if res_asc != 0.0 && err != 0.0 {
        err = res_asc * (200.0 * err / res_asc).powf(1.5).min(1.0);
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * res_abs);
    }
    (value, err)
}

/// Globally adaptive Gauss–Kronrod (7/15) integration of `f` over `[a, b]`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, opts: QuadOptions) -> Result<QuadResult> {
    if a == b {
        return Ok(QuadResult {
            value: 0.0,
            error: 0.0,
        });
    }
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::Domain(format!("integration limits must be finite: [{a}, {b}]")));
    }
    let (value, error) = gk15(&f, a, b);
    if !value.is_finite() {
        return Err(Error::QuadratureNonConvergence { value, error });
    }
    let mut heap = BinaryHeap::new();
    heap.push(Segment { a, b, value, error });
    let mut total = value;
    let mut total_err = error;
    let mut intervals = 1;
    // Below this the per-segment roundoff floor of gk15 dominates.
    let rel_tol = opts.rel_tol.max(100.0 * f64::EPSILON);
    loop {
        let tol = opts.abs_tol.max(rel_tol * total.abs());
        if total_err <= tol {
            break;
        }
        if intervals >= opts.max_intervals {
            return Err(Error::QuadratureNonConvergence {
                value: total,
                error: total_err,
            });
        }
        let worst = heap.pop().expect("heap holds at least one segment");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // Segment cannot be split further in floating point; accept it.
            heap.push(Segment {
                error: 0.0,
                ..worst
            });
            total_err -= worst.error;
            continue;
        }
        let (v1, e1) = gk15(&f, worst.a, mid);
        let (v2, e2) = gk15(&f, mid, worst.b);
        if !(v1.is_finite() && v2.is_finite()) {
            return Err(Error::QuadratureNonConvergence {
                value: total,
                error: total_err,
            });
        }
        total += v1 + v2 - worst.value;
        total_err += e1 + e2 - worst.error;
        heap.push(Segment {
            a: worst.a,
            b: mid,
            value: v1,
            error: e1,
        });
        heap.push(Segment {
            a: mid,
            b: worst.b,
            value: v2,
            error: e2,
        });
        intervals += 1;
    }
    // Re-sum to shed the drift accumulated by incremental updates.
    let value: f64 = heap.iter().map(|s| s.value).sum();
    let error: f64 = heap.iter().map(|s| s.error).sum();
    Ok(QuadResult { value, error })
}

/// Integral of a nonnegative `f` over `[x0, ∞)` where `f(u)` decays at least
/// algebraically in `u`.
///
/// Beyond `u = 1` the substitution `u = e^w` turns algebraic decay into
/// geometric decay across unit panels in `w`; once the panel ratio settles
/// below one the remaining panels are summed as a geometric series.
pub fn integrate_log_tail<F: Fn(f64) -> f64>(f: F, x0: f64, rel_tol: f64) -> Result<QuadResult> {
    let opts = QuadOptions::rel(rel_tol * 0.1);
    let mut total = 0.0;
    let mut err = 0.0;
    let w0 = if x0 < 1.0 {
        let head = integrate(&f, x0, 1.0, opts)?;
        total += head.value;
        err += head.error;
        0.0
    } else {
        x0.ln()
    };
    let g = |w: f64| {
        let u = w.exp();
        let v = f(u) * u;
        if v.is_finite() {
            v
        } else {
            0.0
        }
    };
    const MAX_W: f64 = 700.0;
    let mut prev: Option<f64> = None;
    let mut prev_ratio: Option<f64> = None;
    let mut w = w0;
    while w < MAX_W {
        // Later panels only need accuracy relative to the running total.
        let panel_opts = QuadOptions {
            abs_tol: 0.1 * rel_tol * total.abs(),
            ..opts
        };
        let panel = integrate(g, w, w + 1.0, panel_opts)?;
        total += panel.value;
        err += panel.error;
        w += 1.0;
        if panel.value == 0.0 {
            return Ok(QuadResult { value: total, error: err });
        }
        if let Some(p) = prev {
            let ratio = panel.value / p;
            if ratio < 1.0 {
                let tail = panel.value * ratio / (1.0 - ratio);
                let settled = prev_ratio.is_some_and(|r| (r - ratio).abs() <= 0.05 * ratio.max(1e-3));
                if tail <= rel_tol * 1e-3 * total || (settled && tail <= rel_tol * total) {
                    // Geometric extrapolation, with its change since the
                    // previous panel as the error contribution.
                    let drift = prev_ratio.map_or(tail, |r| {
                        let alt = panel.value * r / (1.0 - r).max(f64::EPSILON);
                        (alt - tail).abs()
                    });
                    return Ok(QuadResult {
                        value: total + tail,
                        error: err + drift,
                    });
                }
            }
            prev_ratio = Some(ratio);
        }
        prev = Some(panel.value);
    }
    // Reached the representable range of u: extrapolate with the last ratio.
    match (prev, prev_ratio) {
        (Some(p), Some(r)) if r < 1.0 => Ok(QuadResult {
            value: total + p * r / (1.0 - r),
            error: err + p * r / (1.0 - r) * 0.1,
        }),
        _ => Err(Error::QuadratureNonConvergence { value: total, error: f64::INFINITY }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn polynomial_is_exact() {
        let r = integrate(|x| x * x * x - 2.0 * x, 0.0, 3.0, QuadOptions::default()).unwrap();
        assert_relative_eq!(r.value, 81.0 / 4.0 - 9.0, max_relative = 1e-14);
    }

    #[test]
    fn endpoint_singularity_converges() {
        let r = integrate(|x: f64| x.sqrt().recip(), 0.0, 1.0, QuadOptions::rel(1e-10)).unwrap();
        assert_relative_eq!(r.value, 2.0, max_relative = 1e-9);
    }

    #[test]
    fn algebraic_tail() {
        // ∫_2^∞ u^{-3/2} du = 2/√2
        let r = integrate_log_tail(|u: f64| u.powf(-1.5), 2.0, 1e-11).unwrap();
        assert_relative_eq!(r.value, 2.0 / 2f64.sqrt(), max_relative = 1e-10);
    }

    #[test]
    fn slow_algebraic_tail_from_below_one() {
        // ∫_{0.5}^∞ (1+u)^{-1.2} du = 1.5^{-0.2}/0.2
        let r = integrate_log_tail(|u: f64| (1.0 + u).powf(-1.2), 0.5, 1e-10).unwrap();
        assert_relative_eq!(r.value, 1.5f64.powf(-0.2) / 0.2, max_relative = 1e-8);
    }

    #[test]
    fn fast_tail() {
        let r = integrate_log_tail(|u: f64| (-u).exp(), 3.0, 1e-12).unwrap();
        assert_relative_eq!(r.value, (-3.0f64).exp(), max_relative = 1e-11);
    }

    #[test]
    fn divergent_tail_is_an_error() {
        assert!(integrate_log_tail(|u: f64| 1.0 / (1.0 + u), 0.0, 1e-8).is_err());
    }
}
