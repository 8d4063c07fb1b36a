//! Dormand–Prince 5(4) embedded Runge–Kutta integrator with step-size control.

use crate::error::{Error, Result};

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// Difference between the 5th- and 4th-order weights.
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

#[derive(Debug, Clone, Copy)]
pub struct Rk45Options {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_steps: usize,
}

impl Default for Rk45Options {
    fn default() -> Self {
        Self {
            rel_tol: 1e-9,
            abs_tol: 1e-12,
            max_steps: 1_000_000,
        }
    }
}

/// Outcome of advancing to a target abscissa.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Advance<const D: usize> {
    Reached([f64; D]),
    /// The stop predicate fired; carries the abscissa and state at which it did.
    Stopped(f64, [f64; D]),
}

/// Integrator state that can be advanced segment by segment while keeping
/// its step-size history.
pub struct DormandPrince<F, const D: usize> {
    rhs: F,
    opts: Rk45Options,
    x: f64,
    y: [f64; D],
    h: f64,
    steps: usize,
}

fn axpy<const D: usize>(y: &[f64; D], terms: &[(f64, &[f64; D])]) -> [f64; D] {
    let mut out = *y;
    for (c, k) in terms {
        for i in 0..D {
            out[i] += c * k[i];
        }
    }
    out
}

impl<F, const D: usize> DormandPrince<F, D>
where
    F: Fn(f64, &[f64; D]) -> [f64; D],
{
    pub fn new(rhs: F, x0: f64, y0: [f64; D], h0: f64, opts: Rk45Options) -> Self {
        Self {
            rhs,
            opts,
            x: x0,
            y: y0,
            h: h0,
            steps: 0,
        }
    }

    pub fn position(&self) -> (f64, [f64; D]) {
        (self.x, self.y)
    }

    /// Advances to `x_end`, stopping early if `stop` returns true on an
    /// accepted state.
    pub fn advance_to<S>(&mut self, x_end: f64, stop: S) -> Result<Advance<D>>
    where
        S: Fn(&[f64; D]) -> bool,
    {
        while self.x < x_end {
            if self.steps >= self.opts.max_steps {
                return Err(Error::Tolerance {
                    residual: f64::NAN,
                    context: format!("RK45 exceeded {} steps at x = {}", self.opts.max_steps, self.x),
                });
            }
            let mut h = self.h.min(x_end - self.x);
            let x = self.x;
            let y = self.y;
            let k1 = (self.rhs)(x, &y);
            loop {
                let last = h >= x_end - x;
                let k2 = (self.rhs)(x + C2 * h, &axpy(&y, &[(h * A21, &k1)]));
                let k3 = (self.rhs)(x + C3 * h, &axpy(&y, &[(h * A31, &k1), (h * A32, &k2)]));
                let k4 = (self.rhs)(
                    x + C4 * h,
                    &axpy(&y, &[(h * A41, &k1), (h * A42, &k2), (h * A43, &k3)]),
                );
                let k5 = (self.rhs)(
                    x + C5 * h,
                    &axpy(&y, &[(h * A51, &k1), (h * A52, &k2), (h * A53, &k3), (h * A54, &k4)]),
                );
                let k6 = (self.rhs)(
                    x + h,
                    &axpy(
                        &y,
                        &[(h * A61, &k1), (h * A62, &k2), (h * A63, &k3), (h * A64, &k4), (h * A65, &k5)],
                    ),
                );
                let y5 = axpy(&y, &[(h * B1, &k1), (h * B3, &k3), (h * B4, &k4), (h * B5, &k5), (h * B6, &k6)]);
                let k7 = (self.rhs)(x + h, &y5);
                let mut err: f64 = 0.0;
                let mut finite = true;
                for i in 0..D {
                    let e = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
                    let sc = self.opts.abs_tol + self.opts.rel_tol * y[i].abs().max(y5[i].abs());
                    let q = e / sc;
                    finite &= q.is_finite() && y5[i].is_finite();
                    err = err.max(q.abs());
                }
                self.steps += 1;
                if finite && err <= 1.0 {
                    let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
                    self.x = if last { x_end } else { x + h };
                    self.y = y5;
                    if !last {
                        self.h = h * factor;
                    } else {
                        // Keep the controller's step for the next segment.
                        self.h = self.h.max(h * factor.min(1.0));
                    }
                    if stop(&self.y) {
                        return Ok(Advance::Stopped(self.x, self.y));
                    }
                    break;
                }
                let factor = if finite { (0.9 * err.powf(-0.2)).clamp(0.1, 0.5) } else { 0.25 };
                h *= factor;
                self.h = h;
                if h < 1e-14 * x.abs().max(1.0) {
                    return Err(Error::Tolerance {
                        residual: err,
                        context: format!("RK45 step size underflow at x = {x}"),
                    });
                }
                if self.steps >= self.opts.max_steps {
                    return Err(Error::Tolerance {
                        residual: err,
                        context: "RK45 exceeded step budget during rejection".into(),
                    });
                }
            }
        }
        Ok(Advance::Reached(self.y))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_oscillator() {
        let mut dp = DormandPrince::new(|_x, y: &[f64; 2]| [y[1], -y[0]], 0.0, [0.0, 1.0], 1e-3, Rk45Options::default());
        let mut last = [0.0; 2];
        for k in 1..=10 {
            let x = k as f64;
            match dp.advance_to(x, |_| false).unwrap() {
                Advance::Reached(y) => {
                    assert!((y[0] - x.sin()).abs() < 1e-8, "x={x}: {} vs {}", y[0], x.sin());
                    last = y;
                }
                Advance::Stopped(..) => unreachable!(),
            }
        }
        assert!((last[1] - 10f64.cos()).abs() < 1e-8);
    }

    #[test]
    fn stop_predicate_fires() {
        // y' = y² blows up at x = 1 from y(0) = 1.
        let mut dp = DormandPrince::new(|_x, y: &[f64; 1]| [y[0] * y[0]], 0.0, [1.0], 1e-3, Rk45Options::default());
        match dp.advance_to(2.0, |y| y[0] > 1e6).unwrap() {
            Advance::Stopped(x, _) => assert!((x - 1.0).abs() < 1e-5),
            Advance::Reached(_) => panic!("expected blow-up"),
        }
    }

    #[test]
    fn rejected_final_step_does_not_skip_ahead() {
        // A huge initial step is rejected on the very first, and final, step
        // of the segment; the solution must still be exact.
        let mut dp = DormandPrince::new(|_x, y: &[f64; 1]| [y[0]], 0.0, [1.0], 10.0, Rk45Options::default());
        match dp.advance_to(5.0, |_| false).unwrap() {
            Advance::Reached(y) => assert!((y[0] / 5f64.exp() - 1.0).abs() < 1e-8, "{}", y[0]),
            Advance::Stopped(..) => unreachable!(),
        }
    }
}
