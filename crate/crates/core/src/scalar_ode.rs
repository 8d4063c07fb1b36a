//! The flat absorption ODE `Φ' + Φ h(Φ) = 0`, solved by inverting its
//! separable integral rather than by time stepping.
//!
//! All root finding happens in `x = ln Φ`, where the time to decay from
//! `e^{x₁}` to `e^{x₀}` is `∫_{x₀}^{x₁} du / h(e^u)`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::nonlinearity::{softplus, NonlinearitySpec};
use crate::numerics::quadrature::{integrate, integrate_log_tail, QuadOptions};
use crate::numerics::roots::{newton_bisect, RootOptions};
use crate::table::Table;

const QUAD_REL: f64 = 1e-13;
const LOG_FLOOR: f64 = -700.0;
/// Largest `Φ_∞` returned in linear scale.
pub const PHI_MAX: f64 = 1e300;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum InitialDatum {
    Finite(f64),
    Infinite,
}

/// Samples of `Φ_a` or `Φ_∞` on a time grid.
#[derive(Debug, Clone, Serialize)]
pub struct FlatTrajectory {
    pub times: Vec<f64>,
    /// `Φ(t_i)`; saturates at `f64::MAX` where `ln Φ` exceeds the double range.
    pub values: Vec<f64>,
    pub ln_values: Vec<f64>,
    pub initial_datum: InitialDatum,
    pub description: String,
}

impl FlatTrajectory {
    /// `ln(1 + Φ(t_i))`.
    pub fn log1p_values(&self) -> Vec<f64> {
        self.ln_values.iter().map(|&l| softplus(l)).collect()
    }

    pub fn to_table(&self) -> Table {
        let mut t = Table::new(["t", "phi"]);
        for (&ti, &v) in self.times.iter().zip(&self.values) {
            t.push(vec![ti, v]);
        }
        t
    }
}

pub(crate) fn validate_times(times: &[f64]) -> Result<()> {
    if times.is_empty() {
        return Err(Error::InvalidGrid("time grid is empty".into()));
    }
    if !(times[0] >= 0.0) {
        return Err(Error::InvalidGrid(format!("first time must be nonnegative, got {}", times[0])));
    }
    for w in times.windows(2) {
        if !(w[1] > w[0]) || !w[1].is_finite() {
            return Err(Error::InvalidGrid(format!("times must be finite and strictly increasing: {} then {}", w[0], w[1])));
        }
    }
    Ok(())
}

/// Time needed to decay from `e^{x_hi}` to `e^{x_lo}`.
pub fn decay_time(spec: &NonlinearitySpec, x_lo: f64, x_hi: f64) -> Result<f64> {
    let r = integrate(|u| 1.0 / spec.h_of_exp(u), x_lo, x_hi, QuadOptions::rel(QUAD_REL))?;
    Ok(r.value)
}

/// `G(x) = ∫_{e^x}^∞ ds/(s h(s)) = ∫_x^∞ du/h(e^u)`.
pub fn osgood_tail_at_log(spec: &NonlinearitySpec, x: f64) -> Result<f64> {
    Ok(integrate_log_tail(|u| 1.0 / spec.h_of_exp(u), x, QUAD_REL)?.value)
}

/// `G(v)` for `v > 0`.
pub fn osgood_tail(spec: &NonlinearitySpec, v: f64) -> Result<f64> {
    if !(v > 0.0) {
        return Err(Error::Domain(format!("G(v) needs v > 0, got {v}")));
    }
    osgood_tail_at_log(spec, v.ln())
}

/// `ln Φ_a(t)` for `a = e^{ln_a}`.
pub fn solve_phi_log(spec: &NonlinearitySpec, ln_a: f64, t: f64) -> Result<f64> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::Domain(format!("time must be finite and nonnegative, got {t}")));
    }
    if !ln_a.is_finite() {
        return Err(Error::Domain(format!("ln a must be finite, got {ln_a}")));
    }
    if t == 0.0 {
        return Ok(ln_a);
    }
    // Walk down from ln a in widening segments, keeping the time already
    // spent so each quadrature only covers one segment.
    let mut step = 1.0f64;
    let mut x_hi = ln_a;
    let mut elapsed = 0.0;
    loop {
        if x_hi <= LOG_FLOOR {
            return Err(Error::Tolerance {
                residual: t,
                context: format!("Φ_a(t) underflows below e^{LOG_FLOOR} at t = {t}"),
            });
        }
        let x_lo = (x_hi - step).max(LOG_FLOOR);
        let segment = decay_time(spec, x_lo, x_hi)?;
        if elapsed + segment > t {
            break;
        }
        elapsed += segment;
        x_hi = x_lo;
        step = (2.0 * step).min(64.0);
    }
    let x_lo = (x_hi - step).max(LOG_FLOOR);
    let root = newton_bisect(
        |x| Ok((elapsed + decay_time(spec, x, x_hi)? - t, -1.0 / spec.h_of_exp(x))),
        x_lo,
        x_hi,
        RootOptions {
            x_tol: 1e-13 * ln_a.abs().max(1.0),
            max_iter: 200,
        },
    )?;
    check_residual(spec, root.x, root.residual, t)?;
    Ok(root.x)
}

// Converts the time residual into the implied error in ln Φ, which is the
// quantity the 1e-10 relative tolerance on Φ refers to.
fn check_residual(spec: &NonlinearitySpec, x: f64, residual: f64, t: f64) -> Result<()> {
    let implied = residual.abs() * spec.h_of_exp(x);
    if implied > 1e-10f64.max(1e-14 * x.abs()) {
        return Err(Error::Tolerance {
            residual,
            context: format!("time residual at t = {t} implies a relative error {implied:e} in Φ"),
        });
    }
    Ok(())
}

/// `Φ_a(t)` on a time grid.
pub fn solve_phi(spec: &NonlinearitySpec, a: f64, times: &[f64]) -> Result<FlatTrajectory> {
    if !(a > 0.0 && a.is_finite()) {
        return Err(Error::Domain(format!("initial datum must be positive and finite, got {a}")));
    }
    validate_times(times)?;
    let ln_values = times.iter().map(|&t| solve_phi_log(spec, a.ln(), t)).collect::<Result<Vec<_>>>()?;
    let values = times.iter().zip(&ln_values).map(|(&t, l)| if t == 0.0 { a } else { l.exp() }).collect();
    Ok(FlatTrajectory {
        times: times.to_vec(),
        values,
        ln_values,
        initial_datum: InitialDatum::Finite(a),
        description: spec.description().to_string(),
    })
}

/// `ln Φ_∞(t)`, the root of `G(x) = t`. Finite for every `t > 0` under the
/// Osgood condition, even where `Φ_∞(t)` itself exceeds the double range.
pub fn ln_phi_infinity(spec: &NonlinearitySpec, t: f64) -> Result<f64> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::Domain(format!("Φ_∞(t) needs finite t > 0, got {t}")));
    }
    if !spec.osgood_holds()? {
        return Err(Error::Precondition("Φ_∞ exists only when ∫^∞ ds/(s h(s)) converges".into()));
    }
    let g = |x: f64| osgood_tail_at_log(spec, x);
    let mut x_hi = 1.0;
    while g(x_hi)? > t {
        x_hi *= 2.0;
        if x_hi > 1e300 {
            return Err(Error::Overflow { radius: t, limit: 1e300 });
        }
    }
    let mut step = 1.0f64.max(0.5 * x_hi);
    let mut x_lo = x_hi - step;
    while g(x_lo)? <= t {
        if x_lo <= LOG_FLOOR {
            return Err(Error::Tolerance {
                residual: t,
                context: format!("Φ_∞(t) underflows at t = {t}"),
            });
        }
        step *= 2.0;
        x_lo = (x_hi - step).max(LOG_FLOOR);
    }
    let root = newton_bisect(
        |x| Ok((g(x)? - t, -1.0 / spec.h_of_exp(x))),
        x_lo,
        x_hi,
        RootOptions {
            x_tol: 1e-13 * x_hi.abs().max(1.0),
            max_iter: 300,
        },
    )?;
    check_residual(spec, root.x, root.residual, t)?;
    Ok(root.x)
}

/// `Φ_∞(t)`; errors when the value exceeds [`PHI_MAX`].
pub fn solve_phi_infinity(spec: &NonlinearitySpec, t: f64) -> Result<f64> {
    let x = ln_phi_infinity(spec, t)?;
    let v = x.exp();
    if v > PHI_MAX {
        return Err(Error::Overflow { radius: t, limit: PHI_MAX });
    }
    Ok(v)
}

/// `Φ_∞` on a grid of positive times.
pub fn phi_infinity_trajectory(spec: &NonlinearitySpec, times: &[f64]) -> Result<FlatTrajectory> {
    validate_times(times)?;
    if times[0] <= 0.0 {
        return Err(Error::InvalidGrid("Φ_∞ is infinite at t = 0".into()));
    }
    let ln_values = times.iter().map(|&t| ln_phi_infinity(spec, t)).collect::<Result<Vec<_>>>()?;
    Ok(FlatTrajectory {
        times: times.to_vec(),
        values: ln_values.iter().map(|l| l.exp().min(f64::MAX)).collect(),
        ln_values,
        initial_datum: InitialDatum::Infinite,
        description: spec.description().to_string(),
    })
}

/// `∫_0^t h(Φ_a(s)) ds`, which equals `ln a − ln Φ_a(t)` because
/// `(ln Φ)' = −h(Φ)`.
pub fn absorption_integral(spec: &NonlinearitySpec, ln_a: f64, t: f64) -> Result<f64> {
    Ok(ln_a - solve_phi_log(spec, ln_a, t)?)
}
