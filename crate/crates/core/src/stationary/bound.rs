use crate::error::{Error, Result};
use crate::nonlinearity::NonlinearitySpec;
use crate::numerics::quadrature::{integrate, integrate_log_tail, QuadOptions};
use crate::numerics::roots::{newton_bisect, RootOptions};

use super::{ProfileKind, RadialProfile};

// The integrand carries the ~1e-12 noise of the inner primitive quadrature.
const QUAD_REL: f64 = 1e-10;

// d/du of F in the variable u = ln s: e^u / √H(e^u).
fn integrand(spec: &NonlinearitySpec, u: f64) -> f64 {
    match spec.ln_primitive_at_log(u) {
        Ok(l) => (u - 0.5 * l).exp(),
        Err(_) => f64::NAN,
    }
}

/// `F_b(v) = ∫_b^v ds/√H(s)` with `b = e^{ln_b}`, `v = e^{ln_v}`.
pub fn keller_osserman_integral(spec: &NonlinearitySpec, ln_b: f64, ln_v: f64) -> Result<f64> {
    let r = integrate(|u| integrand(spec, u), ln_b, ln_v, QuadOptions::rel(QUAD_REL))?;
    if r.value.is_nan() {
        return Err(Error::QuadratureNonConvergence { value: r.value, error: r.error });
    }
    Ok(r.value)
}

/// `∫_v^∞ ds/√H(s)`; finite exactly when the Keller–Osserman condition holds.
pub fn keller_osserman_tail_from(spec: &NonlinearitySpec, v: f64) -> Result<f64> {
    if !(v > 0.0) {
        return Err(Error::Domain(format!("tail integral needs v > 0, got {v}")));
    }
    if !spec.keller_osserman_holds()? {
        return Err(Error::Precondition("∫^∞ ds/√H(s) diverges for this nonlinearity".into()));
    }
    let ln_v = v.ln();
    // Past u = 1 the log-tail integrator handles algebraic decay in u; below
    // that, integrate directly up to u = 1.
    let head = if ln_v < 1.0 { keller_osserman_integral(spec, ln_v, 1.0)? } else { 0.0 };
    let tail = integrate_log_tail(|u| integrand(spec, u), ln_v.max(1.0), QUAD_REL)?;
    Ok(head + tail.value)
}

/// `ln V̄_b(R)`, where `F_b(V̄_b(R)) = √2 R`.
pub fn apriori_bound_log(spec: &NonlinearitySpec, b: f64, radius: f64) -> Result<f64> {
    if !(b > 0.0 && b.is_finite()) {
        return Err(Error::Domain(format!("b must be positive and finite, got {b}")));
    }
    if !(radius >= 0.0 && radius.is_finite()) {
        return Err(Error::Domain(format!("R must be finite and nonnegative, got {radius}")));
    }
    let ln_b = b.ln();
    if radius == 0.0 {
        return Ok(ln_b);
    }
    let target = std::f64::consts::SQRT_2 * radius;
    if spec.keller_osserman_holds()? {
        let total = keller_osserman_tail_from(spec, b)?;
        if total <= target {
            return Err(Error::Bracket(format!(
                "F_b saturates at {total:.6e} <= √2 R = {target:.6e}; the a-priori bound is infinite"
            )));
        }
    }
    let f = |x: f64| keller_osserman_integral(spec, ln_b, x);
    let mut step = 1.0;
    let mut lo = ln_b;
    let mut hi = ln_b + step;
    while f(hi)? < target {
        lo = hi;
        step *= 2.0;
        hi = ln_b + step;
        if hi > 1e300 {
            return Err(Error::Overflow { radius, limit: 1e300 });
        }
    }
    let root = newton_bisect(
        |x| Ok((f(x)? - target, integrand(spec, x))),
        lo,
        hi,
        RootOptions {
            x_tol: 1e-11 * hi.abs().max(1.0),
            max_iter: 300,
        },
    )?;
    Ok(root.x)
}

/// `V̄_b(R)`; overflows to an error when the bound exceeds the double range.
pub fn apriori_bound(spec: &NonlinearitySpec, b: f64, radius: f64) -> Result<f64> {
    let x = apriori_bound_log(spec, b, radius)?;
    if radius == 0.0 {
        return Ok(b);
    }
    let v = x.exp();
    if !v.is_finite() {
        return Err(Error::Overflow { radius, limit: f64::MAX });
    }
    Ok(v)
}

/// `V̄_b` sampled on a radial grid, stored in `W = ln(1 + V̄)` like every
/// other profile. The slope uses `dV̄/dR = √(2 H(V̄))`.
pub fn apriori_profile(spec: &NonlinearitySpec, b: f64, dimension: usize, grid: &[f64]) -> Result<RadialProfile> {
    let mut ws = Vec::with_capacity(grid.len());
    let mut dws = Vec::with_capacity(grid.len());
    for &r in grid {
        let x = apriori_bound_log(spec, b, r)?;
        let w = if x > 40.0 { x + (-x).exp() } else { x.exp().ln_1p() };
        // dW/dR = √(2H(V)) / (1 + V), evaluated in logs.
        let ln_h = spec.ln_primitive_at_log(x)?;
        let dw = (0.5 * (2f64.ln() + ln_h) - w).exp();
        ws.push(w);
        dws.push(dw);
    }
    Ok(RadialProfile {
        radii: grid.to_vec(),
        w_values: ws,
        dw_values: dws,
        dimension,
        center_value: b,
        kind: ProfileKind::AprioriBound,
    })
}
