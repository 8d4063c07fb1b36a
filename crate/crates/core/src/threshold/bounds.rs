use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::nonlinearity::NonlinearitySpec;
use crate::numerics::log_add_exp;
use crate::numerics::quadrature::{integrate, QuadOptions};
use crate::numerics::roots::{bisect_switch, newton_bisect, RootOptions};
use crate::scalar_ode::decay_time;
use crate::stationary::{shoot_v, uniform_radii};

use super::erfc::{erfc_scaled, ln_erfc};
use super::growth::GrowthFunction;

const SCAN_INTERVALS: usize = 400;

/// Last radius past which `g̃` dominates `V_a`: the returned `r` has
/// `γ(s) ≥ W_a(s)` at every scanned `s ≥ r`, with `γ(r) = W_a(r)` unless
/// domination holds everywhere (then `0`).
pub fn compute_r_n(g: &GrowthFunction, spec: &NonlinearitySpec, a: f64, dimension: usize, search_max: f64) -> Result<f64> {
    if !(search_max > 0.0 && search_max.is_finite()) {
        return Err(Error::Domain(format!("search_max must be positive, got {search_max}")));
    }
    let grid = uniform_radii(search_max, SCAN_INTERVALS);
    let profile = shoot_v(spec, a, dimension, &grid)?;
    let gap = |j: usize| g.gamma(grid[j]) - profile.w_values[j];
    let slack = |w: f64| 1e-12 * w.abs().max(1.0);
    let last = grid.len() - 1;
    if gap(last) < -slack(profile.w_values[last]) {
        return Err(Error::NoDomination(format!(
            "ln(1+g) = {:.6e} < ln(1+V_a) = {:.6e} at r = {search_max}",
            g.gamma(search_max),
            profile.w_values[last]
        )));
    }
    let Some(j) = (0..last).rev().find(|&j| gap(j) < -slack(profile.w_values[j])) else {
        return Ok(0.0);
    };
    let dominated = |r: f64| -> Result<bool> {
        let w = profile.w_at(r)?;
        Ok(g.gamma(r) - w >= -slack(w))
    };
    let (_, hi) = bisect_switch(dominated, grid[j], grid[j + 1], 1e-8 * grid[j + 1], 200)?;
    Ok(hi)
}

/// Least `a ≥ 1` with `Φ_a(t) ≥ 1` on `[0, 1]`, equivalently
/// `Φ_a(t)/(Φ_a(t)+1) ≥ 1/2` there.
pub fn flat_threshold_a0(spec: &NonlinearitySpec) -> Result<f64> {
    // Φ_a(1) = 1 exactly when the decay time from ln a down to 0 equals 1.
    let f = |x: f64| decay_time(spec, 0.0, x);
    let mut hi = 1.0;
    while f(hi)? < 1.0 {
        hi *= 2.0;
        if hi > 700.0 {
            return Err(Error::Precondition("Φ_a(1) < 1 for every representable a".into()));
        }
    }
    let root = newton_bisect(
        |x| Ok((f(x)? - 1.0, 1.0 / spec.h_of_exp(x))),
        0.0,
        hi,
        RootOptions {
            x_tol: 1e-12,
            max_iter: 200,
        },
    )?;
    Ok(root.x.exp())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OmegaBound {
    /// `2^{α/(α−1)} γ ∫_0^{tγ^{α−1}} (2+(α−1)τ)^{−α/(α−1)} dτ`.
    pub closed_form: f64,
    /// `γ^α t`.
    pub crude: f64,
    /// The `τ`-integral alone.
    pub tau_integral: f64,
    /// Validity threshold on `g̃(r_n)`.
    pub a0: f64,
}

/// Upper bound of `∫_0^t ln^α(ω(s)+1) ds` for the flat solution started at
/// `e^γ − 1`, using `a0` from [`flat_threshold_a0`].
pub fn omega_integral_bound(gamma_rn: f64, alpha: f64, t: f64) -> Result<OmegaBound> {
    let a0 = flat_threshold_a0(&NonlinearitySpec::log_power(alpha)?)?;
    omega_integral_bound_with(gamma_rn, alpha, t, a0)
}

pub fn omega_integral_bound_with(gamma_rn: f64, alpha: f64, t: f64, a0: f64) -> Result<OmegaBound> {
    if !(alpha > 1.0 && alpha <= 2.0) {
        return Err(Error::InvalidParameter(format!("α must lie in (1, 2], got {alpha}")));
    }
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::Domain(format!("the bound is valid for 0 <= t <= 1, got t = {t}")));
    }
    if !(gamma_rn.exp_m1() >= a0) {
        return Err(Error::Domain(format!(
            "g(r_n) = e^{gamma_rn} - 1 is below the validity threshold a0 = {a0}"
        )));
    }
    let q = 1.0 / (alpha - 1.0);
    let big_t = t * gamma_rn.powf(alpha - 1.0);
    // 2^{−q} − (2+(α−1)T)^{−q}, written to avoid cancellation for small T.
    let tau = 2f64.powf(-q) * -(-q * (0.5 * (alpha - 1.0) * big_t).ln_1p()).exp_m1();
    Ok(OmegaBound {
        closed_form: 2f64.powf(alpha * q) * gamma_rn * tau,
        crude: gamma_rn.powf(alpha) * t,
        tau_integral: tau,
        a0,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct JnBound {
    /// `ln` of `e^{−Ω} g̃(r_n) erfc((r_n+|x|)/(2√t))^N`.
    pub ln_bound: f64,
    /// `ln` of `g̃(r_n) (4t/(π(r_n+|x|)²))^{N/2} e^{−Ω − N(r_n+|x|)²/(4t)}`.
    pub ln_asymptotic: f64,
    /// `ln_bound − ln_asymptotic`, of order `t/r_n²`.
    pub difference: f64,
}

/// Lower bound of the far-field heat-kernel contribution `J_n`, in log scale.
/// `ln_g_rn = ln g̃(r_n)`, `omega_int = ∫_0^t ln^α(ω_n+1) ds` or an upper bound of it.
pub fn j_n_lower_bound(t: f64, x_radius: f64, r_n: f64, ln_g_rn: f64, omega_int: f64, dimension: usize) -> Result<JnBound> {
    if !(t > 0.0 && r_n > 0.0 && x_radius >= 0.0 && dimension >= 1) {
        return Err(Error::Domain(format!(
            "J_n bound needs t > 0, r_n > 0, |x| >= 0, N >= 1; got t = {t}, r_n = {r_n}, |x| = {x_radius}, N = {dimension}"
        )));
    }
    let n = dimension as f64;
    let z = (r_n + x_radius) / (2.0 * t.sqrt());
    let ln_bound = ln_g_rn - omega_int + n * ln_erfc(z);
    let ln_asymptotic = ln_g_rn - omega_int - n * z * z - n * (z * PI.sqrt()).ln();
    Ok(JnBound {
        ln_bound,
        ln_asymptotic,
        difference: n * (erfc_scaled(z) * z * PI.sqrt()).ln(),
    })
}

/// Exact `ln J_n` in one dimension at the signed position `x`:
/// `e^{−Ω} g̃(r_n) (erfc((r_n−x)/(2√t)) + erfc((r_n+x)/(2√t)))/2`.
pub fn j_n_exact_1d(t: f64, x: f64, r_n: f64, ln_g_rn: f64, omega_int: f64) -> Result<f64> {
    if !(t > 0.0 && r_n >= 0.0) {
        return Err(Error::Domain(format!("J_n needs t > 0 and r_n >= 0; got t = {t}, r_n = {r_n}")));
    }
    let s = 2.0 * t.sqrt();
    let tails = log_add_exp(ln_erfc((r_n - x) / s), ln_erfc((r_n + x) / s)) - 2f64.ln();
    Ok(ln_g_rn - omega_int + tails)
}

/// `ln I_n(t, x)` in one dimension by adaptive quadrature of
/// `e^{−(x−y)²/4t} g̃(|y|)` over `|y| ≤ r_n`; `−∞` when the integral vanishes.
pub fn i_n_quadrature(t: f64, x: f64, r_n: f64, g: &GrowthFunction, omega_int: f64, dimension: usize) -> Result<f64> {
    if dimension != 1 {
        return Err(Error::Unsupported(format!("I_n quadrature is one-dimensional only, got N = {dimension}")));
    }
    if !(t > 0.0 && r_n > 0.0) {
        return Err(Error::Domain(format!("I_n needs t > 0 and r_n > 0; got t = {t}, r_n = {r_n}")));
    }
    let exponent = |y: f64| -(x - y) * (x - y) / (4.0 * t) + g.ln_value(y.abs());
    const SAMPLES: usize = 2000;
    let mut shift = f64::NEG_INFINITY;
    let mut peak = 0.0;
    for i in 0..=SAMPLES {
        let y = -r_n + 2.0 * r_n * i as f64 / SAMPLES as f64;
        let e = exponent(y);
        if e > shift {
            shift = e;
            peak = y;
        }
    }
    if shift == f64::NEG_INFINITY {
        return Ok(f64::NEG_INFINITY);
    }
    let mut cuts = vec![-r_n, 0.0, peak, x.clamp(-r_n, r_n), r_n];
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let mut total = 0.0;
    for w in cuts.windows(2) {
        let r = integrate(|y| (exponent(y) - shift).exp(), w[0], w[1], QuadOptions::rel(1e-11))?;
        total += r.value;
    }
    if total <= 0.0 {
        return Ok(f64::NEG_INFINITY);
    }
    Ok(-omega_int - 0.5 * (4.0 * PI * t).ln() + shift + total.ln())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar_ode::absorption_integral;
    use approx::assert_relative_eq;

    fn lp15() -> NonlinearitySpec {
        NonlinearitySpec::log_power(1.5).unwrap()
    }

    #[test]
    fn r_n_is_zero_when_g_equals_v() {
        let spec = lp15();
        let p = shoot_v(&spec, 2.0, 1, &uniform_radii(6.0, SCAN_INTERVALS)).unwrap();
        let g = GrowthFunction::from_profile(p, None);
        assert_eq!(compute_r_n(&g, &spec, 2.0, 1, 6.0).unwrap(), 0.0);
    }

    #[test]
    fn r_n_crossing_and_monotonicity() {
        let spec = lp15();
        let g = GrowthFunction::power_law(2.0 * 0.003_906_25, 4.0).unwrap();
        let mut prev = 0.0;
        for a in [2.0, 4.0, 8.0] {
            let r = compute_r_n(&g, &spec, a, 1, 40.0).unwrap();
            assert!(r > 0.0 && r >= prev, "r = {r}");
            let w = shoot_v(&spec, a, 1, &uniform_radii(r, 200)).unwrap();
            let wr = *w.w_values.last().unwrap();
            assert!((g.gamma(r) - wr).abs() <= 1e-6 * wr.max(1.0), "{} vs {wr}", g.gamma(r));
            prev = r;
        }
    }

    #[test]
    fn no_domination_is_reported() {
        let spec = lp15();
        let g = GrowthFunction::power_law(1e-4, 2.0).unwrap();
        assert!(matches!(compute_r_n(&g, &spec, 2.0, 1, 10.0), Err(Error::NoDomination(_))));
    }

    #[test]
    fn a0_satisfies_its_definition() {
        let spec = lp15();
        let a0 = flat_threshold_a0(&spec).unwrap();
        assert!(a0 >= 1.0);
        let ln_phi = a0.ln() - absorption_integral(&spec, a0.ln(), 1.0).unwrap();
        assert!(ln_phi.abs() < 1e-9, "ln Φ_a0(1) = {ln_phi}");
    }

    #[test]
    fn tau_integral_matches_quadrature() {
        for &(alpha, t, gamma) in &[(1.5, 0.3, 20.0), (1.2, 1.0, 5.0), (1.8, 1e-3, 100.0), (2.0, 0.5, 10.0)] {
            let b = omega_integral_bound_with(gamma, alpha, t, 1.0).unwrap();
            let big_t = t * f64::powf(gamma, alpha - 1.0);
            let q = integrate(
                |tau| (2.0 + (alpha - 1.0) * tau).powf(-alpha / (alpha - 1.0)),
                0.0,
                big_t,
                QuadOptions::rel(1e-13),
            )
            .unwrap();
            assert_relative_eq!(b.tau_integral, q.value, max_relative = 1e-11);
            assert!(b.closed_form <= b.crude * (1.0 + 1e-12));
        }
    }

    #[test]
    fn omega_bound_dominates_exact_integral() {
        let spec = lp15();
        for &(gamma, t) in &[(5.0, 0.1), (20.0, 0.5), (50.0, 1.0), (8.0, 1e-4)] {
            let b = omega_integral_bound(gamma, 1.5, t).unwrap();
            let ln_a = gamma + (-(-gamma).exp()).ln_1p();
            let exact = absorption_integral(&spec, ln_a, t).unwrap();
            assert!(b.closed_form >= exact * (1.0 - 1e-9), "γ = {gamma}, t = {t}: {} < {exact}", b.closed_form);
        }
    }

    #[test]
    fn omega_bound_validity_range() {
        assert!(omega_integral_bound_with(10.0, 1.5, 1.5, 1.0).is_err());
        assert!(omega_integral_bound_with(0.1, 1.5, 0.5, 2.0).is_err());
        let b = omega_integral_bound_with(10.0, 1.5, 0.0, 1.0).unwrap();
        assert_eq!(b.closed_form, 0.0);
        let small = omega_integral_bound_with(10.0, 1.5, 1e-12, 1.0).unwrap();
        assert!(small.closed_form < 1e-9);
    }

    #[test]
    fn j_n_forms_agree_in_the_far_field() {
        for &(t, r) in &[(0.01, 3.0), (0.1, 20.0), (1.0, 40.0)] {
            let j = j_n_lower_bound(t, 0.0, r, 10.0, 1.0, 2).unwrap();
            let z2 = r * r / (4.0 * t);
            assert!(j.difference.abs() <= 2.0 * 2.0 / (2.0 * z2), "{j:?}");
            assert!(j.difference <= 0.0);
        }
    }

    #[test]
    fn j_n_linear_in_g() {
        let a = j_n_lower_bound(0.2, 1.0, 5.0, 3.0, 0.5, 3).unwrap();
        let b = j_n_lower_bound(0.2, 1.0, 5.0, 3.0 + 2f64.ln(), 0.5, 3).unwrap();
        assert!((b.ln_bound - a.ln_bound - 2f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn j_n_bound_below_exact_1d() {
        for &(t, x, r) in &[(0.1, 0.0, 2.0), (0.5, 1.0, 3.0), (0.01, 0.5, 1.0), (2.0, 3.0, 4.0)] {
            let exact = j_n_exact_1d(t, x, r, 7.0, 0.3).unwrap();
            let bound = j_n_lower_bound(t, x, r, 7.0, 0.3, 1).unwrap();
            assert!(bound.ln_bound <= exact + 1e-14);
        }
    }

    #[test]
    fn i_n_plus_j_n_is_the_full_convolution() {
        // N = 1, g̃ = e^{r²} − 1 capped at g̃(r_n) outside B_{r_n}.
        let g = GrowthFunction::power_law(1.0, 2.0).unwrap();
        let (t, r_n, omega) = (0.05, 2.0, 0.0);
        for x in [0.0, 0.7, 1.9] {
            let ln_i = i_n_quadrature(t, x, r_n, &g, omega, 1).unwrap();
            let ln_j = j_n_exact_1d(t, x, r_n, g.ln_value(r_n), omega).unwrap();
            let total = ln_i.exp() + ln_j.exp();
            let capped = |y: f64| g.value(y.abs().min(r_n));
            let kernel = |y: f64| (-(x - y) * (x - y) / (4.0 * t)).exp() * capped(y) / (4.0 * PI * t).sqrt();
            let mut oracle = 0.0;
            let cuts = [x - 12.0, -r_n, 0.0, x, r_n, x + 12.0];
            let mut cuts = cuts.to_vec();
            cuts.sort_by(f64::total_cmp);
            for w in cuts.windows(2) {
                oracle += integrate(kernel, w[0], w[1], QuadOptions::rel(1e-12)).unwrap().value;
            }
            assert_relative_eq!(total, oracle, max_relative = 1e-6);
        }
    }

    #[test]
    fn i_n_edge_cases() {
        assert_eq!(i_n_quadrature(0.1, 0.0, 2.0, &GrowthFunction::zero(), 0.0, 1).unwrap(), f64::NEG_INFINITY);
        assert!(matches!(
            i_n_quadrature(0.1, 0.0, 2.0, &GrowthFunction::zero(), 0.0, 2),
            Err(Error::Unsupported(_))
        ));
    }
}
