use serde::Serialize;

use crate::error::{Error, Result};
use crate::table::Table;

use super::bounds::j_n_lower_bound;
use super::growth::GrowthFunction;

fn check_args(t: f64, x_radius: f64, r_n: f64, gamma_rn: f64, dimension: usize) -> Result<()> {
    if !(t > 0.0 && x_radius >= 0.0 && r_n > 0.0 && gamma_rn > 0.0 && dimension >= 1) {
        return Err(Error::Domain(format!(
            "need t, r_n, γ(r_n) > 0, |x| >= 0 and N >= 1; got t = {t}, |x| = {x_radius}, r_n = {r_n}, γ = {gamma_rn}, N = {dimension}"
        )));
    }
    Ok(())
}

/// Terms shared by every lower functional:
/// `γ − N R²/(4t) − N ln R − (N/2) ln t` with `R = r_n + |x|`.
fn common_part(t: f64, x_radius: f64, r_n: f64, gamma_rn: f64, n: f64) -> f64 {
    let rr = r_n + x_radius;
    gamma_rn - n * rr * rr / (4.0 * t) - n * rr.ln() - 0.5 * n * t.ln()
}

/// `A_n(t, x)` with a given value of `∫_0^t ln^α(ω_n+1) ds`.
pub fn a_n_value(t: f64, x_radius: f64, r_n: f64, gamma_rn: f64, omega_int: f64, dimension: usize) -> Result<f64> {
    check_args(t, x_radius, r_n, gamma_rn, dimension)?;
    Ok(common_part(t, x_radius, r_n, gamma_rn, dimension as f64) - omega_int)
}

/// `B_n(t, x) = γ − N R²/(4t) − N ln R − (N/2) ln t − γ^α t`.
pub fn b_n_value(t: f64, x_radius: f64, r_n: f64, gamma_rn: f64, alpha: f64, dimension: usize) -> Result<f64> {
    check_args(t, x_radius, r_n, gamma_rn, dimension)?;
    Ok(common_part(t, x_radius, r_n, gamma_rn, dimension as f64) - gamma_rn.powf(alpha) * t)
}

/// Unique positive root of `∂_t B_n`:
/// `N R² / (N + √(N² + 4 N R² γ^α))`.
pub fn t_star(x_radius: f64, r_n: f64, gamma_rn: f64, alpha: f64, dimension: usize) -> Result<f64> {
    check_args(1.0, x_radius, r_n, gamma_rn, dimension)?;
    let n = dimension as f64;
    let rr = r_n + x_radius;
    let g = gamma_rn.powf(alpha);
    Ok(n * rr * rr / (n + (n * n + 4.0 * n * rr * rr * g).sqrt()))
}

/// Remainder `ν_n` defined by
/// `B_n(t_n, x) = r_n γ^{α/2} (γ^{1−α/2}/r_n − √N (1 + ν_n))`.
pub fn nu_n(x_radius: f64, r_n: f64, gamma_rn: f64, alpha: f64, dimension: usize) -> Result<f64> {
    let tn = t_star(x_radius, r_n, gamma_rn, alpha, dimension)?;
    let b = b_n_value(tn, x_radius, r_n, gamma_rn, alpha, dimension)?;
    let scale = r_n * gamma_rn.powf(0.5 * alpha);
    let lead = gamma_rn.powf(1.0 - 0.5 * alpha) / r_n;
    Ok((lead - b / scale) / (dimension as f64).sqrt() - 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Alpha2Point {
    pub r_n: f64,
    pub gamma: f64,
    pub t_n: f64,
    pub b_n: f64,
    /// `γ − r_n γ √N`.
    pub leading: f64,
    /// `|B_n(t_n) − leading| / (r_n γ)`.
    pub relative_gap: f64,
}

/// `B_n` in the `α = 2` regime: `γ − tγ² − N R²/(4t) − N ln R − (N/2) ln t`.
pub fn alpha2_b_n(t: f64, x_radius: f64, r_n: f64, gamma_rn: f64, dimension: usize) -> Result<f64> {
    b_n_value(t, x_radius, r_n, gamma_rn, 2.0, dimension)
}

/// Maximiser of [`alpha2_b_n`] and the leading form at that point.
pub fn alpha2_point(x_radius: f64, r_n: f64, gamma_rn: f64, dimension: usize) -> Result<Alpha2Point> {
    let t_n = t_star(x_radius, r_n, gamma_rn, 2.0, dimension)?;
    let b_n = alpha2_b_n(t_n, x_radius, r_n, gamma_rn, dimension)?;
    let leading = gamma_rn - r_n * gamma_rn * (dimension as f64).sqrt();
    Ok(Alpha2Point {
        r_n,
        gamma: gamma_rn,
        t_n,
        b_n,
        leading,
        relative_gap: (b_n - leading).abs() / (r_n * gamma_rn),
    })
}

/// Crude `α = 2` bound of `∫_0^t ln²(ω_n+1) ds`: `t γ²`.
pub fn alpha2_omega_bound(gamma_rn: f64, t: f64) -> f64 {
    t * gamma_rn * gamma_rn
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThresholdRow {
    pub r_n: f64,
    pub gamma: f64,
    pub t_n: f64,
    pub b_n: f64,
    /// `ln J_n(t_n, x)` lower bound with the crude `γ^α t_n` exponent.
    pub ln_j_n: f64,
    pub nu_n: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThresholdReport {
    pub alpha: f64,
    pub dimension: usize,
    pub x_radius: f64,
    pub rows: Vec<ThresholdRow>,
    /// `c_α = ((2−α)/2)^{2/(2−α)}`.
    pub c_alpha: f64,
    /// `N^{1/(2−α)}`.
    pub n_critical: f64,
    /// `B_n(t_n, x)` strictly increasing along the supplied radii.
    pub b_n_increasing: bool,
}

impl ThresholdReport {
    /// Columns `(r_n, t_n, B_n, ln_J_n)`.
    pub fn to_table(&self) -> Table {
        let mut t = Table::new(["r_n", "t_n", "B_n", "ln_J_n"]);
        for row in &self.rows {
            t.push(vec![row.r_n, row.t_n, row.b_n, row.ln_j_n]);
        }
        t
    }
}

/// Evaluates `t_n`, `B_n(t_n, x)`, `ln J_n` and `ν_n` along `radii` for `α ∈ (1, 2)`.
pub fn threshold_report(g: &GrowthFunction, alpha: f64, dimension: usize, x_radius: f64, radii: &[f64]) -> Result<ThresholdReport> {
    if !(alpha > 1.0 && alpha < 2.0) {
        return Err(Error::InvalidParameter(format!("threshold report needs α in (1, 2), got {alpha}")));
    }
    let mut rows = Vec::with_capacity(radii.len());
    for &r in radii {
        let gamma = g.gamma(r);
        let t_n = t_star(x_radius, r, gamma, alpha, dimension)?;
        let b_n = b_n_value(t_n, x_radius, r, gamma, alpha, dimension)?;
        let j = j_n_lower_bound(t_n, x_radius, r, g.ln_value(r), gamma.powf(alpha) * t_n, dimension)?;
        rows.push(ThresholdRow {
            r_n: r,
            gamma,
            t_n,
            b_n,
            ln_j_n: j.ln_bound,
            nu_n: nu_n(x_radius, r, gamma, alpha, dimension)?,
        });
    }
    let n = dimension as f64;
    Ok(ThresholdReport {
        alpha,
        dimension,
        x_radius,
        b_n_increasing: rows.windows(2).all(|w| w[1].b_n > w[0].b_n),
        rows,
        c_alpha: crate::stationary::growth_constant(alpha),
        n_critical: n.powf(1.0 / (2.0 - alpha)),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nonlinearity::NonlinearitySpec;
    use crate::scalar_ode::absorption_integral;
    use proptest::prelude::*;

    /// Golden-section search for the maximum of a unimodal function on `[lo, hi]`.
    fn golden_max<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64) -> f64 {
        let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
        let mut c = hi - inv_phi * (hi - lo);
        let mut d = lo + inv_phi * (hi - lo);
        let (mut fc, mut fd) = (f(c), f(d));
        for _ in 0..300 {
            if fc > fd {
                hi = d;
                d = c;
                fd = fc;
                c = hi - inv_phi * (hi - lo);
                fc = f(c);
            } else {
                lo = c;
                c = d;
                fc = fd;
                d = lo + inv_phi * (hi - lo);
                fd = f(d);
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn t_star_zeroes_the_derivative() {
        let (x, r, g, a, n) = (0.5, 10.0, 50.0, 1.5, 2);
        let ts = t_star(x, r, g, a, n).unwrap();
        let dt = 1e-6 * ts;
        let b = |t| b_n_value(t, x, r, g, a, n).unwrap();
        let deriv = (b(ts + dt) - b(ts - dt)) / (2.0 * dt);
        assert!(deriv.abs() * ts <= 1e-6 * b(ts).abs(), "∂_t B = {deriv}");
    }

    #[test]
    fn t_star_matches_golden_section() {
        for &(x, r, g, a, n) in &[(0.0, 5.0, 10.0, 1.5, 1), (2.0, 30.0, 1e3, 1.2, 3), (1.0, 80.0, 1e6, 1.9, 2)] {
            let ts = t_star(x, r, g, a, n).unwrap();
            // Work in s = ln t, where the maximum is well conditioned.
            let s = golden_max(|s: f64| b_n_value(s.exp(), x, r, g, a, n).unwrap(), ts.ln() - 10.0, ts.ln() + 10.0);
            assert!((s.exp() / ts - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn leading_form_for_supercritical_growth() {
        // γ = 2 r⁴ with α = 1.5: ν_n shrinks along r_n.
        let nus: Vec<f64> = [10.0, 20.0, 40.0, 80.0]
            .iter()
            .map(|&r: &f64| nu_n(0.0, r, 2.0 * r.powi(4), 1.5, 1).unwrap().abs())
            .collect();
        assert!(nus.windows(2).all(|w| w[1] < w[0]), "{nus:?}");
    }

    #[test]
    fn a_n_dominates_b_n_with_the_exact_integral() {
        let spec = NonlinearitySpec::log_power(1.5).unwrap();
        for &(t, gamma) in &[(0.01, 10.0_f64), (0.2, 30.0), (0.9, 5.0)] {
            let omega = absorption_integral(&spec, gamma + (-(-gamma).exp()).ln_1p(), t).unwrap();
            let a = a_n_value(t, 0.5, 4.0, gamma, omega, 1).unwrap();
            let b = b_n_value(t, 0.5, 4.0, gamma, 1.5, 1).unwrap();
            assert!(a >= b);
        }
    }

    #[test]
    fn alpha_two_decreases_and_leading_form_improves() {
        let pts: Vec<Alpha2Point> = [5.0, 10.0, 20.0, 40.0]
            .iter()
            .map(|&r: &f64| alpha2_point(0.0, r, r.exp(), 1).unwrap())
            .collect();
        assert!(pts.windows(2).all(|w| w[1].b_n < w[0].b_n));
        assert!(pts.windows(2).all(|w| w[1].relative_gap < w[0].relative_gap));
    }

    #[test]
    fn alpha_two_crude_bound() {
        let spec = NonlinearitySpec::log_power(2.0).unwrap();
        for &(t, gamma) in &[(0.01, 10.0_f64), (0.5, 3.0), (1.0, 40.0)] {
            let exact = absorption_integral(&spec, gamma + (-(-gamma).exp()).ln_1p(), t).unwrap();
            assert!(alpha2_omega_bound(gamma, t) >= exact);
        }
        // The tighter-looking `t γ` fails already at moderate γ.
        let exact = absorption_integral(&spec, 10.0, 0.01).unwrap();
        assert!(0.01 * 10.0 < exact);
    }

    #[test]
    fn report_table_shape() {
        let g = GrowthFunction::power_law(2.0, 4.0).unwrap();
        let rep = threshold_report(&g, 1.5, 1, 0.0, &[10.0, 20.0, 40.0, 80.0]).unwrap();
        assert!(rep.b_n_increasing);
        assert_eq!(rep.to_table().rows.len(), 4);
        assert!((rep.c_alpha - 0.003_906_25).abs() < 1e-15);
        assert_eq!(rep.n_critical, 1.0);
    }

    proptest! {
        #[test]
        fn interior_maximum(x in 0.0f64..5.0, r in 1.0f64..50.0, g in 1.0f64..1e4, a in 1.05f64..1.95, n in 1usize..5) {
            let ts = t_star(x, r, g, a, n).unwrap();
            let b = |t| b_n_value(t, x, r, g, a, n).unwrap();
            prop_assert!(b(ts) >= b(ts * 1.01));
            prop_assert!(b(ts) >= b(ts * 0.99));
        }
    }
}
