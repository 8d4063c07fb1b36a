use crate::error::{Error, Result};
use crate::nonlinearity::NonlinearitySpec;
use crate::numerics::rk45::{Advance, DormandPrince, Rk45Options};

use super::{ProfileKind, RadialProfile};

const W_LIMIT: f64 = 1e300;

#[derive(Debug, Clone, Copy)]
pub struct ShootOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// When set, integration stops as soon as `W` exceeds this value and the
    /// radius is reported as a blow-up instead of an error.
    pub stop_w: Option<f64>,
}

impl Default for ShootOptions {
    fn default() -> Self {
        Self {
            rel_tol: 1e-9,
            abs_tol: 1e-12,
            stop_w: None,
        }
    }
}

#[derive(Debug, Clone)]
pub enum ShootOutcome {
    Complete(RadialProfile),
    /// `W` crossed the stop threshold at this radius.
    Blowup { radius: f64 },
}

/// `n + 1` equally spaced radii on `[0, r_max]`.
pub fn uniform_radii(r_max: f64, n: usize) -> Vec<f64> {
    (0..=n).map(|i| r_max * i as f64 / n as f64).collect()
}

fn validate_grid(grid: &[f64]) -> Result<()> {
    if grid.len() < 2 || grid[0] != 0.0 {
        return Err(Error::InvalidGrid("radial grid must start at 0 and have at least two nodes".into()));
    }
    if grid.windows(2).any(|w| !(w[1] > w[0]) || !w[1].is_finite()) {
        return Err(Error::InvalidGrid("radii must be finite and strictly increasing".into()));
    }
    Ok(())
}

/// Shoots `V_a` from the centre and samples it on `grid`.
pub fn shoot_v(spec: &NonlinearitySpec, a: f64, dimension: usize, grid: &[f64]) -> Result<RadialProfile> {
    match shoot_v_with(spec, a, dimension, grid, ShootOptions::default())? {
        ShootOutcome::Complete(p) => Ok(p),
        ShootOutcome::Blowup { radius } => Err(Error::Overflow { radius, limit: W_LIMIT }),
    }
}

pub fn shoot_v_with(spec: &NonlinearitySpec, a: f64, dimension: usize, grid: &[f64], opts: ShootOptions) -> Result<ShootOutcome> {
    if !(a > 0.0 && a.is_finite()) {
        return Err(Error::Domain(format!("centre value must be positive and finite, got {a}")));
    }
    if dimension == 0 {
        return Err(Error::InvalidParameter("dimension must be at least 1".into()));
    }
    validate_grid(grid)?;
    let n = dimension as f64;
    let r_max = *grid.last().unwrap();
    let r0 = 1e-6 * r_max.max(1.0);
    let ah = a * spec.eval_h(a)?;
    // Quadratic Taylor start: V'' (0) = a h(a)/N.
    let seed = |r: f64| {
        let v = a + ah * r * r / (2.0 * n);
        let vr = ah * r / n;
        (v.ln_1p(), vr / (1.0 + v))
    };
    let rhs = |r: f64, y: &[f64; 2]| {
        let (w, p) = (y[0], y[1]);
        let source = -(-w).exp_m1() * spec.h_of_log1p(w);
        [p, -p * p - (n - 1.0) / r * p + source]
    };
    let limit = opts.stop_w.unwrap_or(W_LIMIT);
    let mut radii = Vec::with_capacity(grid.len());
    let mut ws = Vec::with_capacity(grid.len());
    let mut dws = Vec::with_capacity(grid.len());
    let (w0, p0) = seed(r0);
    let rk_opts = Rk45Options {
        rel_tol: opts.rel_tol,
        abs_tol: opts.abs_tol,
        ..Rk45Options::default()
    };
    let mut dp = DormandPrince::new(rhs, r0, [w0, p0], r0, rk_opts);
    for &r in grid {
        let (w, p) = if r <= r0 {
            if r == 0.0 {
                (a.ln_1p(), 0.0)
            } else {
                seed(r)
            }
        } else {
            match dp.advance_to(r, |y| !(y[0] <= limit))? {
                Advance::Reached(y) => (y[0], y[1]),
                Advance::Stopped(radius, _) => {
                    if opts.stop_w.is_some() {
                        return Ok(ShootOutcome::Blowup { radius });
                    }
                    return Err(Error::Overflow { radius, limit: W_LIMIT });
                }
            }
        };
        radii.push(r);
        ws.push(w);
        dws.push(p);
    }
    Ok(ShootOutcome::Complete(RadialProfile {
        radii,
        w_values: ws,
        dw_values: dws,
        dimension,
        center_value: a,
        kind: ProfileKind::Shooting,
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn lp15() -> NonlinearitySpec {
        NonlinearitySpec::log_power(1.5).unwrap()
    }

    #[test]
    fn centre_curvature_matches_taylor() {
        let spec = lp15();
        for &(a, dim) in &[(1.0, 3usize), (5.0, 1), (0.3, 2)] {
            let dr = 1e-2;
            let p = shoot_v(&spec, a, dim, &[0.0, dr, 2.0 * dr]).unwrap();
            let v = p.v_values();
            // Symmetric second difference around 0 with V(−r) = V(r).
            let curvature = 2.0 * (v[1] - v[0]) / (dr * dr);
            let exact = a * spec.eval_h(a).unwrap() / dim as f64;
            assert_relative_eq!(curvature, exact, max_relative = 1e-3);
            assert_eq!(p.dw_values[0], 0.0);
            assert_eq!(p.w_values[0], a.ln_1p());
        }
    }

    #[test]
    fn tiny_data_stays_tiny() {
        let p = shoot_v(&lp15(), 1e-12, 3, &uniform_radii(5.0, 50)).unwrap();
        assert!(p.v_values().iter().all(|&v| v < 2e-12));
    }

    #[test]
    fn linear_limit_for_power_two() {
        // For h(s) = s and tiny a the equation linearises to V'' = 0 plus a
        // small quadratic correction; check the quadratic leading term.
        let spec = NonlinearitySpec::power(2.0).unwrap();
        let a = 1e-3;
        let p = shoot_v(&spec, a, 1, &[0.0, 0.5, 1.0]).unwrap();
        let v = p.v_values();
        assert_relative_eq!(v[2], a + a * a / 2.0, max_relative = 1e-5);
    }

    #[test]
    fn ordering_in_data_and_growth_of_difference() {
        let spec = lp15();
        let grid = uniform_radii(6.0, 120);
        let va = shoot_v(&spec, 1.0, 3, &grid).unwrap();
        let vb = shoot_v(&spec, 2.0, 3, &grid).unwrap();
        for j in 1..grid.len() {
            assert!(va.w_values[j] < vb.w_values[j]);
        }
        let (a, b) = (va.v_values(), vb.v_values());
        for j in 1..grid.len() {
            assert!(b[j] - a[j] >= (b[j - 1] - a[j - 1]) * (1.0 - 1e-9));
        }
    }

    #[test]
    fn tolerance_halving_changes_little() {
        let spec = lp15();
        let grid = uniform_radii(10.0, 100);
        let base = shoot_v(&spec, 1.0, 3, &grid).unwrap();
        let fine = shoot_v_with(
            &spec,
            1.0,
            3,
            &grid,
            ShootOptions {
                rel_tol: 5e-10,
                abs_tol: 5e-13,
                stop_w: None,
            },
        )
        .unwrap();
        let ShootOutcome::Complete(fine) = fine else { panic!("no blow-up expected") };
        let (w1, w2) = (base.w_values.last().unwrap(), fine.w_values.last().unwrap());
        assert!((w1 - w2).abs() <= 1e-6 * w2.abs());
    }

    #[test]
    fn keller_osserman_nonlinearity_blows_up() {
        let spec = NonlinearitySpec::power(2.0).unwrap();
        let out = shoot_v_with(&spec, 10.0, 1, &uniform_radii(5.0, 10), ShootOptions { stop_w: Some(50.0), ..Default::default() }).unwrap();
        // V'' = V² from V(0) = 10 blows up at ∫_10^∞ dv/√(2(v³−1000)/3) = 0.9406123513.
        match out {
            ShootOutcome::Blowup { radius } => assert!((radius - 0.940_612_351).abs() < 1e-5, "radius {radius}"),
            ShootOutcome::Complete(_) => panic!("expected blow-up"),
        }
    }

    #[test]
    fn rejects_bad_input() {
        let spec = lp15();
        assert!(shoot_v(&spec, 0.0, 1, &[0.0, 1.0]).is_err());
        assert!(shoot_v(&spec, 1.0, 0, &[0.0, 1.0]).is_err());
        assert!(shoot_v(&spec, 1.0, 1, &[0.1, 1.0]).is_err());
        assert!(shoot_v(&spec, 1.0, 1, &[0.0, 1.0, 1.0]).is_err());
    }
}
