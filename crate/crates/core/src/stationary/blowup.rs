use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::nonlinearity::NonlinearitySpec;
use crate::numerics::roots::bisect_switch;

use super::bound::keller_osserman_tail_from;
use super::shoot::{shoot_v_with, uniform_radii, ShootOptions, ShootOutcome};
use super::{ProfileKind, RadialProfile};

#[derive(Debug, Clone, Copy)]
pub struct BlowupOptions {
    /// Number of grid intervals on `[0, m]`.
    pub intervals: usize,
    /// Bisection tolerance on `ln v(0)`.
    pub ln_center_tol: f64,
    /// Cauchy differences are measured on `[0, monitor_fraction·m]`.
    pub monitor_fraction: f64,
}

impl Default for BlowupOptions {
    fn default() -> Self {
        Self {
            intervals: 200,
            ln_center_tol: 1e-13,
            monitor_fraction: 0.9,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InequalityCheck {
    pub radius: f64,
    /// `∫_{v(r)}^∞ ds/√H(s)`.
    pub lhs: f64,
    /// `√(2/N)(m − r)`.
    pub rhs: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct BlowupReport {
    pub m: f64,
    pub k_values: Vec<f64>,
    /// `v_{m,k}(0)` for each `k`.
    pub center_values: Vec<f64>,
    /// Sup-norm differences of `V` between consecutive `k` on the monitoring region.
    pub cauchy_differences: Vec<f64>,
    pub increasing_in_k: bool,
    pub centers_increasing: bool,
    /// Lower-bound inequality for the largest-`k` profile at `r = 0` and `r = m/2`.
    pub inequality: Vec<InequalityCheck>,
    pub profiles: Vec<RadialProfile>,
}

impl BlowupReport {
    /// Profile for the largest boundary value.
    pub fn profile(&self) -> &RadialProfile {
        self.profiles.last().expect("at least one boundary value")
    }
}

pub fn boundary_blowup_profile(spec: &NonlinearitySpec, m: f64, dimension: usize, k_list: &[f64]) -> Result<BlowupReport> {
    boundary_blowup_profile_with(spec, m, dimension, k_list, BlowupOptions::default())
}

/// Solves `v'(0) = 0`, `v(m) = k` for each `k` by bisection on `ln v(0)`.
pub fn boundary_blowup_profile_with(
    spec: &NonlinearitySpec,
    m: f64,
    dimension: usize,
    k_list: &[f64],
    opts: BlowupOptions,
) -> Result<BlowupReport> {
    if !spec.keller_osserman_holds()? {
        return Err(Error::Precondition("boundary blow-up solutions need ∫^∞ ds/√H(s) < ∞".into()));
    }
    if !(m > 0.0 && m.is_finite()) {
        return Err(Error::Domain(format!("radius m must be positive, got {m}")));
    }
    if k_list.is_empty() || k_list.iter().any(|&k| !(k > 0.0 && k.is_finite())) || k_list.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter("k_list must be nonempty, positive and strictly increasing".into()));
    }
    let grid = uniform_radii(m, opts.intervals);
    let profiles = k_list
        .par_iter()
        .map(|&k| solve_for_boundary_value(spec, m, dimension, k, &grid, opts))
        .collect::<Result<Vec<_>>>()?;

    let monitor = opts.monitor_fraction * m;
    let v_all: Vec<Vec<f64>> = profiles.iter().map(|p| p.v_values()).collect();
    let mut cauchy = Vec::new();
    let mut increasing = true;
    for pair in v_all.windows(2) {
        let mut sup: f64 = 0.0;
        for (j, &r) in grid.iter().enumerate() {
            if r <= monitor {
                sup = sup.max((pair[1][j] - pair[0][j]).abs());
            }
            if pair[1][j] < pair[0][j] * (1.0 - 1e-9) {
                increasing = false;
            }
        }
        cauchy.push(sup);
    }
    let centers: Vec<f64> = profiles.iter().map(|p| p.center_value).collect();
    let centers_increasing = centers.windows(2).all(|w| w[1] > w[0]);

    let last = profiles.last().unwrap();
    let inequality = [0.0, 0.5 * m]
        .iter()
        .map(|&r| {
            let v = last.v_at(r)?;
            let lhs = keller_osserman_tail_from(spec, v)?;
            let rhs = (2.0 / dimension as f64).sqrt() * (m - r);
            Ok(InequalityCheck {
                radius: r,
                lhs,
                rhs,
                holds: lhs >= rhs * (1.0 - 1e-9),
            })
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(BlowupReport {
        m,
        k_values: k_list.to_vec(),
        center_values: centers,
        cauchy_differences: cauchy,
        increasing_in_k: increasing,
        centers_increasing,
        inequality,
        profiles,
    })
}

fn solve_for_boundary_value(
    spec: &NonlinearitySpec,
    m: f64,
    dimension: usize,
    k: f64,
    grid: &[f64],
    opts: BlowupOptions,
) -> Result<RadialProfile> {
    let target = k.ln_1p();
    // v(m) is very sensitive to v(0) close to the blow-up regime, so the
    // bisection shoots on the output grid itself with a tight tolerance; the
    // accepted profile then comes from exactly the same step sequence.
    let shoot_opts = ShootOptions {
        rel_tol: 1e-12,
        abs_tol: 1e-14,
        stop_w: Some(target + 2.0),
    };
    let reaches = |ln_a: f64| -> Result<bool> {
        match shoot_v_with(spec, ln_a.exp(), dimension, grid, shoot_opts)? {
            ShootOutcome::Blowup { .. } => Ok(true),
            ShootOutcome::Complete(p) => Ok(*p.w_values.last().unwrap() >= target),
        }
    };
    let hi = k.ln();
    let lo = hi - 700.0;
    if reaches(lo)? {
        return Err(Error::Bracket(format!("even v(0) = k·e^-700 exceeds k = {k} at r = m")));
    }
    let (lo, hi) = bisect_switch(reaches, lo, hi, opts.ln_center_tol, 400)?;
    let _ = hi;
    match shoot_v_with(spec, lo.exp(), dimension, grid, shoot_opts)? {
        ShootOutcome::Complete(mut p) => {
            let miss = (p.w_values.last().unwrap() - target).abs();
            if miss > 1e-6 * target.max(1.0) {
                return Err(Error::Tolerance {
                    residual: miss,
                    context: format!("boundary value k = {k} missed in ln(1+v) after bisection"),
                });
            }
            p.kind = ProfileKind::BoundaryBlowup;
            Ok(p)
        }
        ShootOutcome::Blowup { radius } => Err(Error::Tolerance {
            residual: radius - m,
            context: format!("boundary-value shot for k = {k} blew up before r = m"),
        }),
    }
}
