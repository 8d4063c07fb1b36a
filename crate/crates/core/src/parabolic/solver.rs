//! Backward Euler for `∂_t u − Δu + u h(u) = 0` on a ball, solved in
//! `W = ln(1 + u)`.
//!
//! With `U = e^W = 1 + u`, the implicit step at node `j` is
//!
//! ```text
//! U_j (1/dt + Σ_k c_jk + h_j) = U_j^old/dt + Σ_k c_jk U_k + h_j,   h_j = h(U_j − 1)
//! ```
//!
//! where `c_jk > 0` are the Laplacian couplings. Both sides are sums of
//! positive terms, so the residual is taken in logs:
//!
//! ```text
//! G_j = W_j + ln(1/dt + Σ c_jk + h_j) − ln(e^{W_j^old}/dt + Σ c_jk e^{W_k} + h_j).
//! ```
//!
//! The Jacobian is tridiagonal with nonpositive off-diagonals, so the scheme
//! stays monotone, and `W ≥ 0` is preserved: all right-hand terms dominate
//! their left-hand counterparts whenever `U ≥ 1`.

use crate::error::{Error, Result};
use crate::nonlinearity::NonlinearitySpec;
use crate::numerics::log_add_exp;
use crate::numerics::tridiag::solve_tridiagonal;

use super::field::{Boundary, EvolutionField, InitialData};
use super::grid::RadialGrid;

#[derive(Debug, Clone, Copy)]
pub struct EvolveOptions {
    /// Max-norm tolerance on the log residual `G`.
    pub newton_tol: f64,
    pub max_newton: usize,
    /// Step halvings in the damped Newton line search.
    pub max_halvings: usize,
    /// Substeps satisfy `dt · h(u_j) ≤ stiffness_cap` at every node.
    pub stiffness_cap: f64,
    pub max_substep: f64,
    /// Values below `−negative_tol` after a step count as violations.
    pub negative_tol: f64,
    /// Times a failed substep is retried with half the step.
    pub max_step_retries: usize,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        Self {
            newton_tol: 1e-10,
            max_newton: 50,
            max_halvings: 30,
            stiffness_cap: 0.1,
            max_substep: f64::INFINITY,
            negative_tol: 1e-12,
            max_step_retries: 12,
        }
    }
}

pub fn evolve(spec: &NonlinearitySpec, grid: &RadialGrid, init: &InitialData, boundary: &Boundary, times: &[f64]) -> Result<EvolutionField> {
    evolve_with(spec, grid, init, boundary, times, EvolveOptions::default())
}

pub fn evolve_with(
    spec: &NonlinearitySpec,
    grid: &RadialGrid,
    init: &InitialData,
    boundary: &Boundary,
    times: &[f64],
    opts: EvolveOptions,
) -> Result<EvolutionField> {
    run(spec, grid, init, boundary, times, None, opts)
}

/// Like [`evolve_with`], but every substep ends on a point of `schedule`
/// (or an output time). Runs sharing a schedule obey the discrete comparison
/// principle exactly; the usual choice is the `step_times` of the run with
/// the largest data.
pub fn evolve_on_schedule(
    spec: &NonlinearitySpec,
    grid: &RadialGrid,
    init: &InitialData,
    boundary: &Boundary,
    times: &[f64],
    schedule: &[f64],
    opts: EvolveOptions,
) -> Result<EvolutionField> {
    if schedule.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidGrid("substep schedule must increase strictly".into()));
    }
    run(spec, grid, init, boundary, times, Some(schedule), opts)
}

fn run(
    spec: &NonlinearitySpec,
    grid: &RadialGrid,
    init: &InitialData,
    boundary: &Boundary,
    times: &[f64],
    schedule: Option<&[f64]>,
    opts: EvolveOptions,
) -> Result<EvolutionField> {
    if times.first() != Some(&0.0) || times.windows(2).any(|w| !(w[1] > w[0])) || times.iter().any(|t| !t.is_finite()) {
        return Err(Error::InvalidGrid("times must start at 0 and increase strictly".into()));
    }
    let stepper = Stepper::new(spec, grid, opts);
    let m = grid.len() - 1;
    let mut w = init.log1p_on(spec, grid)?;
    w[m] = boundary.log1p_at(0.0)?;
    let mut field = EvolutionField {
        times: times.to_vec(),
        grid: grid.clone(),
        values: Vec::with_capacity(times.len()),
        boundary: boundary.describe(),
        initial: init.describe(),
        scheme_tag: String::new(),
        negative_violations: 0,
        substeps: 0,
        newton_iterations: 0,
        step_times: Vec::new(),
    };
    field.values.push(w.clone());
    let mut next = vec![0.0; w.len()];
    for win in times.windows(2) {
        let t_end = win[1];
        let mut t = win[0];
        while t < t_end {
            let mut dt = (t_end - t).min(opts.max_substep);
            match schedule {
                Some(points) => {
                    let k = points.partition_point(|&p| p <= t * (1.0 + 1e-14));
                    if let Some(&p) = points.get(k) {
                        dt = dt.min(p - t);
                    }
                }
                None => {
                    let rate = w.iter().map(|&x| absorption_rate(spec, x)).fold(0.0, f64::max);
                    if rate > 0.0 {
                        dt = dt.min(opts.stiffness_cap / rate);
                    }
                }
            }
            if t + dt >= t_end - 1e-14 * t_end {
                dt = t_end - t;
            }
            let mut retries = 0;
            loop {
                let t_new = if dt == t_end - t { t_end } else { t + dt };
                let wb = boundary.log1p_at(t_new)?;
                match stepper.step(&w, wb, dt, &mut next) {
                    Ok(iters) => {
                        field.newton_iterations += iters;
                        field.substeps += 1;
                        for x in next.iter_mut() {
                            if *x < 0.0 {
                                if *x < -opts.negative_tol {
                                    field.negative_violations += 1;
                                }
                                *x = 0.0;
                            }
                        }
                        next[m] = wb;
                        std::mem::swap(&mut w, &mut next);
                        t = t_new;
                        field.step_times.push(t);
                        break;
                    }
                    Err(residual) => {
                        if retries >= opts.max_step_retries {
                            return Err(Error::NewtonDivergence {
                                step: field.substeps + 1,
                                time: t_new,
                                residual,
                            });
                        }
                        retries += 1;
                        dt *= 0.5;
                    }
                }
            }
        }
        field.values.push(w.clone());
    }
    Ok(field)
}

/// Stationary profile of the discrete operator: `ln(1 + v_j)` with
/// `v_0 = a` and every non-boundary row of `Δ_h v = v h(v)` satisfied exactly.
///
/// Each row is solved for the next node, `v_{j+1} − v_j = (v_j h(v_j) + c_{j,j−1}(v_j − v_{j−1})) / c_{j,j+1}`;
/// all terms are positive, so the recursion runs in logs without overflow.
/// Solutions of the evolution problem are compared to it exactly, and it
/// differs from the shooting profile by `O(h²)`.
pub fn discrete_profile(spec: &NonlinearitySpec, grid: &RadialGrid, a: f64) -> Result<Vec<f64>> {
    if !(a > 0.0 && a.is_finite()) {
        return Err(Error::Domain(format!("centre value must be positive, got {a}")));
    }
    let weights = grid.laplacian_weights();
    let mut w = Vec::with_capacity(grid.len());
    w.push(a.ln_1p());
    let mut ln_step = f64::NEG_INFINITY;
    for (j, &(c_lo, c_up)) in weights.iter().enumerate() {
        let wj = w[j];
        let ln_u = wj + (-(-wj).exp_m1()).ln();
        let source = ln_u + spec.ln_h_of_log1p(wj);
        let ln_flux = if j == 0 { f64::NEG_INFINITY } else { c_lo.ln() + ln_step };
        ln_step = log_add_exp(source, ln_flux) - c_up.ln();
        let next = log_add_exp(wj, ln_step);
        if !next.is_finite() {
            return Err(Error::Overflow {
                radius: grid.radii()[j + 1],
                limit: f64::MAX,
            });
        }
        w.push(next);
    }
    Ok(w)
}

/// Backward Euler divides `u` by `1 + dt·h(u)` per step, which only tracks
/// the decay `e^{−h dt}` while `dt·h` stays small.
fn absorption_rate(spec: &NonlinearitySpec, w: f64) -> f64 {
    spec.h_of_log1p(w)
}

struct Stepper<'a> {
    spec: &'a NonlinearitySpec,
    weights: Vec<(f64, f64)>,
    ln_weights: Vec<(f64, f64)>,
    opts: EvolveOptions,
}

struct Residual {
    g: Vec<f64>,
    lower: Vec<f64>,
    diag: Vec<f64>,
    upper: Vec<f64>,
}

impl<'a> Stepper<'a> {
    fn new(spec: &'a NonlinearitySpec, grid: &RadialGrid, opts: EvolveOptions) -> Self {
        let weights = grid.laplacian_weights();
        let ln_weights = weights.iter().map(|&(a, b)| (a.ln(), b.ln())).collect();
        Self {
            spec,
            weights,
            ln_weights,
            opts,
        }
    }

    /// Log residual and, when `jac` is set, its tridiagonal Jacobian.
    /// `w` holds the unknowns `0..m`; `wb` is the boundary value at node `m`.
    fn residual(&self, w: &[f64], wb: f64, w_old: &[f64], dt: f64, jac: bool) -> Residual {
        let m = self.weights.len();
        let ln_dt = dt.ln();
        let mut out = Residual {
            g: vec![0.0; m],
            lower: vec![0.0; if jac { m } else { 0 }],
            diag: vec![0.0; if jac { m } else { 0 }],
            upper: vec![0.0; if jac { m } else { 0 }],
        };
        let at = |k: usize| if k == m { wb } else { w[k] };
        for j in 0..m {
            let (c_lo, c_up) = self.weights[j];
            let (ln_lo, ln_up) = self.ln_weights[j];
            let wj = w[j];
            let h = self.spec.h_of_log1p(wj);
            let dh = if h > 0.0 { h * self.spec.dln_h_of_log1p(wj) } else { 0.0 };
            let t_old = w_old[j] - ln_dt;
            let t_up = ln_up + at(j + 1);
            let t_lo = if j > 0 { ln_lo + w[j - 1] } else { f64::NEG_INFINITY };
            let t_h = if h > 0.0 { h.ln() } else { f64::NEG_INFINITY };
            let top = t_old.max(t_up).max(t_lo).max(t_h);
            let sum = (t_old - top).exp() + (t_up - top).exp() + (t_lo - top).exp() + (t_h - top).exp();
            let ln_rhs = top + sum.ln();
            let d = 1.0 / dt + c_lo + c_up + h;
            out.g[j] = wj + d.ln() - ln_rhs;
            if jac {
                out.diag[j] = 1.0 + dh * (1.0 / d - (-ln_rhs).exp());
                if j > 0 {
                    out.lower[j] = -(t_lo - ln_rhs).exp();
                }
                if j + 1 < m {
                    out.upper[j] = -(t_up - ln_rhs).exp();
                }
            }
        }
        out
    }

    /// Solves row `j` for `W_j` with its neighbours held fixed.
    fn relax_node(&self, w: &[f64], wb: f64, w_old: &[f64], dt: f64, j: usize) -> f64 {
        let m = self.weights.len();
        let (c_lo, c_up) = self.weights[j];
        let (ln_lo, ln_up) = self.ln_weights[j];
        let t_old = w_old[j] - dt.ln();
        let t_up = ln_up + if j + 1 == m { wb } else { w[j + 1] };
        let t_lo = if j > 0 { ln_lo + w[j - 1] } else { f64::NEG_INFINITY };
        let fixed = log_add_exp(log_add_exp(t_old, t_up), t_lo);
        let base = 1.0 / dt + c_lo + c_up;
        let eval = |x: f64| {
            let h = self.spec.h_of_log1p(x);
            let ln_rhs = if h > 0.0 { log_add_exp(fixed, h.ln()) } else { fixed };
            let g = x + (base + h).ln() - ln_rhs;
            let dh = if h > 0.0 { h * self.spec.dln_h_of_log1p(x) } else { 0.0 };
            (g, 1.0 + dh * (1.0 / (base + h) - (-ln_rhs).exp()))
        };
        let mut x = w[j];
        let (mut g, mut dg) = eval(x);
        for _ in 0..60 {
            if g.abs() <= 1e-13 * x.abs().max(1.0) {
                break;
            }
            let step = -g / dg.max(1e-3);
            let mut lambda = 1.0;
            loop {
                let y = (x + lambda * step).max(0.0);
                let (gy, dgy) = eval(y);
                if gy.abs() < g.abs() || lambda < 1e-6 {
                    x = y;
                    g = gy;
                    dg = dgy;
                    break;
                }
                lambda *= 0.5;
            }
        }
        x
    }

    /// One forward and one backward nonlinear Gauss–Seidel sweep, which carries
    /// steep fronts across the whole grid before Newton starts.
    fn sweep(&self, w: &mut [f64], wb: f64, w_old: &[f64], dt: f64) {
        let m = self.weights.len();
        for j in (0..m).chain((0..m).rev()) {
            w[j] = self.relax_node(w, wb, w_old, dt, j);
        }
    }

    /// One implicit step; on failure returns the last residual norm.
    fn step(&self, w_old: &[f64], wb: f64, dt: f64, out: &mut [f64]) -> std::result::Result<usize, f64> {
        let m = self.weights.len();
        out.copy_from_slice(w_old);
        let norm = |g: &[f64]| g.iter().fold(0.0f64, |acc, x| acc.max(x.abs()));
        if norm(&self.residual(&out[..m], wb, w_old, dt, false).g) > 1.0 {
            self.sweep(&mut out[..m], wb, w_old, dt);
        }
        let mut res = self.residual(&out[..m], wb, w_old, dt, true);
        let mut merit = norm(&res.g);
        for iter in 0..self.opts.max_newton {
            if merit <= self.opts.newton_tol {
                return Ok(iter);
            }
            let rhs: Vec<f64> = res.g.iter().map(|x| -x).collect();
            let delta = solve_tridiagonal(&res.lower, &res.diag, &res.upper, &rhs).map_err(|_| merit)?;
            if delta.iter().any(|d| !d.is_finite()) {
                return Err(merit);
            }
            let mut lambda = 1.0;
            let mut accepted = false;
            let mut trial = vec![0.0; m];
            for _ in 0..=self.opts.max_halvings {
                for j in 0..m {
                    trial[j] = out[j] + lambda * delta[j];
                }
                let r = self.residual(&trial, wb, w_old, dt, false);
                let tm = norm(&r.g);
                if tm.is_finite() && (tm < (1.0 - 1e-4 * lambda) * merit || tm <= self.opts.newton_tol) {
                    out[..m].copy_from_slice(&trial);
                    accepted = true;
                    break;
                }
                lambda *= 0.5;
            }
            if !accepted {
                return Err(merit);
            }
            res = self.residual(&out[..m], wb, w_old, dt, true);
            merit = norm(&res.g);
        }
        if merit <= self.opts.newton_tol {
            Ok(self.opts.max_newton)
        } else {
            Err(merit)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::linear_fit;
    use crate::scalar_ode::solve_phi_log;
    use crate::stationary::shoot_v;

    fn lp15() -> NonlinearitySpec {
        NonlinearitySpec::log_power(1.5).unwrap()
    }

    #[test]
    fn zero_stays_zero() {
        let grid = RadialGrid::uniform(3.0, 30, 2).unwrap();
        let f = evolve(&lp15(), &grid, &InitialData::Constant(0.0), &Boundary::zero(), &[0.0, 0.1, 1.0]).unwrap();
        assert!(f.values.iter().flatten().all(|&w| w == 0.0));
        assert_eq!(f.negative_violations, 0);
    }

    fn flat_run(dt: f64) -> (f64, f64) {
        // Returns (max spatial spread, max error against Φ_a) in ln(1+u).
        let spec = lp15();
        let a = 3.0;
        let grid = RadialGrid::uniform(2.0, 20, 3).unwrap();
        let times: Vec<f64> = (0..=10).map(|i| 0.05 * i as f64).collect();
        let opts = EvolveOptions {
            max_substep: dt,
            stiffness_cap: f64::INFINITY,
            ..EvolveOptions::default()
        };
        let f = evolve_with(&spec, &grid, &InitialData::Constant(a), &Boundary::flat(spec.clone(), a), &times, opts).unwrap();
        let mut spread: f64 = 0.0;
        let mut err: f64 = 0.0;
        for (t, row) in times.iter().zip(&f.values) {
            let exact = crate::nonlinearity::softplus(solve_phi_log(&spec, a.ln(), *t).unwrap());
            let lo = row.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            spread = spread.max((hi - lo) / exact);
            err = err.max((row[0] - exact).abs() / exact);
        }
        (spread, err)
    }

    #[test]
    fn flat_data_follows_the_ode_at_first_order() {
        let (spread, e1) = flat_run(1e-3);
        let (_, e2) = flat_run(5e-4);
        let (_, e3) = flat_run(2.5e-4);
        assert!(spread < 1e-3 && e1 < 1e-3, "spread {spread}, err {e1}");
        let order = -linear_fit(&[0.0, 2f64.ln(), 4f64.ln()], &[e1.ln(), e2.ln(), e3.ln()]).1;
        assert!((order - 1.0).abs() < 0.2, "observed order {order}");
    }

    #[test]
    fn flat_data_is_spatially_constant_with_small_steps() {
        let spec = lp15();
        let a = 3.0;
        let grid = RadialGrid::uniform(2.0, 20, 3).unwrap();
        let times = [0.0, 0.05, 0.1];
        let opts = EvolveOptions {
            max_substep: 2e-6,
            ..EvolveOptions::default()
        };
        let f = evolve_with(&spec, &grid, &InitialData::Constant(a), &Boundary::flat(spec.clone(), a), &times, opts).unwrap();
        for (t, i) in [(0.05, 1), (0.1, 2)] {
            let exact = solve_phi_log(&spec, a.ln(), t).unwrap().exp();
            for j in 0..grid.len() {
                assert!((f.u(i, j) / exact - 1.0).abs() < 1e-6, "t = {t}, r = {}", grid.radii()[j]);
            }
        }
    }

    fn stationary_error(intervals: usize) -> f64 {
        let spec = lp15();
        let a = 1.0;
        let grid = RadialGrid::uniform(3.0, intervals, 3).unwrap();
        let v = shoot_v(&spec, a, 3, grid.radii()).unwrap();
        let wb = *v.w_values.last().unwrap();
        let f = evolve(
            &spec,
            &grid,
            &InitialData::LogValues(v.w_values.clone()),
            &Boundary::log1p(wb),
            &[0.0, 0.5, 2.0],
        )
        .unwrap();
        f.values
            .iter()
            .flat_map(|row| row.iter().zip(&v.w_values).map(|(a, b)| (a.exp_m1() - b.exp_m1()).abs()))
            .fold(0.0, f64::max)
    }

    #[test]
    fn stationary_profile_is_preserved_to_second_order() {
        let e1 = stationary_error(30);
        let e2 = stationary_error(60);
        assert!(e1 < 1e-2, "error {e1}");
        let ratio = e1 / e2;
        assert!((ratio / 4.0 - 1.0).abs() < 0.2, "ratio {ratio}");
    }

    #[test]
    fn discrete_profile_is_stationary_and_close_to_shooting() {
        let spec = lp15();
        let err = |intervals: usize| {
            let grid = RadialGrid::uniform(4.0, intervals, 2).unwrap();
            let w = discrete_profile(&spec, &grid, 2.0).unwrap();
            let f = evolve(&spec, &grid, &InitialData::LogValues(w.clone()), &Boundary::log1p(w[intervals]), &[0.0, 0.1, 1.0]).unwrap();
            for row in &f.values {
                assert!(row.iter().zip(&w).all(|(a, b)| (a - b).abs() < 1e-9));
            }
            let v = shoot_v(&spec, 2.0, 2, grid.radii()).unwrap();
            w.iter().zip(&v.w_values).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
        };
        let ratio = err(40) / err(80);
        assert!((ratio / 4.0 - 1.0).abs() < 0.2, "ratio {ratio}");
    }

    #[test]
    fn ordered_data_stay_ordered() {
        let spec = lp15();
        let grid = RadialGrid::uniform(4.0, 40, 2).unwrap();
        let base: Vec<f64> = grid.radii().iter().map(|r| (5.0 * (-r * r).exp()).ln_1p()).collect();
        let shifted: Vec<f64> = base.iter().map(|w| (w.exp_m1() + 1.0).ln_1p()).collect();
        let times = [0.0, 0.01, 0.1, 0.5];
        let f1 = evolve(&spec, &grid, &InitialData::LogValues(base), &Boundary::zero(), &times).unwrap();
        let f2 = evolve(&spec, &grid, &InitialData::LogValues(shifted), &Boundary::value(1.0), &times).unwrap();
        for (r1, r2) in f1.values.iter().zip(&f2.values) {
            assert!(r1.iter().zip(r2).all(|(a, b)| a < b));
        }
    }

    #[test]
    fn huge_truncated_data_stay_finite_and_nonnegative() {
        let spec = lp15();
        let grid = RadialGrid::with_spacing(5.0, 0.1, 1).unwrap();
        let g = crate::threshold::GrowthFunction::power_law(2.0, 4.0).unwrap();
        let f = evolve(&spec, &grid, &InitialData::Truncated { g, n: 4.0 }, &Boundary::zero(), &[0.0, 0.01, 0.1]).unwrap();
        assert_eq!(f.negative_violations, 0);
        assert!(f.values.iter().flatten().all(|w| w.is_finite() && *w >= 0.0));
        assert!(f.values[2][0] < f.values[0][40]);
    }
}
