use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::nonlinearity::{softplus, NonlinearitySpec};
use crate::scalar_ode::solve_phi_log;
use crate::stationary::{shoot_v, RadialProfile, V_CLIP};
use crate::table::Table;
use crate::threshold::GrowthFunction;

use super::grid::RadialGrid;

/// Initial data, evaluated on a grid in the form `ln(1 + u)`.
#[derive(Debug, Clone)]
pub enum InitialData {
    /// `g χ_{B_n}`: `g` on `r ≤ n`, zero outside.
    Truncated { g: GrowthFunction, n: f64 },
    /// `min{V_a, g}` with `V_a` shot on the evolution grid.
    Capped { g: GrowthFunction, a: f64 },
    Raw(GrowthFunction),
    /// `u ≡ value`.
    Constant(f64),
    /// Nodal values of `ln(1 + u)`, one per grid node.
    LogValues(Vec<f64>),
}

impl InitialData {
    pub fn log1p_on(&self, spec: &NonlinearitySpec, grid: &RadialGrid) -> Result<Vec<f64>> {
        let radii = grid.radii();
        let values: Vec<f64> = match self {
            Self::Truncated { g, n } => radii.iter().map(|&r| if r <= *n { g.gamma(r) } else { 0.0 }).collect(),
            Self::Capped { g, a } => {
                let v = shoot_v(spec, *a, grid.dimension(), radii)?;
                radii.iter().zip(&v.w_values).map(|(&r, &w)| g.gamma(r).min(w)).collect()
            }
            Self::Raw(g) => radii.iter().map(|&r| g.gamma(r)).collect(),
            Self::Constant(c) => {
                if !(*c >= 0.0) {
                    return Err(Error::Domain(format!("initial value must be nonnegative, got {c}")));
                }
                vec![c.ln_1p(); radii.len()]
            }
            Self::LogValues(w) => {
                if w.len() != radii.len() {
                    return Err(Error::GridMismatch(format!("{} initial values for {} nodes", w.len(), radii.len())));
                }
                w.clone()
            }
        };
        if let Some((j, w)) = values.iter().enumerate().find(|(_, w)| !(**w >= 0.0 && w.is_finite())) {
            return Err(Error::Domain(format!("initial data invalid at r = {}: ln(1+u) = {w}", radii[j])));
        }
        Ok(values)
    }

    pub fn describe(&self) -> String {
        match self {
            Self::Truncated { g, n } => format!("truncated [{}] on r <= {n}", g.description()),
            Self::Capped { g, a } => format!("min(V_{a}, [{}])", g.description()),
            Self::Raw(g) => format!("[{}]", g.description()),
            Self::Constant(c) => format!("constant {c}"),
            Self::LogValues(_) => "nodal values".into(),
        }
    }
}

pub type TraceFn = Arc<dyn Fn(f64) -> Result<f64> + Send + Sync>;

/// Dirichlet data at `R_out`, in the form `ln(1 + u)`.
#[derive(Clone)]
pub enum Boundary {
    Constant(f64),
    Trace { log1p: TraceFn, description: String },
}

impl fmt::Debug for Boundary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.describe())
    }
}

impl Boundary {
    pub fn zero() -> Self {
        Self::Constant(0.0)
    }

    /// `u = value` at `R_out`.
    pub fn value(u: f64) -> Self {
        Self::Constant(u.ln_1p())
    }

    /// `ln(1 + u) = w` at `R_out`; usable where `u` itself overflows.
    pub fn log1p(w: f64) -> Self {
        Self::Constant(w)
    }

    /// `u(t, R_out) = Φ_a(t)`.
    pub fn flat(spec: NonlinearitySpec, a: f64) -> Self {
        let ln_a = a.ln();
        Self::Trace {
            description: format!("flat solution from a = {a}"),
            log1p: Arc::new(move |t| Ok(softplus(solve_phi_log(&spec, ln_a, t)?))),
        }
    }

    pub fn trace<F>(f: F, description: impl Into<String>) -> Self
    where
        F: Fn(f64) -> Result<f64> + Send + Sync + 'static,
    {
        Self::Trace {
            log1p: Arc::new(f),
            description: description.into(),
        }
    }

    pub fn log1p_at(&self, t: f64) -> Result<f64> {
        let w = match self {
            Self::Constant(w) => *w,
            Self::Trace { log1p, .. } => log1p(t)?,
        };
        if !(w >= 0.0 && w.is_finite()) {
            return Err(Error::Domain(format!("boundary value ln(1+u) = {w} at t = {t}")));
        }
        Ok(w)
    }

    pub fn describe(&self) -> String {
        match self {
            Self::Constant(w) => format!("constant ln(1+u) = {w}"),
            Self::Trace { description, .. } => description.clone(),
        }
    }
}

/// Output times: geometric from `first` with ratio `ratio` until the step
/// reaches `max_step`, then uniform up to `t_end`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimeGrid {
    times: Vec<f64>,
}

impl TimeGrid {
    pub fn new(mut times: Vec<f64>) -> Result<Self> {
        times.sort_by(f64::total_cmp);
        times.dedup();
        if times.first() != Some(&0.0) {
            return Err(Error::InvalidGrid("time grid must start at t = 0".into()));
        }
        if times.iter().any(|t| !t.is_finite()) {
            return Err(Error::InvalidGrid("times must be finite".into()));
        }
        Ok(Self { times })
    }

    pub fn geometric(t_end: f64, first: f64, ratio: f64, max_step: f64) -> Result<Self> {
        if !(t_end > 0.0 && first > 0.0 && ratio > 1.0 && max_step >= first) {
            return Err(Error::InvalidGrid(format!(
                "bad geometric time grid: t_end = {t_end}, first = {first}, ratio = {ratio}, max_step = {max_step}"
            )));
        }
        let mut times = vec![0.0];
        let mut t = 0.0;
        let mut dt = first;
        while t + dt < t_end * (1.0 - 1e-12) {
            t += dt;
            times.push(t);
            dt = (dt * ratio).min(max_step);
        }
        times.push(t_end);
        Self::new(times)
    }

    /// First step `1e-6`, ratio `1.3`.
    pub fn standard(t_end: f64, max_step: f64) -> Result<Self> {
        Self::geometric(t_end, 1e-6, 1.3, max_step)
    }

    /// Adds the given times (e.g. report times) to the grid.
    pub fn with_times(self, extra: &[f64]) -> Result<Self> {
        let mut times = self.times;
        times.extend_from_slice(extra);
        Self::new(times)
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn index_of(&self, t: f64) -> Option<usize> {
        self.times.iter().position(|&s| (s - t).abs() <= 1e-12 * t.abs().max(1.0))
    }
}

/// Solution of one Cauchy–Dirichlet run, stored as `W = ln(1 + u)`.
#[derive(Debug, Clone, Serialize)]
pub struct EvolutionField {
    pub times: Vec<f64>,
    #[serde(skip)]
    pub grid: RadialGrid,
    /// `values[i][j] = ln(1 + u(t_i, r_j))`.
    pub values: Vec<Vec<f64>>,
    pub boundary: String,
    pub initial: String,
    pub scheme_tag: String,
    /// Nodes clipped back to zero after a step; must stay 0.
    pub negative_violations: usize,
    pub substeps: usize,
    pub newton_iterations: usize,
    /// End time of every accepted substep.
    #[serde(skip)]
    pub step_times: Vec<f64>,
}

impl EvolutionField {
    pub fn radii(&self) -> &[f64] {
        self.grid.radii()
    }

    pub fn u(&self, i: usize, j: usize) -> f64 {
        self.values[i][j].exp_m1()
    }

    pub fn u_row(&self, i: usize) -> Vec<f64> {
        self.values[i].iter().map(|w| w.exp_m1()).collect()
    }

    pub fn time_index(&self, t: f64) -> Option<usize> {
        self.times.iter().position(|&s| (s - t).abs() <= 1e-12 * t.abs().max(1.0))
    }

    /// `V(r_j) − u(t_i, r_j)` for a profile sampled on the same nodes.
    pub fn deficit_from(&self, profile: &RadialProfile) -> Result<Vec<Vec<f64>>> {
        let n = self.radii().len();
        if profile.radii.len() < n || profile.radii[..n].iter().zip(self.radii()).any(|(a, b)| (a - b).abs() > 1e-12 * b.max(1.0)) {
            return Err(Error::GridMismatch("profile radii do not cover the field nodes".into()));
        }
        Ok(self
            .values
            .iter()
            .map(|row| row.iter().zip(&profile.w_values).map(|(w, wv)| wv.exp_m1() - w.exp_m1()).collect())
            .collect())
    }

    /// Long format `(t, r, u, log1p_u)`, `u` saturated at `1e300`.
    pub fn to_table(&self) -> Table {
        let mut table = Table::new(["t", "r", "u", "log1p_u"]);
        for (t, row) in self.times.iter().zip(&self.values) {
            for (r, w) in self.radii().iter().zip(row) {
                table.push(vec![*t, *r, w.exp_m1().min(V_CLIP), *w]);
            }
        }
        table
    }
}
