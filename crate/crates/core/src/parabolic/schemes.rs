//! Ball-exhaustion sequences.
//!
//! Every run in a sequence uses a grid with the same spacing, so nodes are
//! shared and fields can be compared without interpolation. Margins and
//! differences are measured in `W = ln(1 + u)`.

use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::nonlinearity::{softplus, NonlinearitySpec};
use crate::scalar_ode::ln_phi_infinity;
use crate::stationary::shoot_v;
use crate::threshold::{compute_r_n, GrowthFunction};

use super::field::{Boundary, EvolutionField, InitialData};
use super::grid::RadialGrid;
use super::solver::{discrete_profile, evolve_on_schedule, evolve_with, EvolveOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SchemeKind {
    /// Truncated data `g χ_{B_n}`, zero at a fixed outer radius; increasing in `n`.
    Truncated,
    /// Data `min{V_a, g}` on `B_n`, boundary `V_a(n)`; decreasing in `n`.
    Capped,
    /// Data `g` on `B_n`, boundary `V_c(n)`; increasing in `n`.
    SandwichLower,
    /// Data `g` on `B_n`, boundary `V_b(n)`; decreasing in `n`.
    SandwichUpper,
}

impl SchemeKind {
    fn increasing(self) -> bool {
        matches!(self, Self::Truncated | Self::SandwichLower)
    }

    fn tag(self) -> &'static str {
        match self {
            Self::Truncated => "truncated",
            Self::Capped => "capped",
            Self::SandwichLower => "sandwich-lower",
            Self::SandwichUpper => "sandwich-upper",
        }
    }
}

/// Where stationary profiles used as caps and boundary values come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ProfileSource {
    /// Exact steady states of the discrete operator; comparisons with them
    /// hold to solver tolerance.
    Discrete,
    /// The shooting solution sampled at the nodes.
    Shooting,
}

#[derive(Debug, Clone)]
pub struct SchemeOptions {
    /// Grid spacing shared by every run.
    pub h: f64,
    /// Cauchy differences are taken on `r ≤ monitor_radius`.
    pub monitor_radius: f64,
    /// Discretization tolerance in `W`; a monotonicity margin below
    /// `−10 · tolerance` aborts the sequence.
    pub tolerance: f64,
    /// Re-run the last truncated problem on `1.5 · R_out`.
    pub influence_check: bool,
    pub profile_source: ProfileSource,
    /// Substep times imposed on every run. Without one, the run with the
    /// largest data picks its steps adaptively and the others reuse them.
    pub schedule: Option<Arc<[f64]>>,
    pub evolve: EvolveOptions,
}

impl Default for SchemeOptions {
    fn default() -> Self {
        Self {
            h: 0.05,
            monitor_radius: 1.0,
            tolerance: 2.5e-3,
            influence_check: true,
            profile_source: ProfileSource::Discrete,
            schedule: None,
            evolve: EvolveOptions::default(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SchemeSequence {
    pub kind: SchemeKind,
    pub n_values: Vec<f64>,
    #[serde(skip)]
    pub fields: Vec<EvolutionField>,
    /// For each consecutive pair, the least signed step in the expected
    /// direction over the common region and all times.
    pub margins: Vec<f64>,
    /// For each consecutive pair, `max |W_{n_k} − W_{n_{k−1}}|` on `r ≤ monitor_radius`.
    pub cauchy_differences: Vec<f64>,
    pub monitor_radius: f64,
    /// `max |W|` change on `r ≤ monitor_radius` when the outer radius grows by half.
    pub domain_influence: Option<f64>,
    /// `max (W − ln(1 + Φ_∞(t)))` over all fields and `t > 0`.
    pub phi_infinity_excess: Option<f64>,
    /// Radius beyond which `g` dominates the stationary profile, when found.
    pub domination_radius: Option<f64>,
    /// `max |W_discrete − W_shooting|` of the stationary profile used.
    pub profile_gap: Option<f64>,
    pub negative_violations: usize,
    /// Substep times shared by every run of the sequence.
    #[serde(skip)]
    pub schedule: Arc<[f64]>,
}

impl SchemeSequence {
    /// The last field, used as the estimate of the limit.
    pub fn limit(&self) -> &EvolutionField {
        self.fields.last().expect("sequences are never empty")
    }

    pub fn min_margin(&self) -> f64 {
        self.margins.iter().cloned().fold(f64::INFINITY, f64::min)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SandwichSequences {
    pub lower: SchemeSequence,
    pub upper: SchemeSequence,
    /// `max(W_c − g, g − W_b)` over the data; nonpositive when the data sit
    /// between the two profiles.
    pub data_violation: f64,
    /// Largest amount by which either limit leaves `[W_c, W_b]`.
    pub sandwich_violation: f64,
    /// `max (W_lower − W_upper)` between the two limits.
    pub order_violation: f64,
}

fn check_n_values(n_values: &[f64], h: f64) -> Result<()> {
    if n_values.is_empty() {
        return Err(Error::InvalidParameter("n_list is empty".into()));
    }
    if n_values.windows(2).any(|w| !(w[1] > w[0])) || !(n_values[0] > 0.0) {
        return Err(Error::InvalidParameter("n_list must be positive and strictly increasing".into()));
    }
    if !(h > 0.0) {
        return Err(Error::InvalidGrid(format!("spacing must be positive, got {h}")));
    }
    Ok(())
}

fn check_times(times: &[f64]) -> Result<()> {
    if times.first() != Some(&0.0) || times.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidGrid("times must start at 0 and increase strictly".into()));
    }
    Ok(())
}

/// Signed monotone step between two fields on the first `nodes` nodes.
fn pair_margin(lo: &EvolutionField, hi: &EvolutionField, nodes: usize, increasing: bool) -> f64 {
    let mut margin = f64::INFINITY;
    for (a, b) in lo.values.iter().zip(&hi.values) {
        for j in 0..nodes {
            let d = if increasing { b[j] - a[j] } else { a[j] - b[j] };
            margin = margin.min(d);
        }
    }
    margin
}

fn monitored_difference(a: &EvolutionField, b: &EvolutionField, nodes: usize) -> f64 {
    a.values
        .iter()
        .zip(&b.values)
        .flat_map(|(x, y)| x[..nodes].iter().zip(&y[..nodes]).map(|(p, q)| (p - q).abs()))
        .fold(0.0, f64::max)
}

fn monitored_nodes(grid: &RadialGrid, radius: f64) -> usize {
    grid.radii().partition_point(|&r| r <= radius + 1e-12 * radius.max(1.0))
}

fn phi_infinity_excess(spec: &NonlinearitySpec, fields: &[EvolutionField], times: &[f64]) -> Result<Option<f64>> {
    if !spec.osgood_holds()? {
        return Ok(None);
    }
    let mut excess = f64::NEG_INFINITY;
    for (i, &t) in times.iter().enumerate().skip(1) {
        let cap = softplus(ln_phi_infinity(spec, t)?);
        for f in fields {
            excess = excess.max(f.values[i].iter().map(|w| w - cap).fold(f64::NEG_INFINITY, f64::max));
        }
    }
    Ok(Some(excess))
}

fn assemble(
    kind: SchemeKind,
    n_values: &[f64],
    grids: Vec<RadialGrid>,
    mut fields: Vec<EvolutionField>,
    schedule: Arc<[f64]>,
    opts: &SchemeOptions,
) -> Result<SchemeSequence> {
    let increasing = kind.increasing();
    let mut margins = Vec::new();
    let mut cauchy = Vec::new();
    for k in 1..fields.len() {
        let nodes = grids[k - 1].len().min(grids[k].len());
        let margin = pair_margin(&fields[k - 1], &fields[k], nodes, increasing);
        if margin < -10.0 * opts.tolerance {
            return Err(Error::Monotonicity {
                n_lo: n_values[k - 1],
                n_hi: n_values[k],
                margin,
            });
        }
        margins.push(margin);
        let mon = monitored_nodes(&grids[k - 1], opts.monitor_radius).min(nodes);
        cauchy.push(monitored_difference(&fields[k - 1], &fields[k], mon));
    }
    for (f, n) in fields.iter_mut().zip(n_values) {
        f.scheme_tag = format!("{} n = {n}", kind.tag());
    }
    let negative_violations = fields.iter().map(|f| f.negative_violations).sum();
    Ok(SchemeSequence {
        kind,
        n_values: n_values.to_vec(),
        fields,
        margins,
        cauchy_differences: cauchy,
        monitor_radius: opts.monitor_radius,
        domain_influence: None,
        phi_infinity_excess: None,
        domination_radius: None,
        profile_gap: None,
        negative_violations,
        schedule,
    })
}

/// Runs `job(k)` for `k < count` on a common substep schedule, so that the
/// discrete comparison principle applies between all runs. Unless a schedule
/// is imposed, job `lead` (the one with the largest data) runs first with
/// adaptive steps and the others reuse its step times.
fn run_shared<F>(count: usize, lead: usize, imposed: Option<&Arc<[f64]>>, job: F) -> Result<(Vec<EvolutionField>, Arc<[f64]>)>
where
    F: Fn(usize, Option<&[f64]>) -> Result<EvolutionField> + Sync,
{
    if let Some(schedule) = imposed {
        let fields = (0..count).into_par_iter().map(|k| job(k, Some(schedule))).collect::<Result<Vec<_>>>()?;
        return Ok((fields, schedule.clone()));
    }
    let first = job(lead, None)?;
    let schedule: Arc<[f64]> = first.step_times.clone().into();
    let mut rest = (0..count)
        .into_par_iter()
        .filter(|&k| k != lead)
        .map(|k| job(k, Some(&schedule)))
        .collect::<Result<Vec<_>>>()?;
    rest.insert(lead, first);
    Ok((rest, schedule))
}

fn solve(
    spec: &NonlinearitySpec,
    grid: &RadialGrid,
    init: &InitialData,
    boundary: &Boundary,
    times: &[f64],
    schedule: Option<&[f64]>,
    opts: EvolveOptions,
) -> Result<EvolutionField> {
    match schedule {
        Some(points) => evolve_on_schedule(spec, grid, init, boundary, times, points, opts),
        None => evolve_with(spec, grid, init, boundary, times, opts),
    }
}

/// Truncated data `g χ_{B_n}` with zero Dirichlet data at `r_out`, one run per `n`.
pub fn run_scheme_a4(
    spec: &NonlinearitySpec,
    g: &GrowthFunction,
    dimension: usize,
    n_values: &[f64],
    r_out: f64,
    times: &[f64],
    opts: &SchemeOptions,
) -> Result<SchemeSequence> {
    check_n_values(n_values, opts.h)?;
    check_times(times)?;
    if !(n_values[n_values.len() - 1] < r_out) {
        return Err(Error::InvalidParameter(format!("largest n must lie below R_out = {r_out}")));
    }
    let grid = RadialGrid::with_spacing(r_out, opts.h, dimension)?;
    let wide = RadialGrid::with_spacing(1.5 * r_out, opts.h, dimension)?;
    let count = n_values.len();
    let jobs = if opts.influence_check { count + 1 } else { count };
    let (mut fields, schedule) = run_shared(jobs, count - 1, opts.schedule.as_ref(), |k, schedule| {
        let (n, grid) = if k < count { (n_values[k], &grid) } else { (n_values[count - 1], &wide) };
        let init = InitialData::Truncated { g: g.clone(), n };
        solve(spec, grid, &init, &Boundary::zero(), times, schedule, opts.evolve)
    })?;
    let far = (jobs > count).then(|| fields.pop()).flatten();
    let grids = vec![grid.clone(); count];
    let mut seq = assemble(SchemeKind::Truncated, n_values, grids, fields, schedule, opts)?;
    if let Some(far) = far {
        let mon = monitored_nodes(&grid, opts.monitor_radius);
        seq.domain_influence = Some(monitored_difference(seq.limit(), &far, mon));
    }
    seq.phi_infinity_excess = phi_infinity_excess(spec, &seq.fields, times)?;
    Ok(seq)
}

/// Stationary profile `W_a` on the nodes of `grid`, and its gap to the
/// shooting profile.
fn profile_on(spec: &NonlinearitySpec, a: f64, grid: &RadialGrid, source: ProfileSource) -> Result<(Vec<f64>, f64)> {
    let shot = shoot_v(spec, a, grid.dimension(), grid.radii())?.w_values;
    let discrete = discrete_profile(spec, grid, a)?;
    let gap = shot.iter().zip(&discrete).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    Ok(match source {
        ProfileSource::Discrete => (discrete, gap),
        ProfileSource::Shooting => (shot, gap),
    })
}

fn ball_grids(n_values: &[f64], h: f64, dimension: usize) -> Result<Vec<RadialGrid>> {
    n_values.iter().map(|&n| RadialGrid::with_spacing(n, h, dimension)).collect()
}

/// Dirichlet data `W(n)` read off a profile sampled on the largest grid.
fn profile_boundary(profile: &[f64], grid: &RadialGrid) -> Boundary {
    Boundary::log1p(profile[grid.len() - 1])
}

/// Data `min{V_a, g}` on `B_n` with boundary value `V_a(n)`.
///
/// The radius past which `g` dominates `V_a` is recorded but not enforced.
#[allow(clippy::too_many_arguments)]
pub fn run_scheme_a8(
    spec: &NonlinearitySpec,
    g: &GrowthFunction,
    a: f64,
    dimension: usize,
    n_values: &[f64],
    times: &[f64],
    opts: &SchemeOptions,
) -> Result<SchemeSequence> {
    check_n_values(n_values, opts.h)?;
    check_times(times)?;
    if !(a > 0.0) {
        return Err(Error::Domain(format!("a must be positive, got {a}")));
    }
    let grids = ball_grids(n_values, opts.h, dimension)?;
    let (profile, gap) = profile_on(spec, a, &grids[grids.len() - 1], opts.profile_source)?;
    let init = |grid: &RadialGrid| {
        let w: Vec<f64> = grid.radii().iter().zip(&profile).map(|(&r, &wa)| g.gamma(r).min(wa)).collect();
        InitialData::LogValues(w)
    };
    let (fields, schedule) = run_shared(grids.len(), grids.len() - 1, opts.schedule.as_ref(), |k, schedule| {
        let grid = &grids[k];
        solve(spec, grid, &init(grid), &profile_boundary(&profile, grid), times, schedule, opts.evolve)
    })?;
    let mut seq = assemble(SchemeKind::Capped, n_values, grids, fields, schedule, opts)?;
    seq.profile_gap = Some(gap);
    let search = 4.0 * n_values[n_values.len() - 1];
    seq.domination_radius = match compute_r_n(g, spec, a, dimension, search.max(40.0)) {
        Ok(r) => Some(r),
        Err(Error::NoDomination(_)) => None,
        Err(e) => return Err(e),
    };
    Ok(seq)
}

/// Data `g` on `B_n` with boundary values `V_c(n)` (lower sequence) and
/// `V_b(n)` (upper sequence).
#[allow(clippy::too_many_arguments)]
pub fn run_scheme_a8_1(
    spec: &NonlinearitySpec,
    g: &GrowthFunction,
    c: f64,
    b: f64,
    dimension: usize,
    n_values: &[f64],
    times: &[f64],
    opts: &SchemeOptions,
) -> Result<SandwichSequences> {
    check_n_values(n_values, opts.h)?;
    check_times(times)?;
    if !(0.0 < c && c < b) {
        return Err(Error::InvalidParameter(format!("need 0 < c < b, got c = {c}, b = {b}")));
    }
    let grids = ball_grids(n_values, opts.h, dimension)?;
    let big = &grids[grids.len() - 1];
    let (vc, gap_c) = profile_on(spec, c, big, opts.profile_source)?;
    let (vb, gap_b) = profile_on(spec, b, big, opts.profile_source)?;
    let data: Vec<f64> = big.radii().iter().map(|&r| g.gamma(r)).collect();
    let data_violation = data
        .iter()
        .zip(vc.iter().zip(&vb))
        .map(|(&w, (&lo, &hi))| (lo - w).max(w - hi))
        .fold(f64::NEG_INFINITY, f64::max);
    if !(data_violation <= opts.tolerance) {
        return Err(Error::Precondition(format!(
            "data leave [V_{c}, V_{b}] by {data_violation:.3e} in ln(1+u)"
        )));
    }
    let init = |grid: &RadialGrid| InitialData::LogValues(data[..grid.len()].to_vec());
    let count = grids.len();
    let (mut lower, schedule) = run_shared(2 * count, 2 * count - 1, opts.schedule.as_ref(), |k, schedule| {
        let (grid, profile) = if k < count { (&grids[k], &vc) } else { (&grids[k - count], &vb) };
        solve(spec, grid, &init(grid), &profile_boundary(profile, grid), times, schedule, opts.evolve)
    })?;
    let upper = lower.split_off(count);
    let mut lower = assemble(SchemeKind::SandwichLower, n_values, grids.clone(), lower, schedule.clone(), opts)?;
    let mut upper = assemble(SchemeKind::SandwichUpper, n_values, grids, upper, schedule, opts)?;
    lower.profile_gap = Some(gap_c);
    upper.profile_gap = Some(gap_b);
    let (lo, hi) = (lower.limit(), upper.limit());
    let mut sandwich_violation = f64::NEG_INFINITY;
    let mut order_violation = f64::NEG_INFINITY;
    for (rl, ru) in lo.values.iter().zip(&hi.values) {
        for j in 0..rl.len() {
            let (wc, wb) = (vc[j], vb[j]);
            sandwich_violation = sandwich_violation.max((wc - rl[j]).max(rl[j] - wb)).max((wc - ru[j]).max(ru[j] - wb));
            order_violation = order_violation.max(rl[j] - ru[j]);
        }
    }
    Ok(SandwichSequences {
        lower,
        upper,
        data_violation,
        sandwich_violation,
        order_violation,
    })
}

/// `max (W_1 − W_2)` over all times and nodes.
///
/// For ordered data and boundary values this is at most the solver tolerance.
pub fn check_comparison(first: &EvolutionField, second: &EvolutionField) -> Result<f64> {
    if first.grid != second.grid {
        return Err(Error::GridMismatch("fields live on different grids".into()));
    }
    if first.times != second.times {
        return Err(Error::GridMismatch("fields use different time grids".into()));
    }
    Ok(first
        .values
        .iter()
        .zip(&second.values)
        .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| x - y))
        .fold(f64::NEG_INFINITY, f64::max))
}
