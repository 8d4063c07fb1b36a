use std::collections::BTreeMap;
use std::path::Path;

use absorption_core::parabolic::{run_scheme_a4, run_scheme_a8, run_scheme_a8_1, SchemeOptions, SchemeSequence};
use absorption_core::scalar_ode::{ln_phi_infinity, phi_infinity_trajectory, solve_phi};
use absorption_core::stationary::{apriori_bound_log, shoot_v, uniform_radii, verify_asymptotics};
use absorption_core::threshold::{alpha2_point, threshold_report, threshold_verdict};
use absorption_core::{GrowthFunction, RadialGrid, Table, TimeGrid};
use serde_json::json;

use crate::config::{ExperimentConfig, FamilyKind, Scenario};
use crate::output::{emit_manifest, Check, OutputDir, RunManifest};
use crate::CliError;

pub const MANIFEST_NAME: &str = "manifest.json";

/// What a scenario hands back before the manifest is assembled.
struct Outcome {
    checks: Vec<Check>,
    tolerances: BTreeMap<String, f64>,
    summary: serde_json::Value,
}

/// Runs the scenario of `config`, writing its tables and `manifest.json`
/// under `out_dir`.
pub fn run(config: &ExperimentConfig, out_dir: &Path, tolerance_scale: f64) -> Result<RunManifest, CliError> {
    if !(tolerance_scale.is_finite() && tolerance_scale > 0.0) {
        return Err(CliError::Config(format!("tolerance scale must be positive, got {tolerance_scale}")));
    }
    config.validate()?;
    let mut out = OutputDir::create(out_dir)?;
    let s = tolerance_scale;
    let outcome = match config.scenario {
        Scenario::Conditions => conditions(config, &mut out)?,
        Scenario::FlatOde => flat_ode(config, &mut out, s)?,
        Scenario::Stationary => stationary(config, &mut out, s)?,
        Scenario::TheoremB => theorem_b(config, &mut out, s)?,
        Scenario::TheoremC => theorem_c(config, &mut out, s)?,
        Scenario::NonUniqueness => non_uniqueness(config, &mut out, s)?,
        Scenario::Alpha2 => alpha2(config, &mut out)?,
    };
    let manifest_path = out.root().join(MANIFEST_NAME);
    let manifest = RunManifest {
        tool: env!("CARGO_PKG_NAME").into(),
        version: env!("CARGO_PKG_VERSION").into(),
        config: config.clone(),
        tolerance_scale,
        tolerances: outcome.tolerances,
        passed: outcome.checks.iter().all(|c| c.passed),
        checks: outcome.checks,
        summary: outcome.summary,
        files: out.into_files(),
    };
    emit_manifest(&manifest_path, &manifest)?;
    Ok(manifest)
}

fn tolerances<const K: usize>(pairs: [(&str, f64); K]) -> BTreeMap<String, f64> {
    pairs.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
}

fn uniform_times(t_end: f64, max_step: f64) -> Vec<f64> {
    let steps = (t_end / max_step).ceil().max(1.0) as usize;
    (0..=steps).map(|i| t_end * i as f64 / steps as f64).collect()
}

fn conditions(config: &ExperimentConfig, out: &mut OutputDir) -> Result<Outcome, CliError> {
    let spec = config.spec()?;
    let report = spec.classify()?;
    let mut table = Table::new(["osgood", "keller_osserman", "h2", "analytic", "numeric_agrees"]);
    table.push(
        [report.osgood_h1, report.keller_osserman_h1_1, report.h2, report.analytic, report.numeric_agrees]
            .map(|b| b as u8 as f64)
            .to_vec(),
    );
    out.csv("conditions.csv", &table)?;
    out.json("conditions.json", &report)?;
    Ok(Outcome {
        checks: vec![Check::flag("numerical tails agree with the verdicts", report.numeric_agrees)],
        tolerances: tolerances([("classify.quadrature_rel", 1e-10)]),
        summary: json!({
            "description": spec.description(),
            "H1": report.osgood_h1,
            "H1-1": report.keller_osserman_h1_1,
            "H2": report.h2,
        }),
    })
}

fn flat_ode(config: &ExperimentConfig, out: &mut OutputDir, scale: f64) -> Result<Outcome, CliError> {
    let spec = config.spec()?;
    let times = uniform_times(config.t_end, config.max_step);
    let mut table = Table::new(["a", "t", "phi"]);
    let mut closed_form_error: f64 = 0.0;
    let mut excess = f64::NEG_INFINITY;
    let mut ln_inf = Vec::with_capacity(times.len());
    for &t in &times[1..] {
        ln_inf.push(ln_phi_infinity(&spec, t)?);
    }
    for &a in &config.a_list {
        let traj = solve_phi(&spec, a, &times)?;
        for (k, (&t, &v)) in traj.times.iter().zip(&traj.values).enumerate() {
            table.push(vec![a, t, v]);
            if config.family == FamilyKind::Power {
                let q = config.exponent - 1.0;
                let exact = a / (1.0 + q * a.powf(q) * t).powf(1.0 / q);
                closed_form_error = closed_form_error.max((v / exact - 1.0).abs());
            }
            if k > 0 {
                excess = excess.max(traj.ln_values[k] - ln_inf[k - 1]);
            }
        }
    }
    out.csv("flat_ode.csv", &table)?;
    let inf = phi_infinity_trajectory(&spec, &times[1..])?;
    let mut inf_table = Table::new(["t", "phi", "ln_phi"]);
    for ((&t, &v), &l) in inf.times.iter().zip(&inf.values).zip(&inf.ln_values) {
        inf_table.push(vec![t, v, l]);
    }
    out.csv("phi_infinity.csv", &inf_table)?;
    let mut checks = vec![Check::at_most("ln phi_a - ln phi_inf", excess, 1e-9 * scale)];
    if config.family == FamilyKind::Power {
        checks.push(Check::at_most("relative error against the closed form", closed_form_error, 1e-8 * scale));
    }
    Ok(Outcome {
        checks,
        tolerances: tolerances([
            ("solve_phi.relative", 1e-10),
            ("closed_form.relative", 1e-8 * scale),
            ("phi_infinity.log_excess", 1e-9 * scale),
        ]),
        summary: json!({ "closed_form_error": closed_form_error, "max_log_excess": excess }),
    })
}

fn stationary(config: &ExperimentConfig, out: &mut OutputDir, scale: f64) -> Result<Outcome, CliError> {
    let spec = config.spec()?;
    let radii = uniform_radii(config.r_max, config.nodes);
    let mut table = Table::new(["a", "r", "W", "V_clipped"]);
    let mut profiles = Vec::new();
    for &a in &config.a_list {
        let p = shoot_v(&spec, a, config.dimension, &radii)?;
        for row in p.to_table().rows {
            table.push([vec![a], row].concat());
        }
        profiles.push(p);
    }
    out.csv("profiles.csv", &table)?;

    let mut checks = Vec::new();
    let mut bound_slack = f64::INFINITY;
    for (p, &a) in profiles.iter().zip(&config.a_list) {
        let w = p.w_values[p.w_values.len() - 1];
        let ln_v = w + (-(-w).exp_m1()).ln();
        bound_slack = bound_slack.min(apriori_bound_log(&spec, a, config.r_max)? - ln_v);
    }
    checks.push(Check::at_least("a-priori bound minus ln V at r_max", bound_slack, 0.0));
    let ordered = profiles.windows(2).all(|w| w[0].w_values.iter().zip(&w[1].w_values).all(|(a, b)| a < b));
    checks.push(Check::flag("profiles strictly ordered in a", ordered));

    let mut fit = serde_json::Value::Null;
    if let (FamilyKind::LogPower, Some(p)) = (config.family, profiles.first()) {
        let alpha = config.exponent;
        if alpha > 1.0 && alpha <= 2.0 {
            let report = verify_asymptotics(p, alpha)?;
            let limit = if alpha < 2.0 { 0.02 } else { 0.05 } * scale;
            checks.push(Check::at_most(
                "relative error of the growth exponent",
                (report.exponent_hat / report.exponent_target - 1.0).abs(),
                limit,
            ));
            if let (Some(c), Some(target)) = (report.constant_hat, report.constant_target) {
                checks.push(Check::at_most("relative error of the growth constant", (c / target - 1.0).abs(), 0.10 * scale));
            }
            fit = serde_json::to_value(&report).expect("fit reports serialize");
        }
    }
    Ok(Outcome {
        checks,
        tolerances: tolerances([
            ("shoot_v.rk45_relative", 1e-9),
            ("verify_asymptotics.exponent_relative", 0.02 * scale),
            ("verify_asymptotics.constant_relative", 0.10 * scale),
        ]),
        summary: json!({ "fit": fit, "bound_slack": bound_slack }),
    })
}

fn scheme_options(config: &ExperimentConfig, scale: f64) -> SchemeOptions {
    SchemeOptions {
        h: config.h,
        tolerance: config.tolerance * scale,
        ..SchemeOptions::default()
    }
}

fn margins_table(label: f64, seq: &SchemeSequence, table: &mut Table) {
    for (k, (m, d)) in seq.margins.iter().zip(&seq.cauchy_differences).enumerate() {
        table.push(vec![label, seq.n_values[k], seq.n_values[k + 1], *m, *d]);
    }
}

fn theorem_b(config: &ExperimentConfig, out: &mut OutputDir, scale: f64) -> Result<Outcome, CliError> {
    let spec = config.spec()?;
    let g = config.growth_function()?;
    let half = 0.5 * config.t_end;
    let grid = TimeGrid::standard(config.t_end, config.max_step)?.with_times(&[half])?;
    let times = grid.times();
    let base = scheme_options(config, scale);
    let h2 = config.h * config.h * scale;
    let (&a_top, rest) = config.a_list.split_last().expect("validated nonempty");
    // The largest a fixes the substeps so the other runs compare node by node.
    let top = run_scheme_a8(&spec, &g, a_top, config.dimension, &config.n_list, times, &base)?;
    let shared = SchemeOptions {
        schedule: Some(top.schedule.clone()),
        ..base
    };
    let mut seqs = rest
        .iter()
        .map(|&a| run_scheme_a8(&spec, &g, a, config.dimension, &config.n_list, times, &shared))
        .collect::<Result<Vec<_>, _>>()?;
    seqs.push(top);

    let mut margins = Table::new(["a", "n_lo", "n_hi", "margin", "cauchy_difference"]);
    let mut min_margin = f64::INFINITY;
    let mut slack = f64::INFINITY;
    let mut centre = Vec::new();
    let i_half = grid.index_of(half).expect("added above");
    let i_end = times.len() - 1;
    for (seq, &a) in seqs.iter().zip(&config.a_list) {
        margins_table(a, seq, &mut margins);
        min_margin = min_margin.min(seq.min_margin());
        for i in [i_half, i_end] {
            let floor = a - ln_phi_infinity(&spec, times[i])?.exp() - 0.05 * a;
            slack = slack.min(seq.limit().u(i, 0) - floor);
        }
        centre.push(seq.limit().values[i_half][0]);
        out.csv(&format!("limit_a{a}.csv"), &seq.limit().to_table())?;
    }
    out.csv("margins.csv", &margins)?;
    let centre_step = centre.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
    let checks = vec![
        Check::at_least("least monotonicity margin in n", min_margin, -h2),
        Check::at_least("u_a(t, 0) - (a - phi_inf(t) - 0.05 a)", slack, 0.0),
        Check::at_least("least step of ln(1 + u_a(t_end/2, 0)) in a", centre_step, -1e-9 * scale)
            .note("differences across a fall below double resolution when u_a is far below a"),
    ];
    let summary = json!({
        "sequences": seqs.iter().zip(&config.a_list).map(|(s, a)| json!({"a": a, "sequence": s})).collect::<Vec<_>>(),
        "centre_log1p_at_half_time": centre,
    });
    Ok(Outcome {
        checks,
        tolerances: tolerances([
            ("evolve.newton", base_newton()),
            ("run_scheme_a8.margin", h2),
            ("run_scheme_a8.tolerance", config.tolerance * scale),
            ("run_scheme_a8.centre_order", 1e-9 * scale),
        ]),
        summary,
    })
}

fn base_newton() -> f64 {
    SchemeOptions::default().evolve.newton_tol
}

fn theorem_c(config: &ExperimentConfig, out: &mut OutputDir, scale: f64) -> Result<Outcome, CliError> {
    let spec = config.spec()?;
    let g = config.growth_function()?;
    let alpha = config.exponent;
    let verdict = threshold_verdict(&g, alpha, config.dimension)?;
    let report = threshold_report(&g, alpha, config.dimension, config.x_radius, &config.radii)?;
    out.csv("threshold.csv", &report.to_table())?;

    let grid = TimeGrid::standard(config.t_end, config.max_step)?;
    let times = grid.times();
    let opts = scheme_options(config, scale);
    let seq = run_scheme_a4(&spec, &g, config.dimension, &config.n_list, config.r_out, times, &opts)?;
    let i_end = times.len() - 1;
    let phi = ln_phi_infinity(&spec, config.t_end)?.exp();
    let mut gaps = Table::new(["n", "relative_gap"]);
    let mut rel = Vec::new();
    for (f, &n) in seq.fields.iter().zip(&config.n_list) {
        let mon = f.radii().iter().filter(|&&r| r <= opts.monitor_radius).count();
        let gap = f.values[i_end][..mon].iter().map(|w| (w.exp_m1() - phi).abs()).fold(0.0, f64::max) / phi;
        gaps.push(vec![n, gap]);
        rel.push(gap);
    }
    out.csv("gaps.csv", &gaps)?;
    let mut margins = Table::new(["a", "n_lo", "n_hi", "margin", "cauchy_difference"]);
    margins_table(0.0, &seq, &mut margins);
    out.csv("margins.csv", &margins)?;
    out.csv("limit.csv", &seq.limit().to_table())?;

    let h2 = config.h * config.h * scale;
    let final_gap = rel[rel.len() - 1];
    let mut checks = vec![
        Check::flag("gap to phi_inf decreasing in n", rel.windows(2).all(|w| w[1] < w[0])),
        Check::at_most("final gap relative to phi_inf", final_gap, 0.05 * scale)
            .note("bounded below by the flat solution from the largest truncated datum"),
        Check::at_most("max ln(1+u) - ln(1+phi_inf)", seq.phi_infinity_excess.unwrap_or(f64::INFINITY), h2),
        Check::at_most("outer-radius influence", seq.domain_influence.unwrap_or(0.0), opts.tolerance),
    ];
    if verdict.min5_holds {
        checks.push(Check::flag("B_n(t_n, x) increasing along r_n", report.b_n_increasing));
    }
    Ok(Outcome {
        checks,
        tolerances: tolerances([
            ("evolve.newton", base_newton()),
            ("run_scheme_a4.phi_inf_excess", h2),
            ("run_scheme_a4.final_gap", 0.05 * scale),
            ("run_scheme_a4.tolerance", opts.tolerance),
        ]),
        summary: json!({ "verdict": verdict, "threshold": report, "sequence": seq, "relative_gaps": rel }),
    })
}

fn non_uniqueness(config: &ExperimentConfig, out: &mut OutputDir, scale: f64) -> Result<Outcome, CliError> {
    let spec = config.spec()?;
    let h = config.h;
    let tol = config.tolerance * scale;
    let grid = RadialGrid::with_spacing(config.r_out, h, config.dimension)?;
    let g = GrowthFunction::from_profile(shoot_v(&spec, config.datum, config.dimension, grid.radii())?, None);
    let time_grid = TimeGrid::standard(config.t_end, config.max_step)?;
    let times = time_grid.times();
    let opts = scheme_options(config, scale);
    let sandwich = run_scheme_a8_1(
        &spec,
        &g,
        config.lower_center,
        config.upper_center,
        config.dimension,
        &config.n_list,
        times,
        &opts,
    )?;
    let minimal = run_scheme_a4(&spec, &g, config.dimension, &config.n_list, config.r_out, times, &opts)?;
    let i_end = times.len() - 1;
    let ln_phi = ln_phi_infinity(&spec, config.t_end)?;
    let lower_profile = shoot_v(&spec, config.lower_center, config.dimension, grid.radii())?;
    let target = (2.0 * ln_phi.exp()).ln_1p();
    let j_star = lower_profile.w_values.iter().position(|&w| w >= target).ok_or_else(|| {
        CliError::Config(format!("V_c never reaches 2 phi_inf(t_end) on r <= {}; enlarge r_out", config.r_out))
    })?;
    let r_star = grid.radii()[j_star];
    let excess = minimal.limit().values[i_end]
        .iter()
        .map(|w| w - ln_phi.exp().ln_1p())
        .fold(f64::NEG_INFINITY, f64::max);
    let lower = sandwich.lower.limit();
    let lower_slack = lower
        .values
        .iter()
        .map(|row| row[j_star] - lower_profile.w_values[j_star])
        .fold(f64::INFINITY, f64::min);
    let separation = lower.u(i_end, j_star) - minimal.limit().u(i_end, j_star);
    let witness = lower_profile.w_values[j_star].exp_m1() - ln_phi.exp() - 2.0 * tol;

    out.csv("minimal_limit.csv", &minimal.limit().to_table())?;
    out.csv("lower_limit.csv", &lower.to_table())?;
    out.csv("upper_limit.csv", &sandwich.upper.limit().to_table())?;
    let checks = vec![
        Check::at_most("minimal limit: max ln(1+u) - ln(1+phi_inf(t_end))", excess, tol),
        Check::at_least("lower limit minus ln(1+V_c) at r*", lower_slack, -tol),
        Check::at_least("u_lower - u_minimal at (t_end, r*)", separation, witness),
        Check::at_most("sandwich violation", sandwich.sandwich_violation, tol),
    ];
    Ok(Outcome {
        checks,
        tolerances: tolerances([
            ("evolve.newton", base_newton()),
            ("run_scheme_a8_1.tolerance", tol),
            ("run_scheme_a4.tolerance", tol),
        ]),
        summary: json!({
            "r_star": r_star,
            "separation": separation,
            "witness": witness,
            "lower": sandwich.lower,
            "upper": sandwich.upper,
            "minimal": minimal,
            "order_violation": sandwich.order_violation,
        }),
    })
}

fn alpha2(config: &ExperimentConfig, out: &mut OutputDir) -> Result<Outcome, CliError> {
    let g = config.growth_function()?;
    let mut table = Table::new(["r_n", "gamma", "t_n", "B_n", "leading", "relative_gap"]);
    let mut points = Vec::new();
    for &r in &config.radii {
        let p = alpha2_point(config.x_radius, r, g.gamma(r), config.dimension)?;
        table.push(vec![p.r_n, p.gamma, p.t_n, p.b_n, p.leading, p.relative_gap]);
        points.push(p);
    }
    out.csv("alpha2.csv", &table)?;
    let decreasing = points.windows(2).all(|w| w[1].b_n < w[0].b_n);
    Ok(Outcome {
        checks: vec![Check::flag("B_n(t_n, x) strictly decreasing along r_n", decreasing)],
        tolerances: tolerances([("alpha2_point.strict_decrease", 0.0)]),
        summary: json!({ "points": points }),
    })
}
