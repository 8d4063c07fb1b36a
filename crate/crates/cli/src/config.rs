//! Experiment configuration.
//!
//! A config file is flat TOML. Every key is optional and overrides the
//! defaults of the chosen scenario; unknown keys are rejected.

use std::fmt;
use std::path::Path;

use absorption_core::stationary::growth_constant;
use absorption_core::{GrowthFunction, NonlinearitySpec};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    Conditions,
    FlatOde,
    Stationary,
    TheoremB,
    TheoremC,
    NonUniqueness,
    Alpha2,
}

impl Scenario {
    pub const ALL: [Scenario; 7] = [
        Scenario::Conditions,
        Scenario::FlatOde,
        Scenario::Stationary,
        Scenario::TheoremB,
        Scenario::TheoremC,
        Scenario::NonUniqueness,
        Scenario::Alpha2,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scenario::Conditions => "conditions",
            Scenario::FlatOde => "flat-ode",
            Scenario::Stationary => "stationary",
            Scenario::TheoremB => "theorem-b",
            Scenario::TheoremC => "theorem-c",
            Scenario::NonUniqueness => "non-uniqueness",
            Scenario::Alpha2 => "alpha2",
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FamilyKind {
    /// `h(s) = ln^α(1 + s)`, with `exponent = α`.
    LogPower,
    /// `h(s) = s^{p−1}`, with `exponent = p`.
    Power,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GrowthKind {
    /// `γ(r) = K r^β`.
    Power,
    /// `γ(r) = e^r`.
    Exponential,
}

/// Fully resolved experiment parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub scenario: Scenario,
    pub family: FamilyKind,
    pub exponent: f64,
    pub dimension: usize,
    pub growth: GrowthKind,
    pub growth_coefficient: f64,
    pub growth_exponent: f64,
    /// Centre values of flat or stationary solutions.
    pub a_list: Vec<f64>,
    /// Truncation radii of the approximating sequences.
    pub n_list: Vec<f64>,
    /// Threshold radii `r_n`.
    pub radii: Vec<f64>,
    pub x_radius: f64,
    pub h: f64,
    pub t_end: f64,
    pub max_step: f64,
    pub r_out: f64,
    pub r_max: f64,
    pub nodes: usize,
    /// Centre value of the stationary profile used as initial data.
    pub datum: f64,
    pub lower_center: f64,
    pub upper_center: f64,
    /// Discretisation tolerance of the parabolic checks.
    pub tolerance: f64,
    pub out_dir: String,
}

/// The on-disk form: any subset of the keys.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    scenario: Option<Scenario>,
    family: Option<FamilyKind>,
    exponent: Option<f64>,
    dimension: Option<usize>,
    growth: Option<GrowthKind>,
    growth_coefficient: Option<f64>,
    growth_exponent: Option<f64>,
    a_list: Option<Vec<f64>>,
    n_list: Option<Vec<f64>>,
    radii: Option<Vec<f64>>,
    x_radius: Option<f64>,
    h: Option<f64>,
    t_end: Option<f64>,
    max_step: Option<f64>,
    r_out: Option<f64>,
    r_max: Option<f64>,
    nodes: Option<usize>,
    datum: Option<f64>,
    lower_center: Option<f64>,
    upper_center: Option<f64>,
    tolerance: Option<f64>,
    out_dir: Option<String>,
}

macro_rules! overlay {
    ($base:ident, $file:ident, $($field:ident),*) => {
        $(if let Some(v) = $file.$field { $base.$field = v; })*
    };
}

impl ExperimentConfig {
    pub fn defaults(scenario: Scenario) -> Self {
        let base = Self {
            scenario,
            family: FamilyKind::LogPower,
            exponent: 1.5,
            dimension: 1,
            growth: GrowthKind::Power,
            growth_coefficient: 2.0,
            growth_exponent: 4.0,
            a_list: vec![],
            n_list: vec![],
            radii: vec![],
            x_radius: 0.0,
            h: 0.05,
            t_end: 0.5,
            max_step: 0.05,
            r_out: 9.0,
            r_max: 10.0,
            nodes: 1000,
            datum: 1.5,
            lower_center: 1.0,
            upper_center: 2.0,
            tolerance: 2.5e-3,
            out_dir: "out".into(),
        };
        match scenario {
            Scenario::Conditions => base,
            Scenario::FlatOde => Self {
                family: FamilyKind::Power,
                exponent: 2.0,
                a_list: vec![0.5, 1.0, 10.0],
                t_end: 1.0,
                max_step: 0.01,
                ..base
            },
            Scenario::Stationary => Self {
                dimension: 3,
                a_list: vec![1.0, 2.0],
                ..base
            },
            Scenario::TheoremB => Self {
                growth_coefficient: 2.0 * growth_constant(1.5),
                a_list: vec![2.0, 4.0, 8.0],
                n_list: vec![4.0, 6.0, 8.0],
                ..base
            },
            Scenario::TheoremC => Self {
                n_list: vec![3.0, 4.0, 5.0, 6.0],
                radii: vec![10.0, 20.0, 40.0, 80.0],
                ..base
            },
            Scenario::NonUniqueness => Self {
                n_list: vec![5.0, 6.0, 7.0, 8.0],
                h: 0.025,
                t_end: 1.0,
                r_out: 12.0,
                ..base
            },
            Scenario::Alpha2 => Self {
                exponent: 2.0,
                growth: GrowthKind::Exponential,
                radii: vec![5.0, 10.0, 20.0, 40.0],
                ..base
            },
        }
    }

    /// Parses TOML text on top of the defaults of `scenario`, or of the
    /// scenario named in the text when `scenario` is `None`.
    pub fn from_toml(text: &str, scenario: Option<Scenario>) -> Result<Self, CliError> {
        let file: ConfigFile = toml::from_str(text).map_err(|e| CliError::Config(e.message().to_string()))?;
        let scenario = match (scenario, file.scenario) {
            (Some(a), Some(b)) if a != b => {
                return Err(CliError::Config(format!("config is for scenario '{b}' but '{a}' was requested")));
            }
            (Some(s), _) | (None, Some(s)) => s,
            (None, None) => return Err(CliError::Config("no scenario given".into())),
        };
        let mut c = Self::defaults(scenario);
        overlay!(
            c, file, family, exponent, dimension, growth, growth_coefficient, growth_exponent, a_list, n_list, radii, x_radius, h,
            t_end, max_step, r_out, r_max, nodes, datum, lower_center, upper_center, tolerance, out_dir
        );
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path, scenario: Option<Scenario>) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text, scenario).map_err(|e| match e {
            CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configs always serialize")
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Config(m));
        let positive = [
            ("exponent", self.exponent),
            ("h", self.h),
            ("t_end", self.t_end),
            ("max_step", self.max_step),
            ("r_out", self.r_out),
            ("r_max", self.r_max),
            ("datum", self.datum),
            ("lower_center", self.lower_center),
            ("upper_center", self.upper_center),
            ("tolerance", self.tolerance),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return bad(format!("{name} must be positive and finite, got {v}"));
            }
        }
        if !(self.x_radius.is_finite() && self.x_radius >= 0.0) {
            return bad(format!("x_radius must be nonnegative, got {}", self.x_radius));
        }
        if !(1..=16).contains(&self.dimension) {
            return bad(format!("dimension must be in 1..=16, got {}", self.dimension));
        }
        if self.nodes < 10 {
            return bad(format!("nodes must be at least 10, got {}", self.nodes));
        }
        if self.growth == GrowthKind::Power && !(self.growth_coefficient > 0.0 && self.growth_exponent > 0.0) {
            return bad("growth_coefficient and growth_exponent must be positive".into());
        }
        if self.family == FamilyKind::Power && !(self.exponent > 1.0) {
            return bad(format!("power family needs p > 1, got {}", self.exponent));
        }
        if self.lower_center >= self.upper_center {
            return bad("lower_center must be below upper_center".into());
        }
        let list = |name: &str, v: &[f64]| -> Result<(), CliError> {
            if v.is_empty() {
                return bad(format!("{name} must not be empty for scenario '{}'", self.scenario));
            }
            if v.iter().any(|x| !(x.is_finite() && *x > 0.0)) {
                return bad(format!("{name} entries must be positive and finite"));
            }
            if v.windows(2).any(|w| w[1] <= w[0]) {
                return bad(format!("{name} must be strictly increasing"));
            }
            Ok(())
        };
        let log_power_alpha = || (self.family == FamilyKind::LogPower).then_some(self.exponent);
        match self.scenario {
            Scenario::Conditions => {}
            Scenario::FlatOde | Scenario::Stationary => list("a_list", &self.a_list)?,
            Scenario::TheoremB => {
                list("a_list", &self.a_list)?;
                list("n_list", &self.n_list)?;
            }
            Scenario::TheoremC => {
                list("n_list", &self.n_list)?;
                list("radii", &self.radii)?;
                if !matches!(log_power_alpha(), Some(a) if a > 1.0 && a < 2.0) || self.growth != GrowthKind::Power {
                    return bad("theorem-c needs the log-power family with 1 < α < 2 and power growth".into());
                }
                if self.n_list.last().is_some_and(|&n| n >= self.r_out) {
                    return bad("every n in n_list must lie below r_out".into());
                }
            }
            Scenario::NonUniqueness => {
                list("n_list", &self.n_list)?;
                if self.n_list.last().is_some_and(|&n| n >= self.r_out) {
                    return bad("every n in n_list must lie below r_out".into());
                }
                if !(self.lower_center <= self.datum && self.datum <= self.upper_center) {
                    return bad("datum must lie between lower_center and upper_center".into());
                }
            }
            Scenario::Alpha2 => {
                list("radii", &self.radii)?;
                if log_power_alpha() != Some(2.0) {
                    return bad("alpha2 needs the log-power family with exponent 2".into());
                }
            }
        }
        Ok(())
    }

    pub fn spec(&self) -> Result<NonlinearitySpec, CliError> {
        Ok(match self.family {
            FamilyKind::LogPower => NonlinearitySpec::log_power(self.exponent)?,
            FamilyKind::Power => NonlinearitySpec::power(self.exponent)?,
        })
    }

    pub fn growth_function(&self) -> Result<GrowthFunction, CliError> {
        Ok(match self.growth {
            GrowthKind::Power => GrowthFunction::power_law(self.growth_coefficient, self.growth_exponent)?,
            GrowthKind::Exponential => GrowthFunction::exponential(),
        })
    }
}
