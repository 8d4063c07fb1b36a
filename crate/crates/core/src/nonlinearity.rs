//! The absorption nonlinearity `h`, its primitive `H(s) = ∫_0^s t h(t) dt`,
//! and numerical classification of the growth conditions at infinity.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::linear_fit;
use crate::numerics::quadrature::{integrate, QuadOptions};

/// Width of the band around the critical slope −1 in which the tail test
/// refuses to decide.
pub const CRITICAL_BAND: f64 = 0.05;
const PANEL_COUNT: usize = 41;
const FIT_FROM: usize = 20;
// Lower cut-off for the log-form primitive: the neglected mass is e^{-2L}.
const PRIMITIVE_WINDOW: f64 = 20.0;
const DIRECT_PRIMITIVE_MAX: f64 = 1e3;

/// `ln(1 + e^u)` evaluated without overflow or cancellation.
pub fn softplus(u: f64) -> f64 {
    if u > 35.0 {
        u + (-u).exp()
    } else if u < -35.0 {
        u.exp()
    } else {
        u.exp().ln_1p()
    }
}

pub type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
pub enum Family {
    /// `h(s) = ln^α(1 + s)`.
    LogPower { alpha: f64 },
    /// `h(s) = s^{p-1}`.
    Power { p: f64 },
    /// User-supplied monotone `h` together with its large-`s` log-log slope.
    Custom { h: ScalarFn, log_slope: f64 },
}

impl fmt::Debug for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Family::LogPower { alpha } => f.debug_struct("LogPower").field("alpha", alpha).finish(),
            Family::Power { p } => f.debug_struct("Power").field("p", p).finish(),
            Family::Custom { log_slope, .. } => f.debug_struct("Custom").field("log_slope", log_slope).finish_non_exhaustive(),
        }
    }
}

/// Serializable description of the built-in families.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum FamilyParams {
    LogPower { alpha: f64 },
    Power { p: f64 },
}

#[derive(Debug, Clone)]
pub struct NonlinearitySpec {
    family: Family,
    description: String,
}

/// Result of the tail test for one improper integral.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TailDiagnostics {
    /// Regression slope of ln(panel mass) against ln(panel index).
    pub slope: f64,
    /// Root-mean-square residual of that regression.
    pub fit_rms: f64,
    /// Sum of the computed panels.
    pub partial_sum: f64,
    /// Partial sum plus the fitted power-law tail (infinite when divergent).
    pub extrapolated_sum: f64,
    /// Numerical verdict, `None` inside the critical band.
    pub numeric_converges: Option<bool>,
    /// Distance of the slope from the edge of the critical band
    /// (negative inside the band).
    pub margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionReport {
    pub osgood_h1: bool,
    pub keller_osserman_h1_1: bool,
    pub h2: bool,
    /// Whether the verdicts come from closed-form knowledge of the family.
    pub analytic: bool,
    pub osgood: TailDiagnostics,
    pub keller_osserman: TailDiagnostics,
    /// True when every numerical verdict that was reached agrees with the
    /// reported one.
    pub numeric_agrees: bool,
}

impl NonlinearitySpec {
    pub fn log_power(alpha: f64) -> Result<Self> {
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(Error::InvalidParameter(format!("log-power exponent must be positive, got {alpha}")));
        }
        Ok(Self {
            family: Family::LogPower { alpha },
            description: format!("h(s) = ln^{alpha}(1+s)"),
        })
    }

    pub fn power(p: f64) -> Result<Self> {
        if !(p.is_finite() && p > 1.0) {
            return Err(Error::InvalidParameter(format!("power exponent must exceed 1, got {p}")));
        }
        Ok(Self {
            family: Family::Power { p },
            description: format!("h(s) = s^{}", p - 1.0),
        })
    }

    /// Wraps a user-supplied `h`. The function is spot-checked for `h(0) = 0`
    /// and monotonicity on a geometric grid.
    pub fn custom<F>(h: F, log_slope: f64, description: impl Into<String>) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        if !(log_slope.is_finite() && log_slope >= 0.0) {
            return Err(Error::InvalidParameter(format!("declared log-log slope must be finite and nonnegative, got {log_slope}")));
        }
        let spec = Self {
            family: Family::Custom { h: Arc::new(h), log_slope },
            description: description.into(),
        };
        spec.check_h_samples()?;
        Ok(spec)
    }

    pub fn from_params(params: FamilyParams) -> Result<Self> {
        match params {
            FamilyParams::LogPower { alpha } => Self::log_power(alpha),
            FamilyParams::Power { p } => Self::power(p),
        }
    }

    /// Parameters of a built-in family; `None` for custom nonlinearities.
    pub fn params(&self) -> Option<FamilyParams> {
        match self.family {
            Family::LogPower { alpha } => Some(FamilyParams::LogPower { alpha }),
            Family::Power { p } => Some(FamilyParams::Power { p }),
            Family::Custom { .. } => None,
        }
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    pub fn description(&self) -> &str {
        &self.description
    }

    pub fn with_description(mut self, description: impl Into<String>) -> Self {
        self.description = description.into();
        self
    }

    /// The log-power exponent, if this is a log-power nonlinearity.
    pub fn alpha(&self) -> Option<f64> {
        match self.family {
            Family::LogPower { alpha } => Some(alpha),
            _ => None,
        }
    }

    /// Large-`s` slope of `ln h` against `ln s`.
    pub fn log_slope(&self) -> f64 {
        match self.family {
            Family::LogPower { .. } => 0.0,
            Family::Power { p } => p - 1.0,
            Family::Custom { log_slope, .. } => log_slope,
        }
    }

    pub fn eval_h(&self, s: f64) -> Result<f64> {
        if !(s >= 0.0) {
            return Err(Error::Domain(format!("h is defined for s >= 0, got {s}")));
        }
        Ok(self.h_unchecked(s))
    }

    fn h_unchecked(&self, s: f64) -> f64 {
        match &self.family {
            Family::LogPower { alpha } => s.ln_1p().powf(*alpha),
            Family::Power { p } => {
                if s == 0.0 {
                    0.0
                } else {
                    s.powf(p - 1.0)
                }
            }
            Family::Custom { h, .. } => h(s),
        }
    }

    /// `h(e^u)`, stable for large `u`.
    pub fn h_of_exp(&self, u: f64) -> f64 {
        match &self.family {
            Family::LogPower { alpha } => softplus(u).powf(*alpha),
            Family::Power { p } => ((p - 1.0) * u).exp(),
            Family::Custom { h, .. } => h(u.exp()),
        }
    }

    /// `ln h(e^w − 1)`: the log of the absorption rate at `W = w` in the
    /// variable `W = ln(1 + V)`.
    pub fn ln_h_of_log1p(&self, w: f64) -> f64 {
        match &self.family {
            Family::LogPower { alpha } => alpha * w.ln(),
            Family::Power { p } => {
                let ln_v = if w > 30.0 { w + (-(-w).exp()).ln_1p() } else { w.exp_m1().ln() };
                (p - 1.0) * ln_v
            }
            Family::Custom { h, .. } => h(w.exp_m1()).ln(),
        }
    }

    /// `h(e^w − 1)`.
    pub fn h_of_log1p(&self, w: f64) -> f64 {
        if w <= 0.0 {
            return 0.0;
        }
        match &self.family {
            Family::LogPower { alpha } => w.powf(*alpha),
            _ => self.ln_h_of_log1p(w).exp(),
        }
    }

    /// `d/dw ln h(e^w − 1)`.
    pub fn dln_h_of_log1p(&self, w: f64) -> f64 {
        match &self.family {
            Family::LogPower { alpha } => alpha / w,
            Family::Power { p } => (p - 1.0) / -(-w).exp_m1(),
            Family::Custom { .. } => {
                let dw = 1e-5 * w.abs().max(1.0);
                let lo = (w - dw).max(0.5 * w);
                let hi = w + dw;
                (self.ln_h_of_log1p(hi) - self.ln_h_of_log1p(lo)) / (hi - lo)
            }
        }
    }

    /// `H(s) = ∫_0^s t h(t) dt`, in closed form for the power family.
    pub fn eval_primitive(&self, s: f64) -> Result<f64> {
        if !(s >= 0.0) {
            return Err(Error::Domain(format!("H is defined for s >= 0, got {s}")));
        }
        if s == 0.0 {
            return Ok(0.0);
        }
        match self.family {
            Family::Power { p } => Ok(s.powf(p + 1.0) / (p + 1.0)),
            _ => {
                if s <= DIRECT_PRIMITIVE_MAX {
                    self.primitive_by_quadrature(s)
                } else {
                    Ok(self.ln_primitive_at_log(s.ln())?.exp())
                }
            }
        }
    }

    /// `H(s)` by adaptive quadrature regardless of family.
    pub fn primitive_by_quadrature(&self, s: f64) -> Result<f64> {
        if !(s >= 0.0) {
            return Err(Error::Domain(format!("H is defined for s >= 0, got {s}")));
        }
        let r = integrate(|t| t * self.h_unchecked(t), 0.0, s, QuadOptions::rel(1e-10))?;
        Ok(r.value)
    }

    /// `ln H(e^x)`, finite for every real `x` where `H(e^x)` is representable
    /// in log scale.
    pub fn ln_primitive_at_log(&self, x: f64) -> Result<f64> {
        if let Family::Power { p } = self.family {
            return Ok((p + 1.0) * x - (p + 1.0).ln());
        }
        // H(e^x) = e^{2x} ∫_{-∞}^{x} e^{2(u-x)} h(e^u) du
        let r = integrate(
            |u| (2.0 * (u - x)).exp() * self.h_of_exp(u),
            x - PRIMITIVE_WINDOW,
            x,
            QuadOptions::rel(1e-12),
        )?;
        if !(r.value > 0.0) {
            return Err(Error::Domain(format!("H(e^{x}) is not positive")));
        }
        Ok(2.0 * x + r.value.ln())
    }

    /// Spot-checks `h(0) = 0`, `h ≥ 0` and monotonicity on a geometric grid.
    pub fn check_h_samples(&self) -> Result<()> {
        let h0 = self.h_unchecked(0.0);
        if h0 != 0.0 {
            return Err(Error::InvalidParameter(format!("h(0) must vanish, got {h0}")));
        }
        let mut prev = 0.0;
        for k in -20..=40 {
            let s = 2f64.powi(k);
            let v = self.h_unchecked(s);
            if !(v.is_finite() && v >= prev) {
                return Err(Error::InvalidParameter(format!("h is not finite and nondecreasing near s = {s}: h = {v}")));
            }
            prev = v;
        }
        Ok(())
    }

    /// Spot-checks that `H` is nonnegative, nondecreasing and convex via
    /// sampled second differences.
    pub fn check_primitive_samples(&self) -> Result<()> {
        let grid: Vec<f64> = (0..=60).map(|k| 0.05 * k as f64).chain((1..=20).map(|k| 3.0 * 1.3f64.powi(k))).collect();
        let values = grid.iter().map(|&s| self.eval_primitive(s)).collect::<Result<Vec<_>>>()?;
        for i in 0..grid.len() {
            if values[i] < 0.0 || (i > 0 && values[i] < values[i - 1]) {
                return Err(Error::Domain(format!("H fails to be nonnegative and nondecreasing at s = {}", grid[i])));
            }
            if i > 0 && i + 1 < grid.len() {
                let (a, b, c) = (grid[i - 1], grid[i], grid[i + 1]);
                let slope_l = (values[i] - values[i - 1]) / (b - a);
                let slope_r = (values[i + 1] - values[i]) / (c - b);
                if slope_r - slope_l < -1e-9 * slope_r.abs().max(1.0) {
                    return Err(Error::Domain(format!("H fails convexity near s = {b}")));
                }
            }
        }
        Ok(())
    }

    /// Tail test for `∫^∞ ds/(s h(s))`, written as `∫ du/h(e^u)`.
    pub fn osgood_tail(&self) -> Result<TailDiagnostics> {
        tail_diagnostics(|u| 1.0 / self.h_of_exp(u))
    }

    /// Tail test for `∫^∞ ds/√H(s)`, written as `∫ exp(u − ½ ln H(e^u)) du`.
    pub fn keller_osserman_tail(&self) -> Result<TailDiagnostics> {
        let ln_h = |u: f64| self.ln_primitive_at_log(u);
        let panels = panel_masses(|u| match ln_h(u) {
            Ok(l) => (u - 0.5 * l).exp(),
            Err(_) => f64::NAN,
        })?;
        Ok(diagnostics_from_panels(&panels))
    }

    /// Whether `∫^∞ ds/(s h(s))` converges: analytic for the built-in
    /// families, numerical for custom ones.
    pub fn osgood_holds(&self) -> Result<bool> {
        match self.family {
            Family::LogPower { alpha } => Ok(alpha > 1.0),
            Family::Power { .. } => Ok(true),
            Family::Custom { .. } => {
                let d = self.osgood_tail()?;
                d.numeric_converges.ok_or(Error::Inconclusive {
                    condition: "Osgood",
                    slope: d.slope,
                })
            }
        }
    }

    /// Whether `∫^∞ ds/√H(s)` converges, decided as in [`Self::osgood_holds`].
    pub fn keller_osserman_holds(&self) -> Result<bool> {
        match self.family {
            Family::LogPower { alpha } => Ok(alpha > 2.0),
            Family::Power { .. } => Ok(true),
            Family::Custom { .. } => {
                let d = self.keller_osserman_tail()?;
                d.numeric_converges.ok_or(Error::Inconclusive {
                    condition: "Keller-Osserman",
                    slope: d.slope,
                })
            }
        }
    }

    pub fn classify(&self) -> Result<ConditionReport> {
        let osgood = self.osgood_tail()?;
        let ko = self.keller_osserman_tail()?;
        let analytic = match self.family {
            Family::LogPower { alpha } => Some((alpha > 1.0, alpha > 2.0)),
            Family::Power { .. } => Some((true, true)),
            Family::Custom { .. } => None,
        };
        let (h1, h11, is_analytic) = match analytic {
            Some((a, b)) => (a, b, true),
            None => {
                let h1 = osgood.numeric_converges.ok_or(Error::Inconclusive {
                    condition: "Osgood",
                    slope: osgood.slope,
                })?;
                let h11 = ko.numeric_converges.ok_or(Error::Inconclusive {
                    condition: "Keller-Osserman",
                    slope: ko.slope,
                })?;
                (h1, h11, false)
            }
        };
        let agrees = osgood.numeric_converges.is_none_or(|v| v == h1) && ko.numeric_converges.is_none_or(|v| v == h11);
        Ok(ConditionReport {
            osgood_h1: h1,
            keller_osserman_h1_1: h11,
            h2: !h11,
            analytic: is_analytic,
            osgood,
            keller_osserman: ko,
            numeric_agrees: agrees,
        })
    }
}

impl Serialize for NonlinearitySpec {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        match self.params() {
            Some(p) => p.serialize(serializer),
            None => Err(serde::ser::Error::custom("custom nonlinearities cannot be serialized")),
        }
    }
}

impl<'de> Deserialize<'de> for NonlinearitySpec {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let p = FamilyParams::deserialize(deserializer)?;
        Self::from_params(p).map_err(serde::de::Error::custom)
    }
}

/// Masses of `f` over the panels `[k ln 2, (k+1) ln 2]` in `u = ln s`,
/// i.e. over `s ∈ [2^k, 2^{k+1}]`.
fn panel_masses<F: Fn(f64) -> f64>(f: F) -> Result<Vec<f64>> {
    let ln2 = std::f64::consts::LN_2;
    let mut out = Vec::with_capacity(PANEL_COUNT);
    for k in 0..PANEL_COUNT {
        let a = k as f64 * ln2;
        let v = integrate(&f, a, a + ln2, QuadOptions::rel(1e-10))?.value;
        if v.is_nan() {
            return Err(Error::QuadratureNonConvergence { value: v, error: f64::INFINITY });
        }
        out.push(v);
    }
    Ok(out)
}

fn tail_diagnostics<F: Fn(f64) -> f64>(f: F) -> Result<TailDiagnostics> {
    Ok(diagnostics_from_panels(&panel_masses(f)?))
}

fn diagnostics_from_panels(panels: &[f64]) -> TailDiagnostics {
    let partial_sum: f64 = panels.iter().sum();
    let tail = &panels[FIT_FROM..];
    if tail.iter().any(|&p| !(p > 0.0 && p.is_finite())) {
        // Underflowed panels: the integrand decays faster than any power.
        return TailDiagnostics {
            slope: f64::NEG_INFINITY,
            fit_rms: 0.0,
            partial_sum,
            extrapolated_sum: partial_sum,
            numeric_converges: Some(true),
            margin: f64::INFINITY,
        };
    }
    let x: Vec<f64> = (FIT_FROM..panels.len()).map(|k| (k as f64 + 0.5).ln()).collect();
    let y: Vec<f64> = tail.iter().map(|p| p.ln()).collect();
    let (c, slope) = linear_fit(&x, &y);
    let fit_rms = (x.iter().zip(&y).map(|(xi, yi)| (yi - c - slope * xi).powi(2)).sum::<f64>() / x.len() as f64).sqrt();
    let k_last = (panels.len() - 1) as f64;
    let extrapolated_sum = if slope < -1.0 {
        partial_sum + c.exp() * (k_last + 1.0).powf(slope + 1.0) / (-slope - 1.0)
    } else {
        f64::INFINITY
    };
    let margin = (slope + 1.0).abs() - CRITICAL_BAND;
    let numeric_converges = if margin <= 0.0 { None } else { Some(slope < -1.0) };
    TailDiagnostics {
        slope,
        fit_rms,
        partial_sum,
        extrapolated_sum,
        numeric_converges,
        margin,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    // Composite Simpson with step halving until successive values agree.
    fn simpson_oracle<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> f64 {
        let simpson = |n: usize| {
            let h = (b - a) / n as f64;
            let mut s = f(a) + f(b);
            for i in 1..n {
                s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(a + i as f64 * h);
            }
            s * h / 3.0
        };
        let mut n = 16;
        let mut prev = simpson(n);
        loop {
            n *= 2;
            let cur = simpson(n);
            if (cur - prev).abs() <= tol * cur.abs() || n > 1 << 22 {
                return cur;
            }
            prev = cur;
        }
    }

    #[test]
    fn closed_form_values() {
        let lp = NonlinearitySpec::log_power(1.5).unwrap();
        assert_eq!(lp.eval_h(0.0).unwrap(), 0.0);
        let p2 = NonlinearitySpec::power(2.0).unwrap();
        assert_eq!(p2.eval_h(3.0).unwrap(), 3.0);
        let lp2 = NonlinearitySpec::log_power(2.0).unwrap();
        assert_relative_eq!(lp2.eval_h(std::f64::consts::E - 1.0).unwrap(), 1.0, max_relative = 1e-15);
        assert!(lp.eval_h(-1.0).is_err());
    }

    #[test]
    fn primitive_values() {
        let p2 = NonlinearitySpec::power(2.0).unwrap();
        assert_relative_eq!(p2.eval_primitive(1.0).unwrap(), 1.0 / 3.0, max_relative = 1e-15);
        let lp = NonlinearitySpec::log_power(1.5).unwrap();
        assert_eq!(lp.eval_primitive(0.0).unwrap(), 0.0);
        let oracle = simpson_oracle(|t| t * t.ln_1p().powf(1.5), 0.0, 2.0, 1e-13);
        assert_relative_eq!(lp.eval_primitive(2.0).unwrap(), oracle, max_relative = 1e-9);
    }

    #[test]
    fn log_form_primitive_matches_direct() {
        let lp = NonlinearitySpec::log_power(1.7).unwrap();
        for s in [0.3, 2.0, 50.0, 900.0] {
            let direct = lp.primitive_by_quadrature(s).unwrap();
            let via_log = lp.ln_primitive_at_log(s.ln()).unwrap().exp();
            assert_relative_eq!(direct, via_log, max_relative = 1e-10);
        }
        // Large s: H(s) ~ s² ln^α(s)/2.
        let x: f64 = 200.0;
        let l = lp.ln_primitive_at_log(x).unwrap();
        assert!((l - (2.0 * x + 1.7 * x.ln() - 2f64.ln())).abs() < 0.05);
    }

    #[test]
    fn log_power_classification_examples() {
        let r = NonlinearitySpec::log_power(1.5).unwrap().classify().unwrap();
        assert!(r.osgood_h1 && !r.keller_osserman_h1_1 && r.h2);
        let r = NonlinearitySpec::log_power(3.0).unwrap().classify().unwrap();
        assert!(r.osgood_h1 && r.keller_osserman_h1_1 && !r.h2);
        let r = NonlinearitySpec::power(2.0).unwrap().classify().unwrap();
        assert!(r.osgood_h1 && r.keller_osserman_h1_1 && !r.h2);
        assert!(r.numeric_agrees);
    }

    #[test]
    fn numeric_branch_agrees_outside_the_band() {
        for alpha in [0.5, 1.2, 1.5, 1.9, 2.0, 2.5, 3.0] {
            let r = NonlinearitySpec::log_power(alpha).unwrap().classify().unwrap();
            assert!(r.numeric_agrees, "alpha = {alpha}: {r:?}");
            // Slopes follow −α and −α/2.
            assert!((r.osgood.slope + alpha).abs() < 0.06, "alpha = {alpha}: {}", r.osgood.slope);
            assert!((r.keller_osserman.slope + alpha / 2.0).abs() < 0.06, "alpha = {alpha}: {}", r.keller_osserman.slope);
        }
        // α = 2 sits on the critical slope of the Keller–Osserman integral.
        let r = NonlinearitySpec::log_power(2.0).unwrap().classify().unwrap();
        assert_eq!(r.keller_osserman.numeric_converges, None);
    }

    #[test]
    fn custom_classification_and_inconclusive_band() {
        let spec = NonlinearitySpec::custom(|s: f64| s.ln_1p().powi(3), 0.0, "cubic log").unwrap();
        let r = spec.classify().unwrap();
        assert!(!r.analytic);
        assert!(r.osgood_h1 && r.keller_osserman_h1_1);
        let critical = NonlinearitySpec::custom(|s: f64| s.ln_1p(), 0.0, "log").unwrap();
        match critical.classify() {
            Err(Error::Inconclusive { condition, .. }) => assert!(condition == "Osgood"),
            other => panic!("expected an inconclusive verdict, got {other:?}"),
        }
    }

    #[test]
    fn custom_validation() {
        assert!(NonlinearitySpec::custom(|s: f64| 1.0 + s, 1.0, "offset").is_err());
        assert!(NonlinearitySpec::custom(|s: f64| (-s).exp() - 1.0, 0.0, "decreasing").is_err());
        assert!(NonlinearitySpec::log_power(0.0).is_err());
        assert!(NonlinearitySpec::power(1.0).is_err());
    }

    #[test]
    fn log_variable_helpers() {
        let lp = NonlinearitySpec::log_power(1.5).unwrap();
        let w: f64 = 3.0;
        assert_relative_eq!(lp.h_of_log1p(w), lp.eval_h(w.exp_m1()).unwrap(), max_relative = 1e-13);
        let p = NonlinearitySpec::power(2.5).unwrap();
        assert_relative_eq!(p.h_of_log1p(w), p.eval_h(w.exp_m1()).unwrap(), max_relative = 1e-13);
        assert_relative_eq!(p.h_of_exp(1.2), p.eval_h(1.2f64.exp()).unwrap(), max_relative = 1e-13);
        for spec in [lp, p, NonlinearitySpec::custom(|s: f64| s.sqrt(), 0.5, "sqrt").unwrap()] {
            let d = 1e-6;
            let fd = (spec.ln_h_of_log1p(w + d) - spec.ln_h_of_log1p(w - d)) / (2.0 * d);
            assert_relative_eq!(spec.dln_h_of_log1p(w), fd, max_relative = 1e-6);
        }
    }

    #[test]
    fn primitive_invariants_hold() {
        for spec in [
            NonlinearitySpec::log_power(1.5).unwrap(),
            NonlinearitySpec::log_power(2.5).unwrap(),
            NonlinearitySpec::power(2.0).unwrap(),
        ] {
            spec.check_h_samples().unwrap();
            spec.check_primitive_samples().unwrap();
        }
    }

    #[test]
    fn serde_round_trip() {
        let spec = NonlinearitySpec::log_power(1.5).unwrap();
        let json = serde_json::to_string(&spec).unwrap();
        assert_eq!(json, r#"{"family":"log_power","alpha":1.5}"#);
        let back: NonlinearitySpec = serde_json::from_str(&json).unwrap();
        assert_eq!(back.params(), spec.params());
        assert!(serde_json::from_str::<NonlinearitySpec>(r#"{"family":"power","p":0.5}"#).is_err());
        let custom = NonlinearitySpec::custom(|s: f64| s, 1.0, "id").unwrap();
        assert!(serde_json::to_string(&custom).is_err());
    }

    proptest! {
        #[test]
        fn primitive_is_nondecreasing(alpha in 0.3f64..3.5, s1 in 0.0f64..50.0, ds in 0.0f64..50.0) {
            let spec = NonlinearitySpec::log_power(alpha).unwrap();
            let a = spec.eval_primitive(s1).unwrap();
            let b = spec.eval_primitive(s1 + ds).unwrap();
            prop_assert!(a <= b * (1.0 + 1e-12));
        }

        #[test]
        fn power_primitive_quadrature_matches_closed_form(p in 1.05f64..4.0, s in 0.01f64..30.0) {
            let spec = NonlinearitySpec::power(p).unwrap();
            let exact = spec.eval_primitive(s).unwrap();
            prop_assert_eq!(exact, s.powf(p + 1.0) / (p + 1.0));
            let quad = spec.primitive_by_quadrature(s).unwrap();
            prop_assert!((quad - exact).abs() <= 1e-9 * exact);
        }

        #[test]
        fn h_is_nondecreasing(alpha in 0.2f64..4.0, s in 0.0f64..1e6, ds in 0.0f64..1e3) {
            let spec = NonlinearitySpec::log_power(alpha).unwrap();
            prop_assert!(spec.eval_h(s).unwrap() <= spec.eval_h(s + ds).unwrap());
        }
    }
}
