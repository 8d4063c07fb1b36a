use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::stationary::RadialProfile;

pub type GammaFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Declared large-`r` behaviour `γ(r) ~ K r^β`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Asymptotic {
    pub exponent: f64,
    pub coefficient: f64,
}

/// Radial initial datum `g̃(r) = e^{γ(r)} − 1`, handled through `γ = ln(1 + g̃)`.
#[derive(Clone)]
pub struct GrowthFunction {
    gamma: GammaFn,
    asymptotic: Option<Asymptotic>,
    description: String,
}

impl fmt::Debug for GrowthFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GrowthFunction")
            .field("description", &self.description)
            .field("asymptotic", &self.asymptotic)
            .finish()
    }
}

impl GrowthFunction {
    pub fn new<F>(gamma: F, asymptotic: Option<Asymptotic>, description: impl Into<String>) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        let g = Self {
            gamma: Arc::new(gamma),
            asymptotic,
            description: description.into(),
        };
        g.check_samples()?;
        Ok(g)
    }

    /// `γ(r) = K r^β`.
    pub fn power_law(coefficient: f64, exponent: f64) -> Result<Self> {
        if !(coefficient >= 0.0 && coefficient.is_finite() && exponent > 0.0 && exponent.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "power-law growth needs K >= 0 and β > 0, got K = {coefficient}, β = {exponent}"
            )));
        }
        Self::new(
            move |r| coefficient * r.powf(exponent),
            Some(Asymptotic { exponent, coefficient }),
            format!("gamma(r) = {coefficient} r^{exponent}"),
        )
    }

    /// `γ(r) = e^r`; faster than any power, so no asymptotic is declared.
    pub fn exponential() -> Self {
        Self {
            gamma: Arc::new(|r: f64| r.exp()),
            asymptotic: None,
            description: "gamma(r) = e^r".into(),
        }
    }

    /// `γ ≡ 0`, i.e. `g̃ ≡ 0`.
    pub fn zero() -> Self {
        Self {
            gamma: Arc::new(|_| 0.0),
            asymptotic: None,
            description: "gamma(r) = 0".into(),
        }
    }

    /// `g̃ = V` for a computed stationary profile; `γ` is its `W` column.
    /// Radii past the end of the profile evaluate to NaN.
    pub fn from_profile(profile: RadialProfile, asymptotic: Option<Asymptotic>) -> Self {
        let description = format!("gamma = ln(1 + V) of a profile with V(0) = {}", profile.center_value);
        Self {
            gamma: Arc::new(move |r| profile.w_at(r).unwrap_or(f64::NAN)),
            asymptotic,
            description,
        }
    }

    pub fn gamma(&self, r: f64) -> f64 {
        (self.gamma)(r)
    }

    /// `g̃(r) = e^{γ(r)} − 1`; infinite once `γ` passes the double range.
    pub fn value(&self, r: f64) -> f64 {
        self.gamma(r).exp_m1()
    }

    /// `ln g̃(r)`.
    pub fn ln_value(&self, r: f64) -> f64 {
        let y = self.gamma(r);
        if y > 40.0 {
            y + (-(-y).exp()).ln_1p()
        } else {
            y.exp_m1().ln()
        }
    }

    pub fn asymptotic(&self) -> Option<Asymptotic> {
        self.asymptotic
    }

    pub fn description(&self) -> &str {
        &self.description
    }

    fn check_samples(&self) -> Result<()> {
        let mut prev = 0.0;
        for k in 0..=64 {
            let r = 0.25 * k as f64;
            let y = self.gamma(r);
            if !(y >= 0.0) || y < prev * (1.0 - 1e-12) {
                return Err(Error::InvalidParameter(format!(
                    "γ must be nonnegative and nondecreasing; γ({r}) = {y} after {prev}"
                )));
            }
            prev = y;
        }
        Ok(())
    }
}
