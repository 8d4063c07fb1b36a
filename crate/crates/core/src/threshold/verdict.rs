use serde::Serialize;

use crate::error::{Error, Result};
use crate::stationary::growth_constant;

use super::growth::GrowthFunction;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThresholdVerdict {
    /// `liminf r^{−2/(2−α)} ln g̃(r) > N^{1/(2−α)}`.
    pub min5_holds: bool,
    /// `g e^{−c_α r^{2/(2−α)}}` unbounded, the hypothesis of the collapse theorem.
    pub a9_holds: bool,
    /// `2/(2−α)`.
    pub critical_exponent: f64,
    /// `N^{1/(2−α)}`.
    pub min5_constant: f64,
    /// `c_α`.
    pub a9_constant: f64,
    pub exponent: f64,
    pub coefficient: f64,
}

/// Decides both growth conditions from the declared asymptotic `γ ~ K r^β`.
pub fn threshold_verdict(g: &GrowthFunction, alpha: f64, dimension: usize) -> Result<ThresholdVerdict> {
    if !(alpha > 1.0 && alpha < 2.0) {
        return Err(Error::InvalidParameter(format!("threshold verdict needs α in (1, 2), got {alpha}")));
    }
    if dimension == 0 {
        return Err(Error::InvalidParameter("dimension must be at least 1".into()));
    }
    let asym = g
        .asymptotic()
        .ok_or_else(|| Error::Precondition(format!("growth '{}' carries no declared asymptotic", g.description())))?;
    let critical_exponent = 2.0 / (2.0 - alpha);
    let min5_constant = (dimension as f64).powf(1.0 / (2.0 - alpha));
    let a9_constant = growth_constant(alpha);
    let at_critical = (asym.exponent - critical_exponent).abs() <= 1e-12 * critical_exponent;
    let above = asym.exponent > critical_exponent && !at_critical;
    Ok(ThresholdVerdict {
        min5_holds: above || (at_critical && asym.coefficient > min5_constant),
        a9_holds: above || (at_critical && asym.coefficient > a9_constant),
        critical_exponent,
        min5_constant,
        a9_constant,
        exponent: asym.exponent,
        coefficient: asym.coefficient,
    })
}
