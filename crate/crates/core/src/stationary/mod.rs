//! Stationary radial solutions of `V'' + (N−1)/r V' − V h(V) = 0`.
//!
//! Profiles are integrated and stored in `W = ln(1 + V)`, which grows only
//! polynomially where `V` overflows.

mod asymptotics;
mod blowup;
mod bound;
mod shoot;

pub use asymptotics::{growth_constant, verify_asymptotics, FitReport};
pub use blowup::{boundary_blowup_profile, boundary_blowup_profile_with, BlowupOptions, BlowupReport, InequalityCheck};
pub use bound::{apriori_bound, apriori_bound_log, apriori_profile, keller_osserman_integral, keller_osserman_tail_from};
pub use shoot::{shoot_v, shoot_v_with, uniform_radii, ShootOptions, ShootOutcome};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::table::Table;

/// Saturation value of `V` in exported tables.
pub const V_CLIP: f64 = 1e300;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ProfileKind {
    Shooting,
    AprioriBound,
    BoundaryBlowup,
}

#[derive(Debug, Clone, Serialize)]
pub struct RadialProfile {
    pub radii: Vec<f64>,
    /// `W(r_j) = ln(1 + V(r_j))`.
    pub w_values: Vec<f64>,
    /// `W_r(r_j)`.
    pub dw_values: Vec<f64>,
    pub dimension: usize,
    /// `V(0)`.
    pub center_value: f64,
    pub kind: ProfileKind,
}

impl RadialProfile {
    /// `V(r_j) = e^{W} − 1`, saturated at [`V_CLIP`].
    pub fn v_values(&self) -> Vec<f64> {
        self.w_values.iter().map(|&w| w.exp_m1().min(V_CLIP)).collect()
    }

    pub fn r_max(&self) -> f64 {
        *self.radii.last().expect("profiles are nonempty")
    }

    /// `W(r)` by cubic Hermite interpolation of the stored `(W, W_r)` pairs.
    pub fn w_at(&self, r: f64) -> Result<f64> {
        let n = self.radii.len();
        if !(r >= self.radii[0] && r <= self.radii[n - 1]) {
            return Err(Error::Domain(format!(
                "r = {r} outside the profile range [{}, {}]",
                self.radii[0],
                self.radii[n - 1]
            )));
        }
        let j = match self.radii.partition_point(|&x| x <= r) {
            0 => 0,
            k if k >= n => n - 2,
            k => k - 1,
        };
        if self.radii[j] == r {
            return Ok(self.w_values[j]);
        }
        let (r0, r1) = (self.radii[j], self.radii[j + 1]);
        let h = r1 - r0;
        let s = (r - r0) / h;
        let (w0, w1) = (self.w_values[j], self.w_values[j + 1]);
        let (d0, d1) = (self.dw_values[j] * h, self.dw_values[j + 1] * h);
        let s2 = s * s;
        let s3 = s2 * s;
        Ok((2.0 * s3 - 3.0 * s2 + 1.0) * w0 + (s3 - 2.0 * s2 + s) * d0 + (-2.0 * s3 + 3.0 * s2) * w1 + (s3 - s2) * d1)
    }

    pub fn v_at(&self, r: f64) -> Result<f64> {
        Ok(self.w_at(r)?.exp_m1())
    }

    /// Columns `(r, W, V_clipped)`.
    pub fn to_table(&self) -> Table {
        let mut t = Table::new(["r", "W", "V_clipped"]);
        for ((&r, &w), v) in self.radii.iter().zip(&self.w_values).zip(self.v_values()) {
            t.push(vec![r, w, v]);
        }
        t
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hermite_reproduces_cubics() {
        let radii: Vec<f64> = (0..=10).map(|i| i as f64 * 0.3).collect();
        let f = |r: f64| 1.0 + r - 0.5 * r * r + 0.1 * r * r * r;
        let df = |r: f64| 1.0 - r + 0.3 * r * r;
        let p = RadialProfile {
            w_values: radii.iter().map(|&r| f(r)).collect(),
            dw_values: radii.iter().map(|&r| df(r)).collect(),
            radii,
            dimension: 1,
            center_value: 0.0,
            kind: ProfileKind::Shooting,
        };
        for r in [0.0, 0.17, 1.01, 2.95, 3.0] {
            assert!((p.w_at(r).unwrap() - f(r)).abs() < 1e-13);
        }
        assert!(p.w_at(3.5).is_err());
        assert_eq!(p.to_table().columns, vec!["r", "W", "V_clipped"]);
    }
}
