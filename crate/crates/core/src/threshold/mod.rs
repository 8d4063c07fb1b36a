//! Heat-kernel lower bounds and the admissible-growth threshold for initial
//! data `g̃(r) = e^{γ(r)} − 1`.
//!
//! Exponential-scale quantities are returned as natural logarithms.

mod bounds;
mod erfc;
mod functional;
mod growth;
mod verdict;

pub use bounds::{
    compute_r_n, flat_threshold_a0, i_n_quadrature, j_n_exact_1d, j_n_lower_bound, omega_integral_bound,
    omega_integral_bound_with, JnBound, OmegaBound,
};
pub use erfc::{erfc, erfc_scaled, ln_erfc};
pub use functional::{
    a_n_value, alpha2_b_n, alpha2_omega_bound, alpha2_point, b_n_value, nu_n, t_star, threshold_report, Alpha2Point,
    ThresholdReport, ThresholdRow,
};
pub use growth::{Asymptotic, GammaFn, GrowthFunction};
pub use verdict::{threshold_verdict, ThresholdVerdict};
