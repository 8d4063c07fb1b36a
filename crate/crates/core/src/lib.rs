//! Numerical laboratory for the semilinear heat equation
//! `∂_t u − Δu + u h(u) = 0` with weakly superlinear absorption.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod nonlinearity;
pub mod numerics;
pub mod parabolic;
pub mod scalar_ode;
pub mod stationary;
pub mod table;
pub mod threshold;

pub use error::{Error, Result};
pub use nonlinearity::{ConditionReport, Family, FamilyParams, NonlinearitySpec, TailDiagnostics};
pub use parabolic::{Boundary, EvolutionField, InitialData, RadialGrid, TimeGrid};
pub use scalar_ode::{FlatTrajectory, InitialDatum};
pub use stationary::{ProfileKind, RadialProfile};
pub use table::Table;
pub use threshold::GrowthFunction;
