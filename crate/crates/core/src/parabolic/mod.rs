//! Radial Cauchy–Dirichlet problems for `∂_t u − Δu + u h(u) = 0` and the
//! ball-exhaustion sequences built from them.

mod field;
mod grid;
mod schemes;
mod solver;

pub use field::{Boundary, EvolutionField, InitialData, TimeGrid, TraceFn};
pub use grid::{RadialGrid, MIN_INTERIOR_NODES};
pub use schemes::{
    check_comparison, run_scheme_a4, run_scheme_a8, run_scheme_a8_1, ProfileSource, SandwichSequences, SchemeKind, SchemeOptions, SchemeSequence,
};
pub use solver::{discrete_profile, evolve, evolve_on_schedule, evolve_with, EvolveOptions};
