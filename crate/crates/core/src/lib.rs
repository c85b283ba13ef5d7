//! Geometrically constrained domain walls in thin-necked dumbbells.
//!
//! The crate discretises the phase-transition energy
//! `F(u) = 1/2 int |grad u|^2 + int W(u)` on box dumbbells joined by a thin
//! rectangular neck, builds explicit competitor fields with closed-form
//! energies, classifies neck families into asymptotic regimes, and minimises
//! the discrete energy to compare measured energies with the predicted
//! limits.

// `!(x > 0.0)` style checks deliberately reject NaN as well
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod competitors;
pub mod energy;
pub mod error;
pub mod geometry;
pub mod io;
pub mod minimiser;
pub mod oracle;
pub mod potential;
mod reduce;
pub mod regimes;

pub use analysis::{
    fit_loglog, fit_scaling, neck_profile, plateau_values, sweep, ProfilePoint, ScalingFit,
    SweepConfig, SweepRow,
};
pub use competitors::{
    affine_energy, build_competitor_field, fit_shell_to_neck, half_shell_energy, mixed_energy,
    optimal_ab, prolate_jacobian_det, prolate_map, shell_profile, CompetitorKind,
    CompetitorParams, MixedChoice, ProlateShell,
};
pub use energy::{energy, energy_gradient, EnergyBreakdown, ScalarField};
pub use error::{Error, Result};
pub use geometry::{
    build_domain, rasterize, BulkSpec, Dumbbell, DumbbellGrid, NeckParams, Region, Resolution,
};
pub use minimiser::{
    el_residual, initial_state, minimise, minimise_with_frozen, Diagnostics, Solution, SolveOptions,
    Termination,
};
pub use oracle::{grid_search_ab, quad_shell_energy, solve_1d_chain, QuadratureSpec};
pub use potential::{DoubleWell, NoPotential, Potential};
pub use regimes::{
    classify, finite_ratio, predicted_limits, Limit, PowerLogLaw, Prediction, Rate, RegimeReport,
    RegimeTag, ScalingFamily,
};
