//! Exact simultaneous confidence bands for percentile lines in simple
//! linear regression, built on minimum-area confidence sets.
//!
//! The band is `x'β̂ + z_γσ̂/θ − c₁σ̂√(1/n + (x−x̄)²/S_xx + z_γ²ξ)` to
//! `x'β̂ + z_γσ̂/θ + c₂σ̂√(…)` over `x − x̄ ∈ (a, b)`, with `(ξ, θ)` fixed by
//! the band form. [`solver`] finds `(c₁, c₂)` giving exact coverage `1 − α`,
//! either with `c₁ = c₂` or minimizing the area of the pivotal acceptance
//! region; [`comparison`] compares bands by that area.

pub mod band_forms;
pub mod comparison;
pub mod coverage;
pub mod error;
pub mod geometry;
pub mod mc_validation;
pub mod numeric;
pub mod pivotal_density;
pub mod regression_bands;
pub mod solver;

pub use band_forms::{xi_theta, BandForm, BandName, BandType};
pub use comparison::{ratio, ratio_curve, table, table_for, RatioRecord, SolveCache, Table, TableId};
pub use coverage::{coverage_gradient_check, coverage_probability, CoverageModel, CoverageOptions};
pub use error::{MacsError, Result};
pub use geometry::{
    fan_angle, region_area, scale_area, sub_angles, zeta_angles, AreaResult, CaseTag, CriticalConstants,
    RegionId, RegionPiece, Scenario, WedgeGeometry,
};
pub use mc_validation::{mc_coverage, mc_region_area, McConfig, McEstimate};
pub use pivotal_density::{density_polar, density_v, inner_v3_integral, DensityParams};
pub use regression_bands::{band_at, fit, threshold_crossings, BandCurve, Crossings, Dataset, FitResult};
pub use solver::{constants_to_areas, solve, solve_asymmetric, solve_symmetric, Solution, Solver, SolverOptions};
