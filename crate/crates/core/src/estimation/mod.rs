//! Binary demand estimation from household microdata.

mod bootstrap;
mod data;
mod first_stage;
mod fit;
mod probit;

pub use bootstrap::{bootstrap_fit, PosteriorDraws};
pub use data::{hausman_instrument, impute_prices, EstimationDataset, ImputationReport};
pub use first_stage::{first_stage, FirstStage};
pub use fit::{
    basis_and_grid, build_spline_basis, estimate_demand, fit_constrained_probit, fit_to_model, income_grid,
    ConstraintAudit, DemandFit, EstimationConfig, FitOptions,
};
