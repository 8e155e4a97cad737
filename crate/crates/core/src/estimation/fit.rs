//! Shape-constrained probit demand with a B-spline income profile and an
//! optional control-function correction for price endogeneity.
//!
//! The second stage is a probit of purchase on
//! `[price, R_1(y)..R_{M+q}(y), covariates, v̂]` where `v̂` is the first-stage
//! residual. Under joint normality of `(u, v)` the structural index equals
//! the estimated one divided by `sqrt(1 + κ² σ_v²)`, `κ` being the
//! coefficient on `v̂`. Constraints, imposed on the estimated index:
//! `β_p ≤ 0` and `β_p + f'(y_g) ≤ 0` on an income grid.

use log::{debug, warn};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::first_stage::{first_stage, FirstStage};
use super::probit::{constrained_probit, probit_loglik, SolverOptions};
use super::EstimationDataset;
use crate::choice::{ChoiceModel, SplineProbitModel, SplineProbitSpec};
use crate::error::{Error, Result};
use crate::numeric::normal_quantile;
use crate::spline::SplineBasis;

/// Spline basis for demand estimation: `M ≥ 2` equal intervals, degree
/// `q ∈ {2, 3}`, `M + q` functions.
pub fn build_spline_basis(y_min: f64, y_max: f64, intervals: usize, degree: usize) -> Result<SplineBasis> {
    if !(2..=3).contains(&degree) {
        return Err(Error::invalid(format!("spline degree must be 2 or 3, got {degree}")));
    }
    if intervals < 2 {
        return Err(Error::invalid(format!("need at least 2 spline intervals, got {intervals}")));
    }
    SplineBasis::new(y_min, y_max, intervals, degree)
}

/// `points` equally spaced values on `[lower, upper]`.
pub fn income_grid(lower: f64, upper: f64, points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![0.5 * (lower + upper)],
        _ => (0..points).map(|i| lower + (upper - lower) * i as f64 / (points - 1) as f64).collect(),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FitOptions {
    /// Include the first-stage residual in the probit.
    pub control_function: bool,
    /// Impose the monotonicity constraints.
    pub constrained: bool,
    /// Audit grid density relative to the constraint grid.
    pub audit_factor: usize,
    pub audit_tolerance: f64,
    /// Times the constraint grid is doubled when the audit fails.
    pub max_refinements: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self { control_function: true, constrained: true, audit_factor: 10, audit_tolerance: 1e-3, max_refinements: 3 }
    }
}

/// User-facing estimation settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EstimationConfig {
    pub intervals: usize,
    pub degree: usize,
    pub grid_points: usize,
    pub grid_lower_quantile: f64,
    pub grid_upper_quantile: f64,
    #[serde(flatten)]
    pub fit: FitOptions,
}

impl Default for EstimationConfig {
    fn default() -> Self {
        Self {
            intervals: 8,
            degree: 3,
            grid_points: 50,
            grid_lower_quantile: 0.01,
            grid_upper_quantile: 0.99,
            fit: FitOptions::default(),
        }
    }
}

/// Largest violation of `β_p + f'(y) ≤ 0` on a grid finer than the one the
/// constraints were imposed on.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstraintAudit {
    pub grid_points: usize,
    pub max_violation: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DemandFit {
    pub basis: SplineBasis,
    /// Structural price coefficient, `≤ 0`.
    pub price_coefficient: f64,
    /// Structural spline coefficients, one per basis function.
    pub income_coefficients: Vec<f64>,
    pub covariate_names: Vec<String>,
    pub covariate_coefficients: Vec<f64>,
    /// Observed range of each covariate.
    pub covariate_support: Vec<(f64, f64)>,
    /// Coefficient on the first-stage residual, in estimated-index units;
    /// zero without a control function.
    pub control_coefficient: f64,
    /// Factor mapping the estimated index to the structural one.
    pub structural_scale: f64,
    pub first_stage: Option<FirstStage>,
    pub constraint_grid: Vec<f64>,
    pub audit: ConstraintAudit,
    /// Grid constraints with a positive multiplier at the optimum.
    pub active_constraints: usize,
    pub loglik: f64,
    pub observations: usize,
    pub newton_iterations: usize,
}

impl DemandFit {
    /// `β_p + f'(y)` of the structural index.
    pub fn directional_slope(&self, income: f64) -> f64 {
        self.price_coefficient + self.basis.evaluate_derivative(&self.income_coefficients, income)
    }

    /// Structural index at price, income and covariates.
    pub fn index(&self, price: f64, income: f64, covariates: &[f64]) -> f64 {
        let x: f64 = self.covariate_coefficients.iter().zip(covariates).map(|(b, x)| b * x).sum();
        self.price_coefficient * price + self.basis.evaluate(&self.income_coefficients, income) + x
    }
}

fn design_matrix(
    data: &EstimationDataset,
    basis: &SplineBasis,
    prices: &[f64],
    control: Option<&[f64]>,
) -> DMatrix<f64> {
    let n = data.len();
    let s = basis.size();
    let k = data.n_covariates();
    let cols = 1 + s + k + usize::from(control.is_some());
    let mut x = DMatrix::zeros(n, cols);
    for i in 0..n {
        x[(i, 0)] = prices[i];
        for (m, v) in basis.values(data.income[i]).into_iter().enumerate() {
            x[(i, 1 + m)] = v;
        }
        for (c, v) in data.covariates[i].iter().enumerate() {
            x[(i, 1 + s + c)] = *v;
        }
        if let Some(v) = control {
            x[(i, cols - 1)] = v[i];
        }
    }
    x
}

fn constraint_matrix(basis: &SplineBasis, grid: &[f64], cols: usize) -> DMatrix<f64> {
    let mut a = DMatrix::zeros(grid.len() + 1, cols);
    a[(0, 0)] = 1.0;
    for (g, y) in grid.iter().enumerate() {
        a[(g + 1, 0)] = 1.0;
        for (m, d) in basis.derivative_values(*y).into_iter().enumerate() {
            a[(g + 1, 1 + m)] = d;
        }
    }
    a
}

fn audit(basis: &SplineBasis, coefs: &[f64], price: f64, grid: &[f64], factor: usize, tol: f64) -> ConstraintAudit {
    let (lo, hi) = match (grid.first(), grid.last()) {
        (Some(a), Some(b)) => (*a, *b),
        _ => (basis.lower(), basis.upper()),
    };
    let points = (grid.len().max(1) * factor.max(1)).max(2);
    let max_violation = income_grid(lo, hi, points)
        .into_iter()
        .map(|y| price + basis.evaluate_derivative(coefs, y))
        .fold(price, f64::max)
        .max(0.0);
    ConstraintAudit { grid_points: points, max_violation, passed: max_violation <= tol }
}

/// Two-step control-function probit with monotonicity imposed on `grid`.
///
/// Prices must be complete (see [`super::impute_prices`]) and incomes must
/// lie in the basis range.
pub fn fit_constrained_probit(
    data: &EstimationDataset,
    basis: &SplineBasis,
    grid: &[f64],
    opts: &FitOptions,
) -> Result<DemandFit> {
    data.validate(true)?;
    let (lo, hi) = (basis.lower(), basis.upper());
    if let Some(y) = data.income.iter().find(|y| **y < lo || **y > hi) {
        return Err(Error::Data(format!("income {y} outside the spline range [{lo}, {hi}]")));
    }
    if let Some(y) = grid.iter().find(|y| !(**y >= lo && **y <= hi)) {
        return Err(Error::invalid(format!("constraint grid point {y} outside [{lo}, {hi}]")));
    }
    let prices = data.prices()?;
    let fs = if opts.control_function { Some(first_stage(data)?) } else { None };
    let control = fs.as_ref().filter(|f| !f.f_infinite).map(|f| f.residuals.as_slice());
    let x = design_matrix(data, basis, &prices, control);
    let cols = x.ncols();
    let s = basis.size();

    let share = data.choice.iter().filter(|c| **c).count() as f64 / data.len() as f64;
    if share == 0.0 || share == 1.0 {
        return Err(Error::Data("choice has no variation".into()));
    }
    let mean_price = prices.iter().sum::<f64>() / prices.len() as f64;
    let start_price = -0.01;
    let mut start = DVector::zeros(cols);
    start[0] = start_price;
    for m in 0..s {
        start[1 + m] = normal_quantile(share) - start_price * mean_price;
    }

    let solver = SolverOptions::default();
    let mut grid = grid.to_vec();
    let mut refinements = 0;
    let (solution, a, report) = loop {
        let a = if opts.constrained { constraint_matrix(basis, &grid, cols) } else { DMatrix::zeros(0, cols) };
        let mut sol = constrained_probit(&x, &data.choice, &a, start.clone(), &solver)?;
        if opts.constrained {
            // shifting β_p moves every constraint by the same amount
            for _ in 0..4 {
                let worst = (&a * &sol.theta).max();
                if worst <= 0.0 {
                    break;
                }
                sol.theta[0] -= worst.max(f64::EPSILON * sol.theta[0].abs());
            }
            sol.loglik = probit_loglik(&x, &data.choice, &sol.theta);
        }
        let coefs: Vec<f64> = sol.theta.rows(1, s).iter().copied().collect();
        let report = audit(basis, &coefs, sol.theta[0], &grid, opts.audit_factor, opts.audit_tolerance);
        if !opts.constrained || report.passed || refinements >= opts.max_refinements {
            break (sol, a, report);
        }
        debug!("audit violation {:.3e}; refining constraint grid", report.max_violation);
        let (glo, ghi) = (grid[0], grid[grid.len() - 1]);
        grid = income_grid(glo, ghi, 2 * grid.len());
        refinements += 1;
    };
    if opts.constrained && !report.passed {
        warn!("monotonicity audit still violated by {:.3e} after {} refinements", report.max_violation, refinements);
    }

    let theta = &solution.theta;
    let kappa = if control.is_some() { theta[cols - 1] } else { 0.0 };
    let sigma2 = fs.as_ref().map_or(0.0, |f| f.residual_variance);
    let scale = 1.0 / (1.0 + kappa * kappa * sigma2).sqrt();
    let k = data.n_covariates();
    let covariate_support = (0..k)
        .map(|c| {
            data.covariates
                .iter()
                .map(|r| r[c])
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), v| (l.min(v), h.max(v)))
        })
        .collect();
    let active = if a.nrows() > 1 { solution.multipliers.iter().skip(1).filter(|l| **l > 0.0).count() } else { 0 };
    let mut audit_report = report;
    audit_report.max_violation *= scale;
    Ok(DemandFit {
        basis: basis.clone(),
        price_coefficient: theta[0] * scale,
        income_coefficients: theta.rows(1, s).iter().map(|c| c * scale).collect(),
        covariate_names: data.covariate_names.clone(),
        covariate_coefficients: theta.rows(1 + s, k).iter().map(|c| c * scale).collect(),
        covariate_support,
        control_coefficient: kappa,
        structural_scale: scale,
        first_stage: fs,
        constraint_grid: if opts.constrained { grid } else { Vec::new() },
        audit: audit_report,
        active_constraints: active,
        loglik: solution.loglik,
        observations: data.len(),
        newton_iterations: solution.newton_iterations,
    })
}

/// Builds the basis on the observed income range and the constraint grid
/// between the configured income quantiles, then fits.
pub fn estimate_demand(data: &EstimationDataset, cfg: &EstimationConfig) -> Result<DemandFit> {
    data.validate(true)?;
    let (basis, grid) = basis_and_grid(data, cfg)?;
    fit_constrained_probit(data, &basis, &grid, &cfg.fit)
}

/// The basis and constraint grid [`estimate_demand`] would use.
pub fn basis_and_grid(data: &EstimationDataset, cfg: &EstimationConfig) -> Result<(SplineBasis, Vec<f64>)> {
    if data.is_empty() {
        return Err(Error::Data("dataset has no rows".into()));
    }
    if !(0.0..=1.0).contains(&cfg.grid_lower_quantile)
        || !(cfg.grid_lower_quantile..=1.0).contains(&cfg.grid_upper_quantile)
    {
        return Err(Error::invalid("grid quantiles must satisfy 0 <= lower <= upper <= 1"));
    }
    let (lo, hi) = data.income.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), y| (l.min(*y), h.max(*y)));
    let basis = build_spline_basis(lo, hi, cfg.intervals, cfg.degree)?;
    let grid = income_grid(
        data.income_quantile(cfg.grid_lower_quantile),
        data.income_quantile(cfg.grid_upper_quantile),
        cfg.grid_points,
    );
    Ok((basis, grid))
}

/// The fitted demand at a covariate profile, as a choice model. Income
/// outside the basis range is clamped to the boundary.
pub fn fit_to_model(fit: &DemandFit, covariate_profile: &[f64]) -> Result<ChoiceModel> {
    if covariate_profile.len() != fit.covariate_coefficients.len() {
        return Err(Error::invalid(format!(
            "covariate profile has {} entries, fit has {} covariates",
            covariate_profile.len(),
            fit.covariate_coefficients.len()
        )));
    }
    for ((x, (lo, hi)), name) in covariate_profile.iter().zip(&fit.covariate_support).zip(&fit.covariate_names) {
        if x < lo || x > hi {
            return Err(Error::invalid(format!("{name} = {x} outside observed support [{lo}, {hi}]")));
        }
    }
    Ok(ChoiceModel::SplineProbit(SplineProbitModel::new(SplineProbitSpec {
        basis: fit.basis.clone(),
        price_coefficient: fit.price_coefficient,
        income_coefficients: fit.income_coefficients.clone(),
        covariate_coefficients: fit.covariate_coefficients.clone(),
        covariate_profile: covariate_profile.to_vec(),
    })?))
}
