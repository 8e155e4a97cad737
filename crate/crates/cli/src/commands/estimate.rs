use std::path::Path;

use dcwelfare::choice::{ChoiceModel, ChoiceProbabilities, ModelDocument};
use dcwelfare::estimation::{
    basis_and_grid, bootstrap_fit, fit_constrained_probit, fit_to_model, hausman_instrument, impute_prices, DemandFit,
    EstimationConfig, FitOptions, ImputationReport,
};
use serde::{Deserialize, Serialize};

use super::linspace;
use crate::config::{one_or_many, Resolved};
use crate::error::{CliError, CliResult};
use crate::inputs::load_dataset;
use crate::output::{Cell, Output};

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct EstimateConfig {
    pub data: String,
    pub intervals: usize,
    pub degree: usize,
    pub grid_points: usize,
    pub grid_lower_quantile: f64,
    pub grid_upper_quantile: f64,
    pub control_function: bool,
    pub constrained: bool,
    pub audit_factor: usize,
    pub audit_tolerance: f64,
    pub max_refinements: usize,
    /// Replace the `instrument` column by leave-own-cluster-out stratum
    /// mean prices.
    pub hausman_instrument: bool,
    /// Bootstrap refits; 0 disables the bootstrap.
    pub bootstrap: usize,
    pub seed: u64,
    /// Covariate values the exported model is evaluated at; `null` uses
    /// the sample medians.
    pub profile: Option<Vec<f64>>,
    #[serde(deserialize_with = "one_or_many")]
    pub curve_prices: Vec<f64>,
    pub curve_points: usize,
}

impl Default for EstimateConfig {
    fn default() -> Self {
        let e = EstimationConfig::default();
        Self {
            data: "dataset.csv".into(),
            intervals: e.intervals,
            degree: e.degree,
            grid_points: e.grid_points,
            grid_lower_quantile: e.grid_lower_quantile,
            grid_upper_quantile: e.grid_upper_quantile,
            control_function: e.fit.control_function,
            constrained: e.fit.constrained,
            audit_factor: e.fit.audit_factor,
            audit_tolerance: e.fit.audit_tolerance,
            max_refinements: e.fit.max_refinements,
            hausman_instrument: false,
            bootstrap: 0,
            seed: 1,
            profile: None,
            curve_prices: vec![1.0, 2.0, 3.0, 4.0],
            curve_points: 50,
        }
    }
}

impl EstimateConfig {
    fn estimation(&self) -> EstimationConfig {
        EstimationConfig {
            intervals: self.intervals,
            degree: self.degree,
            grid_points: self.grid_points,
            grid_lower_quantile: self.grid_lower_quantile,
            grid_upper_quantile: self.grid_upper_quantile,
            fit: FitOptions {
                control_function: self.control_function,
                constrained: self.constrained,
                audit_factor: self.audit_factor,
                audit_tolerance: self.audit_tolerance,
                max_refinements: self.max_refinements,
            },
        }
    }
}

#[derive(Serialize)]
struct FitDocument<'a> {
    fit: &'a DemandFit,
    imputation: &'a ImputationReport,
    profile: &'a [f64],
}

#[derive(Serialize)]
struct DrawsDocument<'a> {
    seed: u64,
    requested: usize,
    failures: &'a [(usize, String)],
    profile: &'a [f64],
    models: Vec<ChoiceModel>,
}

fn parameter_names(fit: &DemandFit) -> Vec<String> {
    let mut names = vec!["price".to_string()];
    names.extend((1..=fit.income_coefficients.len()).map(|m| format!("income_spline_{m}")));
    names.extend(fit.covariate_names.iter().cloned());
    names
}

fn parameters(fit: &DemandFit) -> Vec<f64> {
    let mut v = vec![fit.price_coefficient];
    v.extend(&fit.income_coefficients);
    v.extend(&fit.covariate_coefficients);
    v
}

pub fn run(r: &Resolved<EstimateConfig>, out_dir: &Path) -> CliResult<Output> {
    let c = &r.config;
    if c.bootstrap == 1 {
        return Err(CliError::usage("bootstrap needs at least 2 draws (or 0 to disable)"));
    }
    let raw = load_dataset(Path::new(&c.data))?;
    let (mut data, imputation) = impute_prices(&raw)?;
    if c.hausman_instrument {
        data.instrument = hausman_instrument(&data)?;
    }
    let cfg = c.estimation();
    let (basis, grid) = basis_and_grid(&data, &cfg)?;
    let fit = fit_constrained_probit(&data, &basis, &grid, &cfg.fit)?;
    let profile = c.profile.clone().unwrap_or_else(|| data.covariate_medians());
    let model = fit_to_model(&fit, &profile)?;

    let mut out = Output::create(out_dir, "estimate", r)?;
    out.json("fit.json", &FitDocument { fit: &fit, imputation: &imputation, profile: &profile })?;
    out.json("model.json", &ModelDocument::new(model.clone()))?;

    let draws = if c.bootstrap >= 2 {
        let post = bootstrap_fit(&data, &basis, &grid, &cfg.fit, c.bootstrap, c.seed)?;
        let models = post.draws.iter().map(|d| fit_to_model(d, &profile)).collect::<Result<_, _>>()?;
        out.json(
            "draws.json",
            &DrawsDocument {
                seed: post.seed,
                requested: post.requested,
                failures: &post.failures,
                profile: &profile,
                models,
            },
        )?;
        Some(post)
    } else {
        None
    };

    let names = parameter_names(&fit);
    let point = parameters(&fit);
    let sds: Vec<Option<f64>> = (0..point.len())
        .map(|k| {
            draws.as_ref().map(|post| {
                let v: Vec<f64> = post.draws.iter().map(|d| parameters(d)[k]).collect();
                let m = v.iter().sum::<f64>() / v.len() as f64;
                (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64).sqrt()
            })
        })
        .collect();
    let mut rows: Vec<Vec<Cell>> = names
        .iter()
        .zip(&point)
        .zip(&sds)
        .map(|((n, b), s)| vec![n.clone().into(), (*b).into(), (*s).into()])
        .collect();
    rows.push(vec!["control_function".into(), fit.control_coefficient.into(), Cell::Empty]);
    rows.push(vec!["structural_scale".into(), fit.structural_scale.into(), Cell::Empty]);
    out.csv("coefficients.csv", &["parameter", "estimate", "bootstrap_sd"], rows)?;

    let incomes = linspace(basis.lower(), basis.upper(), c.curve_points)?;
    let mut rows = Vec::new();
    for &y in &incomes {
        for &p in &c.curve_prices {
            rows.push(vec![
                y.into(),
                p.into(),
                model.choice_probability(1, &[p], y)?.into(),
                fit.directional_slope(y).into(),
            ]);
        }
    }
    out.csv("demand.csv", &["income", "price", "purchase_probability", "directional_slope"], rows)?;

    let audit = &fit.audit;
    let rows = vec![
        vec!["observations".into(), fit.observations.into()],
        vec!["loglik".into(), fit.loglik.into()],
        vec!["audit_grid_points".into(), audit.grid_points.into()],
        vec!["audit_max_violation".into(), audit.max_violation.into()],
        vec!["audit_passed".into(), audit.passed.into()],
        vec!["active_constraints".into(), fit.active_constraints.into()],
        vec!["imputed_from_cluster".into(), imputation.from_cluster.into()],
        vec!["imputed_from_stratum".into(), imputation.from_stratum.into()],
        vec!["first_stage_f".into(), fit.first_stage.as_ref().and_then(|f| f.f_statistic).into()],
        vec!["bootstrap_failures".into(), draws.as_ref().map_or(0, |d| d.failures.len()).into()],
    ];
    out.csv("diagnostics.csv", &["statistic", "value"], rows)?;
    Ok(out)
}
