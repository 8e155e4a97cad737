use std::path::Path;

use dcwelfare::choice::{eval_choice_prob, BudgetPoint, ChoiceProbabilities};
use dcwelfare::oracle::{cdf_distance_bound, simulate_dataset, simulate_welfare, DatasetDesign};
use dcwelfare::welfare::{welfare_cdf, welfare_cdf_left};
use serde::{Deserialize, Serialize};

use super::linspace;
use crate::config::{one_or_many, Resolved};
use crate::error::{CliError, CliResult};
use crate::inputs::load_model;
use crate::output::{Cell, Output};

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct SimulateConfig {
    /// `population` (agents' welfare under a model) or `dataset`
    /// (estimation microdata).
    pub kind: String,
    pub seed: u64,
    pub model: String,
    #[serde(deserialize_with = "one_or_many")]
    pub prices: Vec<f64>,
    pub income: f64,
    pub agents: usize,
    pub cdf_points: usize,
    pub cdf_span: f64,
    pub rows: usize,
    pub income_lower: f64,
    pub income_upper: f64,
    pub price_coefficient: f64,
    pub income_profile: [f64; 3],
    pub covariate_coefficients: [f64; 2],
    pub price_equation: [f64; 3],
    pub instrument_upper: f64,
    pub price_noise_sd: f64,
    pub endogeneity: f64,
    pub clusters: usize,
    pub strata: usize,
    pub mask_nonbuyer_prices: bool,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        let d = DatasetDesign::default();
        Self {
            kind: "population".into(),
            seed: 1,
            model: "quasilinear_logit".into(),
            prices: vec![1.0],
            income: 5.0,
            agents: 10_000,
            cdf_points: 101,
            cdf_span: 10.0,
            rows: d.rows,
            income_lower: d.income_lower,
            income_upper: d.income_upper,
            price_coefficient: d.price_coefficient,
            income_profile: d.income_profile,
            covariate_coefficients: d.covariate_coefficients,
            price_equation: d.price_equation,
            instrument_upper: d.instrument_upper,
            price_noise_sd: d.price_noise_sd,
            endogeneity: d.endogeneity,
            clusters: d.clusters,
            strata: d.strata,
            mask_nonbuyer_prices: d.mask_nonbuyer_prices,
        }
    }
}

pub fn run(r: &Resolved<SimulateConfig>, out_dir: &Path) -> CliResult<Output> {
    let c = &r.config;
    match c.kind.as_str() {
        "population" => population(r, out_dir),
        "dataset" => dataset(r, out_dir),
        other => Err(CliError::usage(format!("kind must be population or dataset, got {other:?}"))),
    }
}

fn population(r: &Resolved<SimulateConfig>, out_dir: &Path) -> CliResult<Output> {
    let c = &r.config;
    let model = load_model(&c.model)?;
    let ru = model
        .random_utility()
        .ok_or_else(|| CliError::usage(format!("model {:?} has no agent-level utilities to simulate", c.model)))?;
    let point = BudgetPoint::new(c.prices.clone(), c.income)?;
    let pop = simulate_welfare(ru, &point, c.agents, c.seed)?;
    let sorted = pop.sorted_welfare();
    let distance =
        cdf_distance_bound(&sorted, 1, |x| welfare_cdf(&model, &point, x), |x| welfare_cdf_left(&model, &point, x))?;

    let mut out = Output::create(out_dir, "simulate", r)?;
    let rows = (0..pop.len()).map(|i| vec![Cell::from(i), pop.chosen[i].into(), pop.welfare[i].into()]).collect();
    out.csv("draws.csv", &["agent", "choice", "welfare"], rows)?;

    let n = sorted.len() as f64;
    let grid = linspace(c.income, c.income + c.cdf_span, c.cdf_points)?;
    let mut rows = Vec::with_capacity(grid.len());
    for x in grid {
        let empirical = sorted.partition_point(|w| *w <= x) as f64 / n;
        rows.push(vec![x.into(), welfare_cdf(&model, &point, x)?.into(), empirical.into()]);
    }
    out.csv("cdf.csv", &["c", "model_cdf", "empirical_cdf"], rows)?;

    let shares = pop.shares(model.n_inside());
    let mut rows = vec![vec![Cell::from("sup_cdf_distance"), Cell::Empty, distance.into()]];
    for (j, s) in shares.iter().enumerate() {
        rows.push(vec!["simulated_share".into(), j.into(), (*s).into()]);
        rows.push(vec!["choice_probability".into(), j.into(), eval_choice_prob(&model, j, &point)?.into()]);
    }
    out.csv("summary.csv", &["statistic", "alternative", "value"], rows)?;
    Ok(out)
}

fn dataset(r: &Resolved<SimulateConfig>, out_dir: &Path) -> CliResult<Output> {
    let c = &r.config;
    let design = DatasetDesign {
        rows: c.rows,
        income_lower: c.income_lower,
        income_upper: c.income_upper,
        price_coefficient: c.price_coefficient,
        income_profile: c.income_profile,
        covariate_coefficients: c.covariate_coefficients,
        price_equation: c.price_equation,
        instrument_upper: c.instrument_upper,
        price_noise_sd: c.price_noise_sd,
        endogeneity: c.endogeneity,
        clusters: c.clusters,
        strata: c.strata,
        mask_nonbuyer_prices: c.mask_nonbuyer_prices,
        seed: c.seed,
    };
    let sim = simulate_dataset(&design)?;
    let d = &sim.data;
    let mut columns = vec!["choice", "price", "income", "instrument", "cluster", "stratum"];
    columns.extend(d.covariate_names.iter().map(String::as_str));
    let rows = (0..d.len())
        .map(|i| {
            let mut row = vec![
                Cell::Int(d.choice[i] as i64),
                d.price[i].into(),
                d.income[i].into(),
                d.instrument[i].into(),
                d.cluster[i].into(),
                d.stratum[i].into(),
            ];
            row.extend(d.covariates[i].iter().map(|x| Cell::from(*x)));
            row
        })
        .collect();
    let mut out = Output::create(out_dir, "simulate", r)?;
    out.csv("dataset.csv", &columns, rows)?;
    Ok(out)
}
