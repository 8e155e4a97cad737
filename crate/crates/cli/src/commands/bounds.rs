//! Bounds on the welfare CDF from observed outside shares, either read from
//! a file or generated from a model at random budget points.

use std::path::Path;

use dcwelfare::bounds::{multinomial_cdf_bounds_grid, DemandObservation, ObservedDemandSet, OrderedDemandSet};
use dcwelfare::choice::{BudgetPoint, ChoiceModel, ChoiceProbabilities};
use dcwelfare::welfare::welfare_cdf;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::linspace;
use crate::config::{one_or_many, Resolved};
use crate::error::{CliError, CliResult};
use crate::inputs::{load_model, load_observations};
use crate::output::{Cell, Output};

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct BoundsConfig {
    /// Two units of one good, the second costing twice the first.
    pub ordered: bool,
    /// CSV of `p1..pJ, income, q0`; empty to generate observations from
    /// `model`.
    pub observations: String,
    /// Model generating observations and the `truth` column; empty to omit.
    pub model: String,
    pub obs_count: usize,
    pub seed: u64,
    pub obs_income_lower: f64,
    pub obs_income_upper: f64,
    /// Generated prices are uniform on `[0, obs_price_share · income]`.
    pub obs_price_share: f64,
    /// Target prices; the unit price alone when `ordered`.
    #[serde(deserialize_with = "one_or_many")]
    pub prices: Vec<f64>,
    pub income: f64,
    pub c_points: usize,
    pub c_span: f64,
}

impl Default for BoundsConfig {
    fn default() -> Self {
        Self {
            ordered: false,
            observations: String::new(),
            model: "multinomial".into(),
            obs_count: 500,
            seed: 1,
            obs_income_lower: 2.0,
            obs_income_upper: 12.0,
            obs_price_share: 0.45,
            prices: vec![0.5, 1.0],
            income: 5.0,
            c_points: 51,
            c_span: 5.0,
        }
    }
}

fn generate(c: &BoundsConfig, model: &ChoiceModel) -> CliResult<Vec<DemandObservation>> {
    if !(c.obs_income_lower > 0.0 && c.obs_income_lower < c.obs_income_upper && c.obs_price_share >= 0.0) {
        return Err(CliError::usage(
            "observation design needs 0 < obs_income_lower < obs_income_upper and obs_price_share >= 0",
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(c.seed);
    let mut points = Vec::with_capacity(c.obs_count);
    for _ in 0..c.obs_count {
        let y = rng.gen_range(c.obs_income_lower..c.obs_income_upper);
        let prices = if c.ordered {
            let p = rng.gen::<f64>() * c.obs_price_share * y;
            vec![p, 2.0 * p]
        } else {
            (0..model.n_inside()).map(|_| rng.gen::<f64>() * c.obs_price_share * y).collect()
        };
        points.push(BudgetPoint::new(prices, y)?);
    }
    Ok(ObservedDemandSet::from_model(model, &points)?.entries().to_vec())
}

pub fn run(r: &Resolved<BoundsConfig>, out_dir: &Path) -> CliResult<Output> {
    let c = &r.config;
    let model = if c.model.is_empty() { None } else { Some(load_model(&c.model)?) };
    let (n_inside, entries) = if c.observations.is_empty() {
        let m = model.as_ref().ok_or_else(|| CliError::usage("either observations or model must be given"))?;
        if c.ordered && m.n_inside() != 2 {
            return Err(CliError::usage("ordered bounds need a model with two inside alternatives"));
        }
        (if c.ordered { 2 } else { m.n_inside() }, generate(c, m)?)
    } else {
        load_observations(Path::new(&c.observations))?
    };
    let (set, point) = if c.ordered {
        if c.prices.len() != 1 {
            return Err(CliError::usage("ordered bounds take a single unit price"));
        }
        let set = OrderedDemandSet::new(entries).map_err(|e| CliError::data(e.to_string()))?;
        (set.as_observed().clone(), BudgetPoint::new(vec![c.prices[0], 2.0 * c.prices[0]], c.income)?)
    } else {
        let set = ObservedDemandSet::new(n_inside, entries).map_err(|e| CliError::data(e.to_string()))?;
        (set, BudgetPoint::new(c.prices.clone(), c.income)?)
    };
    if let Some(m) = &model {
        if m.n_inside() != point.prices.len() {
            return Err(CliError::usage(format!(
                "model has {} inside alternatives but {} target prices were given",
                m.n_inside(),
                point.prices.len()
            )));
        }
    }
    let cs = linspace(c.income, c.income + c.c_span, c.c_points)?;
    let bounds = multinomial_cdf_bounds_grid(&set, &cs, &point)?;
    let mut rows = Vec::with_capacity(bounds.len());
    for b in &bounds {
        let truth = match &model {
            Some(m) => Some(welfare_cdf(m, &point, b.c)?),
            None => None,
        };
        rows.push(vec![
            Cell::from(b.c),
            b.lower.into(),
            b.upper.into(),
            b.lower_informative.into(),
            b.upper_informative.into(),
            truth.into(),
        ]);
    }
    let mut out = Output::create(out_dir, "bounds", r)?;
    out.csv("bounds.csv", &["c", "lower", "upper", "lower_informative", "upper_informative", "truth"], rows)?;
    Ok(out)
}
