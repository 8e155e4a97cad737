use std::path::Path;

use dcwelfare::binary::{acv, ate, delta_asw, dwl, mvpf, SubsidyScenario};
use dcwelfare::choice::{BudgetPoint, ChoiceModel};
use dcwelfare::welfare::{asw, atkinson, cdf_grid, gini, WelfareCdf, WelfareConfig};
use serde::{Deserialize, Serialize};

use super::{epsilon_label, linspace, IntegrationKeys};
use crate::config::{one_or_many, Resolved};
use crate::error::{CliError, CliResult};
use crate::inputs::{load_income, load_model};
use crate::output::{Cell, Output};

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct WelfareRunConfig {
    pub model: String,
    /// Subsidy scenarios for a binary model instead of the distribution
    /// at one budget point.
    pub binary: bool,
    #[serde(deserialize_with = "one_or_many")]
    pub prices: Vec<f64>,
    pub income: f64,
    #[serde(deserialize_with = "one_or_many")]
    pub epsilons: Vec<f64>,
    pub cdf_points: usize,
    pub cdf_span: f64,
    pub base_price: f64,
    #[serde(deserialize_with = "one_or_many")]
    pub subsidies: Vec<f64>,
    /// `income[,weight]` CSV; when set, binary runs also write income averages.
    pub income_file: String,
    /// Size of the equally weighted income grid spanning the file's range.
    pub average_points: usize,
    #[serde(flatten)]
    pub integration: IntegrationKeys,
}

impl Default for WelfareRunConfig {
    fn default() -> Self {
        Self {
            model: "quasilinear_logit".into(),
            binary: false,
            prices: vec![0.0],
            income: 5.0,
            epsilons: vec![0.0, 0.5, 1.0],
            cdf_points: 101,
            cdf_span: 10.0,
            base_price: 1.0,
            subsidies: vec![-0.5, 0.25, 0.5, 0.75],
            income_file: String::new(),
            average_points: 20,
            integration: IntegrationKeys::default(),
        }
    }
}

pub fn run(r: &Resolved<WelfareRunConfig>, out_dir: &Path) -> CliResult<Output> {
    if r.config.binary {
        binary(r, out_dir)
    } else {
        distribution(r, out_dir)
    }
}

fn distribution(r: &Resolved<WelfareRunConfig>, out_dir: &Path) -> CliResult<Output> {
    let c = &r.config;
    let model = load_model(&c.model)?;
    let wc = c.integration.welfare_config()?;
    let point = BudgetPoint::new(c.prices.clone(), c.income)?;
    let grid = cdf_grid(&model, &point, c.cdf_span, c.cdf_points)?;
    let mut rows = vec![
        vec![
            Cell::from("mass_at_income"),
            Cell::Empty,
            WelfareCdf::new(&model, point.clone())?.mass_at_income()?.into(),
        ],
        vec!["gini".into(), Cell::Empty, gini(&model, &point, &wc)?.into()],
    ];
    for &e in &c.epsilons {
        rows.push(vec!["asw".into(), e.into(), asw(&model, &point, e, &wc)?.into()]);
    }
    for &e in &c.epsilons {
        rows.push(vec!["atkinson".into(), e.into(), atkinson(&model, &point, e, &wc)?.into()]);
    }
    let mut out = Output::create(out_dir, "welfare", r)?;
    out.csv("cdf.csv", &["c", "cdf"], grid.into_iter().map(|(x, f)| vec![x.into(), f.into()]).collect())?;
    out.csv("summary.csv", &["statistic", "epsilon", "value"], rows)?;
    Ok(out)
}

fn binary(r: &Resolved<WelfareRunConfig>, out_dir: &Path) -> CliResult<Output> {
    let c = &r.config;
    let model = load_model(&c.model)?;
    let wc = c.integration.welfare_config()?;
    let (pb, y) = (c.base_price, c.income);
    let mut columns: Vec<String> =
        ["subsidy", "subsidised_price", "ate", "acv", "cost", "dwl", "price_term", "income_term"]
            .map(String::from)
            .to_vec();
    columns.extend(c.epsilons.iter().map(|e| format!("delta_asw_{}", epsilon_label(*e))));
    let mut rows = Vec::new();
    for &sigma in &c.subsidies {
        let s = SubsidyScenario::new(pb, sigma, y, 0.0)?;
        let d = dwl(&model, &s, &wc)?;
        let mut row = vec![
            Cell::from(sigma),
            (pb - sigma).into(),
            ate(&model, &s)?.into(),
            acv(&model, &s, &wc)?.into(),
            d.cost.into(),
            d.dwl.into(),
            d.price_term.into(),
            d.income_term.into(),
        ];
        for &e in &c.epsilons {
            row.push(delta_asw(&model, &SubsidyScenario::new(pb, sigma, y, e)?, &wc)?.into());
        }
        rows.push(row);
    }
    let m = mvpf(&model, pb, y, &wc)?;
    let averages = if c.income_file.is_empty() { None } else { Some(averages(c, &model, &wc)?) };
    let mut out = Output::create(out_dir, "welfare", r)?;
    let cols: Vec<&str> = columns.iter().map(String::as_str).collect();
    out.csv("scenarios.csv", &cols, rows)?;
    if let Some((cols, rows)) = averages {
        let cols: Vec<&str> = cols.iter().map(String::as_str).collect();
        out.csv("averages.csv", &cols, rows)?;
    }
    out.csv(
        "mvpf.csv",
        &["statistic", "value"],
        vec![
            vec!["willingness_to_pay".into(), m.numerator.into()],
            vec!["cost".into(), m.denominator.into()],
            vec!["mvpf".into(), m.ratio.into()],
        ],
    )?;
    Ok(out)
}

/// Scenario effects averaged over income, once with equal weights on a grid
/// spanning the file's range and once with the file's weights.
fn averages(c: &WelfareRunConfig, model: &ChoiceModel, wc: &WelfareConfig) -> CliResult<(Vec<String>, Vec<Vec<Cell>>)> {
    let dist = load_income(Path::new(&c.income_file))?;
    if c.average_points < 2 {
        return Err(CliError::usage("average_points must be at least 2"));
    }
    let grid = linspace(dist.min(), dist.max(), c.average_points)?;
    let equal = vec![1.0 / grid.len() as f64; grid.len()];
    let total: f64 = dist.weights().iter().sum();
    let empirical: Vec<f64> = dist.weights().iter().map(|w| w / total).collect();
    let mut columns: Vec<String> = ["weighting", "subsidy", "ate", "acv", "cost", "dwl"].map(String::from).to_vec();
    columns.extend(c.epsilons.iter().map(|e| format!("delta_asw_{}", epsilon_label(*e))));
    let mut rows = Vec::new();
    for (label, incomes, weights) in [("grid", &grid[..], &equal[..]), ("empirical", dist.support(), &empirical[..])] {
        for &sigma in &c.subsidies {
            let mut acc = vec![0.0; 4 + c.epsilons.len()];
            for (&y, &w) in incomes.iter().zip(weights) {
                let s = SubsidyScenario::new(c.base_price, sigma, y, 0.0)?;
                let d = dwl(model, &s, wc)?;
                let mut v = vec![ate(model, &s)?, acv(model, &s, wc)?, d.cost, d.dwl];
                for &e in &c.epsilons {
                    v.push(delta_asw(model, &SubsidyScenario::new(c.base_price, sigma, y, e)?, wc)?);
                }
                for (a, x) in acc.iter_mut().zip(v) {
                    *a += w * x;
                }
            }
            let mut row = vec![Cell::from(label), sigma.into()];
            row.extend(acc.into_iter().map(Cell::from));
            rows.push(row);
        }
    }
    Ok((columns, rows))
}
