//! Plot-ready curves of welfare change, compensating variation and net cost
//! over a grid of subsidies, plus the welfare CDF with and without one
//! subsidy.

use std::path::Path;

use dcwelfare::binary::{acv, ate, delta_asw, program_cost_at, SubsidyScenario};
use dcwelfare::choice::BudgetPoint;
use dcwelfare::welfare::welfare_cdf;
use serde::{Deserialize, Serialize};

use super::{epsilon_label, linspace, IntegrationKeys};
use crate::config::{one_or_many, Resolved};
use crate::error::CliResult;
use crate::inputs::load_model;
use crate::output::{Cell, Output};

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct ReportConfig {
    pub model: String,
    pub base_price: f64,
    pub income: f64,
    pub subsidy_lower: f64,
    pub subsidy_upper: f64,
    pub subsidy_points: usize,
    #[serde(deserialize_with = "one_or_many")]
    pub epsilons: Vec<f64>,
    /// Subsidy for the before/after CDF panel.
    pub cdf_subsidy: f64,
    pub cdf_points: usize,
    pub cdf_span: f64,
    #[serde(flatten)]
    pub integration: IntegrationKeys,
}

impl Default for ReportConfig {
    fn default() -> Self {
        Self {
            model: "income_effect".into(),
            base_price: 2.0,
            income: 5.0,
            subsidy_lower: -1.0,
            subsidy_upper: 1.5,
            subsidy_points: 26,
            epsilons: vec![0.0, 1.0],
            cdf_subsidy: 1.0,
            cdf_points: 101,
            cdf_span: 10.0,
            integration: IntegrationKeys::default(),
        }
    }
}

pub fn run(r: &Resolved<ReportConfig>, out_dir: &Path) -> CliResult<Output> {
    let c = &r.config;
    let model = load_model(&c.model)?;
    let wc = c.integration.welfare_config()?;
    let (pb, y) = (c.base_price, c.income);
    let mut columns: Vec<String> =
        ["subsidy", "subsidised_price", "ate", "acv", "cost", "net_cost"].map(String::from).to_vec();
    columns.extend(c.epsilons.iter().map(|e| format!("delta_asw_{}", epsilon_label(*e))));
    let mut rows = Vec::new();
    for sigma in linspace(c.subsidy_lower, c.subsidy_upper, c.subsidy_points)? {
        let s = SubsidyScenario::new(pb, sigma, y, 0.0)?;
        let cost = program_cost_at(&model, &s)?;
        let gain = delta_asw(&model, &s, &wc)?;
        let mut row = vec![
            Cell::from(sigma),
            (pb - sigma).into(),
            ate(&model, &s)?.into(),
            acv(&model, &s, &wc)?.into(),
            cost.into(),
            (cost - gain).into(),
        ];
        for &e in &c.epsilons {
            row.push(delta_asw(&model, &SubsidyScenario::new(pb, sigma, y, e)?, &wc)?.into());
        }
        rows.push(row);
    }
    let before = BudgetPoint::single(pb, y)?;
    let after = BudgetPoint::single(pb - c.cdf_subsidy, y)?;
    let mut cdf_rows = Vec::new();
    for x in linspace(y, y + c.cdf_span, c.cdf_points)? {
        cdf_rows.push(vec![x.into(), welfare_cdf(&model, &before, x)?.into(), welfare_cdf(&model, &after, x)?.into()]);
    }
    let mut out = Output::create(out_dir, "report", r)?;
    let cols: Vec<&str> = columns.iter().map(String::as_str).collect();
    out.csv("curves.csv", &cols, rows)?;
    out.csv("cdf.csv", &["c", "cdf_base", "cdf_subsidised"], cdf_rows)?;
    Ok(out)
}
