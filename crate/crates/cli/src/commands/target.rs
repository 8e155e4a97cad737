//! Budget-constrained subsidy schedules for one model or, with posterior
//! draws, under a penalised budget averaged over the draws.

use std::path::Path;

use dcwelfare::targeting::{
    bayes_optimal_schedule, optimal_schedule, schedule_objective, soc_check, uniform_schedule, BudgetRule, Criterion,
    IncomeDistribution, ScheduleSpace, SolverConfig, TargetingProblem,
};
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{linspace, IntegrationKeys};
use crate::config::Resolved;
use crate::error::{CliError, CliResult};
use crate::inputs::{load_draws, load_income, load_model};
use crate::output::{Cell, Output};

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct TargetConfig {
    pub model: String,
    /// Posterior draws from `estimate`; when set, `model` is ignored and the
    /// budget enters through `penalty`.
    pub draws: String,
    pub penalty: f64,
    /// `ate`, `acv` or `casw`.
    pub criterion: String,
    pub epsilon: f64,
    pub base_price: f64,
    pub budget: f64,
    /// `equality` or `at_most`.
    pub budget_rule: String,
    /// CSV of `income[,weight]`; empty to use the grid below with equal
    /// weights.
    pub income_file: String,
    pub income_lower: f64,
    pub income_upper: f64,
    pub income_points: usize,
    /// `spline` or `pointwise`.
    pub space: String,
    pub spline_size: usize,
    pub spline_degree: usize,
    pub lower: f64,
    pub upper: f64,
    pub starts: usize,
    pub seed: u64,
    pub stationarity_tolerance: f64,
    pub budget_tolerance: f64,
    pub max_outer: usize,
    pub max_inner: usize,
    pub curve_points: usize,
    #[serde(flatten)]
    pub integration: IntegrationKeys,
}

impl Default for TargetConfig {
    fn default() -> Self {
        let s = SolverConfig::default();
        Self {
            model: "price_sensitivity_gradient".into(),
            draws: String::new(),
            penalty: 1000.0,
            criterion: "ate".into(),
            epsilon: 0.0,
            base_price: 2.0,
            budget: 0.0,
            budget_rule: "equality".into(),
            income_file: String::new(),
            income_lower: 1.0,
            income_upper: 10.0,
            income_points: 12,
            space: "spline".into(),
            spline_size: 6,
            spline_degree: 3,
            lower: -1.5,
            upper: 1.5,
            starts: s.starts,
            seed: s.seed,
            stationarity_tolerance: s.stationarity_tolerance,
            budget_tolerance: s.budget_tolerance,
            max_outer: s.max_outer,
            max_inner: s.max_inner,
            curve_points: 91,
            integration: IntegrationKeys { truncation_value: 40.0, ..IntegrationKeys::default() },
        }
    }
}

impl TargetConfig {
    fn problem(&self) -> CliResult<TargetingProblem> {
        let criterion = match self.criterion.as_str() {
            "ate" => Criterion::Ate,
            "acv" => Criterion::Acv,
            "casw" => Criterion::Casw { epsilon: self.epsilon },
            other => return Err(CliError::usage(format!("criterion must be ate, acv or casw, got {other:?}"))),
        };
        let budget_rule = match self.budget_rule.as_str() {
            "equality" => BudgetRule::Equality,
            "at_most" => BudgetRule::AtMost,
            other => return Err(CliError::usage(format!("budget_rule must be equality or at_most, got {other:?}"))),
        };
        let space = match self.space.as_str() {
            "spline" => ScheduleSpace::Spline {
                size: self.spline_size,
                degree: self.spline_degree,
                lower: self.lower,
                upper: self.upper,
            },
            "pointwise" => ScheduleSpace::Pointwise { lower: self.lower, upper: self.upper },
            other => return Err(CliError::usage(format!("space must be spline or pointwise, got {other:?}"))),
        };
        let income = if self.income_file.is_empty() {
            IncomeDistribution::empirical(&linspace(self.income_lower, self.income_upper, self.income_points)?)?
        } else {
            load_income(Path::new(&self.income_file))?
        };
        Ok(TargetingProblem {
            base_price: self.base_price,
            criterion,
            income,
            budget: self.budget,
            budget_rule,
            space,
            welfare: self.integration.welfare_config()?,
        })
    }

    fn solver(&self) -> SolverConfig {
        SolverConfig {
            starts: self.starts,
            seed: self.seed,
            stationarity_tolerance: self.stationarity_tolerance,
            budget_tolerance: self.budget_tolerance,
            max_outer: self.max_outer,
            max_inner: self.max_inner,
        }
    }
}

pub fn run(r: &Resolved<TargetConfig>, out_dir: &Path) -> CliResult<Output> {
    let c = &r.config;
    let problem = c.problem()?;
    let solver = c.solver();
    let (report, extras) = if c.draws.is_empty() {
        let model = load_model(&c.model)?;
        let report = optimal_schedule(&model, &problem, &solver)?;
        let uniform = uniform_schedule(&model, &problem).and_then(|u| schedule_objective(&model, &problem, &u)).ok();
        let soc = if problem.income.len() == 2 {
            let s =
                [report.schedule.eval(problem.income.support()[0]), report.schedule.eval(problem.income.support()[1])];
            Some(soc_check(&model, &problem, s)?)
        } else {
            None
        };
        (report, json!({ "uniform_objective": uniform, "second_order": soc }))
    } else {
        let draws = load_draws(Path::new(&c.draws))?;
        let report = bayes_optimal_schedule(&draws, &problem, c.penalty, &solver)?;
        (report, json!({ "draws": draws.len(), "penalty": c.penalty }))
    };
    let rows = report
        .nodes
        .iter()
        .map(|n| {
            vec![
                Cell::from(n.income),
                n.weight.into(),
                n.subsidy.into(),
                (c.base_price - n.subsidy).into(),
                n.benefit.into(),
                n.cost.into(),
                n.benefit_slope.into(),
                n.cost_slope.into(),
                n.foc_residual.into(),
            ]
        })
        .collect();
    let curve = linspace(problem.income.min(), problem.income.max(), c.curve_points)
        .unwrap_or_else(|_| vec![problem.income.min()])
        .into_iter()
        .map(|y| vec![Cell::from(y), report.schedule.eval(y).into()])
        .collect();
    let mut out = Output::create(out_dir, "target", r)?;
    out.csv(
        "schedule.csv",
        &[
            "income",
            "weight",
            "subsidy",
            "subsidised_price",
            "benefit",
            "cost",
            "benefit_slope",
            "cost_slope",
            "foc_residual",
        ],
        rows,
    )?;
    out.csv("curve.csv", &["income", "subsidy"], curve)?;
    out.json("report.json", &json!({ "report": report, "diagnostics": extras }))?;
    Ok(out)
}
