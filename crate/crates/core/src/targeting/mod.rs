//! Budget-constrained choice of an income-dependent subsidy schedule.

mod criteria;
mod income;
mod optimal;
mod schedule;
mod solver;

pub use criteria::{benefit, benefit_slope, node_values, Criterion, NodeValues};
pub use income::{IncomeDistribution, IncomeSpec};
pub use optimal::{
    bayes_optimal_schedule, optimal_schedule, program_cost, schedule_objective, shift_to_budget, soc_check,
    uniform_schedule, BudgetRule, NodeReport, SocReport, SolverConfig, TargetingProblem, TargetingReport,
};
pub use schedule::{ScheduleSpace, SubsidySchedule};
