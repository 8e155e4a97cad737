use log::debug;
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::criteria::{benefit, node_values, Criterion, NodeValues};
use super::schedule::Realised;
use super::solver::{minimise_box, projected_gradient_norm, Local};
use super::{IncomeDistribution, ScheduleSpace, SubsidySchedule};
use crate::binary::purchase_probability;
use crate::choice::ChoiceProbabilities;
use crate::error::{Error, Result};
use crate::welfare::WelfareConfig;

/// How the budget binds.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BudgetRule {
    /// Spend exactly `M` (`M = 0`: revenue neutral).
    #[default]
    Equality,
    /// Spend at most `M`.
    AtMost,
}

/// Maximise `Σ_k π_k B(σ(y_k), y_k)` subject to the budget on
/// `Σ_k π_k σ(y_k) q_1(p̄ − σ(y_k), y_k)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TargetingProblem {
    pub base_price: f64,
    pub criterion: Criterion,
    pub income: IncomeDistribution,
    pub budget: f64,
    #[serde(default)]
    pub budget_rule: BudgetRule,
    pub space: ScheduleSpace,
    pub welfare: WelfareConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    pub starts: usize,
    pub seed: u64,
    /// Projected-gradient tolerance in coefficient space.
    pub stationarity_tolerance: f64,
    /// Budget tolerance relative to `max(1, |M|)`.
    pub budget_tolerance: f64,
    pub max_outer: usize,
    pub max_inner: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            starts: 5,
            seed: 7,
            stationarity_tolerance: 1e-8,
            budget_tolerance: 1e-10,
            max_outer: 60,
            max_inner: 200,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NodeReport {
    pub income: f64,
    pub weight: f64,
    pub subsidy: f64,
    pub benefit: f64,
    pub cost: f64,
    pub benefit_slope: f64,
    pub cost_slope: f64,
    /// `B'(σ_k) − λ C'(σ_k)`; for Bayesian fits, node values are draw
    /// averages and this is `mean_d[B_d' − 2c (spending_d − M) C_d']`.
    pub foc_residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TargetingReport {
    pub criterion: Criterion,
    pub schedule: SubsidySchedule,
    pub objective: f64,
    pub budget: f64,
    /// Spending minus budget.
    pub budget_residual: f64,
    /// Budget multiplier (Bayesian fits: `2c` times the mean budget
    /// residual, the shadow price when draws agree).
    pub multiplier: f64,
    /// Projected gradient of the Lagrangian (Bayesian fits: of the loss).
    pub projected_gradient: f64,
    /// Some parameter sits on the box bound.
    pub at_bound: bool,
    /// The Lagrangian has no curvature along the budget surface.
    pub flat: bool,
    /// Objective reached from each start (`None`: the start failed).
    pub start_objectives: Vec<Option<f64>>,
    pub nodes: Vec<NodeReport>,
}

struct Aggregate {
    benefit: f64,
    spending: f64,
    d_benefit: DVector<f64>,
    d_spending: DVector<f64>,
    h_benefit: DMatrix<f64>,
    h_spending: DMatrix<f64>,
    nodes: Vec<NodeValues>,
}

struct Evaluator<'a, M: ?Sized> {
    model: &'a M,
    criterion: Criterion,
    base_price: f64,
    income: &'a IncomeDistribution,
    welfare: &'a WelfareConfig,
    realised: &'a Realised,
}

impl<M: ChoiceProbabilities + ?Sized> Evaluator<'_, M> {
    fn subsidies(&self, c: &DVector<f64>) -> DVector<f64> {
        &self.realised.design * c
    }

    fn values(&self, c: &DVector<f64>) -> Result<(f64, f64)> {
        let s = self.subsidies(c);
        let parts: Vec<(f64, f64)> = (0..self.income.len())
            .into_par_iter()
            .map(|k| {
                let y = self.income.support()[k];
                let b = benefit(self.model, self.criterion, self.base_price, y, s[k], self.welfare)?;
                let q = purchase_probability(self.model, self.base_price - s[k], y)?;
                Ok((b, s[k] * q))
            })
            .collect::<Result<_>>()?;
        let w = self.income.weights();
        Ok(parts.iter().zip(w).fold((0.0, 0.0), |(b, g), ((nb, ng), p)| (b + p * nb, g + p * ng)))
    }

    fn aggregate(&self, c: &DVector<f64>) -> Result<Aggregate> {
        let s = self.subsidies(c);
        let nodes: Vec<NodeValues> = (0..self.income.len())
            .into_par_iter()
            .map(|k| {
                let y = self.income.support()[k];
                node_values(self.model, self.criterion, self.base_price, y, s[k], self.welfare, true)
            })
            .collect::<Result<_>>()?;
        let r = &self.realised.design;
        let w = self.income.weights();
        let d = c.len();
        let mut a = Aggregate {
            benefit: 0.0,
            spending: 0.0,
            d_benefit: DVector::zeros(d),
            d_spending: DVector::zeros(d),
            h_benefit: DMatrix::zeros(d, d),
            h_spending: DMatrix::zeros(d, d),
            nodes: Vec::new(),
        };
        for (k, v) in nodes.iter().enumerate() {
            let row = r.row(k).transpose();
            a.benefit += w[k] * v.benefit;
            a.spending += w[k] * v.cost;
            a.d_benefit += &row * (w[k] * v.benefit_slope);
            a.d_spending += &row * (w[k] * v.cost_slope);
            let outer = &row * row.transpose();
            a.h_benefit += &outer * (w[k] * v.benefit_curvature);
            a.h_spending += &outer * (w[k] * v.cost_curvature);
        }
        a.nodes = nodes;
        Ok(a)
    }
}

fn bracket_root(f: impl Fn(f64) -> Result<f64>, from: f64, to: f64) -> Result<Option<f64>> {
    const STEPS: usize = 400;
    let f0 = f(from)?;
    if f0 == 0.0 {
        return Ok(Some(from));
    }
    let mut prev = (from, f0);
    for i in 1..=STEPS {
        let x = from + (to - from) * i as f64 / STEPS as f64;
        let fx = f(x)?;
        if fx == 0.0 || fx.signum() != prev.1.signum() {
            let (mut a, mut b, mut fa) = (prev.0, x, prev.1);
            for _ in 0..200 {
                let m = 0.5 * (a + b);
                let fm = f(m)?;
                if fm == 0.0 || (b - a).abs() < 1e-15 * m.abs().max(1.0) {
                    return Ok(Some(m));
                }
                if fm.signum() == fa.signum() {
                    a = m;
                    fa = fm;
                } else {
                    b = m;
                }
            }
            return Ok(Some(0.5 * (a + b)));
        }
        prev = (x, fx);
    }
    Ok(None)
}

/// Per-capita spending `Σ_k π_k σ(y_k) q_1(p̄ − σ(y_k), y_k)`; taxes count
/// as negative spending.
pub fn program_cost<M: ChoiceProbabilities + ?Sized>(
    model: &M,
    base_price: f64,
    schedule: &SubsidySchedule,
    income: &IncomeDistribution,
) -> Result<f64> {
    schedule.check_prices(base_price, income)?;
    let mut total = 0.0;
    for (&y, &w) in income.support().iter().zip(income.weights()) {
        let s = schedule.eval(y);
        total += w * s * purchase_probability(model, base_price - s, y)?;
    }
    Ok(total)
}

/// `Σ_k π_k B(σ(y_k), y_k)` for the problem's criterion.
pub fn schedule_objective<M: ChoiceProbabilities + ?Sized>(
    model: &M,
    problem: &TargetingProblem,
    schedule: &SubsidySchedule,
) -> Result<f64> {
    schedule.check_prices(problem.base_price, &problem.income)?;
    let mut total = 0.0;
    for (&y, &w) in problem.income.support().iter().zip(problem.income.weights()) {
        total += w * benefit(model, problem.criterion, problem.base_price, y, schedule.eval(y), &problem.welfare)?;
    }
    Ok(total)
}

fn validate(problem: &TargetingProblem) -> Result<Realised> {
    problem.criterion.validate()?;
    problem.welfare.validate()?;
    if !(problem.base_price.is_finite() && problem.base_price > 0.0) {
        return Err(Error::invalid(format!("base price must be positive, got {}", problem.base_price)));
    }
    if !problem.budget.is_finite() {
        return Err(Error::NonFinite("budget".into()));
    }
    problem.space.realise(problem.base_price, &problem.income)
}

/// Shifts every parameter by a common amount (for both parameterisations
/// this shifts `σ(y)` uniformly) so that spending equals the budget.
pub fn shift_to_budget<M: ChoiceProbabilities + ?Sized>(
    model: &M,
    problem: &TargetingProblem,
    parameters: &[f64],
) -> Result<Vec<f64>> {
    let realised = validate(problem)?;
    if parameters.len() != realised.dim() {
        return Err(Error::invalid(format!(
            "{} parameters for a schedule space of dimension {}",
            parameters.len(),
            realised.dim()
        )));
    }
    let ev = Evaluator {
        model,
        criterion: problem.criterion,
        base_price: problem.base_price,
        income: &problem.income,
        welfare: &problem.welfare,
        realised: &realised,
    };
    let base = DVector::from_column_slice(parameters);
    let lo = realised.lower - base.min();
    let hi = realised.upper - base.max();
    if lo > hi {
        return Err(Error::invalid("parameters span more than the box"));
    }
    let residual = |t: f64| -> Result<f64> {
        let c = base.add_scalar(t);
        Ok(program_spending(&ev, &c)? - problem.budget)
    };
    let start = 0.0_f64.clamp(lo, hi);
    let root = match bracket_root(residual, start, hi)? {
        Some(r) => Some(r),
        None => bracket_root(residual, start, lo)?,
    };
    let t = root.ok_or_else(|| Error::Infeasible(format!("no uniform shift meets the budget {}", problem.budget)))?;
    Ok(base.add_scalar(t).iter().map(|v| v.clamp(realised.lower, realised.upper)).collect())
}

fn program_spending<M: ChoiceProbabilities + ?Sized>(ev: &Evaluator<'_, M>, c: &DVector<f64>) -> Result<f64> {
    let s = ev.subsidies(c);
    let mut total = 0.0;
    for (k, (&y, &w)) in ev.income.support().iter().zip(ev.income.weights()).enumerate() {
        total += w * s[k] * purchase_probability(ev.model, ev.base_price - s[k], y)?;
    }
    Ok(total)
}

/// The constant schedule spending exactly the budget.
pub fn uniform_schedule<M: ChoiceProbabilities + ?Sized>(
    model: &M,
    problem: &TargetingProblem,
) -> Result<SubsidySchedule> {
    let realised = validate(problem)?;
    let c = shift_to_budget(model, problem, &vec![0.0; realised.dim()])?;
    Ok(realised.schedule(c, &problem.income))
}

fn starting_points(realised: &Realised, uniform: Option<Vec<f64>>, cfg: &SolverConfig) -> Vec<DVector<f64>> {
    let d = realised.dim();
    let (lo, hi) = (realised.lower, realised.upper);
    let mut starts = Vec::new();
    if let Some(u) = uniform {
        starts.push(DVector::from_vec(u));
    }
    starts.push(DVector::from_element(d, 0.0_f64.clamp(lo, hi)));
    let ramp = DVector::from_fn(d, |i, _| {
        let u = if d > 1 { i as f64 / (d - 1) as f64 } else { 0.5 };
        (0.5 * hi * (1.0 - u) + 0.5 * lo * u).clamp(lo, hi)
    });
    starts.push(ramp);
    let mut k = 0;
    while starts.len() < cfg.starts.max(1) {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(k);
        starts.push(DVector::from_fn(d, |_, _| rng.gen_range(lo..=hi)));
        k += 1;
    }
    starts.truncate(cfg.starts.max(1));
    starts
}

struct Candidate {
    c: DVector<f64>,
    objective: f64,
    residual: f64,
    multiplier: f64,
    projected_gradient: f64,
}

fn solve_from<M: ChoiceProbabilities + ?Sized>(
    ev: &Evaluator<'_, M>,
    problem: &TargetingProblem,
    start: DVector<f64>,
    cfg: &SolverConfig,
) -> Result<Candidate> {
    let (lo, hi) = (ev.realised.lower, ev.realised.upper);
    let budget = problem.budget;
    let btol = cfg.budget_tolerance * budget.abs().max(1.0);
    let equality = problem.budget_rule == BudgetRule::Equality;
    let mut lambda = 0.0_f64;
    let mut mu = 10.0_f64;
    let mut c = start;
    let mut prev = f64::INFINITY;
    for outer in 0..cfg.max_outer {
        let (l, m) = (lambda, mu);
        let weight = move |r: f64| if equality { l + m * r } else { (l + m * r).max(0.0) };
        let full = |x: &DVector<f64>| -> Result<Local> {
            let a = ev.aggregate(x)?;
            let r = a.spending - budget;
            let w = weight(r);
            let value = -a.benefit + penalty(l, m, r, equality);
            let grad = -&a.d_benefit + &a.d_spending * w;
            let mut hess = -&a.h_benefit + &a.h_spending * w;
            if equality || w > 0.0 {
                hess += &a.d_spending * a.d_spending.transpose() * m;
            }
            Ok(Local { value, grad, hess })
        };
        let value = |x: &DVector<f64>| -> Result<f64> {
            let (b, g) = ev.values(x)?;
            Ok(-b + penalty(l, m, g - budget, equality))
        };
        let tol = cfg.stationarity_tolerance * 0.1;
        let out = minimise_box(full, value, c, lo, hi, tol, cfg.max_inner)?;
        c = out.x;
        let a = ev.aggregate(&c)?;
        let r = a.spending - budget;
        lambda = weight(r);
        let lag_grad = -&a.d_benefit + &a.d_spending * lambda;
        let pg = projected_gradient_norm(&c, &lag_grad, lo, hi);
        let feasible = if equality { r.abs() <= btol } else { r <= btol && (lambda * r).abs() <= btol };
        debug!("outer {outer}: residual {r:.3e}, multiplier {lambda:.6}, projected gradient {pg:.3e}");
        if feasible && pg <= cfg.stationarity_tolerance {
            return Ok(Candidate { c, objective: a.benefit, residual: r, multiplier: lambda, projected_gradient: pg });
        }
        if r.abs() > 0.25 * prev {
            mu = (mu * 10.0).min(1e12);
        }
        prev = r.abs();
    }
    let a = ev.aggregate(&c)?;
    let r = a.spending - budget;
    if r.abs() > 1e3 * btol.max(1e-12) && (equality || r > 0.0) {
        return Err(Error::Infeasible(format!("budget residual {r:.3e} after {} rounds", cfg.max_outer)));
    }
    Err(Error::NonConvergence(format!("targeting did not reach stationarity after {} rounds", cfg.max_outer)))
}

fn penalty(lambda: f64, mu: f64, r: f64, equality: bool) -> f64 {
    if equality {
        lambda * r + 0.5 * mu * r * r
    } else {
        ((lambda + mu * r).max(0.0).powi(2) - lambda * lambda) / (2.0 * mu)
    }
}

fn node_reports(
    income: &IncomeDistribution,
    subsidies: &DVector<f64>,
    nodes: &[NodeValues],
    lambda: f64,
) -> Vec<NodeReport> {
    nodes
        .iter()
        .enumerate()
        .map(|(k, v)| NodeReport {
            income: income.support()[k],
            weight: income.weights()[k],
            subsidy: subsidies[k],
            benefit: v.benefit,
            cost: v.cost,
            benefit_slope: v.benefit_slope,
            cost_slope: v.cost_slope,
            foc_residual: v.benefit_slope - lambda * v.cost_slope,
        })
        .collect()
}

fn at_bound(c: &DVector<f64>, lo: f64, hi: f64) -> bool {
    let eps = 1e-9 * (hi - lo).max(1.0);
    c.iter().any(|v| *v <= lo + eps || *v >= hi - eps)
}

/// Curvature of the Lagrangian along the budget surface, restricted to
/// parameters off the box bounds.
fn is_flat(a: &Aggregate, lambda: f64, c: &DVector<f64>, lo: f64, hi: f64) -> bool {
    let eps = 1e-9 * (hi - lo).max(1.0);
    let free: Vec<usize> = (0..c.len()).filter(|&i| c[i] > lo + eps && c[i] < hi - eps).collect();
    if free.len() < 2 {
        return false;
    }
    let h = -&a.h_benefit + &a.h_spending * lambda;
    let hf = DMatrix::from_fn(free.len(), free.len(), |i, j| h[(free[i], free[j])]);
    let g = DVector::from_fn(free.len(), |i, _| a.d_spending[free[i]]);
    let p = if g.norm() > 0.0 {
        let u = &g / g.norm();
        DMatrix::identity(free.len(), free.len()) - &u * u.transpose()
    } else {
        DMatrix::identity(free.len(), free.len())
    };
    let reduced = &p * hf * &p;
    let eig = SymmetricEigen::new(reduced);
    let scale = a.d_benefit.amax().max(a.d_spending.amax()).max(1e-12);
    eig.eigenvalues.amax() <= 1e-6 * scale
}

/// Best stationary feasible schedule over deterministic multi-starts.
pub fn optimal_schedule<M: ChoiceProbabilities + ?Sized>(
    model: &M,
    problem: &TargetingProblem,
    cfg: &SolverConfig,
) -> Result<TargetingReport> {
    let realised = validate(problem)?;
    if model.n_inside() != 1 {
        return Err(Error::invalid("subsidy targeting needs a binary model"));
    }
    let ev = Evaluator {
        model,
        criterion: problem.criterion,
        base_price: problem.base_price,
        income: &problem.income,
        welfare: &problem.welfare,
        realised: &realised,
    };
    let uniform = shift_to_budget(model, problem, &vec![0.0; realised.dim()]).ok();
    let starts = starting_points(&realised, uniform, cfg);
    let mut best: Option<Candidate> = None;
    let mut start_objectives = Vec::with_capacity(starts.len());
    let mut last_err = None;
    for (i, s) in starts.into_iter().enumerate() {
        match solve_from(&ev, problem, s, cfg) {
            Ok(cand) => {
                debug!("start {i}: objective {:.10}", cand.objective);
                start_objectives.push(Some(cand.objective));
                if best.as_ref().is_none_or(|b| cand.objective > b.objective) {
                    best = Some(cand);
                }
            }
            Err(e) => {
                debug!("start {i} failed: {e}");
                start_objectives.push(None);
                last_err = Some(e);
            }
        }
    }
    let best = match best {
        Some(b) => b,
        None => return Err(last_err.unwrap_or_else(|| Error::NonConvergence("no start converged".into()))),
    };
    let a = ev.aggregate(&best.c)?;
    let subsidies = ev.subsidies(&best.c);
    Ok(TargetingReport {
        criterion: problem.criterion,
        flat: is_flat(&a, best.multiplier, &best.c, realised.lower, realised.upper),
        at_bound: at_bound(&best.c, realised.lower, realised.upper),
        nodes: node_reports(&problem.income, &subsidies, &a.nodes, best.multiplier),
        schedule: realised.schedule(best.c.iter().copied().collect(), &problem.income),
        objective: best.objective,
        budget: problem.budget,
        budget_residual: best.residual,
        multiplier: best.multiplier,
        projected_gradient: best.projected_gradient,
        start_objectives,
    })
}

/// Minimises the posterior-average loss
/// `(1/D) Σ_d [−B_d(σ) + c (spending_d(σ) − M)²]` over the schedule space.
/// All draws share the problem's income distribution; the budget rule is
/// replaced by the penalty.
pub fn bayes_optimal_schedule<M: ChoiceProbabilities>(
    draws: &[M],
    problem: &TargetingProblem,
    penalty_weight: f64,
    cfg: &SolverConfig,
) -> Result<TargetingReport> {
    if draws.is_empty() {
        return Err(Error::invalid("posterior needs at least one draw"));
    }
    if !(penalty_weight.is_finite() && penalty_weight >= 0.0) {
        return Err(Error::invalid(format!("penalty must be non-negative, got {penalty_weight}")));
    }
    let realised = validate(problem)?;
    let evs: Vec<Evaluator<'_, M>> = draws
        .iter()
        .map(|m| Evaluator {
            model: m,
            criterion: problem.criterion,
            base_price: problem.base_price,
            income: &problem.income,
            welfare: &problem.welfare,
            realised: &realised,
        })
        .collect();
    let dn = draws.len() as f64;
    let budget = problem.budget;
    let full = |x: &DVector<f64>| -> Result<Local> {
        let d = x.len();
        let mut loc = Local { value: 0.0, grad: DVector::zeros(d), hess: DMatrix::zeros(d, d) };
        for ev in &evs {
            let a = ev.aggregate(x)?;
            let r = a.spending - budget;
            loc.value += (-a.benefit + penalty_weight * r * r) / dn;
            loc.grad += (-&a.d_benefit + &a.d_spending * (2.0 * penalty_weight * r)) / dn;
            loc.hess += (-&a.h_benefit
                + &a.h_spending * (2.0 * penalty_weight * r)
                + &a.d_spending * a.d_spending.transpose() * (2.0 * penalty_weight))
                / dn;
        }
        Ok(loc)
    };
    let value = |x: &DVector<f64>| -> Result<f64> {
        let mut v = 0.0;
        for ev in &evs {
            let (b, g) = ev.values(x)?;
            v += (-b + penalty_weight * (g - budget).powi(2)) / dn;
        }
        Ok(v)
    };
    let uniform = shift_to_budget(&draws[0], problem, &vec![0.0; realised.dim()]).ok();
    let starts = starting_points(&realised, uniform, cfg);
    let mut best: Option<(DVector<f64>, f64, f64)> = None;
    let mut start_objectives = Vec::new();
    for s in starts {
        match minimise_box(
            full,
            value,
            s,
            realised.lower,
            realised.upper,
            cfg.stationarity_tolerance,
            cfg.max_inner * 5,
        ) {
            Ok(out) if out.converged => {
                start_objectives.push(Some(-out.local.value));
                if best.as_ref().is_none_or(|b| out.local.value < b.1) {
                    best = Some((out.x, out.local.value, out.projected_gradient));
                }
            }
            Ok(out) => {
                debug!("bayes start stalled at projected gradient {:.3e}", out.projected_gradient);
                start_objectives.push(None);
            }
            Err(e) => {
                debug!("bayes start failed: {e}");
                start_objectives.push(None);
            }
        }
    }
    let (c, _, pg) = best.ok_or_else(|| Error::NonConvergence("no Bayesian start converged".into()))?;
    let mut objective = 0.0;
    let mut residual = 0.0;
    let subsidies = evs[0].subsidies(&c);
    let mut nodes = node_reports(&problem.income, &subsidies, &vec![NodeValues::default(); subsidies.len()], 0.0);
    for ev in &evs {
        let a = ev.aggregate(&c)?;
        let r = a.spending - budget;
        objective += a.benefit / dn;
        residual += r / dn;
        for (n, v) in nodes.iter_mut().zip(&a.nodes) {
            n.benefit += v.benefit / dn;
            n.cost += v.cost / dn;
            n.benefit_slope += v.benefit_slope / dn;
            n.cost_slope += v.cost_slope / dn;
            n.foc_residual += (v.benefit_slope - 2.0 * penalty_weight * r * v.cost_slope) / dn;
        }
    }
    Ok(TargetingReport {
        criterion: problem.criterion,
        at_bound: at_bound(&c, realised.lower, realised.upper),
        flat: false,
        schedule: realised.schedule(c.iter().copied().collect(), &problem.income),
        objective,
        budget,
        budget_residual: residual,
        multiplier: 2.0 * penalty_weight * residual,
        projected_gradient: pg,
        start_objectives,
        nodes,
    })
}

/// Second-order and tangency diagnostics at a two-point solution.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SocReport {
    /// Determinant of the bordered Hessian of the Lagrangian.
    pub bordered_determinant: f64,
    pub determinant_positive: bool,
    /// `B''/B' < C''/C'` at each income.
    pub ratio_conditions: Vec<bool>,
    /// `B'/C'` at each income; equal at an interior optimum.
    pub tangency: Vec<f64>,
    pub tangency_gap: f64,
    /// No curvature to sign: the determinant is numerically zero.
    pub inconclusive: bool,
}

/// Bordered-Hessian and ratio conditions for a two-point income distribution
/// at subsidies `(σ_1, σ_2)`.
pub fn soc_check<M: ChoiceProbabilities + ?Sized>(
    model: &M,
    problem: &TargetingProblem,
    subsidies: [f64; 2],
) -> Result<SocReport> {
    if problem.income.len() != 2 {
        return Err(Error::invalid(format!(
            "second-order check needs a two-point income distribution, got {} points",
            problem.income.len()
        )));
    }
    problem.criterion.validate()?;
    let mut v = Vec::with_capacity(2);
    for (&y, &s) in problem.income.support().iter().zip(&subsidies) {
        v.push(node_values(model, problem.criterion, problem.base_price, y, s, &problem.welfare, true)?);
    }
    let pi = problem.income.weights();
    let tangency: Vec<f64> = v.iter().map(|n| n.benefit_slope / n.cost_slope).collect();
    let lambda = 0.5 * (tangency[0] + tangency[1]);
    let l11 = pi[0] * (v[0].benefit_curvature - lambda * v[0].cost_curvature);
    let l22 = pi[1] * (v[1].benefit_curvature - lambda * v[1].cost_curvature);
    let g1 = pi[0] * v[0].cost_slope;
    let g2 = pi[1] * v[1].cost_slope;
    let det = -g1 * g1 * l22 - g2 * g2 * l11;
    let scale = (g1 * g1 + g2 * g2) * (v[0].benefit_slope.abs() + v[1].benefit_slope.abs()).max(1e-12);
    let inconclusive = det.abs() <= 1e-6 * scale;
    Ok(SocReport {
        bordered_determinant: det,
        determinant_positive: det > 0.0 && !inconclusive,
        ratio_conditions: v
            .iter()
            .map(|n| n.benefit_curvature / n.benefit_slope < n.cost_curvature / n.cost_slope)
            .collect(),
        tangency_gap: (tangency[0] - tangency[1]).abs(),
        tangency,
        inconclusive,
    })
}
