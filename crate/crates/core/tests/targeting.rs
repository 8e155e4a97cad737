use dcwelfare::binary::purchase_probability;
use dcwelfare::choice::ChoiceProbabilities;
use dcwelfare::choice::SplineProbitModel;
use dcwelfare::fixtures;
use dcwelfare::targeting::*;
use dcwelfare::welfare::{Truncation, WelfareConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn two_point(model_budget: f64) -> TargetingProblem {
    TargetingProblem {
        base_price: 2.0,
        criterion: Criterion::Ate,
        income: IncomeDistribution::discrete(vec![2.0, 8.0], vec![0.5, 0.5]).unwrap(),
        budget: model_budget,
        budget_rule: BudgetRule::Equality,
        space: ScheduleSpace::Pointwise { lower: -1.5, upper: 1.5 },
        welfare: WelfareConfig::new(Truncation::Fixed(40.0)),
    }
}

fn semi_elasticity<M: ChoiceProbabilities>(m: &M, p: f64, y: f64) -> f64 {
    -m.price_derivative(1, 1, &[p], y).unwrap() / purchase_probability(m, p, y).unwrap()
}

#[test]
fn two_point_ate_first_order_identity() {
    let m = fixtures::price_sensitivity_gradient();
    let prob = two_point(0.3);
    let r = optimal_schedule(&m, &prob, &SolverConfig::default()).unwrap();
    let s = r.schedule.parameters().to_vec();
    let e1 = semi_elasticity(&m, 2.0 - s[0], 2.0);
    let e2 = semi_elasticity(&m, 2.0 - s[1], 8.0);
    println!("{s:?} eta {e1} {e2} report {r:?}");
    assert!(((s[1] - s[0]) - (1.0 / e1 - 1.0 / e2)).abs() < 1e-4);
    assert!(r.budget_residual.abs() < 1e-4);
    let soc = soc_check(&m, &prob, [s[0], s[1]]).unwrap();
    println!("{soc:?}");
    assert!(soc.tangency_gap < 1e-4);
}

fn grid_problem(criterion: Criterion, space: ScheduleSpace, budget: f64) -> TargetingProblem {
    let ys: Vec<f64> = (0..12).map(|i| 1.0 + 9.0 * i as f64 / 11.0).collect();
    TargetingProblem {
        base_price: 2.0,
        criterion,
        income: IncomeDistribution::empirical(&ys).unwrap(),
        budget,
        budget_rule: BudgetRule::Equality,
        space,
        welfare: WelfareConfig::new(Truncation::Fixed(40.0)),
    }
}

#[test]
fn ate_schedule_falls_with_income_when_sensitivity_does() {
    let m = fixtures::price_sensitivity_gradient();
    for budget in [0.0, 0.2] {
        let prob = grid_problem(Criterion::Ate, ScheduleSpace::Pointwise { lower: -1.5, upper: 1.5 }, budget);
        let r = optimal_schedule(&m, &prob, &SolverConfig::default()).unwrap();
        let s = r.schedule.parameters();
        println!("{budget}: {s:?}");
        assert!(s.windows(2).all(|w| w[1] <= w[0]), "{s:?}");
        assert!(r.budget_residual.abs() < 1e-4);
    }
}

#[test]
fn criteria_give_distinct_schedules() {
    let m = fixtures::price_sensitivity_gradient();
    let mut out = Vec::new();
    for c in [Criterion::Ate, Criterion::Acv, Criterion::Casw { epsilon: 0.0 }] {
        let prob = grid_problem(c, ScheduleSpace::spline(-1.5, 1.5), 0.0);
        let r = optimal_schedule(&m, &prob, &SolverConfig::default()).unwrap();
        println!("{c:?} {:?} pg {}", r.schedule.parameters(), r.projected_gradient);
        out.push(r.schedule);
    }
    for i in 0..3 {
        for j in i + 1..3 {
            let d = (0..50)
                .map(|k| 1.0 + 9.0 * k as f64 / 49.0)
                .map(|y| (out[i].eval(y) - out[j].eval(y)).abs())
                .fold(0.0, f64::max);
            assert!(d > 1e-4, "{i} {j}: {d}");
        }
    }
}

#[test]
fn program_cost_closed_forms() {
    let m = fixtures::quasilinear_logit();
    let inc = IncomeDistribution::discrete(vec![2.0, 6.0], vec![0.5, 0.5]).unwrap();
    let zero = SubsidySchedule::constant(0.0);
    assert_eq!(program_cost(&m, 1.0, &zero, &inc).unwrap(), 0.0);
    // q_1(0, y) = 1/2 at both incomes
    let one = SubsidySchedule::constant(1.0);
    assert!((program_cost(&m, 1.0, &one, &inc).unwrap() - 0.5).abs() < 1e-15);
    // a tax on one income and an equal subsidy on the other at prices
    // symmetric around zero index: q_1(1 - s) s - s q_1(1 + s) with
    // q_1(p) = Λ(1 - p) gives zero
    let shifted = dcwelfare::choice::QuasilinearModel::logit(1.0, 1.0).unwrap();
    let anti = SubsidySchedule::Pointwise { incomes: vec![2.0, 6.0], values: vec![0.4, -0.4], lower: -1.0, upper: 1.0 };
    let c = program_cost(&shifted, 1.0, &anti, &inc).unwrap();
    let expect = 0.5 * 0.4 * purchase_probability(&shifted, 0.6, 2.0).unwrap()
        - 0.5 * 0.4 * purchase_probability(&shifted, 1.4, 6.0).unwrap();
    assert!((c - expect).abs() < 1e-15);
    assert!(c.abs() > 0.0);
    assert!(program_cost(&m, 1.0, &SubsidySchedule::constant(1.5), &inc).is_err());
}

#[test]
fn income_invariant_demand_gives_uniform_revenue_neutral_schedule() {
    let m = fixtures::quasilinear_logit();
    let mut prob = grid_problem(Criterion::Ate, ScheduleSpace::Pointwise { lower: -0.9, upper: 0.9 }, 0.0);
    prob.base_price = 1.0;
    let r = optimal_schedule(&m, &prob, &SolverConfig::default()).unwrap();
    assert!(r.schedule.parameters().iter().all(|s| s.abs() < 1e-6), "{:?}", r.schedule);
    assert!(r.objective.abs() < 1e-10);
}

#[test]
fn constant_demand_is_flagged_flat_and_soc_inconclusive() {
    let m = dcwelfare::choice::QuasilinearModel::single(dcwelfare::distributions::ScalarDistribution::Degenerate {
        value: 10.0,
    })
    .unwrap();
    let prob = two_point(0.3);
    let r = optimal_schedule(&m, &prob, &SolverConfig::default()).unwrap();
    assert!(r.flat);
    assert!(r.budget_residual.abs() < 1e-4);
    let s = r.schedule.parameters();
    let soc = soc_check(&m, &prob, [s[0], s[1]]).unwrap();
    assert!(soc.inconclusive);
    assert!(!soc.determinant_positive);
}

#[test]
fn bayes_with_one_draw_and_large_penalty_matches_constrained() {
    let m = fixtures::price_sensitivity_gradient();
    let prob = two_point(0.3);
    let exact = optimal_schedule(&m, &prob, &SolverConfig::default()).unwrap();
    let bayes = bayes_optimal_schedule(std::slice::from_ref(&m), &prob, 1e6, &SolverConfig::default()).unwrap();
    let gap = exact
        .schedule
        .parameters()
        .iter()
        .zip(bayes.schedule.parameters())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    assert!(gap < 1e-3, "{gap}");
}

fn posterior_loss(draws: &[SplineProbitModel], prob: &TargetingProblem, c: f64, s: &SubsidySchedule) -> f64 {
    let mut total = 0.0;
    for m in draws {
        let b =
            prob.income.expect(|y| benefit(m, prob.criterion, prob.base_price, y, s.eval(y), &prob.welfare).unwrap());
        let g = program_cost(m, prob.base_price, s, &prob.income).unwrap() - prob.budget;
        total += -b + c * g * g;
    }
    total / draws.len() as f64
}

#[test]
fn bayes_solution_lies_between_point_mass_solutions() {
    // small perturbation and moderate penalty: the cross-draw variance of
    // spending stays second order
    let lo = fixtures::linear_income_probit(-1.0, 0.45, 0.25, 1.0, 10.0).unwrap();
    let hi = fixtures::linear_income_probit(-1.0, 0.55, 0.25, 1.0, 10.0).unwrap();
    let prob = two_point(0.3);
    let cfg = SolverConfig::default();
    let a = bayes_optimal_schedule(std::slice::from_ref(&lo), &prob, 50.0, &cfg).unwrap();
    let b = bayes_optimal_schedule(std::slice::from_ref(&hi), &prob, 50.0, &cfg).unwrap();
    let both = bayes_optimal_schedule(&[lo.clone(), hi.clone()], &prob, 50.0, &cfg).unwrap();
    for k in 0..2 {
        let (x, y, z) = (a.schedule.parameters()[k], b.schedule.parameters()[k], both.schedule.parameters()[k]);
        assert!(z >= x.min(y) - 1e-9 && z <= x.max(y) + 1e-9, "{k}: {z} not in [{x}, {y}]");
    }
}

#[test]
fn bayes_solution_minimises_posterior_loss() {
    let draws = [
        fixtures::linear_income_probit(-1.0, 0.3, 0.25, 1.0, 10.0).unwrap(),
        fixtures::linear_income_probit(-1.0, 0.7, 0.25, 1.0, 10.0).unwrap(),
    ];
    let prob = two_point(0.3);
    let cfg = SolverConfig::default();
    let c = 1000.0;
    let both = bayes_optimal_schedule(&draws, &prob, c, &cfg).unwrap();
    let best = posterior_loss(&draws, &prob, c, &both.schedule);
    for d in &draws {
        let single = bayes_optimal_schedule(std::slice::from_ref(d), &prob, c, &cfg).unwrap();
        assert!(best <= posterior_loss(&draws, &prob, c, &single.schedule) + 1e-12);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..50 {
        let s = SubsidySchedule::Pointwise {
            incomes: vec![2.0, 8.0],
            values: vec![rng.gen_range(-1.5..1.5), rng.gen_range(-1.5..1.5)],
            lower: -1.5,
            upper: 1.5,
        };
        assert!(best <= posterior_loss(&draws, &prob, c, &s) + 1e-12);
    }
}

#[test]
fn zero_penalty_pushes_to_box() {
    let m = fixtures::price_sensitivity_gradient();
    let r = bayes_optimal_schedule(&[m], &two_point(0.3), 0.0, &SolverConfig::default()).unwrap();
    assert!(r.at_bound);
    assert!(r.schedule.parameters().iter().all(|s| (s - 1.5).abs() < 1e-12));
}

#[test]
fn redistribution_crosses_zero_at_nearby_incomes() {
    let m = fixtures::price_sensitivity_gradient();
    let casw = Criterion::Casw { epsilon: 0.5 };
    let mut crossings = Vec::new();
    for c in [Criterion::Ate, casw] {
        let prob = grid_problem(c, ScheduleSpace::Pointwise { lower: -1.5, upper: 1.5 }, 0.0);
        let r = optimal_schedule(&m, &prob, &SolverConfig::default()).unwrap();
        let d: Vec<(f64, f64)> = prob
            .income
            .support()
            .iter()
            .map(|&y| (y, benefit(&m, casw, 2.0, y, r.schedule.eval(y), &prob.welfare).unwrap()))
            .collect();
        let w = d.windows(2).find(|w| w[0].1 > 0.0 && w[1].1 <= 0.0).expect("sign change");
        let (y0, v0, y1, v1) = (w[0].0, w[0].1, w[1].0, w[1].1);
        crossings.push(y0 + (y1 - y0) * v0 / (v0 - v1));
    }
    assert!((crossings[0] - crossings[1]).abs() < 0.1 * 9.0);
}
