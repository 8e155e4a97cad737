//! Brute-force simulation of heterogeneous populations.
//!
//! Agent-level indirect utility is computed straight from utilities, without
//! any of the identification formulas, so it can serve as ground truth for
//! them.

mod dataset;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::choice::{check_budget, BudgetPoint};
use crate::error::{Error, Result};

pub use dataset::{simulate_dataset, DatasetDesign, SimulatedDataset};

/// Agent-level utilities `U_j(n, η)`, strictly increasing in the numeraire `n`.
pub trait RandomUtility: Send + Sync {
    fn n_inside(&self) -> usize;

    /// Length of the heterogeneity vector `η`.
    fn eta_dim(&self) -> usize;

    fn sample_eta(&self, rng: &mut dyn RngCore, eta: &mut [f64]);

    /// `U_j(n, η)`; `-inf` when `n` is outside the utility's domain.
    fn utility(&self, j: usize, numeraire: f64, eta: &[f64]) -> f64;

    /// Closed-form `U_0^{-1}(u, η)` when available.
    fn outside_inverse(&self, _u: f64, _eta: &[f64]) -> Option<f64> {
        None
    }
}

/// How `U_0^{-1}` is evaluated.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Inversion {
    /// Bisection on the numeraire; independent of any model algebra.
    #[default]
    Bisection,
    /// Closed form when the model supplies one, bisection otherwise.
    ClosedForm,
}

const INVERSE_TOL: f64 = 1e-10;
const MAX_DOUBLINGS: usize = 60;

/// Smallest `n ≥ lower` with `U_0(n, η) = u`, given `U_0(lower, η) < u`.
pub fn invert_outside_utility(
    model: &dyn RandomUtility,
    u: f64,
    lower: f64,
    eta: &[f64],
    method: Inversion,
) -> Result<f64> {
    if method == Inversion::ClosedForm {
        if let Some(n) = model.outside_inverse(u, eta) {
            return Ok(n);
        }
    }
    let u0 = |n: f64| model.utility(0, n, eta);
    let mut lo = lower;
    let mut width = 10.0 * lower.abs().max(1.0);
    let mut hi = lower + width;
    let mut doublings = 0;
    while u0(hi) < u {
        lo = hi;
        width *= 2.0;
        hi = lower + width;
        doublings += 1;
        if doublings > MAX_DOUBLINGS || !hi.is_finite() {
            return Err(Error::Bracket(format!("outside utility never reaches {u} above numeraire {lower}")));
        }
    }
    while hi - lo > INVERSE_TOL * lo.abs().max(1.0) {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let v = u0(mid);
        if v.is_nan() {
            return Err(Error::NonFinite(format!("outside utility at numeraire {mid}")));
        }
        if v < u {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// `W(p, y, η) = max{y, U_0^{-1}(U_j(y − p_j, η), η)}` and the maximizing
/// alternative (ties resolved toward the lower index, the outside option first).
pub fn agent_welfare(
    model: &dyn RandomUtility,
    prices: &[f64],
    income: f64,
    eta: &[f64],
    method: Inversion,
) -> Result<(f64, usize)> {
    let base = model.utility(0, income, eta);
    if !base.is_finite() {
        return Err(Error::NonFinite(format!("outside utility at income {income}")));
    }
    let mut best_u = base;
    let mut best_j = 0;
    for (j, p) in prices.iter().enumerate() {
        if *p == f64::INFINITY {
            continue;
        }
        let u = model.utility(j + 1, income - p, eta);
        if u.is_nan() {
            return Err(Error::NonFinite(format!("utility of alternative {}", j + 1)));
        }
        if u > best_u {
            best_u = u;
            best_j = j + 1;
        }
    }
    if best_j == 0 {
        return Ok((income, 0));
    }
    let w = invert_outside_utility(model, best_u, income, eta, method)?;
    Ok((w.max(income), best_j))
}

/// A simulated population at one budget point.
#[derive(Clone, Debug)]
pub struct SimulatedPopulation {
    pub seed: u64,
    pub point: BudgetPoint,
    pub eta_dim: usize,
    /// Flattened `η` draws, `eta_dim` per agent.
    pub eta: Vec<f64>,
    pub chosen: Vec<usize>,
    pub welfare: Vec<f64>,
}

impl SimulatedPopulation {
    pub fn len(&self) -> usize {
        self.welfare.len()
    }

    pub fn is_empty(&self) -> bool {
        self.welfare.is_empty()
    }

    pub fn eta(&self, agent: usize) -> &[f64] {
        &self.eta[agent * self.eta_dim..(agent + 1) * self.eta_dim]
    }

    /// Share of agents choosing each alternative.
    pub fn shares(&self, n_inside: usize) -> Vec<f64> {
        let mut counts = vec![0usize; n_inside + 1];
        for &c in &self.chosen {
            counts[c] += 1;
        }
        counts.iter().map(|c| *c as f64 / self.len() as f64).collect()
    }

    pub fn sorted_welfare(&self) -> Vec<f64> {
        let mut w = self.welfare.clone();
        w.sort_by(f64::total_cmp);
        w
    }
}

/// Draws `η` for agents `0..n`; agent `i` uses its own stream `i` of the seed,
/// so populations of different sizes share their common prefix.
pub fn draw_heterogeneity(model: &dyn RandomUtility, n: usize, seed: u64) -> Vec<f64> {
    let dim = model.eta_dim();
    let mut eta = vec![0.0; n * dim];
    if dim == 0 {
        return eta;
    }
    eta.par_chunks_mut(dim).enumerate().for_each(|(i, e)| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(i as u64);
        model.sample_eta(&mut rng, e);
    });
    eta
}

/// Simulates `n` agents at `point` and computes each agent's `W` and choice.
pub fn simulate_welfare(
    model: &dyn RandomUtility,
    point: &BudgetPoint,
    n: usize,
    seed: u64,
) -> Result<SimulatedPopulation> {
    simulate_welfare_with(model, point, n, seed, Inversion::Bisection)
}

pub fn simulate_welfare_with(
    model: &dyn RandomUtility,
    point: &BudgetPoint,
    n: usize,
    seed: u64,
    method: Inversion,
) -> Result<SimulatedPopulation> {
    if n == 0 {
        return Err(Error::invalid("population size must be at least one"));
    }
    if point.prices.len() != model.n_inside() {
        return Err(Error::invalid("price vector length does not match the model"));
    }
    point.validate()?;
    let eta = draw_heterogeneity(model, n, seed);
    let results = welfare_for_draws(model, &eta, &point.prices, point.income, method)?;
    let (welfare, chosen) = results.into_iter().unzip();
    Ok(SimulatedPopulation { seed, point: point.clone(), eta_dim: model.eta_dim(), eta, chosen, welfare })
}

/// `W` and choices for given draws at another budget point (common random numbers).
pub fn welfare_for_draws(
    model: &dyn RandomUtility,
    eta: &[f64],
    prices: &[f64],
    income: f64,
    method: Inversion,
) -> Result<Vec<(f64, usize)>> {
    check_budget(prices, income)?;
    let dim = model.eta_dim();
    if dim == 0 {
        return Err(Error::invalid("model has no heterogeneity to simulate"));
    }
    let n = eta.len() / dim;
    (0..n).into_par_iter().map(|i| agent_welfare(model, prices, income, &eta[i * dim..(i + 1) * dim], method)).collect()
}

/// Compensating variation: the income change `c` with
/// `W(p_to, y + c, η) = W(p_from, y, η)`. Prices may be `+inf`.
pub fn agent_cv(
    model: &dyn RandomUtility,
    income: f64,
    p_from: &[f64],
    p_to: &[f64],
    eta: &[f64],
    method: Inversion,
) -> Result<f64> {
    if p_from.len() != model.n_inside() || p_to.len() != model.n_inside() {
        return Err(Error::invalid("price vector length does not match the model"));
    }
    check_budget(p_from, income)?;
    check_budget(p_to, income)?;
    if p_from == p_to {
        return Ok(0.0);
    }
    let (target, _) = agent_welfare(model, p_from, income, eta, method)?;
    let w_to = |c: f64| agent_welfare(model, p_to, income + c, eta, method).map(|r| r.0);
    let mut lo = -income * (1.0 - 1e-9);
    // W(p, y + c) >= y + c, so c = target − y is an upper bracket.
    let mut hi = target - income;
    if w_to(lo)? > target {
        return Err(Error::Bracket(format!(
            "compensating variation below {lo}: welfare at the new prices exceeds the target even at vanishing income"
        )));
    }
    let tol = 1e-12 * target.abs().max(1.0);
    for _ in 0..200 {
        if hi - lo <= tol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if w_to(mid)? < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Rigorous upper bound on `sup_x |F_n(x) − F(x)|` for the empirical CDF of
/// `sorted` against a non-decreasing `F`, evaluating `F` only at every
/// `stride`-th order statistic. `cdf_left(x)` must return `F(x−)`.
///
/// Between evaluated points both CDFs are monotone, so the gap is bounded by
/// the larger cross difference at the interval ends.
pub fn cdf_distance_bound<F, G>(sorted: &[f64], stride: usize, cdf: F, cdf_left: G) -> Result<f64>
where
    F: Fn(f64) -> Result<f64> + Sync,
    G: Fn(f64) -> Result<f64> + Sync,
{
    if sorted.is_empty() {
        return Err(Error::invalid("empty sample"));
    }
    let n = sorted.len() as f64;
    let stride = stride.max(1);
    let mut points: Vec<f64> = sorted.iter().step_by(stride).copied().collect();
    points.push(*sorted.last().expect("non-empty"));
    points.dedup();
    let evaluated: Vec<(f64, f64, f64, f64)> = points
        .par_iter()
        .map(|&v| {
            let below = sorted.partition_point(|x| *x < v) as f64 / n;
            let upto = sorted.partition_point(|x| *x <= v) as f64 / n;
            Ok((cdf(v)?, cdf_left(v)?, below, upto))
        })
        .collect::<Result<_>>()?;
    let mut bound = evaluated[0].1;
    for (k, &(f, f_left, below, upto)) in evaluated.iter().enumerate() {
        bound = bound.max((upto - f).abs()).max((below - f_left).abs());
        if let Some(&(_, next_left, next_below, _)) = evaluated.get(k + 1) {
            bound = bound.max(next_below - f).max(next_left - upto);
        }
    }
    let last = evaluated.last().expect("non-empty");
    Ok(bound.max(1.0 - last.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::choice::{QuasilinearModel, SyntheticSpec};
    use crate::distributions::ScalarDistribution;

    #[test]
    fn degenerate_quasilinear_population_has_no_dispersion() {
        let m = QuasilinearModel::single(ScalarDistribution::Degenerate { value: 3.0 }).unwrap();
        let point = BudgetPoint::single(1.0, 5.0).unwrap();
        let pop = simulate_welfare(&m, &point, 1000, 1).unwrap();
        for w in &pop.welfare {
            assert!((w - 7.0).abs() < 1e-9);
        }
        assert!(pop.chosen.iter().all(|c| *c == 1));
    }

    #[test]
    fn welfare_never_below_income_and_choice_attains_max() {
        let m = SyntheticSpec::logit_quasilinear(0.3, 1.0).build().unwrap();
        let point = BudgetPoint::single(0.5, 2.0).unwrap();
        let pop = simulate_welfare(&m, &point, 5000, 3).unwrap();
        for i in 0..pop.len() {
            assert!(pop.welfare[i] >= 2.0);
            let eta = pop.eta(i);
            let u0 = m.utility(0, 2.0, eta);
            let u1 = m.utility(1, 1.5, eta);
            assert_eq!(pop.chosen[i], usize::from(u1 > u0));
        }
    }

    #[test]
    fn bisection_agrees_with_closed_form() {
        let m = SyntheticSpec::logit_quasilinear(0.3, 1.0).build().unwrap();
        let point = BudgetPoint::single(0.2, 4.0).unwrap();
        let a = simulate_welfare_with(&m, &point, 2000, 5, Inversion::Bisection).unwrap();
        let b = simulate_welfare_with(&m, &point, 2000, 5, Inversion::ClosedForm).unwrap();
        for (x, y) in a.welfare.iter().zip(&b.welfare) {
            assert!((x - y).abs() < 1e-9);
        }
    }

    #[test]
    fn simulation_is_reproducible_and_prefix_stable() {
        let m = SyntheticSpec::probit_quasilinear(1.0).build().unwrap();
        let point = BudgetPoint::single(0.2, 4.0).unwrap();
        let a = simulate_welfare(&m, &point, 300, 11).unwrap();
        let b = simulate_welfare(&m, &point, 500, 11).unwrap();
        assert_eq!(a.welfare[..], b.welfare[..300]);
    }

    #[test]
    fn cv_is_zero_for_identical_prices_and_removal_matches_welfare() {
        let m = SyntheticSpec::logit_quasilinear(0.3, 1.0).build().unwrap();
        let point = BudgetPoint::single(0.4, 3.0).unwrap();
        let pop = simulate_welfare(&m, &point, 200, 2).unwrap();
        for i in 0..pop.len() {
            let eta = pop.eta(i);
            assert_eq!(agent_cv(&m, 3.0, &[0.4], &[0.4], eta, Inversion::Bisection).unwrap(), 0.0);
            let cv = agent_cv(&m, 3.0, &[0.4], &[f64::INFINITY], eta, Inversion::Bisection).unwrap();
            assert!((3.0 + cv - pop.welfare[i]).abs() < 1e-8);
        }
    }

    #[test]
    fn distance_bound_is_exact_for_stride_one_and_conservative_otherwise() {
        let sample: Vec<f64> = (1..=1000).map(|i| i as f64 / 1000.0).collect();
        let f = |x: f64| Ok(x.clamp(0.0, 1.0));
        let exact = cdf_distance_bound(&sample, 1, f, f).unwrap();
        assert!((exact - 1e-3).abs() < 1e-12);
        let coarse = cdf_distance_bound(&sample, 50, f, f).unwrap();
        assert!(coarse >= exact && coarse <= 0.06);
        let shifted = |x: f64| Ok((x - 0.1).clamp(0.0, 1.0));
        assert!(cdf_distance_bound(&sample, 37, shifted, shifted).unwrap() >= 0.1);
    }
}
