//! Nonparametric bounds on the welfare CDF from finitely many observed
//! demand points.
//!
//! With strictly increasing utilities, an observation `(r, z, q_0)` with
//! `z − r_j ≥ y − p_j` for all `j` and `z ≤ c` bounds `Pr[W ≤ c]` from below;
//! the reversed inequalities with `z ≥ c` bound it from above. Inputs are
//! treated as exact population probabilities.

use std::cmp::Ordering;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::choice::{check_budget, eval_choice_prob, BudgetPoint, ChoiceProbabilities};
use crate::error::{Error, Result};

/// Slack on feasibility comparisons.
pub const FEASIBILITY_SLACK: f64 = 1e-12;

/// Observed outside share `q_0(r, z)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DemandObservation {
    pub prices: Vec<f64>,
    pub income: f64,
    pub q0: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ObservedDemandSet {
    n_inside: usize,
    entries: Vec<DemandObservation>,
}

/// Bounds on `Pr[W ≤ c]`. A flag is `false` when no observation was feasible
/// for that side and the bound is the trivial 0 or 1.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CdfBounds {
    pub c: f64,
    pub lower: f64,
    pub upper: f64,
    pub lower_informative: bool,
    pub upper_informative: bool,
}

fn cmp_entries(a: &DemandObservation, b: &DemandObservation) -> Ordering {
    a.prices
        .iter()
        .zip(&b.prices)
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or(Ordering::Equal)
        .then(a.income.total_cmp(&b.income))
}

impl ObservedDemandSet {
    /// Validates and stores the observations. `n_inside` fixes the price
    /// dimension so that an empty set still knows it.
    pub fn new(n_inside: usize, mut entries: Vec<DemandObservation>) -> Result<Self> {
        if n_inside == 0 {
            return Err(Error::invalid("observed demand set needs at least one inside price"));
        }
        for (i, e) in entries.iter().enumerate() {
            if e.prices.len() != n_inside {
                return Err(Error::Data(format!("observation {i} has {} prices, expected {n_inside}", e.prices.len())));
            }
            if e.prices.iter().any(|p| !p.is_finite()) || !e.income.is_finite() {
                return Err(Error::Data(format!("observation {i} has a non-finite price or income")));
            }
            check_budget(&e.prices, e.income).map_err(|err| Error::Data(format!("observation {i}: {err}")))?;
            if !(0.0..=1.0).contains(&e.q0) {
                return Err(Error::Data(format!("observation {i} has q0 = {} outside [0, 1]", e.q0)));
            }
        }
        entries.sort_by(cmp_entries);
        if let Some(w) = entries.windows(2).find(|w| cmp_entries(&w[0], &w[1]).is_eq()) {
            return Err(Error::Data(format!(
                "duplicate observation at prices {:?}, income {}",
                w[0].prices, w[0].income
            )));
        }
        Ok(Self { n_inside, entries })
    }

    pub fn empty(n_inside: usize) -> Result<Self> {
        Self::new(n_inside, Vec::new())
    }

    /// Evaluates `q_0` of a model at the given budget points.
    pub fn from_model<M: ChoiceProbabilities + ?Sized>(model: &M, points: &[BudgetPoint]) -> Result<Self> {
        let entries = points
            .iter()
            .map(|b| {
                Ok(DemandObservation { prices: b.prices.clone(), income: b.income, q0: eval_choice_prob(model, 0, b)? })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(model.n_inside(), entries)
    }

    pub fn n_inside(&self) -> usize {
        self.n_inside
    }

    pub fn entries(&self) -> &[DemandObservation] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// The observations whose positions (in sorted order) satisfy `keep`.
    pub fn filter(&self, mut keep: impl FnMut(usize, &DemandObservation) -> bool) -> Self {
        Self {
            n_inside: self.n_inside,
            entries: self.entries.iter().enumerate().filter(|(i, e)| keep(*i, e)).map(|(_, e)| e.clone()).collect(),
        }
    }
}

/// `LB ≤ Pr[W(p, y) ≤ c] ≤ UB` from the observations. Below `c = y` the CDF
/// is exactly zero and both bounds are 0.
pub fn multinomial_cdf_bounds(set: &ObservedDemandSet, c: f64, point: &BudgetPoint) -> Result<CdfBounds> {
    point.validate()?;
    if point.prices.len() != set.n_inside {
        return Err(Error::invalid(format!(
            "{} prices given for a set with {} inside alternatives",
            point.prices.len(),
            set.n_inside
        )));
    }
    if c.is_nan() {
        return Err(Error::NonFinite("evaluation point c".into()));
    }
    if c < point.income {
        return Ok(CdfBounds { c, lower: 0.0, upper: 0.0, lower_informative: true, upper_informative: true });
    }
    let numeraire: Vec<f64> = point.prices.iter().map(|p| point.income - p).collect();
    let mut lower: Option<f64> = None;
    let mut upper: Option<f64> = None;
    for e in &set.entries {
        let gaps = e.prices.iter().zip(&numeraire).map(|(r, n)| e.income - r - n);
        let (mut all_ge, mut all_le) = (true, true);
        for g in gaps {
            all_ge &= g >= -FEASIBILITY_SLACK;
            all_le &= g <= FEASIBILITY_SLACK;
        }
        if all_ge && e.income <= c + FEASIBILITY_SLACK {
            lower = Some(lower.map_or(e.q0, |l| l.max(e.q0)));
        }
        if all_le && e.income >= c - FEASIBILITY_SLACK {
            upper = Some(upper.map_or(e.q0, |u| u.min(e.q0)));
        }
    }
    Ok(CdfBounds {
        c,
        lower: lower.unwrap_or(0.0),
        upper: upper.unwrap_or(1.0),
        lower_informative: lower.is_some(),
        upper_informative: upper.is_some(),
    })
}

/// Bounds at each `c`, evaluated in parallel.
pub fn multinomial_cdf_bounds_grid(set: &ObservedDemandSet, cs: &[f64], point: &BudgetPoint) -> Result<Vec<CdfBounds>> {
    cs.par_iter().map(|&c| multinomial_cdf_bounds(set, c, point)).collect()
}

/// Observations of an ordered two-unit good where two units cost exactly
/// twice one unit.
#[derive(Clone, Debug, PartialEq)]
pub struct OrderedDemandSet {
    inner: ObservedDemandSet,
}

impl OrderedDemandSet {
    /// Rejects any entry whose second price is not twice the first.
    pub fn new(entries: Vec<DemandObservation>) -> Result<Self> {
        for (i, e) in entries.iter().enumerate() {
            if e.prices.len() != 2 {
                return Err(Error::Data(format!("ordered observation {i} needs 2 prices, got {}", e.prices.len())));
            }
            let (p1, p2) = (e.prices[0], e.prices[1]);
            if (p2 - 2.0 * p1).abs() > FEASIBILITY_SLACK * p1.abs().max(1.0) {
                return Err(Error::Data(format!(
                    "ordered observation {i} has prices ({p1}, {p2}); the second must be twice the first"
                )));
            }
        }
        Ok(Self { inner: ObservedDemandSet::new(2, entries)? })
    }

    /// `q_0(p̃, 2p̃, ỹ)` of a model at `(p̃, ỹ)` pairs.
    pub fn from_model<M: ChoiceProbabilities + ?Sized>(model: &M, unit_prices_incomes: &[(f64, f64)]) -> Result<Self> {
        let points = unit_prices_incomes
            .iter()
            .map(|&(p, y)| BudgetPoint::new(vec![p, 2.0 * p], y))
            .collect::<Result<Vec<_>>>()?;
        let set = ObservedDemandSet::from_model(model, &points)?;
        Self::new(set.entries)
    }

    pub fn as_observed(&self) -> &ObservedDemandSet {
        &self.inner
    }

    pub fn len(&self) -> usize {
        self.inner.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inner.is_empty()
    }

    pub fn filter(&self, keep: impl FnMut(usize, &DemandObservation) -> bool) -> Self {
        Self { inner: self.inner.filter(keep) }
    }
}

/// `L(c) ≤ Pr[W(p, 2p, y) ≤ c] ≤ H(c)` for unit price `p`.
pub fn ordered_cdf_bounds(set: &OrderedDemandSet, c: f64, p: f64, y: f64) -> Result<CdfBounds> {
    multinomial_cdf_bounds(&set.inner, c, &BudgetPoint::new(vec![p, 2.0 * p], y)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn obs(prices: Vec<f64>, income: f64, q0: f64) -> DemandObservation {
        DemandObservation { prices, income, q0 }
    }

    #[test]
    fn empty_set_is_vacuous() {
        let s = ObservedDemandSet::empty(1).unwrap();
        let b = multinomial_cdf_bounds(&s, 6.0, &BudgetPoint::single(1.0, 5.0).unwrap()).unwrap();
        assert_eq!((b.lower, b.upper), (0.0, 1.0));
        assert!(!b.lower_informative && !b.upper_informative);
        let o = OrderedDemandSet::new(vec![]).unwrap();
        let b = ordered_cdf_bounds(&o, 6.0, 1.0, 5.0).unwrap();
        assert_eq!((b.lower, b.upper), (0.0, 1.0));
    }

    #[test]
    fn exact_point_pins_both_bounds() {
        let m = fixtures::quasilinear_logit();
        let (p, y, c) = (1.0, 5.0, 6.5);
        let at = BudgetPoint::single(c - y + p, c).unwrap();
        let s = ObservedDemandSet::from_model(&m, std::slice::from_ref(&at)).unwrap();
        let b = multinomial_cdf_bounds(&s, c, &BudgetPoint::single(p, y).unwrap()).unwrap();
        let q0 = eval_choice_prob(&m, 0, &at).unwrap();
        assert_eq!(b.lower, q0);
        assert_eq!(b.upper, q0);
    }

    #[test]
    fn below_income_cdf_is_zero() {
        let s = ObservedDemandSet::new(1, vec![obs(vec![1.0], 2.0, 0.3)]).unwrap();
        let b = multinomial_cdf_bounds(&s, 4.0, &BudgetPoint::single(1.0, 5.0).unwrap()).unwrap();
        assert_eq!((b.lower, b.upper), (0.0, 0.0));
    }

    #[test]
    fn own_point_is_feasible_for_ordered_lower_bound() {
        let m = fixtures::multinomial();
        let s = OrderedDemandSet::from_model(&m, &[(1.0, 5.0), (0.5, 3.0)]).unwrap();
        let q0 = m.choice_probability(0, &[1.0, 2.0], 5.0).unwrap();
        let b = ordered_cdf_bounds(&s, 5.0, 1.0, 5.0).unwrap();
        assert!(b.lower >= q0);
    }

    #[test]
    fn rejects_bad_observations() {
        assert!(ObservedDemandSet::new(1, vec![obs(vec![1.0], 2.0, 1.5)]).is_err());
        assert!(ObservedDemandSet::new(1, vec![obs(vec![1.0, 2.0], 2.0, 0.5)]).is_err());
        assert!(ObservedDemandSet::new(1, vec![obs(vec![1.0], 2.0, 0.5), obs(vec![1.0], 2.0, 0.4)]).is_err());
        assert!(OrderedDemandSet::new(vec![obs(vec![1.0, 2.1], 3.0, 0.5)]).is_err());
        assert!(OrderedDemandSet::new(vec![obs(vec![1.0, 2.0], 3.0, 0.5)]).is_ok());
    }
}
