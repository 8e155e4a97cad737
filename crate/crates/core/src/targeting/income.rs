use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Finite income distribution: sorted distinct support points with positive
/// weights summing to one.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "IncomeSpec", into = "IncomeSpec")]
pub struct IncomeDistribution {
    support: Vec<f64>,
    weights: Vec<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct IncomeSpec {
    pub support: Vec<f64>,
    pub weights: Vec<f64>,
}

impl TryFrom<IncomeSpec> for IncomeDistribution {
    type Error = Error;
    fn try_from(s: IncomeSpec) -> Result<Self> {
        Self::discrete(s.support, s.weights)
    }
}

impl From<IncomeDistribution> for IncomeSpec {
    fn from(d: IncomeDistribution) -> Self {
        IncomeSpec { support: d.support, weights: d.weights }
    }
}

impl IncomeDistribution {
    /// Grid `{(y_k, π_k)}`; probabilities must sum to one within `1e-9`.
    pub fn discrete(values: Vec<f64>, probs: Vec<f64>) -> Result<Self> {
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::invalid(format!("income probabilities sum to {total}, not 1")));
        }
        Self::weighted(values, probs)
    }

    /// Equally weighted sample; ties are merged.
    pub fn empirical(sample: &[f64]) -> Result<Self> {
        Self::weighted(sample.to_vec(), vec![1.0; sample.len()])
    }

    /// Sample with positive weights, normalised to sum to one; ties merged.
    pub fn weighted(values: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if values.is_empty() || values.len() != weights.len() {
            return Err(Error::invalid(format!(
                "income distribution needs matching non-empty values and weights ({} vs {})",
                values.len(),
                weights.len()
            )));
        }
        if let Some(y) = values.iter().find(|y| !(y.is_finite() && **y > 0.0)) {
            return Err(Error::invalid(format!("incomes must be positive and finite, got {y}")));
        }
        if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w > 0.0)) {
            return Err(Error::invalid(format!("income weights must be positive, got {w}")));
        }
        let mut pairs: Vec<(f64, f64)> = values.into_iter().zip(weights).collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut support: Vec<f64> = Vec::with_capacity(pairs.len());
        let mut w: Vec<f64> = Vec::with_capacity(pairs.len());
        for (y, p) in pairs {
            if support.last() == Some(&y) {
                *w.last_mut().expect("non-empty") += p;
            } else {
                support.push(y);
                w.push(p);
            }
        }
        let total: f64 = w.iter().sum();
        w.iter_mut().for_each(|p| *p /= total);
        Ok(Self { support, weights: w })
    }

    pub fn support(&self) -> &[f64] {
        &self.support
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    pub fn min(&self) -> f64 {
        self.support[0]
    }

    pub fn max(&self) -> f64 {
        self.support[self.support.len() - 1]
    }

    /// `Σ_k π_k f(y_k)`.
    pub fn expect(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.support.iter().zip(&self.weights).map(|(y, p)| p * f(*y)).sum()
    }
}
