//! Structural choice probabilities `q_j(p, y)`.
//!
//! Alternative `0` is the outside option with price zero; alternatives
//! `1..=J` are inside options. Every welfare formula in this crate consumes a
//! model only through [`ChoiceProbabilities`].

mod quasilinear;
mod spline_probit;
mod synthetic;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::richardson_derivative;

pub use quasilinear::{OffsetDistribution, QuasilinearModel, TasteOffsets};
pub use spline_probit::{SplineProbitModel, SplineProbitSpec};
pub use synthetic::{Affine, AlternativeUtility, IntegrationMethod, Shock, SyntheticModel, SyntheticSpec, Transform};

/// Current version of the model JSON document.
pub const MODEL_SCHEMA_VERSION: u32 = 1;

/// Prices of the inside alternatives and income.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BudgetPoint {
    pub prices: Vec<f64>,
    pub income: f64,
}

impl BudgetPoint {
    pub fn new(prices: Vec<f64>, income: f64) -> Result<Self> {
        let point = Self { prices, income };
        point.validate()?;
        Ok(point)
    }

    pub fn single(price: f64, income: f64) -> Result<Self> {
        Self::new(vec![price], income)
    }

    pub fn validate(&self) -> Result<()> {
        check_budget(&self.prices, self.income)
    }
}

/// Checks that prices are non-negative (possibly `+inf`, meaning the
/// alternative is unavailable) and income is positive and finite.
pub fn check_budget(prices: &[f64], income: f64) -> Result<()> {
    if prices.is_empty() {
        return Err(Error::invalid("budget point needs at least one inside price"));
    }
    if let Some(p) = prices.iter().find(|p| p.is_nan() || **p < 0.0) {
        return Err(Error::invalid(format!("prices must be non-negative, got {p}")));
    }
    if !(income.is_finite() && income > 0.0) {
        return Err(Error::invalid(format!("income must be positive and finite, got {income}")));
    }
    Ok(())
}

/// Evaluator of `q_0..q_J` at a budget point.
///
/// Implementations are immutable and may be shared across threads.
pub trait ChoiceProbabilities: Send + Sync {
    /// Number of inside alternatives `J`.
    fn n_inside(&self) -> usize;

    /// Writes `q_0..q_J` into `out` (length `J + 1`). Prices may be `+inf`.
    fn probabilities_into(&self, prices: &[f64], income: f64, out: &mut [f64]) -> Result<()>;

    fn choice_probability(&self, j: usize, prices: &[f64], income: f64) -> Result<f64> {
        let mut out = vec![0.0; self.n_inside() + 1];
        self.probabilities_into(prices, income, &mut out)?;
        out.get(j).copied().ok_or(Error::InvalidAlternative { index: j, inside: self.n_inside() })
    }

    /// `∂ q_j / ∂ p_k`; central differences unless the model knows better.
    fn price_derivative(&self, j: usize, k: usize, prices: &[f64], income: f64) -> Result<f64> {
        let n = self.n_inside();
        if k == 0 || k > n {
            return Err(Error::InvalidAlternative { index: k, inside: n });
        }
        let p = prices[k - 1];
        let h = 1e-4 * p.abs().max(1.0);
        let base = prices.to_vec();
        let eval = |x: f64| {
            let mut q = base.clone();
            q[k - 1] = x;
            self.choice_probability(j, &q, income)
        };
        if p - h < 0.0 {
            // one-sided second-order stencil at the price floor
            let f0 = eval(p)?;
            let f1 = eval(p + h)?;
            let f2 = eval(p + 2.0 * h)?;
            return Ok((-3.0 * f0 + 4.0 * f1 - f2) / (2.0 * h));
        }
        richardson_derivative(eval, p, h)
    }

    /// `∂ q_j / ∂ y`.
    fn income_derivative(&self, j: usize, prices: &[f64], income: f64) -> Result<f64> {
        let h = 1e-4 * income.max(1.0);
        let h = h.min(0.25 * income);
        richardson_derivative(|y| self.choice_probability(j, prices, y), income, h)
    }
}

/// All supported model families.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ChoiceModel {
    Quasilinear(QuasilinearModel),
    Synthetic(SyntheticModel),
    SplineProbit(SplineProbitModel),
}

impl ChoiceModel {
    fn inner(&self) -> &dyn ChoiceProbabilities {
        match self {
            ChoiceModel::Quasilinear(m) => m,
            ChoiceModel::Synthetic(m) => m,
            ChoiceModel::SplineProbit(m) => m,
        }
    }

    /// Covariate profile the model is evaluated at (empty when none).
    pub fn covariates(&self) -> &[f64] {
        match self {
            ChoiceModel::SplineProbit(m) => m.covariate_profile(),
            _ => &[],
        }
    }

    /// Access to agent-level utilities, when the family has them.
    pub fn random_utility(&self) -> Option<&dyn crate::oracle::RandomUtility> {
        match self {
            ChoiceModel::Quasilinear(m) => Some(m),
            ChoiceModel::Synthetic(m) => Some(m),
            ChoiceModel::SplineProbit(_) => None,
        }
    }
}

impl ChoiceProbabilities for ChoiceModel {
    fn n_inside(&self) -> usize {
        self.inner().n_inside()
    }
    fn probabilities_into(&self, prices: &[f64], income: f64, out: &mut [f64]) -> Result<()> {
        self.inner().probabilities_into(prices, income, out)
    }
    fn choice_probability(&self, j: usize, prices: &[f64], income: f64) -> Result<f64> {
        self.inner().choice_probability(j, prices, income)
    }
    fn price_derivative(&self, j: usize, k: usize, prices: &[f64], income: f64) -> Result<f64> {
        self.inner().price_derivative(j, k, prices, income)
    }
    fn income_derivative(&self, j: usize, prices: &[f64], income: f64) -> Result<f64> {
        self.inner().income_derivative(j, prices, income)
    }
}

/// `q_j(p, y)` with full input validation.
pub fn eval_choice_prob<M: ChoiceProbabilities + ?Sized>(model: &M, j: usize, point: &BudgetPoint) -> Result<f64> {
    let n = model.n_inside();
    if j > n {
        return Err(Error::InvalidAlternative { index: j, inside: n });
    }
    if point.prices.len() != n {
        return Err(Error::invalid(format!(
            "model has {n} inside alternatives but {} prices were given",
            point.prices.len()
        )));
    }
    point.validate()?;
    let q = model.choice_probability(j, &point.prices, point.income)?;
    if !q.is_finite() {
        return Err(Error::NonFinite(format!("choice probability q_{j}")));
    }
    Ok(q.clamp(0.0, 1.0))
}

/// Versioned JSON envelope for a model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelDocument {
    pub schema_version: u32,
    pub model: ChoiceModel,
}

impl ModelDocument {
    pub fn new(model: ChoiceModel) -> Self {
        Self { schema_version: MODEL_SCHEMA_VERSION, model }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: ModelDocument = serde_json::from_str(text).map_err(|e| Error::invalid(format!("model JSON: {e}")))?;
        if doc.schema_version != MODEL_SCHEMA_VERSION {
            return Err(Error::invalid(format!(
                "unsupported model schema version {} (expected {MODEL_SCHEMA_VERSION})",
                doc.schema_version
            )));
        }
        Ok(doc)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serialization cannot fail")
    }
}
