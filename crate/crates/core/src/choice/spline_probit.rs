//! Binary probit demand with a B-spline income profile:
//! `q_1(p, y) = Φ(β_p p + Σ_m c_m R_m(y) + x'β)`.
//!
//! Income outside the spline support is clamped to the nearest boundary, so
//! demand is frozen at its boundary values there.

use serde::{Deserialize, Serialize};

use super::ChoiceProbabilities;
use crate::error::{Error, Result};
use crate::numeric::{normal_cdf, normal_pdf};
use crate::spline::SplineBasis;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SplineProbitSpec", into = "SplineProbitSpec")]
pub struct SplineProbitModel {
    spec: SplineProbitSpec,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplineProbitSpec {
    pub basis: SplineBasis,
    pub price_coefficient: f64,
    pub income_coefficients: Vec<f64>,
    #[serde(default)]
    pub covariate_coefficients: Vec<f64>,
    #[serde(default)]
    pub covariate_profile: Vec<f64>,
}

impl TryFrom<SplineProbitSpec> for SplineProbitModel {
    type Error = Error;
    fn try_from(spec: SplineProbitSpec) -> Result<Self> {
        SplineProbitModel::new(spec)
    }
}

impl From<SplineProbitModel> for SplineProbitSpec {
    fn from(m: SplineProbitModel) -> Self {
        m.spec
    }
}

impl SplineProbitModel {
    pub fn new(spec: SplineProbitSpec) -> Result<Self> {
        if spec.income_coefficients.len() != spec.basis.size() {
            return Err(Error::invalid(format!(
                "{} income coefficients for a basis of size {}",
                spec.income_coefficients.len(),
                spec.basis.size()
            )));
        }
        if spec.covariate_coefficients.len() != spec.covariate_profile.len() {
            return Err(Error::invalid(format!(
                "{} covariate coefficients but a profile of length {}",
                spec.covariate_coefficients.len(),
                spec.covariate_profile.len()
            )));
        }
        let all = std::iter::once(&spec.price_coefficient)
            .chain(&spec.income_coefficients)
            .chain(&spec.covariate_coefficients)
            .chain(&spec.covariate_profile);
        if !all.into_iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("spline probit parameters".into()));
        }
        if spec.price_coefficient > 0.0 {
            return Err(Error::invalid(format!(
                "price coefficient must be non-positive, got {}",
                spec.price_coefficient
            )));
        }
        Ok(Self { spec })
    }

    pub fn spec(&self) -> &SplineProbitSpec {
        &self.spec
    }

    pub fn covariate_profile(&self) -> &[f64] {
        &self.spec.covariate_profile
    }

    /// Probit index at a finite price.
    pub fn index(&self, price: f64, income: f64) -> f64 {
        let s = &self.spec;
        let x: f64 = s.covariate_coefficients.iter().zip(&s.covariate_profile).map(|(b, x)| b * x).sum();
        s.price_coefficient * price + s.basis.evaluate(&s.income_coefficients, income) + x
    }

    fn inside(&self, income: f64) -> bool {
        income > self.spec.basis.lower() && income < self.spec.basis.upper()
    }
}

impl ChoiceProbabilities for SplineProbitModel {
    fn n_inside(&self) -> usize {
        1
    }

    fn probabilities_into(&self, prices: &[f64], income: f64, out: &mut [f64]) -> Result<()> {
        let q1 = if prices[0] == f64::INFINITY { 0.0 } else { normal_cdf(self.index(prices[0], income)) };
        out[0] = 1.0 - q1;
        out[1] = q1;
        Ok(())
    }

    fn price_derivative(&self, j: usize, k: usize, prices: &[f64], income: f64) -> Result<f64> {
        if j > 1 {
            return Err(Error::InvalidAlternative { index: j, inside: 1 });
        }
        if k != 1 {
            return Err(Error::InvalidAlternative { index: k, inside: 1 });
        }
        if prices[0] == f64::INFINITY {
            return Ok(0.0);
        }
        let d = self.spec.price_coefficient * normal_pdf(self.index(prices[0], income));
        Ok(if j == 1 { d } else { -d })
    }

    fn income_derivative(&self, j: usize, prices: &[f64], income: f64) -> Result<f64> {
        if j > 1 {
            return Err(Error::InvalidAlternative { index: j, inside: 1 });
        }
        if prices[0] == f64::INFINITY || !self.inside(income) {
            return Ok(0.0);
        }
        let s = &self.spec;
        let d = normal_pdf(self.index(prices[0], income)) * s.basis.evaluate_derivative(&s.income_coefficients, income);
        Ok(if j == 1 { d } else { -d })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model() -> SplineProbitModel {
        let basis = SplineBasis::new(1.0, 10.0, 4, 3).unwrap();
        SplineProbitModel::new(SplineProbitSpec {
            basis,
            price_coefficient: -0.5,
            income_coefficients: vec![0.1, 0.4, 0.9, 1.1, 0.8, 0.6, 0.5],
            covariate_coefficients: vec![0.3, -0.2],
            covariate_profile: vec![0.5, 1.0],
        })
        .unwrap()
    }

    #[test]
    fn evaluates_probit_index_by_hand() {
        let m = model();
        let s = m.spec();
        let spline: f64 = s.basis.values(4.2).iter().zip(&s.income_coefficients).map(|(b, c)| b * c).sum();
        let idx = -0.5 * 2.0 + spline + 0.3 * 0.5 - 0.2;
        assert!((m.choice_probability(1, &[2.0], 4.2).unwrap() - normal_cdf(idx)).abs() < 1e-15);
    }

    #[test]
    fn clamps_income_outside_support() {
        let m = model();
        let at_edge = m.choice_probability(1, &[1.0], 10.0).unwrap();
        assert_eq!(m.choice_probability(1, &[1.0], 25.0).unwrap(), at_edge);
        assert_eq!(m.income_derivative(1, &[1.0], 25.0).unwrap(), 0.0);
    }

    #[test]
    fn analytic_derivatives_match_differences() {
        let m = model();
        let (p, y) = (1.3, 5.5);
        let h = 1e-6;
        let fd_p =
            (m.choice_probability(1, &[p + h], y).unwrap() - m.choice_probability(1, &[p - h], y).unwrap()) / (2.0 * h);
        let fd_y =
            (m.choice_probability(1, &[p], y + h).unwrap() - m.choice_probability(1, &[p], y - h).unwrap()) / (2.0 * h);
        assert!((fd_p - m.price_derivative(1, 1, &[p], y).unwrap()).abs() < 1e-8);
        assert!((fd_y - m.income_derivative(1, &[p], y).unwrap()).abs() < 1e-8);
    }

    #[test]
    fn rejects_positive_price_coefficient() {
        let mut spec = model().spec().clone();
        spec.price_coefficient = 0.1;
        assert!(SplineProbitModel::new(spec).is_err());
    }
}
